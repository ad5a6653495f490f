#ifndef INSCLR_BINARY_IO_HPP
#define INSCLR_BINARY_IO_HPP

#include "insclr/error.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

// Little-endian fixed-width container helpers shared by the dataset, pool and
// checkpoint files. Layouts are described in docs/FORMATS.md.

namespace insclr::binio {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) {
            throw IoError("cannot open " + path.string() + " for writing");
        }
    }

    void magic(std::string_view tag) { raw(tag.data(), tag.size()); }

    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T value) {
        raw(&value, sizeof(T));
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    void put_span(std::span<const T> values) {
        raw(values.data(), values.size_bytes());
    }

    void finish() {
        out_.flush();
        if (!out_) {
            throw IoError("write failed for " + path_.string());
        }
    }

private:
    void raw(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }

    std::filesystem::path path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) {
            throw IoError("cannot open " + path.string());
        }
    }

    void expect_magic(std::string_view tag) {
        std::string got(tag.size(), '\0');
        raw(got.data(), got.size());
        if (got != tag) {
            throw IoError(path_.string() + ": bad magic, expected " + std::string(tag));
        }
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get() {
        T value{};
        raw(&value, sizeof(T));
        return value;
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    std::vector<T> get_vector(std::size_t n) {
        std::vector<T> values(n);
        raw(values.data(), n * sizeof(T));
        return values;
    }

    void expect_end() {
        if (in_.peek() != std::char_traits<char>::eof()) {
            throw IoError(path_.string() + ": trailing bytes");
        }
    }

private:
    void raw(void* data, std::size_t n) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw IoError(path_.string() + ": truncated file");
        }
    }

    std::filesystem::path path_;
    std::ifstream in_;
};

/// FNV-1a over raw bytes; used for the checksums echoed into run manifests.
inline std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t h = 1469598103934665603ULL) {
    for (auto b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 1099511628211ULL;
    }
    return h;
}

template <typename T>
std::uint64_t fnv1a_values(std::span<const T> values, std::uint64_t h = 1469598103934665603ULL) {
    return fnv1a(std::as_bytes(values), h);
}

std::uint64_t file_checksum(const std::filesystem::path& path);

} // namespace insclr::binio

#endif
