#include "insclr/binary_io.hpp"

#include <iterator>

namespace insclr::binio {

std::uint64_t file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a(std::as_bytes(std::span<const char>(bytes)));
}

} // namespace insclr::binio
