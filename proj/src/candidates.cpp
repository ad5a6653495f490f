#include "insclr/candidates.hpp"

#include "insclr/binary_io.hpp"
#include "insclr/error.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace insclr {

namespace {

constexpr std::string_view kPoolMagic = "INSCLRPL";
constexpr std::uint32_t kPoolVersion = 1;

bool ranks_before(const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) {
        return a.similarity > b.similarity;
    }
    return a.id < b.id;
}

} // namespace

CandidatePool::CandidatePool(std::size_t pool_size, std::size_t round, std::uint64_t encoder_checksum,
                             std::vector<std::vector<Neighbor>> rows)
    : pool_size_(pool_size), round_(round), encoder_checksum_(encoder_checksum), rows_(std::move(rows)) {}

std::span<const Neighbor> CandidatePool::neighbors(ImageId anchor) const {
    if (anchor >= rows_.size()) {
        throw UnknownId(fmt::format("anchor {} not in pool of {}", anchor, rows_.size()));
    }
    return rows_[anchor];
}

CandidatePool build_candidate_pool(std::span<const UnitVector> features, const PoolConfig& config,
                                   std::uint64_t encoder_checksum) {
    const std::size_t n = features.size();
    if (n < 2) {
        throw InvalidConfig(fmt::format("candidate pool needs >= 2 features, got {}", n));
    }
    if (config.pool_size < 1 || config.pool_size > n - 1) {
        throw InvalidConfig(fmt::format("pool_size {} outside [1, {}]", config.pool_size, n - 1));
    }
    const std::size_t dim = features.front().dim();
    for (const auto& f : features) {
        if (f.dim() != dim) {
            throw DimensionMismatch(fmt::format("pool feature dim {} vs {}", f.dim(), dim));
        }
    }

    // Similarities are symmetric; fill the upper triangle once.
    std::vector<double> sims(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = dot(features[i].values(), features[j].values());
            sims[i * n + j] = s;
            sims[j * n + i] = s;
        }
    }

    std::vector<std::vector<Neighbor>> rows(n);
    std::vector<Neighbor> scratch;
    scratch.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        scratch.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                scratch.push_back({static_cast<ImageId>(j), sims[i * n + j]});
            }
        }
        const auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(config.pool_size);
        std::partial_sort(scratch.begin(), mid, scratch.end(), ranks_before);
        rows[i].assign(scratch.begin(), mid);
    }
    return CandidatePool(config.pool_size, config.round, encoder_checksum, std::move(rows));
}

std::vector<UnitVector> encode_clean_views(const EncoderState& state, const Dataset& dataset) {
    std::vector<UnitVector> out;
    out.reserve(dataset.size());
    for (const auto& rec : dataset.records()) {
        out.push_back(encode(state, clean_view(rec)));
    }
    return out;
}

CandidatePool refresh_pool(const EncoderState& state, const Dataset& dataset, const PoolConfig& config) {
    const auto features = encode_clean_views(state, dataset);
    PoolConfig next = config;
    next.round = config.round + 1;
    return build_candidate_pool(features, next, state.checksum());
}

void write_pool(const CandidatePool& pool, const std::filesystem::path& path) {
    binio::Writer w(path);
    w.magic(kPoolMagic);
    w.put<std::uint32_t>(kPoolVersion);
    w.put<std::uint64_t>(pool.size());
    w.put<std::uint64_t>(pool.pool_size());
    w.put<std::uint64_t>(pool.round());
    w.put<std::uint64_t>(pool.encoder_checksum());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        for (const auto& nb : pool.neighbors(static_cast<ImageId>(i))) {
            w.put<std::uint32_t>(nb.id);
            w.put<double>(nb.similarity);
        }
    }
    w.finish();
}

CandidatePool read_pool(const std::filesystem::path& path) {
    binio::Reader r(path);
    r.expect_magic(kPoolMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kPoolVersion) {
        throw IoError(fmt::format("{}: unsupported pool version {}", path.string(), version));
    }
    const auto n = r.get<std::uint64_t>();
    const auto p = r.get<std::uint64_t>();
    const auto round = r.get<std::uint64_t>();
    const auto checksum = r.get<std::uint64_t>();
    std::vector<std::vector<Neighbor>> rows(n);
    for (auto& row : rows) {
        row.resize(p);
        for (auto& nb : row) {
            nb.id = r.get<std::uint32_t>();
            nb.similarity = r.get<double>();
        }
    }
    r.expect_end();
    return CandidatePool(p, round, checksum, std::move(rows));
}

} // namespace insclr
