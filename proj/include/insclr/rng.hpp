#ifndef INSCLR_RNG_HPP
#define INSCLR_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace insclr {

using Rng = std::mt19937_64;

/// Independent stream keyed by a seed and any number of tags (step, image id, ...).
inline Rng derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * (tags.size() + 1));
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto t : tags) {
        push(t);
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

/// Standard normal draw. A fresh distribution per call keeps the stream position explicit.
inline double gaussian(Rng& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

/// Domain tags for derive_stream, so unrelated consumers never share a stream.
namespace stream_tag {
inline constexpr std::uint64_t prototypes = 0x70726f74;
inline constexpr std::uint64_t instances = 0x696e7374;
inline constexpr std::uint64_t aux_seeds = 0x61757873;
inline constexpr std::uint64_t aux_view = 0x61757876;
inline constexpr std::uint64_t augment = 0x61756731;
inline constexpr std::uint64_t bank_init = 0x62616e6b;
inline constexpr std::uint64_t anchors = 0x616e6368;
inline constexpr std::uint64_t random_negatives = 0x72616e64;
inline constexpr std::uint64_t encoder_init = 0x656e6364;
inline constexpr std::uint64_t eval_split = 0x6576616c;
inline constexpr std::uint64_t nuisance = 0x6e756973;
inline constexpr std::uint64_t difficulty = 0x64696666;
} // namespace stream_tag

} // namespace insclr

#endif
