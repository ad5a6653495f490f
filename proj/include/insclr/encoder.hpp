#ifndef INSCLR_ENCODER_HPP
#define INSCLR_ENCODER_HPP

#include "insclr/numerics.hpp"

#include <cstdint>
#include <filesystem>
#include <span>

namespace insclr {

struct EncoderConfig {
    std::size_t input_dim = 64;
    std::size_t embed_dim = 32;
    double init_scale = 0.125;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const EncoderConfig&) const = default;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;

    void validate() const;
};

/// Weights of the linear embedding plus Adam moments.
struct EncoderState {
    EncoderConfig config;
    Matrix weights;  // embed_dim x input_dim
    Matrix adam_m;
    Matrix adam_v;
    std::uint64_t adam_t = 0;

    /// FNV-1a over the weight bytes; identifies which encoder built a pool.
    std::uint64_t checksum() const;

    bool operator==(const EncoderState&) const = default;
};

/// Seeded gaussian weights times init_scale, zero moments.
EncoderState init_encoder(const EncoderConfig& config);

/// W x, the raw (pre-normalization) embedding.
RawVector project(const EncoderState& state, std::span<const double> x);

/// normalize(W x). Throws `DegenerateVector` when W x vanishes.
UnitVector encode(const EncoderState& state, std::span<const double> x);

/// Outer product grad_f_raw (x) x, i.e. dL/dW for one input.
Matrix encode_backward(const EncoderState& state, std::span<const double> x, std::span<const double> grad_f_raw);

/// acc += grad_f_raw (x) x without materializing the outer product.
void accumulate_backward(Matrix& acc, std::span<const double> x, std::span<const double> grad_f_raw);

/**
 * One Adam update with bias correction. Weight decay is decoupled:
 * w <- w - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * w).
 */
EncoderState adam_step(EncoderState state, const Matrix& grads, const AdamConfig& cfg);

void save_checkpoint(const EncoderState& state, const std::filesystem::path& path);
EncoderState load_checkpoint(const std::filesystem::path& path);

} // namespace insclr

#endif
