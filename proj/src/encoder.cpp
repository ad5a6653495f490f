#include "insclr/encoder.hpp"

#include "insclr/binary_io.hpp"
#include "insclr/error.hpp"
#include "insclr/rng.hpp"

#include <cmath>
#include <fmt/format.h>

namespace insclr {

namespace {

constexpr std::string_view kCheckpointMagic = "INSCLRCK";
constexpr std::uint32_t kCheckpointVersion = 1;

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
    if (m.rows != rows || m.cols != cols) {
        throw DimensionMismatch(fmt::format("{}: {}x{} vs expected {}x{}", what, m.rows, m.cols, rows, cols));
    }
}

} // namespace

void EncoderConfig::validate() const {
    std::vector<std::string> problems;
    if (embed_dim < 2) problems.push_back("embed_dim must be >= 2");
    if (embed_dim > input_dim) problems.push_back("embed_dim must be <= input_dim");
    if (!std::isfinite(init_scale) || init_scale < 0.0) problems.push_back("init_scale must be finite and >= 0");
    if (!problems.empty()) {
        throw InvalidConfig(fmt::format("{}", fmt::join(problems, "; ")));
    }
}

void AdamConfig::validate() const {
    std::vector<std::string> problems;
    if (!(lr > 0.0)) problems.push_back("lr must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0)) problems.push_back("beta1 must be in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) problems.push_back("beta2 must be in (0, 1)");
    if (!(eps > 0.0)) problems.push_back("eps must be > 0");
    if (!(weight_decay >= 0.0)) problems.push_back("weight_decay must be >= 0");
    if (!problems.empty()) {
        throw InvalidConfig(fmt::format("{}", fmt::join(problems, "; ")));
    }
}

std::uint64_t EncoderState::checksum() const {
    return binio::fnv1a_values(std::span<const double>(weights.data));
}

EncoderState init_encoder(const EncoderConfig& config) {
    config.validate();
    EncoderState state;
    state.config = config;
    state.weights = Matrix(config.embed_dim, config.input_dim);
    state.adam_m = Matrix(config.embed_dim, config.input_dim);
    state.adam_v = Matrix(config.embed_dim, config.input_dim);
    auto rng = derive_stream(config.seed, {stream_tag::encoder_init});
    for (double& w : state.weights.data) {
        w = config.init_scale * gaussian(rng);
    }
    return state;
}

RawVector project(const EncoderState& state, std::span<const double> x) {
    const auto& w = state.weights;
    if (x.size() != w.cols) {
        throw DimensionMismatch(fmt::format("encoder input {} vs {}", x.size(), w.cols));
    }
    RawVector out(w.rows);
    for (std::size_t r = 0; r < w.rows; ++r) {
        out[r] = dot(w.row(r), x);
    }
    return out;
}

UnitVector encode(const EncoderState& state, std::span<const double> x) {
    return normalize(project(state, x));
}

Matrix encode_backward(const EncoderState& state, std::span<const double> x, std::span<const double> grad_f_raw) {
    Matrix out(state.weights.rows, state.weights.cols);
    accumulate_backward(out, x, grad_f_raw);
    return out;
}

void accumulate_backward(Matrix& acc, std::span<const double> x, std::span<const double> grad_f_raw) {
    if (grad_f_raw.size() != acc.rows || x.size() != acc.cols) {
        throw DimensionMismatch(fmt::format("backward: grad {} / input {} vs weights {}x{}", grad_f_raw.size(),
                                            x.size(), acc.rows, acc.cols));
    }
    for (std::size_t r = 0; r < acc.rows; ++r) {
        if (grad_f_raw[r] != 0.0) {
            axpy(grad_f_raw[r], x, acc.row(r));
        }
    }
}

EncoderState adam_step(EncoderState state, const Matrix& grads, const AdamConfig& cfg) {
    require_shape(grads, state.weights.rows, state.weights.cols, "adam_step grads");
    require_shape(state.adam_m, state.weights.rows, state.weights.cols, "adam_step first moment");
    require_shape(state.adam_v, state.weights.rows, state.weights.cols, "adam_step second moment");

    state.adam_t += 1;
    const double t = static_cast<double>(state.adam_t);
    const double bias1 = 1.0 - std::pow(cfg.beta1, t);
    const double bias2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < grads.data.size(); ++i) {
        const double g = grads.data[i];
        double& m = state.adam_m.data[i];
        double& v = state.adam_v.data[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        const double m_hat = m / bias1;
        const double v_hat = v / bias2;
        double& w = state.weights.data[i];
        w -= cfg.lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * w);
    }
    return state;
}

void save_checkpoint(const EncoderState& state, const std::filesystem::path& path) {
    binio::Writer w(path);
    w.magic(kCheckpointMagic);
    w.put<std::uint32_t>(kCheckpointVersion);
    w.put<std::uint64_t>(state.config.input_dim);
    w.put<std::uint64_t>(state.config.embed_dim);
    w.put<double>(state.config.init_scale);
    w.put<std::uint64_t>(state.config.seed);
    w.put<std::uint64_t>(state.adam_t);
    w.put_span(std::span<const double>(state.weights.data));
    w.put_span(std::span<const double>(state.adam_m.data));
    w.put_span(std::span<const double>(state.adam_v.data));
    w.finish();
}

EncoderState load_checkpoint(const std::filesystem::path& path) {
    binio::Reader r(path);
    r.expect_magic(kCheckpointMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw IoError(fmt::format("{}: unsupported checkpoint version {}", path.string(), version));
    }
    EncoderState state;
    state.config.input_dim = r.get<std::uint64_t>();
    state.config.embed_dim = r.get<std::uint64_t>();
    state.config.init_scale = r.get<double>();
    state.config.seed = r.get<std::uint64_t>();
    state.adam_t = r.get<std::uint64_t>();
    const std::size_t rows = state.config.embed_dim;
    const std::size_t cols = state.config.input_dim;
    for (Matrix* m : {&state.weights, &state.adam_m, &state.adam_v}) {
        m->rows = rows;
        m->cols = cols;
        m->data = r.get_vector<double>(rows * cols);
    }
    r.expect_end();
    return state;
}

} // namespace insclr
