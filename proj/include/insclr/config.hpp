#ifndef INSCLR_CONFIG_HPP
#define INSCLR_CONFIG_HPP

#include "insclr/candidates.hpp"
#include "insclr/encoder.hpp"
#include "insclr/evaluator.hpp"
#include "insclr/synthdata.hpp"
#include "insclr/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

/**
 * @file config.hpp
 *
 * @brief The run configuration file: JSON with line and block comments.
 * Every key is optional; unknown keys are rejected. Per-section seeds default
 * to values derived from the top-level `seed`. See docs/CONFIG.md.
 */

namespace insclr {

struct AblationConfig {
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "runs/default";
    bool analytics = true;
    std::size_t curve_window = 20;

    DatasetConfig dataset;
    std::optional<std::filesystem::path> feature_file;

    EncoderConfig encoder;
    AdamConfig adam;
    std::optional<std::filesystem::path> warm_start;

    PoolConfig pool;
    TrainerConfig trainer;
    EvalConfig eval;
    bool per_query_csv = false;

    AblationConfig ablate;
};

/// The built-in desk-scale configuration (50 classes x 40 instances, 64 -> 32).
RunConfig default_run_config(std::uint64_t seed = 0);

/**
 * Parse config text, apply `key=value` overrides (dotted paths, values parsed
 * as JSON and falling back to a bare string) and an optional seed override,
 * then validate. Throws `ParseError` (with line/column) or `ValidationError`
 * listing every problem found.
 */
RunConfig parse_config_text(const std::string& text, std::span<const std::string> overrides = {},
                            std::optional<std::uint64_t> seed_override = std::nullopt);

/// Same as parse_config_text on the file's contents; relative paths resolve against the file's directory.
RunConfig parse_config(const std::filesystem::path& path, std::span<const std::string> overrides = {},
                       std::optional<std::uint64_t> seed_override = std::nullopt);

/// The fully resolved configuration as pretty-printed JSON (round-trips through parse_config_text).
std::string config_echo(const RunConfig& config);

} // namespace insclr

#endif
