#ifndef INSCLR_ANALYTICS_HPP
#define INSCLR_ANALYTICS_HPP

#include "insclr/history.hpp"
#include "insclr/numerics.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Label-aware instrumentation. Nothing here is ever read back by the trainer.

namespace insclr {

/// Fraction of `selected` sharing `anchor_class`; absent when nothing was selected.
std::optional<double> mining_precision(std::span<const ImageId> selected, int anchor_class,
                                       std::span<const int> labels);

/// Mean of the present values, absent if none.
std::optional<double> mean_present(std::span<const std::optional<double>> values);

struct CurvePoint {
    std::size_t step = 0;
    std::size_t round = 1;
    double n_batch_pos_raw = 0.0;
    double n_batch_pos_smooth = 0.0;
    std::optional<double> batch_prec_raw;
    std::optional<double> batch_prec_smooth;
    double n_mem_pos_raw = 0.0;
    double n_mem_pos_smooth = 0.0;
    std::optional<double> mem_prec_raw;
    std::optional<double> mem_prec_smooth;
};

/// Trailing window means (over present values) of the mining series. Throws `InvalidInput` on window 0.
std::vector<CurvePoint> mining_curves(const TrainingHistory& history, std::size_t window);

/// Writes curves.csv. Throws `InvalidInput` for an empty history, `IoError` on write failure.
void export_curves(const TrainingHistory& history, const std::filesystem::path& path, std::size_t window = 20);

/// Reads back the curves written by `export_curves`.
std::vector<CurvePoint> read_curves(const std::filesystem::path& path);

} // namespace insclr

#endif
