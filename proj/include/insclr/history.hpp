#ifndef INSCLR_HISTORY_HPP
#define INSCLR_HISTORY_HPP

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

namespace insclr {

/// One completed training step. Precisions are absent when analytics is off
/// or when no tuple selected anything.
struct StepRecord {
    std::size_t step = 0;   // global, 0-based
    std::size_t round = 1;  // 1-based
    double loss = 0.0;
    double lr = 0.0;
    double n_batch_pos = 0.0; // mean per tuple
    double n_mem_pos = 0.0;   // mean per tuple
    std::optional<double> batch_precision;
    std::optional<double> mem_precision;
    std::size_t mem_true_positives = 0; // summed over tuples; 0 without labels, not written to CSV

    bool operator==(const StepRecord&) const = default;
};

using TrainingHistory = std::vector<StepRecord>;

/// Columns: step,round,loss,lr,n_batch_pos,n_mem_pos,batch_precision,mem_precision.
/// Absent precisions are written as empty cells.
void write_history_csv(const TrainingHistory& history, const std::filesystem::path& path);

} // namespace insclr

#endif
