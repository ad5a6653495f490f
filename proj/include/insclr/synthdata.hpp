#ifndef INSCLR_SYNTHDATA_HPP
#define INSCLR_SYNTHDATA_HPP

#include "insclr/numerics.hpp"
#include "insclr/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

/**
 * @file synthdata.hpp
 *
 * @brief Deterministic synthetic instance-retrieval datasets and the views
 * (clean, augmented, auxiliary) through which the trainer sees each image.
 *
 * Images are noisy points around per-class prototypes on the unit sphere.
 * Optionally, every instance also carries a "nuisance" displacement drawn in
 * a low-dimensional subspace shared by all classes; this plays the part of
 * viewpoint/background changes that a learned encoder should become
 * invariant to.
 */

namespace insclr {

enum class ClassLayout {
    /// base = normalize(prototype + sigma_intra * g [+ nuisance])
    cluster,
    /// instances spread along an arc starting at the prototype, so the far end
    /// of a class is only close to its intermediate members
    chain,
};

struct DatasetConfig {
    std::size_t num_classes = 50;
    std::size_t instances_per_class = 40;
    std::size_t input_dim = 64;
    double sigma_intra = 0.1;
    double sigma_aug = 0.1;
    double drop_prob = 0.1;
    std::size_t num_aux_views = 3;
    std::uint64_t seed = 0;

    /// Dimension of the shared nuisance subspace (0 disables it).
    std::size_t nuisance_dim = 0;
    /// Per-coordinate spread of the nuisance displacement.
    double sigma_nuisance = 0.0;
    /// Share of instances drawn as outlier views of their class.
    double hard_fraction = 0.0;
    /// Multiplier on the intra-class and nuisance displacement of outlier views.
    double hard_scale = 1.0;
    /// Noise of auxiliary views; defaults to sigma_aug / 2.
    std::optional<double> sigma_aux;

    ClassLayout layout = ClassLayout::cluster;
    /// Total arc (radians) covered by one class in the chain layout.
    double chain_arc = 2.0;

    double aux_sigma() const { return sigma_aux.value_or(sigma_aug / 2.0); }

    /// Throws `InvalidConfig` listing every violated bound.
    void validate() const;
};

struct ImageRecord {
    ImageId id = 0;
    UnitVector base;
    std::vector<std::uint64_t> aux_seeds;
};

/**
 * Immutable collection of records. Class labels are stored but only
 * reachable through `GroundTruth`, which the evaluator and analytics use;
 * the trainer receives the dataset without them.
 */
class Dataset {
public:
    Dataset() = default;
    Dataset(DatasetConfig config, std::vector<ImageRecord> records, std::vector<int> labels);

    const DatasetConfig& config() const { return config_; }
    const std::vector<ImageRecord>& records() const { return records_; }
    const ImageRecord& record(ImageId id) const;
    std::size_t size() const { return records_.size(); }

    /// Checksum over config and records (labels included).
    std::uint64_t checksum() const;

    bool operator==(const Dataset& other) const;

private:
    DatasetConfig config_;
    std::vector<ImageRecord> records_;
    std::vector<int> labels_;

    friend class GroundTruth;
};

/// Analysis-only access to hidden class labels. -1 marks an unlabelled image.
class GroundTruth {
public:
    static const std::vector<int>& labels(const Dataset& dataset) { return dataset.labels_; }
    static bool complete(const Dataset& dataset);
};

Dataset generate_dataset(const DatasetConfig& config);

/// The unaugmented view: the record's base vector, bit for bit.
RawVector clean_view(const ImageRecord& record);

/**
 * Gaussian noise plus coordinate dropout, re-normalized. Only `step_rng`
 * is consumed. If dropout removes everything, one retry is made before
 * `DegenerateVector` is raised.
 */
RawVector augmented_view(const ImageRecord& record, const DatasetConfig& config, Rng& step_rng);

/// View 0 is the clean view; view v > 0 is a fixed noisy copy seeded by aux_seeds[v].
RawVector aux_view(const ImageRecord& record, const DatasetConfig& config, std::size_t view_index);

void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

/**
 * Load precomputed descriptors from CSV rows `id,class_id,v0,v1,...`.
 * An empty class_id (or -1) marks an unlabelled row. Ids must be dense 0..N-1
 * in any order. View-related fields are taken from `view_config`; its size
 * fields are overwritten from the file.
 */
Dataset load_feature_file(const std::filesystem::path& path, DatasetConfig view_config);

std::string to_string(ClassLayout layout);
ClassLayout class_layout_from_string(const std::string& name);

} // namespace insclr

#endif
