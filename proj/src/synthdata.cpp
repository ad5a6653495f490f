#include "insclr/synthdata.hpp"

#include "insclr/binary_io.hpp"
#include "insclr/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>

namespace insclr {

namespace {

constexpr std::string_view kDatasetMagic = "INSCLRDS";
constexpr std::uint32_t kDatasetVersion = 1;

std::vector<double> gaussian_vector(std::size_t dim, Rng& rng) {
    std::vector<double> v(dim);
    for (double& x : v) {
        x = gaussian(rng);
    }
    return v;
}

// Gram-Schmidt against `basis`; returns a unit vector or throws on collapse.
UnitVector orthogonal_direction(std::size_t dim, std::span<const UnitVector> basis, Rng& rng) {
    auto v = gaussian_vector(dim, rng);
    for (const auto& b : basis) {
        axpy(-dot(v, b.values()), b.values(), v);
    }
    return normalize(v);
}

} // namespace

void DatasetConfig::validate() const {
    std::vector<std::string> problems;
    if (num_classes < 2) problems.push_back("num_classes must be >= 2");
    if (instances_per_class < 2) problems.push_back("instances_per_class must be >= 2");
    if (input_dim < 4) problems.push_back("input_dim must be >= 4");
    if (!(sigma_intra >= 0.0)) problems.push_back("sigma_intra must be >= 0");
    if (!(sigma_aug >= 0.0)) problems.push_back("sigma_aug must be >= 0");
    if (!(drop_prob >= 0.0 && drop_prob < 1.0)) problems.push_back("drop_prob must be in [0, 1)");
    if (num_aux_views < 1) problems.push_back("num_aux_views must be >= 1");
    if (nuisance_dim >= input_dim) problems.push_back("nuisance_dim must be < input_dim");
    if (!(sigma_nuisance >= 0.0)) problems.push_back("sigma_nuisance must be >= 0");
    if (!(hard_fraction >= 0.0 && hard_fraction <= 1.0)) problems.push_back("hard_fraction must be in [0, 1]");
    if (!(hard_scale >= 0.0)) problems.push_back("hard_scale must be >= 0");
    if (sigma_aux && !(*sigma_aux >= 0.0)) problems.push_back("sigma_aux must be >= 0");
    if (layout == ClassLayout::chain && !(chain_arc > 0.0)) problems.push_back("chain_arc must be > 0");
    if (!problems.empty()) {
        throw InvalidConfig(fmt::format("{}", fmt::join(problems, "; ")));
    }
}

Dataset::Dataset(DatasetConfig config, std::vector<ImageRecord> records, std::vector<int> labels)
    : config_(std::move(config)), records_(std::move(records)), labels_(std::move(labels)) {
    if (labels_.size() != records_.size()) {
        throw InvalidInput("labels and records differ in length");
    }
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (records_[i].id != i) {
            throw InvalidInput(fmt::format("record {} carries id {}", i, records_[i].id));
        }
        if (records_[i].base.dim() != config_.input_dim) {
            throw DimensionMismatch(fmt::format("record {} has dim {}", i, records_[i].base.dim()));
        }
    }
}

const ImageRecord& Dataset::record(ImageId id) const {
    if (id >= records_.size()) {
        throw UnknownId(fmt::format("image {} (dataset has {})", id, records_.size()));
    }
    return records_[id];
}

std::uint64_t Dataset::checksum() const {
    std::uint64_t h = binio::fnv1a_values(std::span<const std::uint64_t>(
        std::vector<std::uint64_t>{config_.num_classes, config_.instances_per_class, config_.input_dim,
                                   config_.num_aux_views, config_.seed}));
    for (const auto& r : records_) {
        h = binio::fnv1a_values(r.base.values(), h);
        h = binio::fnv1a_values(std::span<const std::uint64_t>(r.aux_seeds), h);
    }
    return binio::fnv1a_values(std::span<const int>(labels_), h);
}

bool Dataset::operator==(const Dataset& other) const {
    if (records_.size() != other.records_.size() || labels_ != other.labels_) {
        return false;
    }
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& a = records_[i];
        const auto& b = other.records_[i];
        if (a.id != b.id || !(a.base == b.base) || a.aux_seeds != b.aux_seeds) {
            return false;
        }
    }
    return true;
}

bool GroundTruth::complete(const Dataset& dataset) {
    return !dataset.labels_.empty() &&
           std::all_of(dataset.labels_.begin(), dataset.labels_.end(), [](int c) { return c >= 0; });
}

Dataset generate_dataset(const DatasetConfig& config) {
    config.validate();
    const std::size_t dim = config.input_dim;

    auto proto_rng = derive_stream(config.seed, {stream_tag::prototypes});
    std::vector<UnitVector> prototypes;
    std::vector<UnitVector> arc_directions;
    prototypes.reserve(config.num_classes);
    for (std::size_t c = 0; c < config.num_classes; ++c) {
        prototypes.push_back(normalize(gaussian_vector(dim, proto_rng)));
    }
    if (config.layout == ClassLayout::chain) {
        for (std::size_t c = 0; c < config.num_classes; ++c) {
            arc_directions.push_back(orthogonal_direction(dim, std::span(&prototypes[c], 1), proto_rng));
        }
    }

    auto nuisance_rng = derive_stream(config.seed, {stream_tag::nuisance});
    std::vector<UnitVector> nuisance_basis;
    for (std::size_t k = 0; k < config.nuisance_dim; ++k) {
        nuisance_basis.push_back(orthogonal_direction(dim, nuisance_basis, nuisance_rng));
    }

    auto inst_rng = derive_stream(config.seed, {stream_tag::instances});
    auto aux_rng = derive_stream(config.seed, {stream_tag::aux_seeds});
    auto difficulty_rng = derive_stream(config.seed, {stream_tag::difficulty});
    std::bernoulli_distribution is_hard(config.hard_fraction);
    const std::size_t n = config.num_classes * config.instances_per_class;
    std::vector<ImageRecord> records;
    std::vector<int> labels;
    records.reserve(n);
    labels.reserve(n);

    for (std::size_t c = 0; c < config.num_classes; ++c) {
        for (std::size_t t = 0; t < config.instances_per_class; ++t) {
            std::vector<double> x(dim, 0.0);
            if (config.layout == ClassLayout::chain) {
                const double angle =
                    config.chain_arc * static_cast<double>(t) / static_cast<double>(config.instances_per_class - 1);
                axpy(std::cos(angle), prototypes[c].values(), x);
                axpy(std::sin(angle), arc_directions[c].values(), x);
            } else {
                axpy(1.0, prototypes[c].values(), x);
            }
            const double spread = is_hard(difficulty_rng) ? config.hard_scale : 1.0;
            for (double& v : x) {
                v += spread * config.sigma_intra * gaussian(inst_rng);
            }
            for (const auto& u : nuisance_basis) {
                axpy(spread * config.sigma_nuisance * gaussian(inst_rng), u.values(), x);
            }

            ImageRecord rec;
            rec.id = static_cast<ImageId>(records.size());
            rec.base = normalize(x);
            rec.aux_seeds.resize(config.num_aux_views);
            for (auto& s : rec.aux_seeds) {
                s = aux_rng();
            }
            records.push_back(std::move(rec));
            labels.push_back(static_cast<int>(c));
        }
    }
    return Dataset(config, std::move(records), std::move(labels));
}

RawVector clean_view(const ImageRecord& record) {
    return record.base.vector();
}

RawVector augmented_view(const ImageRecord& record, const DatasetConfig& config, Rng& step_rng) {
    std::bernoulli_distribution drop(config.drop_prob);
    for (int attempt = 0; attempt < 2; ++attempt) {
        RawVector x = record.base.vector();
        for (double& v : x) {
            v += config.sigma_aug * gaussian(step_rng);
            if (config.drop_prob > 0.0 && drop(step_rng)) {
                v = 0.0;
            }
        }
        if (l2_norm(x) > kDegenerateNorm) {
            return normalize(x).vector();
        }
    }
    throw DegenerateVector(fmt::format("augmentation of image {} vanished twice", record.id));
}

RawVector aux_view(const ImageRecord& record, const DatasetConfig& config, std::size_t view_index) {
    if (view_index >= record.aux_seeds.size()) {
        throw IndexOutOfRange(fmt::format("view {} of {}", view_index, record.aux_seeds.size()));
    }
    if (view_index == 0) {
        return clean_view(record);
    }
    auto rng = derive_stream(record.aux_seeds[view_index], {stream_tag::aux_view});
    RawVector x = record.base.vector();
    const double sigma = config.aux_sigma();
    for (double& v : x) {
        v += sigma * gaussian(rng);
    }
    return normalize(x).vector();
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    const auto& cfg = dataset.config();
    binio::Writer w(path);
    w.magic(kDatasetMagic);
    w.put<std::uint32_t>(kDatasetVersion);
    w.put<std::uint64_t>(cfg.num_classes);
    w.put<std::uint64_t>(cfg.instances_per_class);
    w.put<std::uint64_t>(cfg.input_dim);
    w.put<double>(cfg.sigma_intra);
    w.put<double>(cfg.sigma_aug);
    w.put<double>(cfg.drop_prob);
    w.put<std::uint64_t>(cfg.num_aux_views);
    w.put<std::uint64_t>(cfg.seed);
    w.put<std::uint64_t>(cfg.nuisance_dim);
    w.put<double>(cfg.sigma_nuisance);
    w.put<double>(cfg.hard_fraction);
    w.put<double>(cfg.hard_scale);
    w.put<std::uint8_t>(cfg.sigma_aux.has_value() ? 1 : 0);
    w.put<double>(cfg.sigma_aux.value_or(0.0));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.layout));
    w.put<double>(cfg.chain_arc);
    w.put<std::uint64_t>(dataset.size());
    const auto& labels = GroundTruth::labels(dataset);
    for (const auto& r : dataset.records()) {
        w.put<std::uint32_t>(r.id);
        w.put<std::int32_t>(labels[r.id]);
        w.put_span(r.base.values());
        w.put_span(std::span<const std::uint64_t>(r.aux_seeds));
    }
    w.finish();
}

Dataset read_dataset(const std::filesystem::path& path) {
    binio::Reader r(path);
    r.expect_magic(kDatasetMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kDatasetVersion) {
        throw IoError(fmt::format("{}: unsupported dataset version {}", path.string(), version));
    }
    DatasetConfig cfg;
    cfg.num_classes = r.get<std::uint64_t>();
    cfg.instances_per_class = r.get<std::uint64_t>();
    cfg.input_dim = r.get<std::uint64_t>();
    cfg.sigma_intra = r.get<double>();
    cfg.sigma_aug = r.get<double>();
    cfg.drop_prob = r.get<double>();
    cfg.num_aux_views = r.get<std::uint64_t>();
    cfg.seed = r.get<std::uint64_t>();
    cfg.nuisance_dim = r.get<std::uint64_t>();
    cfg.sigma_nuisance = r.get<double>();
    cfg.hard_fraction = r.get<double>();
    cfg.hard_scale = r.get<double>();
    const bool has_aux = r.get<std::uint8_t>() != 0;
    const double aux = r.get<double>();
    if (has_aux) {
        cfg.sigma_aux = aux;
    }
    cfg.layout = static_cast<ClassLayout>(r.get<std::uint32_t>());
    cfg.chain_arc = r.get<double>();
    const auto n = r.get<std::uint64_t>();

    std::vector<ImageRecord> records(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        records[i].id = r.get<std::uint32_t>();
        labels[i] = r.get<std::int32_t>();
        records[i].base = UnitVector::adopt(r.get_vector<double>(cfg.input_dim));
        records[i].aux_seeds = r.get_vector<std::uint64_t>(cfg.num_aux_views);
    }
    r.expect_end();
    return Dataset(cfg, std::move(records), std::move(labels));
}

Dataset load_feature_file(const std::filesystem::path& path, DatasetConfig view_config) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open feature file " + path.string());
    }
    struct Row {
        long id;
        int label;
        std::vector<double> values;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() < 3) {
            throw InvalidInput(fmt::format("{}:{}: expected id,class_id,v0,...", path.string(), line_no));
        }
        Row row;
        try {
            row.id = std::stol(cells[0]);
            row.label = cells[1].empty() ? -1 : std::stoi(cells[1]);
            for (std::size_t k = 2; k < cells.size(); ++k) {
                row.values.push_back(std::stod(cells[k]));
            }
        } catch (const std::exception&) {
            throw InvalidInput(fmt::format("{}:{}: malformed number", path.string(), line_no));
        }
        if (!rows.empty() && row.values.size() != rows.front().values.size()) {
            throw DimensionMismatch(fmt::format("{}:{}: row has {} values", path.string(), line_no, row.values.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) {
        throw InvalidInput(path.string() + ": need at least two rows");
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.id < b.id; });

    view_config.input_dim = rows.front().values.size();
    std::set<int> classes;
    std::vector<ImageRecord> records;
    std::vector<int> labels;
    auto aux_rng = derive_stream(view_config.seed, {stream_tag::aux_seeds});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].id != static_cast<long>(i)) {
            throw InvalidInput(fmt::format("{}: ids must be dense 0..{}", path.string(), rows.size() - 1));
        }
        ImageRecord rec;
        rec.id = static_cast<ImageId>(i);
        rec.base = normalize(rows[i].values);
        rec.aux_seeds.resize(view_config.num_aux_views);
        for (auto& s : rec.aux_seeds) {
            s = aux_rng();
        }
        records.push_back(std::move(rec));
        labels.push_back(rows[i].label < 0 ? -1 : rows[i].label);
        if (rows[i].label >= 0) {
            classes.insert(rows[i].label);
        }
    }
    view_config.num_classes = classes.size();
    view_config.instances_per_class = 0;
    return Dataset(view_config, std::move(records), std::move(labels));
}

std::string to_string(ClassLayout layout) {
    return layout == ClassLayout::chain ? "chain" : "cluster";
}

ClassLayout class_layout_from_string(const std::string& name) {
    if (name == "cluster") return ClassLayout::cluster;
    if (name == "chain") return ClassLayout::chain;
    throw InvalidConfig("unknown layout '" + name + "'");
}

} // namespace insclr
