#include "insclr/analytics.hpp"

#include "insclr/error.hpp"

#include <deque>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace insclr {

namespace {

std::string cell(const std::optional<double>& v) {
    return v ? fmt::format("{}", *v) : std::string();
}

std::optional<double> parse_cell(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
}

class TrailingMean {
public:
    explicit TrailingMean(std::size_t window) : window_(window) {}

    std::optional<double> push(std::optional<double> v) {
        values_.push_back(v);
        if (values_.size() > window_) values_.pop_front();
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& x : values_) {
            if (x) {
                sum += *x;
                ++n;
            }
        }
        return n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
    }

private:
    std::size_t window_;
    std::deque<std::optional<double>> values_;
};

} // namespace

std::optional<double> mining_precision(std::span<const ImageId> selected, int anchor_class,
                                       std::span<const int> labels) {
    std::size_t hits = 0;
    for (auto id : selected) {
        if (id >= labels.size()) {
            throw UnknownId(fmt::format("image {} has no label entry", id));
        }
        if (labels[id] == anchor_class) ++hits;
    }
    if (selected.empty()) return std::nullopt;
    return static_cast<double>(hits) / static_cast<double>(selected.size());
}

std::optional<double> mean_present(std::span<const std::optional<double>> values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    return n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
}

std::vector<CurvePoint> mining_curves(const TrainingHistory& history, std::size_t window) {
    if (window == 0) {
        throw InvalidInput("smoothing window must be >= 1");
    }
    TrailingMean nb(window), bp(window), nm(window), mp(window);
    std::vector<CurvePoint> out;
    out.reserve(history.size());
    for (const auto& r : history) {
        CurvePoint p;
        p.step = r.step;
        p.round = r.round;
        p.n_batch_pos_raw = r.n_batch_pos;
        p.n_batch_pos_smooth = *nb.push(r.n_batch_pos);
        p.batch_prec_raw = r.batch_precision;
        p.batch_prec_smooth = bp.push(r.batch_precision);
        p.n_mem_pos_raw = r.n_mem_pos;
        p.n_mem_pos_smooth = *nm.push(r.n_mem_pos);
        p.mem_prec_raw = r.mem_precision;
        p.mem_prec_smooth = mp.push(r.mem_precision);
        out.push_back(p);
    }
    return out;
}

void export_curves(const TrainingHistory& history, const std::filesystem::path& path, std::size_t window) {
    if (history.empty()) {
        throw InvalidInput("cannot export curves of an empty history");
    }
    const auto points = mining_curves(history, window);
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "step,round,n_batch_pos_raw,n_batch_pos_smooth,batch_prec_raw,batch_prec_smooth,"
           "n_mem_pos_raw,n_mem_pos_smooth,mem_prec_raw,mem_prec_smooth\n";
    for (const auto& p : points) {
        out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", p.step, p.round, p.n_batch_pos_raw,
                           p.n_batch_pos_smooth, cell(p.batch_prec_raw), cell(p.batch_prec_smooth), p.n_mem_pos_raw,
                           p.n_mem_pos_smooth, cell(p.mem_prec_raw), cell(p.mem_prec_smooth));
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

std::vector<CurvePoint> read_curves(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    std::vector<CurvePoint> out;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        while (cells.size() < 10) cells.emplace_back();
        CurvePoint p;
        p.step = std::stoul(cells[0]);
        p.round = std::stoul(cells[1]);
        p.n_batch_pos_raw = std::stod(cells[2]);
        p.n_batch_pos_smooth = std::stod(cells[3]);
        p.batch_prec_raw = parse_cell(cells[4]);
        p.batch_prec_smooth = parse_cell(cells[5]);
        p.n_mem_pos_raw = std::stod(cells[6]);
        p.n_mem_pos_smooth = std::stod(cells[7]);
        p.mem_prec_raw = parse_cell(cells[8]);
        p.mem_prec_smooth = parse_cell(cells[9]);
        out.push_back(p);
    }
    return out;
}

void write_history_csv(const TrainingHistory& history, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "step,round,loss,lr,n_batch_pos,n_mem_pos,batch_precision,mem_precision\n";
    for (const auto& r : history) {
        out << fmt::format("{},{},{},{},{},{},{},{}\n", r.step, r.round, r.loss, r.lr, r.n_batch_pos, r.n_mem_pos,
                           cell(r.batch_precision), cell(r.mem_precision));
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

} // namespace insclr
