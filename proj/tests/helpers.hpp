#ifndef INSCLR_TESTS_HELPERS_HPP
#define INSCLR_TESTS_HELPERS_HPP

#include "insclr/numerics.hpp"
#include "insclr/rng.hpp"

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace insclr::testing {

inline std::vector<double> random_vector(std::size_t dim, Rng& rng, double scale = 1.0) {
    std::vector<double> v(dim);
    for (double& x : v) x = scale * gaussian(rng);
    return v;
}

inline UnitVector random_unit(std::size_t dim, Rng& rng) { return normalize(random_vector(dim, rng)); }

inline UnitVector unit(std::vector<double> v) { return normalize(v); }

inline UnitVector basis(std::size_t dim, std::size_t i) {
    std::vector<double> v(dim, 0.0);
    v[i] = 1.0;
    return normalize(v);
}

/// Relative error with an absolute floor so exact zeros compare sensibly.
inline double rel_err(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// A scratch directory under the test working directory, emptied on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::current_path() / "scratch" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace insclr::testing

#endif
