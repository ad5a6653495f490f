#ifndef INSCLR_NUMERICS_HPP
#define INSCLR_NUMERICS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

/**
 * @file numerics.hpp
 *
 * @brief Vector primitives shared by every other module: normalization,
 * cosine similarity, similarity matrices and the gradient of a cosine with
 * respect to an unnormalized input.
 */

namespace insclr {

using ImageId = std::uint32_t;

/// Pre-normalization feature. Entries are expected to be finite.
using RawVector = std::vector<double>;

/// Norms at or below this are treated as degenerate.
inline constexpr double kDegenerateNorm = 1e-12;

/// Maximum deviation from unit norm accepted by `UnitVector::adopt`.
inline constexpr double kUnitTolerance = 1e-5;

/**
 * @brief An L2-normalized vector.
 *
 * Instances are only created through `normalize()` or `UnitVector::adopt()`,
 * so holders can rely on the unit-norm invariant without re-checking it.
 */
class UnitVector {
public:
    UnitVector() = default;

    /**
     * Wrap values that are already unit norm (e.g. read back from a file).
     * Throws `DegenerateVector` when the norm is off by more than `kUnitTolerance`.
     */
    static UnitVector adopt(std::vector<double> values);

    std::span<const double> values() const { return values_; }
    std::size_t dim() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& vector() const { return values_; }

    bool operator==(const UnitVector&) const = default;

private:
    explicit UnitVector(std::vector<double> values) : values_(std::move(values)) {}
    std::vector<double> values_;

    friend UnitVector normalize(std::span<const double>);
};

/// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);

double l2_norm(std::span<const double> v);

/// Returns v / ||v||. Throws `DegenerateVector` when ||v|| <= kDegenerateNorm.
UnitVector normalize(std::span<const double> v);

/// Plain dot product of two unit vectors. Throws `DimensionMismatch`.
double cosine(const UnitVector& a, const UnitVector& b);

/// Entry (i, j) is cosine(a[i], b[j]). An empty side yields an empty dimension.
Matrix similarity_matrix(std::span<const UnitVector> a, std::span<const UnitVector> b);

/**
 * Gradient of cos(normalize(u), b) with respect to the raw vector u:
 * b/||u|| - (û.b) u/||u||^2 with û = u/||u||.
 */
RawVector cosine_grad_raw(std::span<const double> u, const UnitVector& b);

/// Unit-normalized mean of unit vectors. Throws `DegenerateVector` if the mean vanishes.
UnitVector normalized_mean(std::span<const UnitVector> vectors);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

} // namespace insclr

#endif
