#include "insclr/numerics.hpp"

#include "insclr/error.hpp"

#include <cmath>
#include <fmt/format.h>

namespace insclr {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* where) {
    if (a != b) {
        throw DimensionMismatch(fmt::format("{}: {} vs {}", where, a, b));
    }
}

} // namespace

UnitVector UnitVector::adopt(std::vector<double> values) {
    const double norm = l2_norm(values);
    if (values.empty() || std::abs(norm - 1.0) > kUnitTolerance) {
        throw DegenerateVector(fmt::format("expected unit norm, got {}", norm));
    }
    return UnitVector(std::move(values));
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

double l2_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

UnitVector normalize(std::span<const double> v) {
    const double norm = l2_norm(v);
    if (!(norm > kDegenerateNorm) || !std::isfinite(norm)) {
        throw DegenerateVector(fmt::format("norm {} of a {}-vector", norm, v.size()));
    }
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) {
        x /= norm;
    }
    return UnitVector(std::move(out));
}

double cosine(const UnitVector& a, const UnitVector& b) {
    require_same_dim(a.dim(), b.dim(), "cosine");
    return dot(a.values(), b.values());
}

Matrix similarity_matrix(std::span<const UnitVector> a, std::span<const UnitVector> b) {
    Matrix out(a.size(), b.size());
    if (a.empty() || b.empty()) {
        return out;
    }
    const std::size_t dim = a.front().dim();
    for (const auto& v : a) {
        require_same_dim(v.dim(), dim, "similarity_matrix");
    }
    for (const auto& v : b) {
        require_same_dim(v.dim(), dim, "similarity_matrix");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            out(i, j) = dot(a[i].values(), b[j].values());
        }
    }
    return out;
}

RawVector cosine_grad_raw(std::span<const double> u, const UnitVector& b) {
    require_same_dim(u.size(), b.dim(), "cosine_grad_raw");
    const double norm = l2_norm(u);
    if (!(norm > kDegenerateNorm)) {
        throw DegenerateVector(fmt::format("gradient at norm {}", norm));
    }
    const double inv = 1.0 / norm;
    const double cos_ub = dot(u, b.values()) * inv;
    RawVector grad(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        grad[i] = inv * (b[i] - cos_ub * u[i] * inv);
    }
    return grad;
}

UnitVector normalized_mean(std::span<const UnitVector> vectors) {
    if (vectors.empty()) {
        throw DegenerateVector("mean of zero vectors");
    }
    std::vector<double> acc(vectors.front().dim(), 0.0);
    for (const auto& v : vectors) {
        require_same_dim(v.dim(), acc.size(), "normalized_mean");
        axpy(1.0, v.values(), acc);
    }
    for (double& x : acc) {
        x /= static_cast<double>(vectors.size());
    }
    return normalize(acc);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    require_same_dim(x.size(), y.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] += alpha * x[i];
    }
}

} // namespace insclr
