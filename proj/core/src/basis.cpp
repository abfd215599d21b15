#include "sasfm/basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "sasfm/error.hpp"

namespace sasfm {

namespace {

constexpr int kSplineDegree = 3;

// Interior knot k (1-based) of the clamped uniform knot vector for `count` splines.
double clamped_knot(std::size_t count, std::ptrdiff_t index) {
    const auto n_basis = static_cast<std::ptrdiff_t>(count);
    if (index <= kSplineDegree) return 0.0;
    if (index >= n_basis) return 1.0;
    const double pieces = static_cast<double>(n_basis - kSplineDegree);
    return static_cast<double>(index - kSplineDegree) / pieces;
}

Eigen::MatrixXd sample_generators(const TimeGrid& grid, std::size_t count,
                                  const auto& evaluate) {
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(count));
    std::vector<double> row(count);
    for (Eigen::Index j = 0; j < raw.rows(); ++j) {
        evaluate(grid.points()[j], std::span<double>(row));
        for (std::size_t k = 0; k < count; ++k) raw(j, static_cast<Eigen::Index>(k)) = row[k];
    }
    return raw;
}

void check_time(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("basis evaluation: time outside [0,1]");
}

}  // namespace

const char* to_string(BasisKind kind) {
    switch (kind) {
        case BasisKind::ModifiedFourier: return "fourier";
        case BasisKind::BSpline: return "bspline";
        case BasisKind::Empirical: return "empirical";
    }
    return "unknown";
}

BasisKind basis_kind_from_string(const std::string& name) {
    if (name == "fourier") return BasisKind::ModifiedFourier;
    if (name == "bspline") return BasisKind::BSpline;
    if (name == "empirical") return BasisKind::Empirical;
    throw ArgumentError("unknown basis kind '" + name + "' (expected fourier|bspline|empirical)");
}

double modified_fourier_generator(std::size_t k, double t) {
    using std::numbers::pi;
    static const double sqrt3 = std::sqrt(3.0);
    static const double sqrt2 = std::sqrt(2.0);
    if (k == 0) return sqrt3 * t;
    if (k == 1) return sqrt3 * (1.0 - t);
    const std::size_t harmonic = (k - 2) / 2 + 1;
    const double arg = 2.0 * pi * static_cast<double>(harmonic) * t;
    return ((k - 2) % 2 == 0) ? sqrt2 * std::cos(arg) : sqrt2 * std::sin(arg);
}

void bspline_generators(std::size_t count, double t, std::span<double> out) {
    if (count < 4) throw ArgumentError("B-spline basis needs at least 4 functions");
    if (out.size() != count) throw DimensionError("bspline_generators: output size mismatch");
    check_time(t);
    std::fill(out.begin(), out.end(), 0.0);

    const auto n_basis = static_cast<std::ptrdiff_t>(count);
    // knot span: U[span] <= t < U[span+1], clamped to the last non-empty span at t = 1
    std::ptrdiff_t span = kSplineDegree;
    if (t >= 1.0) {
        span = n_basis - 1;
    } else {
        const double pieces = static_cast<double>(n_basis - kSplineDegree);
        span = kSplineDegree + static_cast<std::ptrdiff_t>(std::floor(t * pieces));
        span = std::clamp(span, std::ptrdiff_t{kSplineDegree}, n_basis - 1);
        while (span > kSplineDegree && clamped_knot(count, span) > t) --span;
        while (span < n_basis - 1 && clamped_knot(count, span + 1) <= t) ++span;
    }

    std::array<double, kSplineDegree + 1> basis{};
    std::array<double, kSplineDegree + 1> left{};
    std::array<double, kSplineDegree + 1> right{};
    basis[0] = 1.0;
    for (int j = 1; j <= kSplineDegree; ++j) {
        left[j] = t - clamped_knot(count, span + 1 - j);
        right[j] = clamped_knot(count, span + j) - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = basis[r] / (right[r + 1] + left[j - r]);
            basis[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        basis[j] = saved;
    }
    for (int r = 0; r <= kSplineDegree; ++r) out[static_cast<std::size_t>(span - kSplineDegree + r)] = basis[r];
}

Eigen::MatrixXd raw_modified_fourier(const TimeGrid& grid, std::size_t count) {
    if (count == 0) throw ArgumentError("modified Fourier basis needs at least 1 function");
    return sample_generators(grid, count, [count](double t, std::span<double> row) {
        for (std::size_t k = 0; k < count; ++k) row[k] = modified_fourier_generator(k, t);
    });
}

Eigen::MatrixXd raw_bspline(const TimeGrid& grid, std::size_t count) {
    if (count < 4) throw ArgumentError("B-spline basis needs at least 4 functions");
    return sample_generators(grid, count, [count](double t, std::span<double> row) {
        bspline_generators(count, t, row);
    });
}

GramSchmidtResult gram_schmidt(const Eigen::MatrixXd& raw, const TimeGrid& grid) {
    if (static_cast<std::size_t>(raw.rows()) != grid.size())
        throw DimensionError("gram_schmidt: raw functions not sampled on the grid");
    const Eigen::Index count = raw.cols();
    const Eigen::VectorXd& w = grid.weights();

    auto pass = [&](const Eigen::MatrixXd& input) {
        GramSchmidtResult out{Eigen::MatrixXd(input.rows(), count), Eigen::MatrixXd::Zero(count, count)};
        for (Eigen::Index k = 0; k < count; ++k) {
            Eigen::VectorXd v = input.col(k);
            Eigen::VectorXd c = Eigen::VectorXd::Unit(count, k);
            for (Eigen::Index j = 0; j < k; ++j) {
                const double proj = (input.col(k).array() * out.orthonormal.col(j).array() * w.array()).sum();
                v -= proj * out.orthonormal.col(j);
                c -= proj * out.coefficients.col(j);
            }
            const double norm = std::sqrt(std::max(0.0, (v.array().square() * w.array()).sum()));
            if (!(norm >= 1e-10))
                throw DegenerateBasisError("gram_schmidt: generator " + std::to_string(k + 1) +
                                           " is linearly dependent on the grid");
            out.orthonormal.col(k) = v / norm;
            out.coefficients.col(k) = c / norm;
        }
        return out;
    };

    auto gram_residual = [&](const Eigen::MatrixXd& q) {
        const Eigen::MatrixXd gram = q.transpose() * w.asDiagonal() * q;
        return (gram - Eigen::MatrixXd::Identity(count, count)).cwiseAbs().maxCoeff();
    };

    GramSchmidtResult result = pass(raw);
    if (count > 0 && gram_residual(result.orthonormal) > 1e-8) {
        GramSchmidtResult second = pass(result.orthonormal);
        result.orthonormal = std::move(second.orthonormal);
        result.coefficients = result.coefficients * second.coefficients;
    }
    return result;
}

OrthonormalBasis::OrthonormalBasis(BasisKind kind, TimeGrid grid, Eigen::MatrixXd raw_grid,
                                   Eigen::MatrixXd empirical)
    : kind_(kind), grid_(std::move(grid)), empirical_(std::move(empirical)) {
    GramSchmidtResult gs = gram_schmidt(raw_grid, grid_);
    eval_matrix_ = std::move(gs.orthonormal);
    coefficients_ = std::move(gs.coefficients);
}

OrthonormalBasis OrthonormalBasis::build(BasisKind kind, std::size_t count, const TimeGrid& grid) {
    switch (kind) {
        case BasisKind::ModifiedFourier:
            return OrthonormalBasis(kind, grid, raw_modified_fourier(grid, count), {});
        case BasisKind::BSpline:
            return OrthonormalBasis(kind, grid, raw_bspline(grid, count), {});
        case BasisKind::Empirical:
            break;
    }
    throw ArgumentError("OrthonormalBasis::build: empirical bases need sampled columns");
}

OrthonormalBasis OrthonormalBasis::empirical(const Eigen::MatrixXd& columns, const TimeGrid& grid) {
    if (columns.cols() == 0) throw ArgumentError("empirical basis needs at least 1 column");
    if (static_cast<std::size_t>(columns.rows()) != grid.size())
        throw DimensionError("empirical basis columns not sampled on the grid");
    return OrthonormalBasis(BasisKind::Empirical, grid, columns, columns);
}

void OrthonormalBasis::raw_at(double t, std::span<double> out) const {
    check_time(t);
    const std::size_t n = count();
    if (out.size() != n) throw DimensionError("raw_at: output size mismatch");
    switch (kind_) {
        case BasisKind::ModifiedFourier:
            for (std::size_t k = 0; k < n; ++k) out[k] = modified_fourier_generator(k, t);
            return;
        case BasisKind::BSpline:
            bspline_generators(n, t, out);
            return;
        case BasisKind::Empirical: {
            const auto seg = static_cast<Eigen::Index>(grid_.segment(t));
            const double t0 = grid_.points()[seg];
            const double t1 = grid_.points()[seg + 1];
            const double w = (t - t0) / (t1 - t0);
            for (std::size_t k = 0; k < n; ++k) {
                const auto col = static_cast<Eigen::Index>(k);
                out[k] = (1.0 - w) * empirical_(seg, col) + w * empirical_(seg + 1, col);
            }
            return;
        }
    }
}

void OrthonormalBasis::eval_point(double t, std::span<double> out) const {
    const std::size_t n = count();
    if (out.size() != n) throw DimensionError("eval_point: output size mismatch");
    std::array<double, 64> small{};
    std::vector<double> large;
    std::span<double> raw;
    if (n <= small.size()) {
        raw = std::span<double>(small.data(), n);
    } else {
        large.resize(n);
        raw = std::span<double>(large);
    }
    raw_at(t, raw);
    // coefficients_ is upper triangular: phi_k = sum_{j<=k} raw_j * C(j,k)
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= k; ++j)
            acc += raw[j] * coefficients_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
        out[k] = acc;
    }
}

Eigen::MatrixXd OrthonormalBasis::eval_at(std::span<const double> times) const {
    const auto n = static_cast<Eigen::Index>(count());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), n);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < times.size(); ++r) {
        eval_point(times[r], row);
        for (Eigen::Index k = 0; k < n; ++k) out(static_cast<Eigen::Index>(r), k) = row[static_cast<std::size_t>(k)];
    }
    return out;
}

FunctionSample OrthonormalBasis::expand(const Eigen::VectorXd& coef) const {
    if (coef.size() != eval_matrix_.cols()) throw DimensionError("expand: coefficient length mismatch");
    return eval_matrix_ * coef;
}

Eigen::MatrixXd eval_basis_at(const OrthonormalBasis& basis, std::span<const double> times) {
    return basis.eval_at(times);
}

}  // namespace sasfm
