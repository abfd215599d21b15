#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "sasfm/grid.hpp"

namespace sasfm {

enum class BasisKind {
    ModifiedFourier,  ///< sqrt3 t, sqrt3 (1-t), then sqrt2 cos/sin pairs of increasing frequency
    BSpline,          ///< cubic B-splines on uniform clamped knots
    Empirical,        ///< columns sampled on a grid, linearly interpolated off-grid
};

const char* to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

/// Value of the k-th (0-based) raw modified Fourier generator at t.
double modified_fourier_generator(std::size_t k, double t);

/// Values of all `count` raw cubic B-splines at t (partition of unity).
void bspline_generators(std::size_t count, double t, std::span<double> out);

/// Raw modified Fourier generators sampled on the grid, one column per function.
Eigen::MatrixXd raw_modified_fourier(const TimeGrid& grid, std::size_t count);

/// Raw clamped cubic B-splines sampled on the grid; requires count >= 4.
Eigen::MatrixXd raw_bspline(const TimeGrid& grid, std::size_t count);

struct GramSchmidtResult {
    Eigen::MatrixXd orthonormal;   ///< T x B, orthonormal under the grid inner product
    Eigen::MatrixXd coefficients;  ///< B x B upper triangular: orthonormal = raw * coefficients
};

/**
 * Classical Gram-Schmidt in column order under the trapezoid inner product.
 *
 * A second orthogonalization pass runs when the Gram residual of the first
 * pass exceeds 1e-8. Throws DegenerateBasisError if a pivot norm drops
 * below 1e-10.
 */
GramSchmidtResult gram_schmidt(const Eigen::MatrixXd& raw, const TimeGrid& grid);

/**
 * Orthonormal basis {phi_k} built from analytic generators.
 *
 * Holds the grid evaluation matrix plus the Gram-Schmidt coefficients so the
 * same functions can be evaluated at arbitrary (warped) times without
 * interpolating the grid values.
 */
class OrthonormalBasis {
public:
    /// Builds and orthonormalizes `count` generators of `kind` on `grid`.
    static OrthonormalBasis build(BasisKind kind, std::size_t count, const TimeGrid& grid);

    /// Orthonormalizes grid-sampled columns (e.g. FPCA components).
    static OrthonormalBasis empirical(const Eigen::MatrixXd& columns, const TimeGrid& grid);

    [[nodiscard]] BasisKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t count() const noexcept { return static_cast<std::size_t>(coefficients_.cols()); }
    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const Eigen::MatrixXd& eval_matrix() const noexcept { return eval_matrix_; }
    [[nodiscard]] const Eigen::MatrixXd& coefficients() const noexcept { return coefficients_; }

    /// Raw generator values at t (length count()).
    void raw_at(double t, std::span<double> out) const;

    /// Orthonormal basis values at t written into `out` (length count()).
    void eval_point(double t, std::span<double> out) const;

    /// Rows = times, columns = basis index. Throws DomainError outside [0,1].
    [[nodiscard]] Eigen::MatrixXd eval_at(std::span<const double> times) const;

    /// sum_k coef[k] * phi_k evaluated on the construction grid.
    [[nodiscard]] FunctionSample expand(const Eigen::VectorXd& coef) const;

private:
    OrthonormalBasis(BasisKind kind, TimeGrid grid, Eigen::MatrixXd raw_grid, Eigen::MatrixXd empirical);

    BasisKind kind_;
    TimeGrid grid_;
    Eigen::MatrixXd empirical_;  // only for BasisKind::Empirical
    Eigen::MatrixXd eval_matrix_;
    Eigen::MatrixXd coefficients_;
};

/// Free-function form of OrthonormalBasis::eval_at.
Eigen::MatrixXd eval_basis_at(const OrthonormalBasis& basis, std::span<const double> times);

}  // namespace sasfm
