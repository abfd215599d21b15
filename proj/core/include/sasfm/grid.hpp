#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sasfm {

/// Function values sampled on a TimeGrid.
using FunctionSample = Eigen::VectorXd;

/// A collection of functional observations sharing one grid.
using Dataset = std::vector<FunctionSample>;

/**
 * Strictly increasing sample times on [0,1] with trapezoid quadrature weights.
 *
 * The first point is 0 and the last is 1. Weights sum to 1 (the length of
 * the domain) so that inner products approximate integrals over [0,1].
 */
class TimeGrid {
public:
    /// Validates and stores `points`; throws ArgumentError on a bad layout.
    explicit TimeGrid(std::vector<double> points);

    /// T equally spaced points including both endpoints (T >= 2).
    static TimeGrid uniform(std::size_t count);

    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] const Eigen::VectorXd& points() const noexcept { return points_; }
    [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return weights_; }
    [[nodiscard]] double operator[](std::size_t k) const { return points_[static_cast<Eigen::Index>(k)]; }

    /// Index of the segment [t_k, t_{k+1}] containing t (t in [0,1]).
    [[nodiscard]] std::size_t segment(double t) const;

    /// Evaluates `fn` at every grid point.
    template <typename Fn>
    [[nodiscard]] FunctionSample sample(Fn&& fn) const {
        FunctionSample out(points_.size());
        for (Eigen::Index k = 0; k < points_.size(); ++k) out[k] = fn(points_[k]);
        return out;
    }

    friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
        return a.points_.size() == b.points_.size() && a.points_ == b.points_;
    }

private:
    Eigen::VectorXd points_;
    Eigen::VectorXd weights_;
    bool uniform_ = false;
};

/// Trapezoid approximation of the integral of f*g over [0,1].
double inner_product(const FunctionSample& f, const FunctionSample& g, const TimeGrid& grid);

/// sqrt(inner_product(f, f)).
double l2_norm(const FunctionSample& f, const TimeGrid& grid);

/// Piecewise-linear interpolation of f at t in [0,1]; exact at grid points.
double interp_linear(const FunctionSample& f, const TimeGrid& grid, double t);

/// Throws DimensionError unless f has one value per grid point.
void require_on_grid(const FunctionSample& f, const TimeGrid& grid, const char* what);

}  // namespace sasfm
