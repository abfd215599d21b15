#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "sasfm/grid.hpp"
#include "sasfm/random.hpp"

namespace sasfm {

/// Minimum admissible slope of a piecewise-linear phase function.
inline constexpr double kSlopeFloor = 1e-8;

/**
 * Element of the warping group: gamma(0)=0, gamma(1)=1, strictly increasing.
 *
 * Either the one-parameter family gamma(t) = t + alpha t (t - 1) with
 * |alpha| < 1, or a piecewise-linear function given by its knot values.
 */
class PhaseFunction {
public:
    struct Parametric {
        double alpha = 0.0;
    };
    struct PiecewiseLinear {
        std::vector<double> knots;
        std::vector<double> values;
    };

    /// gamma_id(t) = t.
    PhaseFunction() = default;

    static PhaseFunction identity() { return {}; }
    static PhaseFunction parametric(double alpha);
    static PhaseFunction piecewise(std::vector<double> knots, std::vector<double> values);

    [[nodiscard]] double eval(double t) const;
    /// Time derivative; piecewise-linear uses the right segment (left at t = 1).
    [[nodiscard]] double deriv(double t) const;

    [[nodiscard]] bool is_parametric() const noexcept { return std::holds_alternative<Parametric>(rep_); }
    [[nodiscard]] double alpha() const;
    [[nodiscard]] const PiecewiseLinear& piecewise_data() const;

    /// gamma evaluated on every grid point.
    [[nodiscard]] FunctionSample sample(const TimeGrid& grid) const;

private:
    explicit PhaseFunction(Parametric p) : rep_(p) {}
    explicit PhaseFunction(PiecewiseLinear p) : rep_(std::move(p)) {}

    std::variant<Parametric, PiecewiseLinear> rep_{Parametric{}};
};

/// gamma1 o gamma2 sampled at `resolution` uniform knots.
PhaseFunction compose(const PhaseFunction& outer, const PhaseFunction& inner, std::size_t resolution);

/// gamma1 o gamma2 sampled at the given knots (0 and 1 included).
PhaseFunction compose_on(const PhaseFunction& outer, const PhaseFunction& inner, std::span<const double> knots);

/**
 * Piecewise-linear inverse by swapping (t, gamma(t)) samples.
 *
 * Piecewise-linear inputs are inverted exactly on their own knots; the
 * parametric family is sampled at `resolution` uniform points first.
 */
PhaseFunction invert(const PhaseFunction& gamma, std::size_t resolution);

/// (f o gamma) sqrt(gamma'): the unitary action.
FunctionSample act_norm_preserving(const FunctionSample& f, const PhaseFunction& gamma, const TimeGrid& grid);
/// f o gamma.
FunctionSample act_value_preserving(const FunctionSample& f, const PhaseFunction& gamma, const TimeGrid& grid);
/// (f o gamma) gamma'.
FunctionSample act_area_preserving(const FunctionSample& f, const PhaseFunction& gamma, const TimeGrid& grid);

/// Successive increments of a phase function over a fixed knot set.
struct PhaseIncrements {
    std::vector<double> deltas;  ///< knots.size() - 1 positive values summing to 1
    std::vector<double> knots;
};

/// Uniform knot set {0, 1/(m-1), ..., 1}.
std::vector<double> uniform_knots(std::size_t count);

/// Knot spacings t_(j) = knots[j+1] - knots[j].
std::vector<double> knot_spacings(std::span<const double> knots);

/// deltas[j] = gamma(knot_{j+1}) - gamma(knot_j), last one as the remainder to 1.
PhaseIncrements to_increments(const PhaseFunction& gamma, std::span<const double> knots);

/// Piecewise-linear phase with the given increments on the increment knots.
PhaseFunction from_increments(const PhaseIncrements& inc);

/// Dirichlet(concentrations) draw via normalized Gamma variates.
std::vector<double> sample_dirichlet(std::span<const double> concentrations, Rng& rng);

/// Piecewise-linear phase with Dirichlet(theta * spacings) increments.
PhaseFunction sample_dirichlet_phase(double theta, std::span<const double> knots, Rng& rng);

/// log Dirichlet(concentrations) density at `x`; -inf outside the open simplex.
double dirichlet_log_density(std::span<const double> x, std::span<const double> concentrations);

/// Pointwise average of the phases on the grid (stays in the group by convexity).
PhaseFunction mean_phase(std::span<const PhaseFunction> phases, const TimeGrid& grid);

/// sup over grid points of |gamma1 - gamma2|.
double sup_distance(const PhaseFunction& a, const PhaseFunction& b, const TimeGrid& grid);

}  // namespace sasfm
