#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sasfm/basis.hpp"
#include "sasfm/grid.hpp"
#include "sasfm/phase.hpp"

namespace sasfm {

enum class AlignFamily {
    PM1Grid,      ///< alpha in {-0.99, ..., 0.99}, step 0.01
    PiecewiseCD,  ///< 7-knot piecewise-linear warps, golden-section coordinate descent from the PM1Grid optimum
};

const char* to_string(AlignFamily family);
AlignFamily align_family_from_string(const std::string& name);

struct Alignment {
    PhaseFunction gamma;
    double cost = 0.0;  ///< ||mu - (f o gamma) sqrt(gamma')||^2
};

/// Squared L2 distance between `mu` and the norm-preserving action of gamma on f.
double alignment_cost(const FunctionSample& f, const FunctionSample& mu, const PhaseFunction& gamma,
                      const TimeGrid& grid);

Alignment align_to_template(const FunctionSample& f, const FunctionSample& mu, const TimeGrid& grid,
                            AlignFamily family = AlignFamily::PM1Grid);

struct CenteredMean {
    FunctionSample mean;
    std::vector<FunctionSample> aligned;  ///< (f_i o gamma_i) sqrt(gamma_i') against the final mean
    std::vector<PhaseFunction> phases;
    std::vector<double> objective;        ///< sum of alignment costs after each round
    std::size_t rounds = 0;
};

/// Alternates between aligning every observation to the mean and re-averaging.
CenteredMean centered_mean(const Dataset& data, const TimeGrid& grid, std::size_t iters,
                           AlignFamily family = AlignFamily::PM1Grid);

struct FpcaResult {
    Eigen::MatrixXd components;        ///< T x K leading left singular vectors of K
    Eigen::VectorXd singular_values;   ///< all of them, non-increasing
    Eigen::VectorXd energy;            ///< singular_values / their sum (zero if the sum is zero)

    /// Smallest number of components whose cumulative energy reaches `fraction`.
    [[nodiscard]] std::size_t components_for(double fraction) const;
};

/// SVD of the sample covariance (divisor n-1) of aligned - mu_bar.
FpcaResult fpca_basis(const Dataset& aligned, const TimeGrid& grid, const FunctionSample& mu_bar,
                      std::size_t num_components);

/// ||f - f_hat|| with f_hat the projection on `basis`, or min over warps of ||f - (f_hat o gamma) sqrt(gamma')||.
double projection_residual(const FunctionSample& f, const OrthonormalBasis& basis, const TimeGrid& grid,
                           bool optimize_phase, AlignFamily family = AlignFamily::PM1Grid);

}  // namespace sasfm
