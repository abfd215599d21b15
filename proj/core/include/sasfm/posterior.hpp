#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "sasfm/basis.hpp"
#include "sasfm/grid.hpp"
#include "sasfm/mcmc.hpp"
#include "sasfm/phase.hpp"

namespace sasfm {

/// Posterior draws of mu mapped through the mean phase.
struct CenteredMuDraws {
    Eigen::MatrixXd values;  ///< kept draws x T
    PhaseFunction gamma_bar;
};

/// Mean of all kept phase draws of all observations; each mu draw is evaluated at gamma_bar and scaled by sqrt(gamma_bar').
CenteredMuDraws center_mu(const PosteriorDraws& draws, const OrthonormalBasis& fixed, const TimeGrid& grid);

struct PointwiseSummary {
    FunctionSample mean;
    FunctionSample lower;  ///< 2.5% quantile
    FunctionSample upper;  ///< 97.5% quantile
};

/// Empirical quantile with linear interpolation between order statistics (p in [0,1]).
double empirical_quantile(std::vector<double> values, double p);

PointwiseSummary pointwise_summary(const CenteredMuDraws& centered);

/// Left Riemann sum of the squared difference over t_1..t_{T-1}.
double delta_mu(const FunctionSample& estimate, const FunctionSample& truth, const TimeGrid& grid);

/// delta_mu after the best one-parameter rotation of `estimate` (alpha grid step 0.01).
double delta_mu_aligned(const FunctionSample& estimate, const FunctionSample& truth, const TimeGrid& grid);

/// For every kept draw, (mu_j o gamma_ij) sqrt(gamma_ij') on the grid.
std::vector<FunctionSample> rotated_fit(const PosteriorDraws& draws, std::size_t observation,
                                        const OrthonormalBasis& fixed, const TimeGrid& grid);

/// Pointwise average of the observations.
FunctionSample cross_sectional_mean(const Dataset& data);

}  // namespace sasfm
