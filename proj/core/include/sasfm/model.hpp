#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "sasfm/basis.hpp"
#include "sasfm/grid.hpp"
#include "sasfm/phase.hpp"

namespace sasfm {

enum class PriorModel {
    OneParameter,         ///< PM1: gamma(t) = t + alpha t (t - 1), alpha ~ Uniform(-1,1)
    DirichletIncrements,  ///< PM2: increments on uniform knots ~ Dirichlet(theta * spacings)
};

const char* to_string(PriorModel model);
PriorModel prior_model_from_string(const std::string& name);

struct ModelConfig {
    std::size_t fixed_count = 6;   ///< B_f
    std::size_t random_count = 6;  ///< B_r
    BasisKind fixed_basis = BasisKind::ModifiedFourier;
    BasisKind random_basis = BasisKind::BSpline;
    PriorModel prior_model = PriorModel::OneParameter;
    std::size_t phase_knots = 5;  ///< T_gamma, uniform on [0,1]
    double theta_gamma = 30.0;
    double prior_var_a = 10000.0;
    double ig_shape = 0.01;
    double ig_scale = 0.01;

    void validate() const;
    [[nodiscard]] std::vector<double> knots() const { return uniform_knots(phase_knots); }
    /// theta_gamma * knot spacings.
    [[nodiscard]] std::vector<double> dirichlet_concentrations() const;
};

/// Current values of every sampled parameter.
struct ModelState {
    Eigen::VectorXd a;
    double sigma2 = 1.0;
    double sigma_c2 = 1.0;
    std::vector<PhaseFunction> phases;
};

/// Fixed-effect and random-effect bases on the data grid.
struct ModelBases {
    OrthonormalBasis fixed;
    OrthonormalBasis random;
};

/// Builds both bases from the config (empirical kinds must be built by the caller).
ModelBases make_bases(const ModelConfig& config, const TimeGrid& grid);

/// Basis matrices evaluated at warped times and scaled by sqrt(gamma').
struct WarpedDesign {
    Eigen::MatrixXd phi;        ///< T x B_f
    Eigen::MatrixXd phi_tilde;  ///< T x B_r
    Eigen::VectorXd gamma_dot;  ///< length T, positive
};

WarpedDesign warped_design(const OrthonormalBasis& fixed, const OrthonormalBasis& random,
                           const PhaseFunction& gamma, const TimeGrid& grid);

enum class CovariancePath {
    Auto,      ///< Woodbury when B_r < T/4, dense otherwise
    Dense,     ///< Cholesky of the full T x T covariance
    Woodbury,  ///< B_r x B_r capacitance matrix
};

/**
 * Marginal Gaussian likelihood of one observation with the random-effect
 * coefficients integrated out:
 *   f ~ MVN(Phi a, sigma2 diag(gamma') + sigma_c2 PhiTilde PhiTilde^T).
 *
 * Caches the design-dependent sufficient statistics so that repeated
 * evaluations for new (a, sigma2, sigma_c2) cost O(B^2) on the Woodbury path.
 */
class ObservationLikelihood {
public:
    /// Variance-dependent factorization; reused across evaluations in a.
    struct Factor {
        double sigma2 = 1.0;
        double sigma_c2 = 0.0;
        double logdet = 0.0;
        Eigen::LLT<Eigen::MatrixXd> chol;  ///< capacitance (Woodbury) or full covariance (dense)
    };

    ObservationLikelihood(const FunctionSample& f, WarpedDesign design, CovariancePath path = CovariancePath::Auto);

    /// Throws NumericalError if the matrix is not positive definite after one jitter.
    [[nodiscard]] Factor factor(double sigma2, double sigma_c2) const;
    [[nodiscard]] double loglik(const Eigen::VectorXd& a, const Factor& factor) const;

    /// Phi^T Sigma^-1 Phi: the information about a carried by this observation.
    [[nodiscard]] Eigen::MatrixXd information_a(const Factor& factor) const;

    [[nodiscard]] bool uses_woodbury() const noexcept { return woodbury_; }
    [[nodiscard]] const WarpedDesign& design() const noexcept { return design_; }

private:
    FunctionSample f_;
    WarpedDesign design_;
    bool woodbury_ = true;
    double sum_log_gamma_dot_ = 0.0;
    // Woodbury sufficient statistics (D = diag(gamma'))
    Eigen::MatrixXd phi_d_phi_;    // Phi^T D^-1 Phi
    Eigen::MatrixXd tilde_d_tilde_;  // PhiTilde^T D^-1 PhiTilde
    Eigen::MatrixXd tilde_d_phi_;  // PhiTilde^T D^-1 Phi
    Eigen::VectorXd phi_d_f_;
    Eigen::VectorXd tilde_d_f_;
    double f_d_f_ = 0.0;
};

double marginal_loglik_one(const FunctionSample& f, const Eigen::VectorXd& a, double sigma2, double sigma_c2,
                           const WarpedDesign& design, const TimeGrid& grid,
                           CovariancePath path = CovariancePath::Auto);

double total_loglik(const Dataset& data, const ModelState& state, const ModelBases& bases, const TimeGrid& grid);

/// log IG(shape, scale) density, proportional to x^(-shape-1) exp(-scale/x).
double log_inverse_gamma(double x, double shape, double scale);
double log_prior_a(const Eigen::VectorXd& a, const ModelConfig& config);
/// Uniform(-1,1) prior on the PM1 parameter, unnormalized: 0 inside, -inf outside.
double log_prior_alpha(double alpha);
/// PM1: 0 inside (-1,1), -inf outside. PM2: Dirichlet log density of the knot increments.
double log_prior_phase(const PhaseFunction& gamma, const ModelConfig& config);
double log_prior(const ModelState& state, const ModelConfig& config);

}  // namespace sasfm
