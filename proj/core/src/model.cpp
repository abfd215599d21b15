#include "sasfm/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sasfm/error.hpp"

namespace sasfm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::LLT<Eigen::MatrixXd> factorize_with_jitter(Eigen::MatrixXd m, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return llt;
    const double jitter = 1e-10 * m.trace() / static_cast<double>(m.rows());
    m.diagonal().array() += jitter;
    llt.compute(m);
    if (llt.info() != Eigen::Success)
        throw NumericalError(std::string(what) + ": covariance not positive definite after jitter");
    return llt;
}

double log_diag_sum(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    const auto& l = llt.matrixLLT();
    double s = 0.0;
    for (Eigen::Index k = 0; k < l.rows(); ++k) s += std::log(l(k, k));
    return 2.0 * s;
}

}  // namespace

const char* to_string(PriorModel model) {
    return model == PriorModel::OneParameter ? "pm1" : "pm2";
}

PriorModel prior_model_from_string(const std::string& name) {
    if (name == "pm1") return PriorModel::OneParameter;
    if (name == "pm2") return PriorModel::DirichletIncrements;
    throw ArgumentError("unknown prior model '" + name + "' (expected pm1|pm2)");
}

void ModelConfig::validate() const {
    if (fixed_count < 1 || random_count < 1) throw ArgumentError("basis counts must be >= 1");
    if (fixed_basis == BasisKind::BSpline && fixed_count < 4) throw ArgumentError("B-spline fixed basis needs >= 4 functions");
    if (random_basis == BasisKind::BSpline && random_count < 4) throw ArgumentError("B-spline random basis needs >= 4 functions");
    if (phase_knots < 2) throw ArgumentError("phase_knots must be >= 2");
    if (!(theta_gamma > 0.0)) throw ArgumentError("theta_gamma must be positive");
    if (!(prior_var_a > 0.0)) throw ArgumentError("prior_var_a must be positive");
    if (!(ig_shape > 0.0) || !(ig_scale > 0.0)) throw ArgumentError("inverse-gamma shape and scale must be positive");
}

std::vector<double> ModelConfig::dirichlet_concentrations() const {
    auto conc = knot_spacings(knots());
    for (double& c : conc) c *= theta_gamma;
    return conc;
}

ModelBases make_bases(const ModelConfig& config, const TimeGrid& grid) {
    return ModelBases{OrthonormalBasis::build(config.fixed_basis, config.fixed_count, grid),
                      OrthonormalBasis::build(config.random_basis, config.random_count, grid)};
}

WarpedDesign warped_design(const OrthonormalBasis& fixed, const OrthonormalBasis& random,
                           const PhaseFunction& gamma, const TimeGrid& grid) {
    const auto rows = static_cast<Eigen::Index>(grid.size());
    const auto bf = static_cast<Eigen::Index>(fixed.count());
    const auto br = static_cast<Eigen::Index>(random.count());
    WarpedDesign d{Eigen::MatrixXd(rows, bf), Eigen::MatrixXd(rows, br), Eigen::VectorXd(rows)};
    std::vector<double> row_f(static_cast<std::size_t>(bf));
    std::vector<double> row_r(static_cast<std::size_t>(br));
    for (Eigen::Index j = 0; j < rows; ++j) {
        const double t = grid.points()[j];
        const double warped = gamma.eval(t);
        const double slope = gamma.deriv(t);
        if (!(slope > 0.0)) throw DegeneratePhaseError("warped_design: non-positive phase derivative");
        const double scale = std::sqrt(slope);
        fixed.eval_point(warped, row_f);
        random.eval_point(warped, row_r);
        for (Eigen::Index k = 0; k < bf; ++k) d.phi(j, k) = row_f[static_cast<std::size_t>(k)] * scale;
        for (Eigen::Index k = 0; k < br; ++k) d.phi_tilde(j, k) = row_r[static_cast<std::size_t>(k)] * scale;
        d.gamma_dot[j] = slope;
    }
    return d;
}

ObservationLikelihood::ObservationLikelihood(const FunctionSample& f, WarpedDesign design, CovariancePath path)
    : f_(f), design_(std::move(design)) {
    const Eigen::Index rows = design_.phi.rows();
    if (f_.size() != rows || design_.phi_tilde.rows() != rows || design_.gamma_dot.size() != rows)
        throw DimensionError("ObservationLikelihood: data and design sizes disagree");
    if ((design_.gamma_dot.array() <= 0.0).any()) throw DegeneratePhaseError("ObservationLikelihood: gamma_dot must be positive");

    switch (path) {
        case CovariancePath::Auto:
            woodbury_ = 4 * design_.phi_tilde.cols() < rows;
            break;
        case CovariancePath::Dense: woodbury_ = false; break;
        case CovariancePath::Woodbury: woodbury_ = true; break;
    }

    sum_log_gamma_dot_ = design_.gamma_dot.array().log().sum();
    if (woodbury_) {
        const Eigen::VectorXd inv_d = design_.gamma_dot.cwiseInverse();
        const Eigen::MatrixXd d_phi = inv_d.asDiagonal() * design_.phi;
        const Eigen::MatrixXd d_tilde = inv_d.asDiagonal() * design_.phi_tilde;
        phi_d_phi_ = design_.phi.transpose() * d_phi;
        tilde_d_tilde_ = design_.phi_tilde.transpose() * d_tilde;
        tilde_d_phi_ = design_.phi_tilde.transpose() * d_phi;
        phi_d_f_ = d_phi.transpose() * f_;
        tilde_d_f_ = d_tilde.transpose() * f_;
        f_d_f_ = f_.dot(inv_d.cwiseProduct(f_));
    }
}

ObservationLikelihood::Factor ObservationLikelihood::factor(double sigma2, double sigma_c2) const {
    if (!(sigma2 > 0.0) || !(sigma_c2 >= 0.0)) throw NumericalError("likelihood: variances out of range");
    Factor out;
    out.sigma2 = sigma2;
    out.sigma_c2 = sigma_c2;
    const double rows = static_cast<double>(f_.size());
    if (woodbury_) {
        const double kappa = sigma_c2 / sigma2;
        const Eigen::Index br = tilde_d_tilde_.rows();
        Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(br, br) + kappa * tilde_d_tilde_;
        out.chol = factorize_with_jitter(std::move(cap), "Woodbury capacitance");
        out.logdet = rows * std::log(sigma2) + sum_log_gamma_dot_ + log_diag_sum(out.chol);
    } else {
        Eigen::MatrixXd cov = sigma_c2 * design_.phi_tilde * design_.phi_tilde.transpose();
        cov.diagonal() += sigma2 * design_.gamma_dot;
        out.chol = factorize_with_jitter(std::move(cov), "marginal covariance");
        out.logdet = log_diag_sum(out.chol);
    }
    return out;
}

double ObservationLikelihood::loglik(const Eigen::VectorXd& a, const Factor& factor) const {
    if (a.size() != design_.phi.cols()) throw DimensionError("loglik: coefficient length mismatch");
    const double rows = static_cast<double>(f_.size());
    double quad;
    if (woodbury_) {
        const double r_d_r = f_d_f_ - 2.0 * a.dot(phi_d_f_) + a.dot(phi_d_phi_ * a);
        const Eigen::VectorXd z = tilde_d_f_ - tilde_d_phi_ * a;
        const double kappa = factor.sigma_c2 / factor.sigma2;
        const double correction = kappa == 0.0 ? 0.0 : kappa * z.dot(factor.chol.solve(z));
        quad = (r_d_r - correction) / factor.sigma2;
    } else {
        const Eigen::VectorXd r = f_ - design_.phi * a;
        const Eigen::VectorXd half = factor.chol.matrixL().solve(r);
        quad = half.squaredNorm();
    }
    return -0.5 * (rows * std::log(2.0 * std::numbers::pi) + factor.logdet + quad);
}

Eigen::MatrixXd ObservationLikelihood::information_a(const Factor& factor) const {
    if (woodbury_) {
        const double kappa = factor.sigma_c2 / factor.sigma2;
        Eigen::MatrixXd info = phi_d_phi_;
        if (kappa != 0.0) info -= kappa * tilde_d_phi_.transpose() * factor.chol.solve(tilde_d_phi_);
        return info / factor.sigma2;
    }
    const Eigen::MatrixXd half = factor.chol.matrixL().solve(design_.phi);
    return half.transpose() * half;
}

double marginal_loglik_one(const FunctionSample& f, const Eigen::VectorXd& a, double sigma2, double sigma_c2,
                           const WarpedDesign& design, const TimeGrid& grid, CovariancePath path) {
    require_on_grid(f, grid, "marginal_loglik_one");
    const ObservationLikelihood obs(f, design, path);
    return obs.loglik(a, obs.factor(sigma2, sigma_c2));
}

double total_loglik(const Dataset& data, const ModelState& state, const ModelBases& bases, const TimeGrid& grid) {
    if (state.phases.size() != data.size()) throw DimensionError("total_loglik: one phase per observation required");
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto design = warped_design(bases.fixed, bases.random, state.phases[i], grid);
        total += marginal_loglik_one(data[i], state.a, state.sigma2, state.sigma_c2, design, grid);
    }
    return total;
}

double log_inverse_gamma(double x, double shape, double scale) {
    if (!(x > 0.0) || !std::isfinite(x)) return kNegInf;
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double log_prior_a(const Eigen::VectorXd& a, const ModelConfig& config) {
    const double dim = static_cast<double>(a.size());
    return -0.5 * (dim * std::log(2.0 * std::numbers::pi * config.prior_var_a) + a.squaredNorm() / config.prior_var_a);
}

double log_prior_alpha(double alpha) {
    return (alpha > -1.0 && alpha < 1.0) ? 0.0 : kNegInf;
}

double log_prior_phase(const PhaseFunction& gamma, const ModelConfig& config) {
    if (config.prior_model == PriorModel::OneParameter) {
        if (!gamma.is_parametric()) return kNegInf;
        return log_prior_alpha(gamma.alpha());
    }
    const auto knots = config.knots();
    try {
        const auto inc = to_increments(gamma, knots);
        return dirichlet_log_density(inc.deltas, config.dirichlet_concentrations());
    } catch (const DegeneratePhaseError&) {
        return kNegInf;
    }
}

double log_prior(const ModelState& state, const ModelConfig& config) {
    double lp = log_prior_a(state.a, config) + log_inverse_gamma(state.sigma2, config.ig_shape, config.ig_scale) +
                log_inverse_gamma(state.sigma_c2, config.ig_shape, config.ig_scale);
    for (const auto& g : state.phases) lp += log_prior_phase(g, config);
    return lp;
}

}  // namespace sasfm
