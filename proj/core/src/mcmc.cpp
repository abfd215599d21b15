#include "sasfm/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sasfm/error.hpp"
#include "sasfm/fpca.hpp"
#include "sasfm/posterior.hpp"

namespace sasfm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kOptimalScale = 2.38 * 2.38;
constexpr double kStepFactor = 1.1;
constexpr std::size_t kStartRounds = 10;

double log_std_normal_cdf(double x) {
    return std::log(0.5 * std::erfc(-x / std::sqrt(2.0)));
}

// Exact inverse of the one-parameter warp at y.
double parametric_inverse(double alpha, double y) {
    if (alpha == 0.0) return y;
    const double b = 1.0 - alpha;
    const double disc = b * b + 4.0 * alpha * y;
    // numerically stable root of alpha t^2 + b t - y = 0 lying in [0,1]
    return 2.0 * y / (b + std::sqrt(std::max(0.0, disc)));
}

double step_toward(double value, double rate, double target) {
    if (rate > target) return value * kStepFactor;
    if (rate < target) return value / kStepFactor;
    return value;
}

}  // namespace

AcceptanceStats& BlockAcceptance::operator[](Block b) {
    switch (b) {
        case Block::A: return a;
        case Block::Sigma2: return sigma2;
        case Block::SigmaC2: return sigma_c2;
        case Block::Phase: return phase;
    }
    return a;
}

const AcceptanceStats& BlockAcceptance::operator[](Block b) const {
    return const_cast<BlockAcceptance&>(*this)[b];
}

void ProposalConfig::validate() const {
    if (sigma_a.size() != 0 && sigma_a.rows() != sigma_a.cols()) throw ArgumentError("sigma_a must be square");
    if (!(a_scale > 0.0)) throw ArgumentError("a_scale must be positive");
    if (tau2_sigma < 0.0 || tau2_sigma_c < 0.0) throw ArgumentError("proposal variances must be positive");
    if (!(delta > 0.0 && delta <= 1.0)) throw ArgumentError("delta must lie in (0,1]");
    if (!(alpha_prop > 0.0)) throw ArgumentError("alpha_prop must be positive");
    if (adapt_interval < 1) throw ArgumentError("adapt_interval must be >= 1");
    if (!(target_accept_scalar > 0.0 && target_accept_scalar < 1.0) ||
        !(target_accept_vector > 0.0 && target_accept_vector < 1.0))
        throw ArgumentError("acceptance targets must lie in (0,1)");
}

void ChainConfig::validate() const {
    if (thin < 1) throw ArgumentError("thin must be >= 1");
    if (!(burn_in < total)) throw ArgumentError("burn_in must be smaller than total");
}

std::size_t PosteriorDraws::params_per_phase() const {
    if (prior_model == PriorModel::OneParameter) return 1;
    return phase_knots.size() >= 2 ? phase_knots.size() - 2 : 0;
}

std::vector<double> PosteriorDraws::encode_phase(const PhaseFunction& gamma) const {
    if (prior_model == PriorModel::OneParameter) return {gamma.alpha()};
    std::vector<double> out;
    for (std::size_t k = 1; k + 1 < phase_knots.size(); ++k) out.push_back(gamma.eval(phase_knots[k]));
    return out;
}

PhaseFunction PosteriorDraws::decode_phase(std::span<const double> params) const {
    if (params.size() != params_per_phase()) throw DimensionError("decode_phase: wrong parameter count");
    if (prior_model == PriorModel::OneParameter) return PhaseFunction::parametric(params[0]);
    std::vector<double> values(phase_knots.size());
    values.front() = 0.0;
    values.back() = 1.0;
    std::copy(params.begin(), params.end(), values.begin() + 1);
    return PhaseFunction::piecewise(phase_knots, std::move(values));
}

PhaseFunction PosteriorDraws::phase(std::size_t draw, std::size_t observation) const {
    if (draw >= size() || observation >= observations) throw ArgumentError("phase: index out of range");
    const std::size_t p = params_per_phase();
    std::vector<double> params(p);
    for (std::size_t k = 0; k < p; ++k)
        params[k] = phase_params(static_cast<Eigen::Index>(draw), static_cast<Eigen::Index>(observation * p + k));
    return decode_phase(params);
}

double truncated_normal_log_correction(double current, double candidate, double tau) {
    return log_std_normal_cdf(current / tau) - log_std_normal_cdf(candidate / tau);
}

double sample_truncated_normal(double mean, double tau, Rng& rng) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const double x = mean + tau * standard_normal(rng);
        if (x > 0.0) return x;
    }
    throw NumericalError("truncated normal sampler failed to produce a positive draw");
}

double jacobian_logdet(const PhaseFunction& reference, const PhaseIncrements& increments, JacobianTerms terms) {
    const std::size_t m = increments.deltas.size();
    const std::size_t used = terms == JacobianTerms::AllIncrements ? m : (m == 0 ? 0 : m - 1);
    double cumulative = 0.0;
    double total = 0.0;
    if (reference.is_parametric()) {
        const double alpha = reference.alpha();
        for (std::size_t j = 0; j < used; ++j) {
            cumulative = j + 1 == m ? 1.0 : cumulative + increments.deltas[j];
            const double t = parametric_inverse(alpha, std::min(cumulative, 1.0));
            total -= std::log(reference.deriv(std::clamp(t, 0.0, 1.0)));
        }
        return total;
    }
    const PhaseFunction inverse = invert(reference, 0);
    for (std::size_t j = 0; j < used; ++j) {
        cumulative = j + 1 == m ? 1.0 : cumulative + increments.deltas[j];
        const double s = std::min(cumulative, 1.0);
        const double slope = inverse.deriv(s);
        if (!(slope > 0.0)) throw DegeneratePhaseError("jacobian_logdet: non-positive inverse slope");
        total += std::log(slope);
    }
    return total;
}

ProposalConfig adapt(const ProposalConfig& prop, const WindowStats& stats, const Eigen::MatrixXd& a_window,
                     std::size_t phase_knots) {
    ProposalConfig out = prop;
    if (stats.active.a && a_window.rows() >= 2) {
        out.a_scale = step_toward(prop.a_scale, stats.acceptance.a.rate(), prop.target_accept_vector);
        const Eigen::RowVectorXd mean = a_window.colwise().mean();
        const Eigen::MatrixXd centered = a_window.rowwise() - mean;
        const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(a_window.rows() - 1);
        const double dim = static_cast<double>(a_window.cols());
        out.sigma_a = out.a_scale * (kOptimalScale / dim) * cov;
        out.sigma_a.diagonal().array() += 1e-10;
    }
    if (stats.active.sigma2)
        out.tau2_sigma = step_toward(prop.tau2_sigma, stats.acceptance.sigma2.rate(), prop.target_accept_scalar);
    if (stats.active.sigma_c2)
        out.tau2_sigma_c = step_toward(prop.tau2_sigma_c, stats.acceptance.sigma_c2.rate(), prop.target_accept_scalar);
    if (stats.active.phases) {
        const double rate = stats.acceptance.phase.rate();
        out.delta = std::min(1.0, step_toward(prop.delta, rate, prop.target_accept_scalar));
        // a larger concentration means smaller moves, so it moves against the step size
        double conc = prop.alpha_prop;
        if (rate > prop.target_accept_scalar) conc /= kStepFactor;
        if (rate < prop.target_accept_scalar) conc *= kStepFactor;
        out.alpha_prop = std::clamp(conc, static_cast<double>(phase_knots), 1e6);
    }
    return out;
}

ModelState initial_state(const Dataset& data, const TimeGrid& grid, const ModelBases& bases, const ModelConfig& config,
                         StartMethod method) {
    if (data.empty()) throw ArgumentError("initial_state: empty dataset");
    for (const auto& f : data) require_on_grid(f, grid, "initial_state");
    const std::size_t n = data.size();

    FunctionSample mean = cross_sectional_mean(data);
    std::vector<PhaseFunction> warps(n, PhaseFunction::identity());
    if (method == StartMethod::Aligned) {
        mean = centered_mean(data, grid, kStartRounds).mean;
        // the model warps the template, so search gamma with D_gamma(mean) close to f_i
        for (std::size_t i = 0; i < n; ++i) warps[i] = align_to_template(mean, data[i], grid).gamma;
    }

    ModelState s;
    const Eigen::MatrixXd& phi = bases.fixed.eval_matrix();
    s.a = phi.transpose() * grid.weights().asDiagonal() * mean;

    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i) spread += (data[i] - act_norm_preserving(mean, warps[i], grid)).squaredNorm();
    spread /= static_cast<double>(n * grid.size());
    if (!(spread > 0.0)) spread = (mean - phi * s.a).squaredNorm() / static_cast<double>(grid.size());
    if (!(spread > 0.0)) spread = 1.0;
    s.sigma2 = std::max(0.5 * spread, 1e-8);
    s.sigma_c2 = std::max(0.5 * spread, 1e-8);

    const auto knots = config.knots();
    for (const auto& w : warps) {
        s.phases.push_back(config.prior_model == PriorModel::OneParameter ? w : compose_on(w, PhaseFunction{}, knots));
    }
    return s;
}

Sampler::Sampler(const Dataset& data, const TimeGrid& grid, ModelBases bases, ModelConfig config, ProposalConfig prop,
                 std::uint64_t seed, ModelState initial, LikelihoodMode mode, BlockSchedule schedule)
    : data_(data),
      grid_(grid),
      bases_(std::move(bases)),
      config_(std::move(config)),
      prop_(std::move(prop)),
      rng_(seed),
      state_(std::move(initial)),
      mode_(mode),
      schedule_(schedule) {
    config_.validate();
    prop_.validate();
    if (data_.empty()) throw ArgumentError("Sampler: empty dataset");
    if (state_.phases.size() != data_.size()) throw DimensionError("Sampler: one phase per observation required");
    if (static_cast<std::size_t>(state_.a.size()) != bases_.fixed.count())
        throw DimensionError("Sampler: coefficient vector does not match the fixed basis");
    if (!(state_.sigma2 > 0.0) || state_.sigma_c2 < 0.0) throw ArgumentError("Sampler: invalid starting variances");

    knots_ = config_.knots();
    prior_conc_ = config_.dirichlet_concentrations();
    if (config_.prior_model == PriorModel::DirichletIncrements) {
        for (auto& g : state_.phases)
            if (g.is_parametric()) g = compose_on(g, PhaseFunction::identity(), knots_);
    }

    loglik_.assign(data_.size(), 0.0);
    if (mode_ == LikelihoodMode::Marginal) {
        obs_.reserve(data_.size());
        factors_.reserve(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) {
            require_on_grid(data_[i], grid_, "Sampler");
            obs_.emplace_back(data_[i], warped_design(bases_.fixed, bases_.random, state_.phases[i], grid_));
            factors_.push_back(obs_[i].factor(state_.sigma2, state_.sigma_c2));
            loglik_[i] = observation_loglik(i, state_.a, factors_[i]);
        }
    }
    if (prop_.tau2_sigma <= 0.0) prop_.tau2_sigma = std::pow(0.1 * state_.sigma2, 2);
    if (prop_.tau2_sigma_c <= 0.0) prop_.tau2_sigma_c = std::pow(0.1 * std::max(state_.sigma_c2, 1e-8), 2);
    if (prop_.sigma_a.size() == 0) initialize_sigma_a();
    set_proposal(prop_);
}

void Sampler::initialize_sigma_a() {
    const auto bf = static_cast<Eigen::Index>(bases_.fixed.count());
    Eigen::MatrixXd info = Eigen::MatrixXd::Identity(bf, bf) / config_.prior_var_a;
    for (std::size_t i = 0; i < obs_.size(); ++i) info += obs_[i].information_a(factors_[i]);
    const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(bf, bf));
    prop_.sigma_a = prop_.a_scale * (kOptimalScale / static_cast<double>(bf)) * cov;
}

void Sampler::set_proposal(ProposalConfig prop) {
    prop.validate();
    const auto bf = static_cast<Eigen::Index>(bases_.fixed.count());
    if (prop.sigma_a.rows() != bf) throw DimensionError("set_proposal: sigma_a has the wrong size");
    Eigen::LLT<Eigen::MatrixXd> chol(prop.sigma_a);
    if (chol.info() != Eigen::Success) {
        Eigen::MatrixXd ridged = prop.sigma_a;
        ridged.diagonal().array() += 1e-10 * std::max(1.0, prop.sigma_a.trace() / static_cast<double>(bf));
        chol.compute(ridged);
        if (chol.info() != Eigen::Success) throw NumericalError("proposal covariance for a is not positive definite");
    }
    prop_ = std::move(prop);
    sigma_a_chol_ = std::move(chol);
}

double Sampler::log_likelihood() const {
    double total = 0.0;
    for (double v : loglik_) total += v;
    return total;
}

double Sampler::observation_loglik(std::size_t i, const Eigen::VectorXd& a, const ObservationLikelihood::Factor& f) {
    ++evaluations_;
    return obs_[i].loglik(a, f);
}

bool Sampler::decide(double log_ratio, Block block, std::size_t index, const ModelState* candidate) {
    const double log_u = std::log(uniform01(rng_));
    const bool accepted = !std::isnan(log_ratio) && log_u < log_ratio;
    if (recorder_ != nullptr) {
        ProposalRecord rec{block, index, log_ratio, log_u, accepted, state_, candidate ? *candidate : state_};
        recorder_->push_back(std::move(rec));
    }
    return accepted;
}

bool Sampler::step_a() {
    const auto bf = state_.a.size();
    Eigen::VectorXd z(bf);
    for (Eigen::Index k = 0; k < bf; ++k) z[k] = standard_normal(rng_);
    const Eigen::VectorXd candidate = state_.a + sigma_a_chol_.matrixL() * z;

    double log_ratio = log_prior_a(candidate, config_) - log_prior_a(state_.a, config_);
    std::vector<double> cand_ll(data_.size(), 0.0);
    if (mode_ == LikelihoodMode::Marginal) {
        for (std::size_t i = 0; i < data_.size(); ++i) {
            cand_ll[i] = observation_loglik(i, candidate, factors_[i]);
            log_ratio += cand_ll[i] - loglik_[i];
        }
    }
    ModelState cand_state;
    if (recorder_ != nullptr) {
        cand_state = state_;
        cand_state.a = candidate;
    }
    if (!decide(log_ratio, Block::A, 0, recorder_ ? &cand_state : nullptr)) return false;
    state_.a = candidate;
    loglik_ = std::move(cand_ll);
    return true;
}

bool Sampler::step_variance(Block which) {
    if (which != Block::Sigma2 && which != Block::SigmaC2) throw ArgumentError("step_variance: not a variance block");
    const bool is_error = which == Block::Sigma2;
    const double current = is_error ? state_.sigma2 : state_.sigma_c2;
    const double tau = std::sqrt(is_error ? prop_.tau2_sigma : prop_.tau2_sigma_c);
    const double candidate = sample_truncated_normal(current, tau, rng_);

    double log_ratio = log_inverse_gamma(candidate, config_.ig_shape, config_.ig_scale) -
                       log_inverse_gamma(current, config_.ig_shape, config_.ig_scale) +
                       truncated_normal_log_correction(current, candidate, tau);
    std::vector<double> cand_ll(data_.size(), 0.0);
    std::vector<ObservationLikelihood::Factor> cand_factors;
    if (mode_ == LikelihoodMode::Marginal && std::isfinite(log_ratio)) {
        cand_factors.reserve(data_.size());
        const double s2 = is_error ? candidate : state_.sigma2;
        const double sc2 = is_error ? state_.sigma_c2 : candidate;
        try {
            for (std::size_t i = 0; i < data_.size(); ++i) {
                cand_factors.push_back(obs_[i].factor(s2, sc2));
                cand_ll[i] = observation_loglik(i, state_.a, cand_factors.back());
                log_ratio += cand_ll[i] - loglik_[i];
            }
        } catch (const NumericalError&) {
            log_ratio = kNegInf;
        }
    }
    ModelState cand_state;
    if (recorder_ != nullptr) {
        cand_state = state_;
        (is_error ? cand_state.sigma2 : cand_state.sigma_c2) = candidate;
    }
    if (!decide(log_ratio, which, 0, recorder_ ? &cand_state : nullptr)) return false;
    (is_error ? state_.sigma2 : state_.sigma_c2) = candidate;
    if (mode_ == LikelihoodMode::Marginal) {
        factors_ = std::move(cand_factors);
        loglik_ = std::move(cand_ll);
    }
    return true;
}

bool Sampler::step_alpha(std::size_t i) {
    if (config_.prior_model != PriorModel::OneParameter) throw ArgumentError("step_alpha requires PM1");
    if (i >= data_.size()) throw ArgumentError("step_alpha: observation index out of range");
    const double current = state_.phases[i].alpha();
    const double candidate = uniform(rng_, current - prop_.delta, current + prop_.delta);

    double log_ratio = log_prior_alpha(candidate);
    std::optional<ObservationLikelihood> cand_obs;
    std::optional<ObservationLikelihood::Factor> cand_factor;
    double cand_ll = 0.0;
    if (std::isfinite(log_ratio) && mode_ == LikelihoodMode::Marginal) {
        try {
            const auto gamma = PhaseFunction::parametric(candidate);
            cand_obs.emplace(data_[i], warped_design(bases_.fixed, bases_.random, gamma, grid_));
            cand_factor = cand_obs->factor(state_.sigma2, state_.sigma_c2);
            ++evaluations_;
            cand_ll = cand_obs->loglik(state_.a, *cand_factor);
            log_ratio += cand_ll - loglik_[i];
        } catch (const Error&) {
            log_ratio = kNegInf;
        }
    }
    ModelState cand_state;
    if (recorder_ != nullptr) {
        cand_state = state_;
        if (std::isfinite(log_ratio)) cand_state.phases[i] = PhaseFunction::parametric(candidate);
    }
    if (!decide(log_ratio, Block::Phase, i, recorder_ ? &cand_state : nullptr)) return false;
    state_.phases[i] = PhaseFunction::parametric(candidate);
    if (mode_ == LikelihoodMode::Marginal) {
        obs_[i] = std::move(*cand_obs);
        factors_[i] = std::move(*cand_factor);
        loglik_[i] = cand_ll;
    }
    return true;
}

double Sampler::gamma_prior_proposal_log_ratio(const PhaseFunction& current, const PhaseFunction& candidate,
                                               const std::vector<double>& forward) const {
    try {
        const PhaseIncrements inc_can = to_increments(candidate, knots_);
        const PhaseIncrements inc_cur = to_increments(current, knots_);
        auto prop_conc = knot_spacings(knots_);
        for (double& c : prop_conc) c *= prop_.alpha_prop;

        // increments of the reverse move: gamma_can^-1 o gamma_cur on the knots
        const PhaseFunction reverse = compose_on(invert(candidate, 0), current, knots_);
        const PhaseIncrements inc_rev = to_increments(reverse, knots_);

        const double prior = dirichlet_log_density(inc_can.deltas, prior_conc_) -
                             dirichlet_log_density(inc_cur.deltas, prior_conc_);
        const double q_reverse = dirichlet_log_density(inc_rev.deltas, prop_conc) +
                                 jacobian_logdet(candidate, inc_cur, JacobianTerms::Simplex);
        const double q_forward = dirichlet_log_density(forward, prop_conc) +
                                 jacobian_logdet(current, inc_can, JacobianTerms::Simplex);
        return prior + q_reverse - q_forward;
    } catch (const DegeneratePhaseError&) {
        return kNegInf;
    }
}

bool Sampler::step_gamma(std::size_t i) {
    if (config_.prior_model != PriorModel::DirichletIncrements) throw ArgumentError("step_gamma requires PM2");
    if (i >= data_.size()) throw ArgumentError("step_gamma: observation index out of range");
    auto prop_conc = knot_spacings(knots_);
    for (double& c : prop_conc) c *= prop_.alpha_prop;
    const std::vector<double> forward = sample_dirichlet(prop_conc, rng_);

    const PhaseFunction& current = state_.phases[i];
    std::optional<PhaseFunction> candidate;
    double log_ratio = kNegInf;
    try {
        const PhaseFunction tilde = from_increments(PhaseIncrements{forward, knots_});
        candidate = compose_on(current, tilde, knots_);
        log_ratio = gamma_prior_proposal_log_ratio(current, *candidate, forward);
    } catch (const DegeneratePhaseError&) {
        log_ratio = kNegInf;
    }

    std::optional<ObservationLikelihood> cand_obs;
    std::optional<ObservationLikelihood::Factor> cand_factor;
    double cand_ll = 0.0;
    if (std::isfinite(log_ratio) && mode_ == LikelihoodMode::Marginal) {
        try {
            cand_obs.emplace(data_[i], warped_design(bases_.fixed, bases_.random, *candidate, grid_));
            cand_factor = cand_obs->factor(state_.sigma2, state_.sigma_c2);
            ++evaluations_;
            cand_ll = cand_obs->loglik(state_.a, *cand_factor);
            log_ratio += cand_ll - loglik_[i];
        } catch (const Error&) {
            log_ratio = kNegInf;
        }
    }
    ModelState cand_state;
    if (recorder_ != nullptr) {
        cand_state = state_;
        if (candidate) cand_state.phases[i] = *candidate;
    }
    if (!decide(log_ratio, Block::Phase, i, recorder_ ? &cand_state : nullptr)) return false;
    state_.phases[i] = std::move(*candidate);
    if (mode_ == LikelihoodMode::Marginal) {
        obs_[i] = std::move(*cand_obs);
        factors_[i] = std::move(*cand_factor);
        loglik_[i] = cand_ll;
    }
    return true;
}

bool Sampler::step_phase(std::size_t i) {
    return config_.prior_model == PriorModel::OneParameter ? step_alpha(i) : step_gamma(i);
}

void Sampler::sweep(BlockAcceptance& stats) {
    if (schedule_.a) stats.a.record(step_a());
    if (schedule_.sigma2) stats.sigma2.record(step_variance(Block::Sigma2));
    if (schedule_.sigma_c2) stats.sigma_c2.record(step_variance(Block::SigmaC2));
    if (schedule_.phases)
        for (std::size_t i = 0; i < data_.size(); ++i) stats.phase.record(step_phase(i));
}

namespace {

void accumulate(BlockAcceptance& into, const BlockAcceptance& from) {
    for (Block b : {Block::A, Block::Sigma2, Block::SigmaC2, Block::Phase}) {
        auto& dst = into[b];
        const auto& src = from[b];
        dst.proposed += src.proposed;
        dst.accepted += src.accepted;
    }
}

}  // namespace

PosteriorDraws run_chain(const Dataset& data, const TimeGrid& grid, const ModelBases& bases, const ModelConfig& config,
                         const ProposalConfig& prop, const ChainConfig& chain, const RunOptions& options) {
    config.validate();
    chain.validate();
    if (data.empty()) throw ArgumentError("run_chain: empty dataset");

    ModelState start = options.initial ? *options.initial : initial_state(data, grid, bases, config, options.start);
    Sampler sampler(data, grid, bases, config, prop, chain.seed, std::move(start), options.mode, options.schedule);

    PosteriorDraws draws;
    draws.prior_model = config.prior_model;
    draws.phase_knots = config.knots();
    draws.observations = data.size();
    draws.seed = chain.seed;
    const std::size_t kept = chain.kept();
    const std::size_t per_phase = draws.params_per_phase();
    const auto bf = static_cast<Eigen::Index>(bases.fixed.count());
    draws.iterations.reserve(kept);
    draws.a.resize(static_cast<Eigen::Index>(kept), bf);
    draws.phase_params.resize(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(data.size() * per_phase));
    draws.sigma2.reserve(kept);
    draws.sigma_c2.reserve(kept);
    draws.log_likelihood.reserve(kept);

    const std::size_t interval = sampler.proposal().adapt_interval;
    Eigen::MatrixXd a_window(static_cast<Eigen::Index>(std::min(interval, std::max<std::size_t>(chain.burn_in, 1))), bf);
    WindowStats window{{}, options.schedule};

    for (std::size_t j = 1; j <= chain.total; ++j) {
        try {
            BlockAcceptance iteration;
            sampler.sweep(iteration);
            accumulate(window.acceptance, iteration);
            accumulate(j <= chain.burn_in ? draws.acceptance_burn_in : draws.acceptance_sampling, iteration);
        } catch (const Error& e) {
            throw NumericalError("iteration " + std::to_string(j) + ": " + e.what());
        }
        if (j <= chain.burn_in) a_window.row(static_cast<Eigen::Index>((j - 1) % interval)) = sampler.state().a.transpose();
        // the window now holds iterations j - interval + 1 .. j
        if (j % interval == 0 && j < chain.burn_in) {
            sampler.set_proposal(adapt(sampler.proposal(), window, a_window, config.phase_knots));
            window.acceptance = {};
        }

        if (j > chain.burn_in && (j - chain.burn_in) % chain.thin == 0) {
            const auto row = static_cast<Eigen::Index>(draws.iterations.size());
            const ModelState& s = sampler.state();
            draws.iterations.push_back(j);
            draws.a.row(row) = s.a.transpose();
            draws.sigma2.push_back(s.sigma2);
            draws.sigma_c2.push_back(s.sigma_c2);
            draws.log_likelihood.push_back(sampler.log_likelihood());
            for (std::size_t i = 0; i < data.size(); ++i) {
                const auto params = draws.encode_phase(s.phases[i]);
                for (std::size_t k = 0; k < per_phase; ++k)
                    draws.phase_params(row, static_cast<Eigen::Index>(i * per_phase + k)) = params[k];
            }
        }
    }
    draws.final_proposal = sampler.proposal();
    return draws;
}

PosteriorDraws run_chain(const Dataset& data, const TimeGrid& grid, const ModelConfig& config,
                         const ProposalConfig& prop, const ChainConfig& chain, const RunOptions& options) {
    config.validate();
    return run_chain(data, grid, make_bases(config, grid), config, prop, chain, options);
}

}  // namespace sasfm
