#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sasfm/model.hpp"
#include "sasfm/phase.hpp"
#include "sasfm/random.hpp"

namespace sasfm {

/// Random-walk proposal scales; adapted during burn-in, frozen afterwards.
struct ProposalConfig {
    Eigen::MatrixXd sigma_a;       ///< B_f x B_f; empty means "initialize from the curvature at the start state"
    double a_scale = 1.0;          ///< multiplier on 2.38^2/B_f, steered toward target_accept_vector
    double tau2_sigma = 0.0;       ///< 0 means "10% of the starting sigma2, squared"
    double tau2_sigma_c = 0.0;
    double delta = 0.1;            ///< PM1 Uniform window half-width, in (0,1]
    double alpha_prop = 200.0;     ///< PM2 Dirichlet proposal concentration
    std::size_t adapt_interval = 500;
    double target_accept_scalar = 0.44;
    double target_accept_vector = 0.23;

    void validate() const;
};

struct ChainConfig {
    std::size_t total = 1000;    ///< N, including burn-in
    std::size_t burn_in = 500;   ///< N_b
    std::size_t thin = 1;
    std::uint64_t seed = 1;

    void validate() const;
    /// Number of stored draws: floor((total - burn_in) / thin).
    [[nodiscard]] std::size_t kept() const { return (total - burn_in) / thin; }
};

enum class LikelihoodMode {
    Marginal,  ///< the model likelihood
    Flat,      ///< constant likelihood; the chain targets the prior
};

/// Which parameter blocks are updated; fixed blocks keep their initial values.
struct BlockSchedule {
    bool a = true;
    bool sigma2 = true;
    bool sigma_c2 = true;
    bool phases = true;
};

enum class Block { A, Sigma2, SigmaC2, Phase };

struct AcceptanceStats {
    std::size_t proposed = 0;
    std::size_t accepted = 0;

    void record(bool ok) {
        ++proposed;
        accepted += ok ? 1 : 0;
    }
    [[nodiscard]] double rate() const {
        return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
    }
};

struct BlockAcceptance {
    AcceptanceStats a, sigma2, sigma_c2, phase;

    AcceptanceStats& operator[](Block b);
    const AcceptanceStats& operator[](Block b) const;
};

/// One Metropolis-Hastings decision, for auditing acceptance ratios.
struct ProposalRecord {
    Block block = Block::A;
    std::size_t index = 0;  ///< observation index for phase proposals
    double log_ratio = 0.0;
    double log_u = 0.0;
    bool accepted = false;
    ModelState current;
    ModelState candidate;
};

/// Stored chain after burn-in.
struct PosteriorDraws {
    PriorModel prior_model = PriorModel::OneParameter;
    std::vector<double> phase_knots;   ///< PM2 knot set
    std::size_t observations = 0;
    std::vector<std::size_t> iterations;
    Eigen::MatrixXd a;                 ///< kept x B_f
    std::vector<double> sigma2;
    std::vector<double> sigma_c2;
    Eigen::MatrixXd phase_params;      ///< kept x (n * params_per_phase())
    std::vector<double> log_likelihood;
    BlockAcceptance acceptance_burn_in;
    BlockAcceptance acceptance_sampling;
    ProposalConfig final_proposal;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t size() const { return iterations.size(); }
    /// 1 for PM1 (alpha), T_gamma - 2 for PM2 (interior knot values).
    [[nodiscard]] std::size_t params_per_phase() const;
    [[nodiscard]] PhaseFunction phase(std::size_t draw, std::size_t observation) const;
    /// Parameters of `gamma` in the layout of phase_params.
    [[nodiscard]] std::vector<double> encode_phase(const PhaseFunction& gamma) const;
    [[nodiscard]] PhaseFunction decode_phase(std::span<const double> params) const;
};

/// log Phi(cur/tau) - log Phi(can/tau): the truncated-normal proposal asymmetry.
double truncated_normal_log_correction(double current, double candidate, double tau);

/// Draw from Normal(mean, tau^2) truncated to (0, inf), by rejection.
double sample_truncated_normal(double mean, double tau, Rng& rng);

enum class JacobianTerms {
    AllIncrements,  ///< product over all T_gamma - 1 cumulative sums (the map on every increment)
    Simplex,        ///< drops the last factor, for the density on the T_gamma - 2 free coordinates
};

/**
 * log |dg/dDelta| for g(Delta; gamma_ref) = increments of gamma_ref^-1 at the
 * cumulative sums of Delta: sum_j log (gamma_ref^-1)'(S_j).
 */
double jacobian_logdet(const PhaseFunction& reference, const PhaseIncrements& increments,
                       JacobianTerms terms = JacobianTerms::AllIncrements);

/// Window acceptance summary fed to adapt().
struct WindowStats {
    BlockAcceptance acceptance;
    BlockSchedule active;
};

/**
 * Burn-in adaptation: Sigma_a from the window covariance of a, scalar steps
 * multiplied or divided by 1.1 toward the acceptance targets.
 */
ProposalConfig adapt(const ProposalConfig& prop, const WindowStats& stats, const Eigen::MatrixXd& a_window,
                     std::size_t phase_knots);

enum class StartMethod {
    Identity,  ///< cross-sectional mean, identity phases
    Aligned,   ///< centered mean template, phases from a PM1 grid search against it
};

/// Starting point: projected template, moment-based variances from the residual spread, template-derived phases.
ModelState initial_state(const Dataset& data, const TimeGrid& grid, const ModelBases& bases, const ModelConfig& config,
                         StartMethod method = StartMethod::Aligned);

/**
 * Adaptive Metropolis-within-Gibbs sampler over (a, sigma2, sigma_c2, phases).
 *
 * Per-observation likelihood terms and their factorizations are cached, so
 * each proposal evaluates only the terms it changes.
 */
class Sampler {
public:
    Sampler(const Dataset& data, const TimeGrid& grid, ModelBases bases, ModelConfig config, ProposalConfig prop,
            std::uint64_t seed, ModelState initial, LikelihoodMode mode = LikelihoodMode::Marginal,
            BlockSchedule schedule = {});

    bool step_a();
    bool step_variance(Block which);
    /// PM1 parameter update for observation i.
    bool step_alpha(std::size_t i);
    /// PM2 right-composition update for observation i.
    bool step_gamma(std::size_t i);
    bool step_phase(std::size_t i);

    /// One full sweep in the fixed order a, sigma2, sigma_c2, phases; returns nothing, updates stats.
    void sweep(BlockAcceptance& stats);

    [[nodiscard]] const ModelState& state() const noexcept { return state_; }
    [[nodiscard]] const ProposalConfig& proposal() const noexcept { return prop_; }
    void set_proposal(ProposalConfig prop);
    [[nodiscard]] double log_likelihood() const;
    [[nodiscard]] std::size_t likelihood_evaluations() const noexcept { return evaluations_; }
    [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
    [[nodiscard]] const ModelBases& bases() const noexcept { return bases_; }
    [[nodiscard]] Rng& rng() noexcept { return rng_; }

    /// When set, every MH decision is appended to `log`.
    void set_recorder(std::vector<ProposalRecord>* log) noexcept { recorder_ = log; }

    /// Log-ratio of the PM2 move cur -> can with forward increments `forward` (no likelihood term).
    [[nodiscard]] double gamma_prior_proposal_log_ratio(const PhaseFunction& current, const PhaseFunction& candidate,
                                                        const std::vector<double>& forward) const;

private:
    bool decide(double log_ratio, Block block, std::size_t index, const ModelState* candidate);
    double observation_loglik(std::size_t i, const Eigen::VectorXd& a, const ObservationLikelihood::Factor& f);
    void initialize_sigma_a();

    const Dataset& data_;
    TimeGrid grid_;
    ModelBases bases_;
    ModelConfig config_;
    ProposalConfig prop_;
    Rng rng_;
    ModelState state_;
    LikelihoodMode mode_;
    BlockSchedule schedule_;
    std::vector<double> knots_;
    std::vector<double> prior_conc_;
    std::vector<ObservationLikelihood> obs_;
    std::vector<ObservationLikelihood::Factor> factors_;
    std::vector<double> loglik_;
    Eigen::LLT<Eigen::MatrixXd> sigma_a_chol_;
    std::size_t evaluations_ = 0;
    std::vector<ProposalRecord>* recorder_ = nullptr;
};

struct RunOptions {
    LikelihoodMode mode = LikelihoodMode::Marginal;
    BlockSchedule schedule{};
    std::optional<ModelState> initial;
    StartMethod start = StartMethod::Aligned;  ///< used when `initial` is empty
};

/// Algorithm loop: adapt every adapt_interval iterations during burn-in, then store thinned draws.
PosteriorDraws run_chain(const Dataset& data, const TimeGrid& grid, const ModelBases& bases, const ModelConfig& config,
                         const ProposalConfig& prop, const ChainConfig& chain, const RunOptions& options = {});

/// Same, with bases built from the config.
PosteriorDraws run_chain(const Dataset& data, const TimeGrid& grid, const ModelConfig& config,
                         const ProposalConfig& prop, const ChainConfig& chain, const RunOptions& options = {});

}  // namespace sasfm
