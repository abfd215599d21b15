#include <cmath>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "doctest.h"
#include "sasfm/error.hpp"
#include "sasfm/mcmc.hpp"
#include "oracles.hpp"
#include "stats.hpp"

using namespace sasfm;
using namespace sasfm::testing;

namespace {

struct Problem {
    TimeGrid grid;
    Dataset data;
    ModelConfig config;
    ModelBases bases;
};

Problem small_problem(std::size_t n, PriorModel prior, std::size_t T = 20, std::uint64_t seed = 1) {
    auto grid = TimeGrid::uniform(T);
    ModelConfig cfg;
    cfg.fixed_count = 4;
    cfg.random_count = 4;
    cfg.prior_model = prior;
    Rng rng(seed);
    Dataset data;
    for (std::size_t i = 0; i < n; ++i) {
        const double shift = uniform(rng, -0.3, 0.3);
        FunctionSample f = grid.sample([&](double t) { return std::sin(2 * M_PI * (t + shift)) + 0.5 * t; });
        for (Eigen::Index k = 0; k < f.size(); ++k) f[k] += 0.1 * standard_normal(rng);
        data.push_back(std::move(f));
    }
    auto bases = make_bases(cfg, grid);
    return {grid, std::move(data), cfg, std::move(bases)};
}

double log_dirichlet_by_hand(const std::vector<double>& x, const std::vector<double>& c) {
    double total = boost::math::lgamma(std::accumulate(c.begin(), c.end(), 0.0));
    for (std::size_t j = 0; j < x.size(); ++j) total += (c[j] - 1.0) * std::log(x[j]) - boost::math::lgamma(c[j]);
    return total;
}

}  // namespace

TEST_CASE("truncated normal correction and sampler") {
    CHECK(std::exp(truncated_normal_log_correction(1.0, 2.0, 1.0)) == doctest::Approx(0.8413447 / 0.9772499).epsilon(1e-6));
    CHECK(std::exp(truncated_normal_log_correction(1.0, 2.0, 1.0)) == doctest::Approx(0.8609).epsilon(1e-3));
    CHECK(truncated_normal_log_correction(0.7, 0.7, 0.3) == 0.0);
    CHECK(std::isfinite(truncated_normal_log_correction(1e-3, 50.0, 1e-4)));

    Rng rng(4);
    std::vector<double> draws(20000);
    for (double& d : draws) d = sample_truncated_normal(0.3, 1.0, rng);
    for (double d : draws) CHECK_UNARY(d > 0.0);
    const double z = normal_cdf(0.0, 0.3, 1.0);
    const double p = ks_test(draws, [&](double x) { return (normal_cdf(x, 0.3, 1.0) - z) / (1.0 - z); });
    CHECK(p > 0.01);
}

TEST_CASE("Jacobian log-determinant") {
    const std::vector<double> knots3{0.0, 0.5, 1.0};
    CHECK(jacobian_logdet(PhaseFunction::identity(), PhaseIncrements{{0.3, 0.2, 0.5}, uniform_knots(4)}) == 0.0);
    CHECK(jacobian_logdet(PhaseFunction::piecewise(knots3, knots3), PhaseIncrements{{0.3, 0.7}, knots3}) ==
          doctest::Approx(0.0));

    // slopes {0.5, 1.5}: the inverse has slopes 2 on [0, 0.25] and 2/3 on [0.25, 1]
    const auto ref = PhaseFunction::piecewise(knots3, {0.0, 0.25, 1.0});
    CHECK(jacobian_logdet(ref, PhaseIncrements{{0.4, 0.6}, knots3}, JacobianTerms::AllIncrements) ==
          doctest::Approx(2.0 * std::log(2.0 / 3.0)));
    CHECK(jacobian_logdet(ref, PhaseIncrements{{0.4, 0.6}, knots3}, JacobianTerms::Simplex) ==
          doctest::Approx(std::log(2.0 / 3.0)));
    CHECK(jacobian_logdet(ref, PhaseIncrements{{0.2, 0.8}, knots3}, JacobianTerms::AllIncrements) ==
          doctest::Approx(std::log(2.0) + std::log(2.0 / 3.0)));
}

TEST_CASE("Jacobian log-determinant matches finite differences") {
    Rng rng(12);
    const auto knots = uniform_knots(4);
    for (int rep = 0; rep < 100; ++rep) {
        const PhaseFunction ref = rep % 2 ? sample_dirichlet_phase(8.0, knots, rng)
                                          : PhaseFunction::parametric(uniform(rng, -0.9, 0.9));
        const auto delta = sample_dirichlet(std::vector<double>{3.0, 3.0, 3.0}, rng);
        const double code = jacobian_logdet(ref, PhaseIncrements{delta, knots}, JacobianTerms::AllIncrements);
        CHECK(std::abs(code - fd_logdet(ref, delta)) < 1e-4);
    }
}

TEST_CASE("PM2 proposal ratio by hand on three knots") {
    auto pb = small_problem(1, PriorModel::DirichletIncrements);
    pb.config.phase_knots = 3;
    ProposalConfig prop;
    prop.alpha_prop = 20.0;
    const std::vector<double> k{0.0, 0.5, 1.0};
    const auto cur = PhaseFunction::piecewise(k, {0.0, 0.4, 1.0});
    const auto can = PhaseFunction::piecewise(k, {0.0, 0.55, 1.0});
    ModelState start{Eigen::VectorXd::Zero(4), 1.0, 1.0, {cur}};
    Sampler sampler(pb.data, pb.grid, pb.bases, pb.config, prop, 1, start, LikelihoodMode::Flat);

    // forward: gamma_tilde(0.5) = cur^-1(0.55) on the upper segment of cur (slope 1.2)
    const double s_fwd = 0.5 + (0.55 - 0.4) / 1.2;
    const std::vector<double> fwd{s_fwd, 1.0 - s_fwd};
    // reverse: can^-1(cur(0.5)) = can^-1(0.4) on the lower segment of can (slope 1.1)
    const double s_rev = 0.4 / 1.1;
    const std::vector<double> rev{s_rev, 1.0 - s_rev};
    const std::vector<double> prop_c{10.0, 10.0}, prior_c{15.0, 15.0};
    const double prior = log_dirichlet_by_hand({0.55, 0.45}, prior_c) - log_dirichlet_by_hand({0.4, 0.6}, prior_c);
    // inverse slopes at the interior cumulative sums
    const double j_rev = std::log(1.0 / 1.1);  // can^-1 at 0.4
    const double j_fwd = std::log(1.0 / 1.2);  // cur^-1 at 0.55
    const double expect =
        prior + log_dirichlet_by_hand(rev, prop_c) + j_rev - log_dirichlet_by_hand(fwd, prop_c) - j_fwd;
    CHECK(sampler.gamma_prior_proposal_log_ratio(cur, can, fwd) == doctest::Approx(expect).epsilon(1e-12));

    // identity proposal: only the prior ratio remains, and it is zero for can = cur
    CHECK(sampler.gamma_prior_proposal_log_ratio(cur, cur, {0.5, 0.5}) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("a proposals with a vanishing covariance are always accepted") {
    auto pb = small_problem(3, PriorModel::OneParameter);
    ProposalConfig prop;
    prop.sigma_a = 1e-12 * Eigen::MatrixXd::Identity(4, 4);
    Sampler s(pb.data, pb.grid, pb.bases, pb.config, prop, 3, initial_state(pb.data, pb.grid, pb.bases, pb.config));
    int accepted = 0;
    for (int k = 0; k < 1000; ++k) accepted += s.step_a() ? 1 : 0;
    CHECK(accepted > 990);
}

TEST_CASE("proposals equal to the current value are accepted") {
    auto pb = small_problem(2, PriorModel::OneParameter);
    std::vector<ProposalRecord> log;
    ProposalConfig prop;
    prop.delta = 1e-14;
    prop.tau2_sigma = 1e-30;
    prop.tau2_sigma_c = 1e-30;
    prop.sigma_a = 1e-30 * Eigen::MatrixXd::Identity(4, 4);
    Sampler s(pb.data, pb.grid, pb.bases, pb.config, prop, 5, initial_state(pb.data, pb.grid, pb.bases, pb.config));
    s.set_recorder(&log);
    BlockAcceptance stats;
    for (int k = 0; k < 20; ++k) s.sweep(stats);
    for (const auto& r : log) {
        CHECK(std::abs(r.log_ratio) < 1e-6);
    }
    CHECK(stats.a.rate() > 0.5);
}

TEST_CASE("recorded PM1 decisions match an independent log-posterior difference") {
    auto pb = small_problem(1, PriorModel::OneParameter, 25, 6);
    ProposalConfig prop;
    prop.delta = 0.5;
    std::vector<ProposalRecord> log;
    Sampler s(pb.data, pb.grid, pb.bases, pb.config, prop, 11, initial_state(pb.data, pb.grid, pb.bases, pb.config));
    s.set_recorder(&log);
    for (int k = 0; k < 1000; ++k) s.step_alpha(0);
    REQUIRE(log.size() == 1000);
    int checked = 0;
    for (const auto& r : log) {
        CHECK(r.accepted == (r.log_u < r.log_ratio));
        if (!std::isfinite(r.log_ratio)) {
            CHECK_FALSE(r.accepted);
            continue;
        }
        const double cur = total_loglik(pb.data, r.current, pb.bases, pb.grid) + log_prior(r.current, pb.config);
        const double can = total_loglik(pb.data, r.candidate, pb.bases, pb.grid) + log_prior(r.candidate, pb.config);
        CHECK(std::abs((can - cur) - r.log_ratio) < 1e-8);
        ++checked;
    }
    CHECK(checked > 500);
}

TEST_CASE("recorded decisions of every block match the log-posterior difference") {
    for (auto prior : {PriorModel::OneParameter, PriorModel::DirichletIncrements}) {
        auto pb = small_problem(3, prior, 20, 2);
        std::vector<ProposalRecord> log;
        Sampler s(pb.data, pb.grid, pb.bases, pb.config, ProposalConfig{}, 19,
                  initial_state(pb.data, pb.grid, pb.bases, pb.config));
        s.set_recorder(&log);
        BlockAcceptance stats;
        for (int k = 0; k < 60; ++k) s.sweep(stats);
        for (const auto& r : log) {
            if (!std::isfinite(r.log_ratio) || r.block == Block::Phase && prior == PriorModel::DirichletIncrements)
                continue;
            double extra = 0.0;
            if (r.block == Block::Sigma2)
                extra = truncated_normal_log_correction(r.current.sigma2, r.candidate.sigma2,
                                                        std::sqrt(s.proposal().tau2_sigma));
            if (r.block == Block::SigmaC2)
                extra = truncated_normal_log_correction(r.current.sigma_c2, r.candidate.sigma_c2,
                                                        std::sqrt(s.proposal().tau2_sigma_c));
            const double cur = total_loglik(pb.data, r.current, pb.bases, pb.grid) + log_prior(r.current, pb.config);
            const double can =
                total_loglik(pb.data, r.candidate, pb.bases, pb.grid) + log_prior(r.candidate, pb.config);
            CHECK(std::abs((can - cur + extra) - r.log_ratio) < 1e-7);
            if (r.accepted) CHECK(std::isfinite(can));
        }
    }
}

TEST_CASE("each proposal evaluates the likelihood at most once") {
    auto pb = small_problem(4, PriorModel::OneParameter);
    Sampler s(pb.data, pb.grid, pb.bases, pb.config, ProposalConfig{}, 2,
              initial_state(pb.data, pb.grid, pb.bases, pb.config));
    const std::size_t before = s.likelihood_evaluations();
    BlockAcceptance stats;
    const int sweeps = 50;
    for (int k = 0; k < sweeps; ++k) s.sweep(stats);
    // a, sigma2 and sigma_c2 proposals touch all n terms once; a phase proposal touches one
    const std::size_t bound = sweeps * (3 * pb.data.size() + pb.data.size());
    CHECK(s.likelihood_evaluations() - before <= bound);
    CHECK(s.likelihood_evaluations() - before >= sweeps * 3 * pb.data.size());
    CHECK(s.log_likelihood() == doctest::Approx(total_loglik(pb.data, s.state(), pb.bases, pb.grid)).epsilon(1e-10));
}

TEST_CASE("adaptation directions") {
    ProposalConfig prop;
    prop.sigma_a = Eigen::MatrixXd::Identity(2, 2);
    prop.tau2_sigma = 1.0;
    prop.tau2_sigma_c = 1.0;
    prop.delta = 0.5;
    prop.alpha_prop = 100.0;
    WindowStats hi;
    hi.acceptance.a = {100, 90};
    hi.acceptance.sigma2 = {100, 90};
    hi.acceptance.sigma_c2 = {100, 90};
    hi.acceptance.phase = {100, 90};
    const Eigen::MatrixXd constant = Eigen::MatrixXd::Ones(10, 2);
    const auto up = adapt(prop, hi, constant, 5);
    CHECK(up.tau2_sigma == doctest::Approx(1.1));
    CHECK(up.tau2_sigma_c == doctest::Approx(1.1));
    CHECK(up.delta == doctest::Approx(0.55));
    CHECK(up.alpha_prop == doctest::Approx(100.0 / 1.1));
    CHECK((up.sigma_a - 1e-10 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-20);

    WindowStats lo = hi;
    lo.acceptance.sigma2 = {100, 5};
    lo.acceptance.sigma_c2 = {100, 5};
    lo.acceptance.phase = {100, 5};
    const auto down = adapt(prop, lo, constant, 5);
    CHECK(down.tau2_sigma == doctest::Approx(1.0 / 1.1));
    CHECK(down.delta == doctest::Approx(0.5 / 1.1));
    CHECK(down.alpha_prop == doctest::Approx(110.0));

    prop.delta = 0.99;
    prop.alpha_prop = 5.2;
    const auto clipped = adapt(prop, hi, constant, 5);
    CHECK(clipped.delta == 1.0);
    CHECK(clipped.alpha_prop == 5.0);

    Eigen::MatrixXd window(4, 2);
    window << 0, 1, 1, 0, 2, 2, 3, 1;
    const auto cov_based = adapt(ProposalConfig{}, hi, window, 5);
    Eigen::MatrixXd centered = window.rowwise() - window.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / 3.0;
    CHECK((cov_based.sigma_a - (cov_based.a_scale * 2.38 * 2.38 / 2.0) * cov).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("flat-likelihood chain reproduces the MVN prior on a") {
    auto pb = small_problem(2, PriorModel::OneParameter);
    ChainConfig chain{205000, 5000, 1, 31};
    RunOptions opt;
    opt.mode = LikelihoodMode::Flat;
    opt.schedule = {true, false, false, false};
    ModelState start{Eigen::VectorXd::Zero(4), 1.0, 1.0, {PhaseFunction{}, PhaseFunction{}}};
    opt.initial = start;
    ProposalConfig prop;
    prop.sigma_a = 10000.0 * Eigen::MatrixXd::Identity(4, 4);
    const auto d = run_chain(pb.data, pb.grid, pb.bases, pb.config, prop, chain, opt);
    REQUIRE(d.size() == 200000);
    for (Eigen::Index k = 0; k < 4; ++k) {
        const double mean = d.a.col(k).mean();
        const double var = (d.a.col(k).array() - mean).square().sum() / (d.size() - 1.0);
        CHECK(std::abs(var / 10000.0 - 1.0) < 0.1);
    }
}

TEST_CASE("flat-likelihood PM2 chain on three knots reproduces the Dirichlet prior") {
    auto pb = small_problem(2, PriorModel::DirichletIncrements);
    pb.config.phase_knots = 3;
    pb.config.theta_gamma = 5.0;
    ChainConfig chain{10000 + 20000 * 20, 10000, 20, 77};
    RunOptions opt;
    opt.mode = LikelihoodMode::Flat;
    opt.schedule = {false, false, false, true};
    const auto knots = pb.config.knots();
    opt.initial = ModelState{Eigen::VectorXd::Zero(4), 1.0, 1.0,
                             {PhaseFunction::piecewise(knots, knots), PhaseFunction::piecewise(knots, knots)}};
    const auto d = run_chain(pb.data, pb.grid, pb.bases, pb.config, ProposalConfig{}, chain, opt);
    for (std::size_t i = 0; i < 2; ++i) {
        std::vector<double> first(d.size());
        for (std::size_t j = 0; j < d.size(); ++j) first[j] = d.phase(j, i).eval(0.5);
        CHECK(ks_test(first, [](double x) { return beta_cdf(x, 2.5, 2.5); }) > 0.01);
    }
}

TEST_CASE("run_chain bookkeeping") {
    auto pb = small_problem(3, PriorModel::OneParameter);
    ChainConfig chain{400, 100, 3, 9};
    const auto a = run_chain(pb.data, pb.grid, pb.bases, pb.config, ProposalConfig{}, chain);
    const auto b = run_chain(pb.data, pb.grid, pb.bases, pb.config, ProposalConfig{}, chain);
    CHECK(a.size() == 100);
    CHECK(a.iterations.front() == 103);
    CHECK(a.a == b.a);
    CHECK(a.sigma2 == b.sigma2);
    CHECK(a.phase_params == b.phase_params);
    CHECK(a.acceptance_burn_in.a.proposed == 100);
    CHECK(a.acceptance_sampling.phase.proposed == 300 * 3);
    for (double r : {a.acceptance_sampling.a.rate(), a.acceptance_sampling.phase.rate()}) {
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
    }

    ChainConfig none{200, 199, 5, 9};
    const auto empty = run_chain(pb.data, pb.grid, pb.bases, pb.config, ProposalConfig{}, none);
    CHECK(empty.size() == 0);
    CHECK(empty.acceptance_burn_in.a.proposed == 199);

    // after burn-in the proposal is frozen
    ChainConfig tail{2000, 1000, 1, 4};
    ProposalConfig prop;
    prop.adapt_interval = 100;
    const auto frozen = run_chain(pb.data, pb.grid, pb.bases, pb.config, prop, tail);
    const auto longer = run_chain(pb.data, pb.grid, pb.bases, pb.config, prop, ChainConfig{3000, 1000, 1, 4});
    CHECK(frozen.final_proposal.delta == longer.final_proposal.delta);
    CHECK(frozen.final_proposal.sigma_a == longer.final_proposal.sigma_a);

    CHECK_THROWS_AS(run_chain(pb.data, pb.grid, pb.bases, pb.config, ProposalConfig{}, ChainConfig{10, 10, 1, 1}),
                    ArgumentError);
    CHECK_THROWS_AS(run_chain(Dataset{}, pb.grid, pb.bases, pb.config, ProposalConfig{}, chain), ArgumentError);
}

TEST_CASE("conjugate posterior of a with everything else fixed") {
    auto pb = small_problem(3, PriorModel::OneParameter, 30, 8);
    ModelState truth{Eigen::VectorXd::Zero(4), 0.05, 0.0,
                     {PhaseFunction::parametric(0.2), PhaseFunction::parametric(-0.1), PhaseFunction{}}};
    // closed form: precision sum_i Phi_i^T D_i^-1 Phi_i / sigma2 + I / 10000
    Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(4, 4) / 10000.0;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(4);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto d = warped_design(pb.bases.fixed, pb.bases.random, truth.phases[i], pb.grid);
        const Eigen::VectorXd w = d.gamma_dot.cwiseInverse() / truth.sigma2;
        prec += d.phi.transpose() * w.asDiagonal() * d.phi;
        rhs += d.phi.transpose() * w.asDiagonal() * pb.data[i];
    }
    const Eigen::MatrixXd cov = prec.inverse();
    const Eigen::VectorXd mean = cov * rhs;

    RunOptions opt;
    opt.schedule = {true, false, false, false};
    opt.initial = truth;
    ProposalConfig prop;
    prop.sigma_a = 2.38 * 2.38 / 4.0 * cov;
    const auto d = run_chain(pb.data, pb.grid, pb.bases, pb.config, prop, ChainConfig{22000, 2000, 1, 3}, opt);
    for (Eigen::Index k = 0; k < 4; ++k) {
        std::vector<double> col(d.a.col(k).data(), d.a.col(k).data() + d.a.rows());
        CHECK(std::abs(mean_of(col) - mean[k]) < 4.0 * batch_means_se(col, 50));
    }
}

TEST_CASE("phase parameter encoding") {
    PosteriorDraws d;
    d.prior_model = PriorModel::DirichletIncrements;
    d.phase_knots = uniform_knots(5);
    CHECK(d.params_per_phase() == 3);
    const auto g = PhaseFunction::piecewise(d.phase_knots, {0.0, 0.1, 0.5, 0.9, 1.0});
    const auto p = d.encode_phase(g);
    CHECK(p == std::vector<double>{0.1, 0.5, 0.9});
    CHECK(d.decode_phase(p).eval(0.375) == doctest::Approx(0.3));
    d.prior_model = PriorModel::OneParameter;
    CHECK(d.params_per_phase() == 1);
    CHECK(d.decode_phase(d.encode_phase(PhaseFunction::parametric(-0.25))).alpha() == -0.25);
}

TEST_CASE("aligned start recovers phases of shifted copies") {
    const auto grid = TimeGrid::uniform(60);
    ModelConfig cfg;
    const auto bases = make_bases(cfg, grid);
    const FunctionSample mu = grid.sample([](double t) { return std::sin(2 * M_PI * t) + 2 * t; });
    Dataset data;
    for (double a : {-0.5, -0.2, 0.0, 0.3, 0.6}) data.push_back(act_norm_preserving(mu, PhaseFunction::parametric(a), grid));
    const auto s = initial_state(data, grid, bases, cfg, StartMethod::Aligned);
    const auto id = initial_state(data, grid, bases, cfg, StartMethod::Identity);
    for (const auto& g : id.phases) CHECK(g.alpha() == 0.0);
    // neighbouring observations keep their order after alignment
    for (std::size_t i = 0; i + 1 < data.size(); ++i) CHECK(s.phases[i].alpha() < s.phases[i + 1].alpha());
    CHECK(total_loglik(data, s, bases, grid) > total_loglik(data, id, bases, grid));
}
