// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>
#include <vector>

#include "oracles.hpp"
#include "sasfm/basis.hpp"
#include "sasfm/fpca.hpp"
#include "sasfm/mcmc.hpp"
#include "sasfm/posterior.hpp"
#include "sasfm/simulate.hpp"
#include "sasfm_cli/commands.hpp"
#include "sasfm_cli/io.hpp"
#include "stats.hpp"

using namespace sasfm;
using namespace sasfm::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, a);
    return buf;
}

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index k) {
    return {m.col(k).data(), m.col(k).data() + m.rows()};
}

// Shared by criteria 5 and 7.
struct Example1 {
    SimulatedData sim;
    ModelBases bases;
    PosteriorDraws draws;
};

const Example1& example1() {
    static const Example1 run = [] {
        ModelConfig cfg;  // B_f = B_r = 6, Fourier mean, B-spline random effects, PM1
        SimSpec spec;     // n = 30, T = 50, sigma2 = 0.1, sigma_c2 = 0.25, seed 1
        auto sim = generate_from_model(spec, cfg);
        auto bases = make_bases(cfg, sim.grid);
        auto draws = run_chain(sim.data, sim.grid, bases, cfg, ProposalConfig{}, ChainConfig{90000, 60000, 1, 1});
        return Example1{std::move(sim), std::move(bases), std::move(draws)};
    }();
    return run;
}

Outcome prior_reproduction() {
    std::vector<std::pair<std::string, double>> pvalues;
    const auto grid = TimeGrid::uniform(20);
    const Dataset data(2, FunctionSample::Zero(20));
    RunOptions opt;
    opt.mode = LikelihoodMode::Flat;

    // PM1: a, both variances (IG(3,2) stands in for the vague prior) and alpha
    ModelConfig cfg;
    cfg.ig_shape = 3.0;
    cfg.ig_scale = 2.0;
    ProposalConfig prop;
    prop.sigma_a = 2.38 * 2.38 / 6.0 * 10000.0 * Eigen::MatrixXd::Identity(6, 6);
    prop.tau2_sigma = 1.0;
    prop.tau2_sigma_c = 1.0;
    opt.initial = ModelState{Eigen::VectorXd::Zero(6), 1.0, 1.0, {PhaseFunction{}, PhaseFunction{}}};
    const auto pm1 = run_chain(data, grid, make_bases(cfg, grid), cfg, prop, ChainConfig{410000, 10000, 20, 1}, opt);
    for (Eigen::Index k = 0; k < 6; ++k)
        pvalues.emplace_back("a_" + std::to_string(k + 1),
                             ks_test(column(pm1.a, k), [](double x) { return normal_cdf(x, 0.0, 100.0); }));
    pvalues.emplace_back("sigma2", ks_test(pm1.sigma2, [](double x) { return inverse_gamma_cdf(x, 3.0, 2.0); }));
    pvalues.emplace_back("sigma_c2", ks_test(pm1.sigma_c2, [](double x) { return inverse_gamma_cdf(x, 3.0, 2.0); }));
    for (Eigen::Index i = 0; i < 2; ++i)
        pvalues.emplace_back("alpha_" + std::to_string(i + 1),
                             ks_test(column(pm1.phase_params, i), [](double x) { return (x + 1.0) / 2.0; }));

    // PM2 increments on the default knots: Delta_j ~ Beta(theta t_j, theta (1 - t_j))
    ModelConfig cfg2 = cfg;
    cfg2.prior_model = PriorModel::DirichletIncrements;
    const auto knots = cfg2.knots();
    opt.initial = ModelState{Eigen::VectorXd::Zero(6), 1.0, 1.0,
                             {PhaseFunction::piecewise(knots, knots), PhaseFunction::piecewise(knots, knots)}};
    opt.schedule = {false, false, false, true};
    const auto pm2 = run_chain(data, grid, make_bases(cfg2, grid), cfg2, prop, ChainConfig{410000, 10000, 20, 1}, opt);
    const double spacing = 1.0 / static_cast<double>(knots.size() - 1);
    const double a = cfg2.theta_gamma * spacing, b = cfg2.theta_gamma * (1.0 - spacing);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
            std::vector<double> inc(pm2.size());
            for (std::size_t d = 0; d < pm2.size(); ++d) {
                const auto g = pm2.phase(d, i);
                inc[d] = g.eval(knots[j + 1]) - g.eval(knots[j]);
            }
            pvalues.emplace_back("gamma_" + std::to_string(i + 1) + " increment " + std::to_string(j + 1),
                                 ks_test(inc, [&](double x) { return beta_cdf(x, a, b); }));
        }
    }

    auto worst = pvalues.front();
    for (const auto& p : pvalues)
        if (p.second < worst.second) worst = p;
    return {worst.second > 0.01, std::to_string(pvalues.size()) + " KS tests on " + std::to_string(pm1.size()) +
                                     " thinned draws, min p = " + fmt("%.3g", worst.second) + " (" + worst.first +
                                     ")"};
}

Outcome jacobian_oracle() {
    Rng rng(2024);
    const auto knots = uniform_knots(4);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const PhaseFunction ref = rep % 2 ? sample_dirichlet_phase(8.0, knots, rng)
                                          : PhaseFunction::parametric(uniform(rng, -0.9, 0.9));
        const auto delta = sample_dirichlet(std::vector<double>{3.0, 3.0, 3.0}, rng);
        const double code = jacobian_logdet(ref, PhaseIncrements{delta, knots}, JacobianTerms::AllIncrements);
        worst = std::max(worst, std::abs(code - fd_logdet(ref, delta)));
    }
    return {worst < 1e-4, "100 instances with 4 knots, max |error| = " + fmt("%.2e", worst)};
}

Outcome conjugate_oracle() {
    ModelConfig cfg;
    SimSpec spec;
    spec.sigma_c2 = 0.0;
    spec.seed = 3;
    const auto sim = generate_from_model(spec, cfg);
    const auto bases = make_bases(cfg, sim.grid);
    ModelState truth = sim.truth;
    truth.sigma_c2 = 0.0;

    Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(6, 6) / cfg.prior_var_a;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(6);
    for (std::size_t i = 0; i < sim.data.size(); ++i) {
        const auto d = warped_design(bases.fixed, bases.random, truth.phases[i], sim.grid);
        const Eigen::VectorXd w = d.gamma_dot.cwiseInverse() / truth.sigma2;
        prec += d.phi.transpose() * w.asDiagonal() * d.phi;
        rhs += d.phi.transpose() * w.asDiagonal() * sim.data[i];
    }
    const Eigen::MatrixXd cov = prec.inverse();
    const Eigen::VectorXd mean = cov * rhs;

    RunOptions opt;
    opt.schedule = {true, false, false, false};
    opt.initial = truth;
    const auto d = run_chain(sim.data, sim.grid, bases, cfg, ProposalConfig{}, ChainConfig{55000, 5000, 1, 3}, opt);
    double worst_z = 0.0, worst_cov = 0.0;
    const Eigen::MatrixXd centered = d.a.rowwise() - d.a.colwise().mean();
    const Eigen::MatrixXd sample_cov = centered.transpose() * centered / (static_cast<double>(d.size()) - 1.0);
    for (Eigen::Index k = 0; k < 6; ++k) {
        const auto col = column(d.a, k);
        worst_z = std::max(worst_z, std::abs(mean_of(col) - mean[k]) / batch_means_se(col, 50));
        worst_cov = std::max(worst_cov, std::abs(sample_cov(k, k) / cov(k, k) - 1.0));
    }
    return {worst_z < 3.0, std::to_string(d.size()) + " draws, max |mean error| = " + fmt("%.2f", worst_z) +
                               " MC SE, max variance error " + fmt("%.1f%%", 100.0 * worst_cov)};
}

Outcome marginal_oracle() {
    Rng rng(11);
    const auto grid = TimeGrid::uniform(10);
    double worst = 0.0;
    for (std::size_t br : {2u, 4u, 6u}) {
        ModelConfig cfg;
        cfg.fixed_count = 3;
        cfg.random_count = br;
        cfg.random_basis = BasisKind::ModifiedFourier;
        const auto bases = make_bases(cfg, grid);
        for (int rep = 0; rep < 10; ++rep) {
            const auto g = rep % 2 ? PhaseFunction::parametric(uniform(rng, -0.9, 0.9))
                                   : sample_dirichlet_phase(10.0, uniform_knots(5), rng);
            const auto d = warped_design(bases.fixed, bases.random, g, grid);
            Eigen::VectorXd a(3), f(10);
            for (Eigen::Index k = 0; k < 3; ++k) a[k] = standard_normal(rng);
            for (Eigen::Index k = 0; k < 10; ++k) f[k] = standard_normal(rng);
            const double s2 = std::exp(uniform(rng, -3, 1)), sc2 = std::exp(uniform(rng, -3, 1));
            const double oracle = dense_marginal(f, a, s2, sc2, d);
            for (auto path : {CovariancePath::Dense, CovariancePath::Woodbury})
                worst = std::max(worst, std::abs(marginal_loglik_one(f, a, s2, sc2, d, grid, path) - oracle));
        }
    }

    ModelConfig cfg;
    cfg.fixed_count = 3;
    cfg.random_count = 2;
    cfg.random_basis = BasisKind::ModifiedFourier;
    const auto bases = make_bases(cfg, grid);
    const auto d = warped_design(bases.fixed, bases.random, PhaseFunction::parametric(0.4), grid);
    Eigen::VectorXd a(3);
    a << 0.5, -1.0, 0.3;
    const double s2 = 0.5, sc2 = 0.8;
    FunctionSample f = d.phi * a;
    for (Eigen::Index k = 0; k < 2; ++k) f += std::sqrt(sc2) * standard_normal(rng) * d.phi_tilde.col(k);
    for (Eigen::Index k = 0; k < 10; ++k) f[k] += std::sqrt(s2 * d.gamma_dot[k]) * standard_normal(rng);
    const auto mc = importance_marginal(f, a, s2, sc2, d, 1000000, rng);
    const double z = std::abs(marginal_loglik_one(f, a, s2, sc2, d, grid) - mc.value) / mc.se;
    return {worst < 1e-8 && z < 3.0,
            "dense max |error| = " + fmt("%.1e", worst) + "; 1e6-draw Monte Carlo within " + fmt("%.2f", z) + " SE"};
}

Outcome example1_recovery() {
    const auto& run = example1();
    const auto summary = pointwise_summary(center_mu(run.draws, run.bases.fixed, run.sim.grid));
    const double dmu = delta_mu(summary.mean, run.sim.mu, run.sim.grid);
    const double naive = delta_mu(cross_sectional_mean(run.sim.data), run.sim.mu, run.sim.grid);
    const double aligned = delta_mu_aligned(summary.mean, run.sim.mu, run.sim.grid);
    return {dmu < 0.15 && dmu < naive, "centered Delta_mu = " + fmt("%.4f", dmu) + " (aligned " +
                                           fmt("%.4f", aligned) + "), cross-sectional mean " + fmt("%.4f", naive)};
}

Outcome example2_recovery() {
    SimSpec spec;
    spec.generator = Generator::ValueWarped;
    spec.mu_id = 3;
    spec.sigma2 = 1e-4;
    spec.sigma_c2 = 0.25;
    const auto sim = generate_value_warped(spec);
    ModelConfig cfg;
    cfg.fixed_basis = BasisKind::BSpline;
    cfg.prior_model = PriorModel::DirichletIncrements;
    cfg.phase_knots = 7;
    const auto bases = make_bases(cfg, sim.grid);
    const auto d = run_chain(sim.data, sim.grid, bases, cfg, ProposalConfig{}, ChainConfig{45000, 30000, 1, 1});
    const auto summary = pointwise_summary(center_mu(d, bases.fixed, sim.grid));
    const double dmu = delta_mu(summary.mean, sim.mu, sim.grid);
    return {dmu < 0.05, "mu_3, PM2 with 7 knots, B-spline mean: Delta_mu = " + fmt("%.5f", dmu) + " (aligned " +
                            fmt("%.5f", delta_mu_aligned(summary.mean, sim.mu, sim.grid)) + ")"};
}

Outcome variance_recovery() {
    const auto& run = example1();
    const double s2 = mean_of(run.draws.sigma2) / run.sim.truth.sigma2;
    const double sc2 = mean_of(run.draws.sigma_c2) / run.sim.truth.sigma_c2;
    const auto inside = [](double r) { return r >= 0.5 && r <= 3.0; };
    return {inside(s2) && inside(sc2),
            "posterior mean / truth: sigma2 " + fmt("%.3f", s2) + ", sigma_c2 " + fmt("%.3f", sc2)};
}

Outcome geometry() {
    double gram = 0.0;
    for (std::size_t T : {500u, 1001u}) {
        const auto grid = TimeGrid::uniform(T);
        for (auto kind : {BasisKind::ModifiedFourier, BasisKind::BSpline}) {
            for (std::size_t B = 4; B <= 12; ++B) {
                const auto basis = OrthonormalBasis::build(kind, B, grid);
                const Eigen::MatrixXd& E = basis.eval_matrix();
                const Eigen::MatrixXd G = E.transpose() * grid.weights().asDiagonal() * E;
                gram = std::max(gram, (G - Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(B),
                                                                     static_cast<Eigen::Index>(B)))
                                          .cwiseAbs()
                                          .maxCoeff());
            }
        }
    }

    Rng rng(8);
    const auto fine = TimeGrid::uniform(1001);
    double norm_err = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const double c1 = standard_normal(rng), c2 = standard_normal(rng), c3 = standard_normal(rng);
        const FunctionSample f = fine.sample([&](double t) {
            return c1 * std::sin(2 * M_PI * t) + c2 * std::cos(4 * M_PI * t) + c3 * t;
        });
        const auto g = rep % 2 ? PhaseFunction::parametric(uniform(rng, -0.9, 0.9))
                               : sample_dirichlet_phase(30.0, uniform_knots(5), rng);
        norm_err = std::max(norm_err, std::abs(l2_norm(act_norm_preserving(f, g, fine), fine) - l2_norm(f, fine)));
    }

    bool group_ok = true;
    double group_ratio = 0.0;
    const auto grid = TimeGrid::uniform(501);
    for (std::size_t resolution : {51u, 201u, 1001u}) {
        const double tol = 2.0 / static_cast<double>(resolution);
        for (int rep = 0; rep < 10; ++rep) {
            const auto a = PhaseFunction::parametric(uniform(rng, -0.95, 0.95));
            const auto b = sample_dirichlet_phase(30.0, uniform_knots(5), rng);
            const auto c = PhaseFunction::parametric(uniform(rng, -0.95, 0.95));
            for (double e : {sup_distance(compose(a, invert(a, resolution), resolution), PhaseFunction{}, grid),
                             sup_distance(compose(invert(b, resolution), b, resolution), PhaseFunction{}, grid),
                             sup_distance(compose(compose(a, b, resolution), c, resolution),
                                          compose(a, compose(b, c, resolution), resolution), grid)}) {
                group_ok = group_ok && e < tol;
                group_ratio = std::max(group_ratio, e / tol);
            }
        }
    }

    const auto g101 = TimeGrid::uniform(101);
    const FunctionSample mu = g101.sample([](double t) { return std::sin(6 * t); });
    const FunctionSample shifted = (mu.array() + 0.3).matrix();
    const FunctionSample plus_t = mu + g101.sample([](double t) { return t; });
    const bool delta_ok = delta_mu(mu, mu, g101) == 0.0 && std::abs(delta_mu(shifted, mu, g101) - 0.09) < 1e-12 &&
                          std::abs(delta_mu(plus_t, mu, g101) - 1.0 / 3.0) < 0.02;

    return {gram < 1e-6 && norm_err < 5e-3 && group_ok && delta_ok,
            "Gram " + fmt("%.1e", gram) + ", norm " + fmt("%.1e", norm_err) + ", group error/tolerance " +
                fmt("%.2f", group_ratio) + ", Delta_mu hand cases " + (delta_ok ? "exact" : "wrong")};
}

Outcome projection_property() {
    SimSpec spec;
    spec.generator = Generator::ValueWarped;
    spec.mu_id = 2;
    spec.T = 101;
    spec.sigma2 = 1e-4;
    const auto sim = generate_value_warped(spec);
    std::vector<double> gap(31, 0.0);
    bool ordered = true;
    for (std::size_t B = 1; B <= 30; ++B) {
        const auto basis = OrthonormalBasis::build(BasisKind::ModifiedFourier, B, sim.grid);
        double plain = 0.0, optimized = 0.0;
        for (const auto& f : sim.data) {
            const double p = projection_residual(f, basis, sim.grid, false);
            const double o = projection_residual(f, basis, sim.grid, true, AlignFamily::PiecewiseCD);
            ordered = ordered && o <= p;
            plain += p;
            optimized += o;
        }
        gap[B] = (plain - optimized) / static_cast<double>(sim.data.size());
    }
    return {ordered && gap[3] >= 5.0 * gap[30],
            "residual(ii) <= residual(i) for all B: " + std::string(ordered ? "yes" : "no") + "; gap B=3 " +
                fmt("%.4f", gap[3]) + ", B=30 " + fmt("%.2e", gap[30])};
}

Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("sasfm_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    SimSpec spec;
    spec.n = 8;
    spec.T = 30;
    spec.generator = Generator::FromModelPM2;
    const auto sim = generate_from_model(spec, ModelConfig{});
    cli::OutputBatch data(dir);
    data.add("data.csv", cli::dataset_csv({sim.grid.points().data(), sim.grid.points().data() + 30}, sim.data));
    data.add("fit.cfg", "data = data.csv\nmodel.prior_model = pm2\nchain.total = 3000\nchain.burn_in = 1000\n"
                        "chain.seed = 42\n");
    data.commit();
    cli::Overrides first, second;
    first.out = dir / "run1";
    second.out = dir / "run2";
    cli::cmd_fit(cli::prepare(dir / "fit.cfg", "fit", first));
    cli::cmd_fit(cli::prepare(dir / "fit.cfg", "fit", second));
    const std::string a = cli::read_text(dir / "run1" / "draws.csv");
    const std::string b = cli::read_text(dir / "run2" / "draws.csv");
    fs::remove_all(dir);
    return {!a.empty() && a == b, "two fits with seed 42: " + std::to_string(a.size()) + " bytes, " +
                                      (a == b ? "identical" : "different")};
}

}  // namespace

int main() {
    ::setenv("SASFM_LOG_LEVEL", "warn", 0);
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"prior reproduction", prior_reproduction},
        {"Jacobian oracle", jacobian_oracle},
        {"conjugate oracle", conjugate_oracle},
        {"marginal-likelihood oracle", marginal_oracle},
        {"Example 1 recovery", example1_recovery},
        {"Example 2 recovery", example2_recovery},
        {"variance recovery", variance_recovery},
        {"geometry suite", geometry},
        {"projection residual property", projection_property},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[k].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += out.pass ? 0 : 1;
        std::printf("criterion %2zu %s: %s: %s [%.1f s]\n", k + 1, out.pass ? "PASS" : "FAIL", criteria[k].first,
                    out.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
