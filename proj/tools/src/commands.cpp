#include "sasfm_cli/commands.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sasfm/fpca.hpp"
#include "sasfm/posterior.hpp"
#include "sasfm/simulate.hpp"
#include "sasfm_cli/io.hpp"

namespace sasfm::cli {

namespace {

using nlohmann::json;

std::shared_ptr<spdlog::logger> logger() {
    static const auto log = [] {
        auto l = spdlog::stderr_color_mt("sasfm");
        l->set_pattern("[%l] %v");
        const char* level = std::getenv("SASFM_LOG_LEVEL");
        l->set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
        return l;
    }();
    return log;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json phase_json(const PhaseFunction& g) {
    if (g.is_parametric()) return g.alpha();
    const auto& values = g.piecewise_data().values;
    return std::vector<double>(values.begin() + 1, values.end() - 1);
}

json acceptance_json(const BlockAcceptance& b) {
    const auto block = [](const AcceptanceStats& s) {
        return json{{"proposed", s.proposed}, {"accepted", s.accepted}, {"rate", s.rate()}};
    };
    return json{{"a", block(b.a)}, {"sigma2", block(b.sigma2)}, {"sigma_c2", block(b.sigma_c2)},
                {"phase", block(b.phase)}};
}

json proposal_json(const ProposalConfig& p) {
    std::vector<std::vector<double>> sigma_a;
    for (Eigen::Index r = 0; r < p.sigma_a.rows(); ++r) sigma_a.push_back(to_vector(p.sigma_a.row(r).transpose()));
    return json{{"sigma_a", sigma_a},
                {"a_scale", p.a_scale},
                {"tau2_sigma", p.tau2_sigma},
                {"tau2_sigma_c", p.tau2_sigma_c},
                {"delta", p.delta},
                {"alpha_prop", p.alpha_prop},
                {"adapt_interval", p.adapt_interval},
                {"target_accept_scalar", p.target_accept_scalar},
                {"target_accept_vector", p.target_accept_vector}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string grid_columns_csv(const std::string& header, const TimeGrid& grid,
                             const std::vector<const FunctionSample*>& columns) {
    std::string out = header + "\n";
    for (std::size_t j = 0; j < grid.size(); ++j) {
        out += format_double(grid[j]);
        for (const auto* c : columns) out += "," + format_double((*c)[static_cast<Eigen::Index>(j)]);
        out += '\n';
    }
    return out;
}

std::filesystem::path resolve(const ExperimentConfig& config, const std::filesystem::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return config.source.has_parent_path() ? config.source.parent_path() / p : p;
}

LoadedDataset load_data(const ExperimentConfig& config) {
    const auto path = resolve(config, config.data);
    auto loaded = read_dataset_csv(path);
    logger()->info("read {} observations on {} time points from {}", loaded.data.size(), loaded.grid.size(),
                   path.string());
    return loaded;
}

std::string suffixed(const std::string& stem, const std::string& ext, std::size_t chain, std::size_t chains) {
    return chains > 1 ? stem + "_chain" + std::to_string(chain + 1) + ext : stem + ext;
}

}  // namespace

ExperimentConfig prepare(const std::filesystem::path& config_path, const std::string& command,
                         const Overrides& overrides) {
    const auto file = KeyValueFile::load(config_path);
    ExperimentConfig::require_keys(file, command);
    ExperimentConfig config = ExperimentConfig::from(file);
    if (overrides.seed) {
        config.chain.seed = *overrides.seed;
        if (config.sim) config.sim->seed = *overrides.seed;
    }
    if (overrides.out) config.out = *overrides.out;
    else config.out = resolve(config, config.out);
    if (overrides.chains == 0) throw ConfigError("--chains must be at least 1");
    return config;
}

std::vector<std::filesystem::path> cmd_simulate(const ExperimentConfig& config) {
    if (!config.sim) throw ConfigError(config.source.string() + ": simulate needs sim.* keys");
    const SimSpec& spec = *config.sim;
    const SimulatedData sim = spec.generator == Generator::ValueWarped ? generate_value_warped(spec)
                                                                       : generate_from_model(spec, config.model);
    const auto times = to_vector(sim.grid.points());

    json truth;
    truth["generator"] = to_string(spec.generator);
    truth["seed"] = spec.seed;
    truth["n"] = spec.n;
    truth["T"] = spec.T;
    truth["sigma2"] = sim.truth.sigma2;
    truth["sigma_c2"] = sim.truth.sigma_c2;
    truth["a"] = to_vector(sim.truth.a);
    const bool parametric = spec.generator == Generator::FromModelPM1;
    truth["phase_family"] = parametric ? "pm1" : "piecewise";
    truth["phase_knots"] = parametric ? std::vector<double>{} : sim.truth.phases.front().piecewise_data().knots;
    json phases = json::array();
    for (const auto& g : sim.truth.phases) phases.push_back(phase_json(g));
    truth["phases"] = phases;
    truth["mu"] = to_vector(sim.mu);
    json coefs = json::array();
    for (Eigen::Index i = 0; i < sim.random_coefficients.rows(); ++i)
        coefs.push_back(to_vector(sim.random_coefficients.row(i).transpose()));
    truth["random_coefficients"] = coefs;

    OutputBatch batch(config.out);
    batch.add("data.csv", dataset_csv(times, sim.data));
    batch.add("truth.json", dump(truth));
    const auto written = batch.commit();
    logger()->info("simulated {} observations ({}) with seed {}", spec.n, to_string(spec.generator), spec.seed);
    return written;
}

std::vector<std::filesystem::path> cmd_fit(const ExperimentConfig& config, std::size_t chains) {
    const auto loaded = load_data(config);
    const ModelBases bases = make_bases(config.model, loaded.grid);
    RunOptions options;
    options.start = config.start;

    std::vector<PosteriorDraws> results(chains);
    std::vector<std::exception_ptr> errors(chains);
    const auto work = [&](std::size_t c) {
        try {
            ChainConfig chain = config.chain;
            chain.seed = config.chain.seed + c;
            logger()->info("chain {}: {} iterations ({} burn-in, thin {}), seed {}", c + 1, chain.total,
                           chain.burn_in, chain.thin, chain.seed);
            results[c] = run_chain(loaded.data, loaded.grid, bases, config.model, config.proposal, chain, options);
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };
    if (chains == 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        for (std::size_t c = 0; c < chains; ++c) threads.emplace_back(work, c);
        for (auto& t : threads) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    OutputBatch batch(config.out);
    for (std::size_t c = 0; c < chains; ++c) {
        const auto& d = results[c];
        batch.add(suffixed("draws", ".csv", c, chains), draws_csv(d));
        json acc{{"seed", d.seed},
                 {"kept", d.size()},
                 {"burn_in", acceptance_json(d.acceptance_burn_in)},
                 {"sampling", acceptance_json(d.acceptance_sampling)}};
        batch.add(suffixed("acceptance", ".json", c, chains), dump(acc));
        batch.add(suffixed("proposal", ".json", c, chains), dump(proposal_json(d.final_proposal)));
        logger()->info("chain {}: kept {} draws, sampling acceptance a {:.3f} sigma2 {:.3f} sigma_c2 {:.3f} phase {:.3f}",
                       c + 1, d.size(), d.acceptance_sampling.a.rate(), d.acceptance_sampling.sigma2.rate(),
                       d.acceptance_sampling.sigma_c2.rate(), d.acceptance_sampling.phase.rate());
    }
    return batch.commit();
}

std::vector<std::filesystem::path> cmd_summarize(const ExperimentConfig& config) {
    const auto loaded = load_data(config);
    const auto draws_path = config.draws.empty() ? config.out / "draws.csv" : resolve(config, config.draws);
    const PosteriorDraws draws = read_draws_csv(draws_path, config.model, loaded.data.size());
    if (draws.size() < 2) throw DataError(draws_path.string() + ": need at least two draws");
    if (config.trace_observation >= loaded.data.size())
        throw ConfigError(config.source.string() + ": summarize.trace_observation out of range");
    const ModelBases bases = make_bases(config.model, loaded.grid);
    const CenteredMuDraws centered = center_mu(draws, bases.fixed, loaded.grid);
    const PointwiseSummary summary = pointwise_summary(centered);
    const FunctionSample gamma_bar = centered.gamma_bar.sample(loaded.grid);

    OutputBatch batch(config.out);
    batch.add("mu_summary.csv",
              grid_columns_csv("t,mean,q2.5,q97.5", loaded.grid, {&summary.mean, &summary.lower, &summary.upper}));
    batch.add("gamma_bar.csv", grid_columns_csv("t,gamma_bar", loaded.grid, {&gamma_bar}));

    std::string s2 = "iteration,sigma2\n", sc2 = "iteration,sigma_c2\n";
    for (std::size_t j = 0; j < draws.size(); ++j) {
        const std::string it = std::to_string(draws.iterations[j]) + ",";
        s2 += it + format_double(draws.sigma2[j]) + "\n";
        sc2 += it + format_double(draws.sigma_c2[j]) + "\n";
    }
    batch.add("sigma2_draws.csv", std::move(s2));
    batch.add("sigma_c2_draws.csv", std::move(sc2));

    const std::size_t per = draws.params_per_phase();
    std::string trace = "iteration";
    for (Eigen::Index k = 0; k < draws.a.cols(); ++k) trace += ",a_" + std::to_string(k + 1);
    trace += ",sigma2,sigma_c2";
    for (std::size_t k = 0; k < per; ++k) trace += ",phase_" + std::to_string(k + 1);
    trace += "\n";
    for (std::size_t j = 0; j < draws.size(); ++j) {
        const auto r = static_cast<Eigen::Index>(j);
        trace += std::to_string(draws.iterations[j]);
        for (Eigen::Index k = 0; k < draws.a.cols(); ++k) trace += "," + format_double(draws.a(r, k));
        trace += "," + format_double(draws.sigma2[j]) + "," + format_double(draws.sigma_c2[j]);
        for (std::size_t k = 0; k < per; ++k)
            trace += "," + format_double(draws.phase_params(r, static_cast<Eigen::Index>(config.trace_observation * per + k)));
        trace += "\n";
    }
    batch.add("trace.csv", std::move(trace));

    if (!config.truth.empty()) {
        const auto truth_path = resolve(config, config.truth);
        json truth;
        try {
            truth = json::parse(read_text(truth_path));
        } catch (const json::exception& e) {
            throw DataError(truth_path.string() + ": " + e.what());
        }
        if (!truth.contains("mu") || !truth["mu"].is_array())
            throw DataError(truth_path.string() + ": missing 'mu' array");
        const auto mu_values = truth["mu"].get<std::vector<double>>();
        if (mu_values.size() != loaded.grid.size())
            throw DataError(truth_path.string() + ": 'mu' has " + std::to_string(mu_values.size()) +
                            " values, the grid has " + std::to_string(loaded.grid.size()));
        const FunctionSample mu = Eigen::Map<const Eigen::VectorXd>(mu_values.data(), static_cast<Eigen::Index>(mu_values.size()));
        const json delta{{"delta_mu", delta_mu(summary.mean, mu, loaded.grid)},
                         {"delta_mu_aligned", delta_mu_aligned(summary.mean, mu, loaded.grid)},
                         {"delta_mu_cross_sectional", delta_mu(cross_sectional_mean(loaded.data), mu, loaded.grid)},
                         {"draws", draws.size()}};
        batch.add("delta_mu.json", dump(delta));
        logger()->info("delta_mu {:.5f} (aligned {:.5f})", delta["delta_mu"].get<double>(),
                       delta["delta_mu_aligned"].get<double>());
    }
    return batch.commit();
}

std::vector<std::filesystem::path> cmd_fpca(const ExperimentConfig& config) {
    const auto loaded = load_data(config);
    const auto& grid = loaded.grid;
    const auto& s = config.fpca;
    const CenteredMean cm = centered_mean(loaded.data, grid, s.iterations, s.family);
    logger()->info("centered mean after {} rounds", cm.rounds);
    const FpcaResult full = fpca_basis(cm.aligned, grid, cm.mean, grid.size());
    const std::size_t K = s.components > 0 ? std::min(s.components, grid.size()) : full.components_for(s.energy_fraction);
    const FpcaResult fp = fpca_basis(cm.aligned, grid, cm.mean, K);

    OutputBatch batch(config.out);
    batch.add("mu_bar.csv", grid_columns_csv("t,mu_bar", grid, {&cm.mean}));

    std::string basis = "t";
    for (std::size_t k = 0; k < K; ++k) basis += ",u_" + std::to_string(k + 1);
    basis += "\n";
    for (std::size_t j = 0; j < grid.size(); ++j) {
        basis += format_double(grid[j]);
        for (std::size_t k = 0; k < K; ++k)
            basis += "," + format_double(fp.components(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)));
        basis += "\n";
    }
    batch.add("fpca_basis.csv", std::move(basis));

    std::string energy = "component,singular_value,energy,cumulative_energy\n";
    double cumulative = 0.0;
    for (Eigen::Index k = 0; k < fp.singular_values.size(); ++k) {
        cumulative += fp.energy[k];
        energy += std::to_string(k + 1) + "," + format_double(fp.singular_values[k]) + "," +
                  format_double(fp.energy[k]) + "," + format_double(cumulative) + "\n";
    }
    batch.add("fpca_energy.csv", std::move(energy));

    std::string sweep = "B,residual_projection,residual_phase_optimized\n";
    const std::size_t b_max = std::min(s.sweep_max, grid.size());
    if (b_max < s.sweep_max) logger()->warn("residual sweep capped at B = {} (grid size)", b_max);
    for (std::size_t B = 1; B <= b_max; ++B) {
        const auto b = OrthonormalBasis::build(s.sweep_basis, B, grid);
        double plain = 0.0, optimized = 0.0;
        for (const auto& f : loaded.data) {
            plain += projection_residual(f, b, grid, false);
            optimized += projection_residual(f, b, grid, true, s.family);
        }
        const double n = static_cast<double>(loaded.data.size());
        sweep += std::to_string(B) + "," + format_double(plain / n) + "," + format_double(optimized / n) + "\n";
    }
    batch.add("residual_sweep.csv", std::move(sweep));
    return batch.commit();
}

ExitCode exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return kIo;
    if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const DegeneratePhaseError*>(&e) ||
        dynamic_cast<const DegenerateBasisError*>(&e))
        return kNumerical;
    if (dynamic_cast<const Error*>(&e)) return kValidation;
    return kFailure;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Bayesian functional mixed-effects model with size-and-shape phase variation"};
    app.require_subcommand(1);
    app.fallthrough();
    std::filesystem::path config_path;
    std::uint64_t seed = 0;
    std::size_t chains = 1;
    std::string out;
    app.add_option("--config", config_path, "flat key = value experiment file")->required();
    auto* seed_opt = app.add_option("--seed", seed, "overrides chain.seed and sim.seed");
    app.add_option("--chains", chains, "independent chains for fit, run in parallel")->check(CLI::PositiveNumber);
    auto* out_opt = app.add_option("--out", out, "output directory (overrides 'out')");
    auto* simulate = app.add_subcommand("simulate", "simulate a dataset and its ground truth");
    auto* fit = app.add_subcommand("fit", "run the adaptive MCMC sampler");
    auto* summarize = app.add_subcommand("summarize", "centered posterior summaries of a draws file");
    auto* fpca = app.add_subcommand("fpca", "centered mean, FPCA basis and projection residuals");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kValidation;
    }

    try {
        Overrides overrides;
        if (*seed_opt) overrides.seed = seed;
        if (*out_opt) overrides.out = out;
        overrides.chains = chains;
        std::vector<std::filesystem::path> written;
        if (simulate->parsed()) written = cmd_simulate(prepare(config_path, "simulate", overrides));
        if (fit->parsed()) written = cmd_fit(prepare(config_path, "fit", overrides), chains);
        if (summarize->parsed()) written = cmd_summarize(prepare(config_path, "summarize", overrides));
        if (fpca->parsed()) written = cmd_fpca(prepare(config_path, "fpca", overrides));
        for (const auto& p : written) std::cout << p.string() << "\n";
        return kSuccess;
    } catch (const std::exception& e) {
        logger()->error("{}", e.what());
        return exit_code_for(e);
    }
}

}  // namespace sasfm::cli
