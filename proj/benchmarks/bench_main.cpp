// Microbenchmarks for the sampler's hot paths.
#include <benchmark/benchmark.h>

#include "sasfm/basis.hpp"
#include "sasfm/fpca.hpp"
#include "sasfm/mcmc.hpp"
#include "sasfm/simulate.hpp"

using namespace sasfm;

namespace {

void BM_WarpedDesign(benchmark::State& state) {
    const auto grid = TimeGrid::uniform(static_cast<std::size_t>(state.range(0)));
    const auto bases = make_bases(ModelConfig{}, grid);
    const auto g = PhaseFunction::parametric(0.4);
    for (auto _ : state) benchmark::DoNotOptimize(warped_design(bases.fixed, bases.random, g, grid));
}
BENCHMARK(BM_WarpedDesign)->Arg(50)->Arg(200)->Arg(1000);

void BM_MarginalLikelihood(benchmark::State& state) {
    const auto path = state.range(1) ? CovariancePath::Woodbury : CovariancePath::Dense;
    SimSpec spec;
    spec.T = static_cast<std::size_t>(state.range(0));
    const ModelConfig cfg;
    const auto sim = generate_from_model(spec, cfg);
    const auto bases = make_bases(cfg, sim.grid);
    const auto d = warped_design(bases.fixed, bases.random, sim.truth.phases[0], sim.grid);
    for (auto _ : state)
        benchmark::DoNotOptimize(marginal_loglik_one(sim.data[0], sim.truth.a, sim.truth.sigma2, sim.truth.sigma_c2,
                                                     d, sim.grid, path));
}
BENCHMARK(BM_MarginalLikelihood)->Args({50, 0})->Args({50, 1})->Args({200, 0})->Args({200, 1});

void BM_Sweep(benchmark::State& state) {
    SimSpec spec;
    spec.generator = state.range(0) ? Generator::FromModelPM2 : Generator::FromModelPM1;
    ModelConfig cfg;
    cfg.prior_model = state.range(0) ? PriorModel::DirichletIncrements : PriorModel::OneParameter;
    const auto sim = generate_from_model(spec, cfg);
    const auto bases = make_bases(cfg, sim.grid);
    Sampler sampler(sim.data, sim.grid, bases, cfg, ProposalConfig{}, 1, sim.truth);
    BlockAcceptance stats;
    for (auto _ : state) sampler.sweep(stats);
}
BENCHMARK(BM_Sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_PhaseOptimizedResidual(benchmark::State& state) {
    SimSpec spec;
    spec.generator = Generator::ValueWarped;
    spec.T = 101;
    const auto sim = generate_value_warped(spec);
    const auto basis = OrthonormalBasis::build(BasisKind::ModifiedFourier, 8, sim.grid);
    const auto family = state.range(0) ? AlignFamily::PiecewiseCD : AlignFamily::PM1Grid;
    for (auto _ : state) benchmark::DoNotOptimize(projection_residual(sim.data[0], basis, sim.grid, true, family));
}
BENCHMARK(BM_PhaseOptimizedResidual)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
