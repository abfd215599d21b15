#include "sasfm/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sasfm/error.hpp"

namespace sasfm {

namespace {

// (mu o gamma) sqrt(gamma') evaluated through the basis at the warped grid times.
Eigen::MatrixXd warped_fixed_design(const OrthonormalBasis& fixed, const PhaseFunction& gamma, const TimeGrid& grid) {
    const std::size_t T = grid.size();
    std::vector<double> times(T);
    Eigen::VectorXd root(static_cast<Eigen::Index>(T));
    for (std::size_t j = 0; j < T; ++j) {
        times[j] = std::clamp(gamma.eval(grid[j]), 0.0, 1.0);
        root[static_cast<Eigen::Index>(j)] = std::sqrt(gamma.deriv(grid[j]));
    }
    Eigen::MatrixXd phi = fixed.eval_at(times);
    return root.asDiagonal() * phi;
}

void require_draws(const PosteriorDraws& draws, const OrthonormalBasis& fixed, const TimeGrid& grid) {
    if (draws.size() == 0) throw ArgumentError("posterior: no draws");
    if (static_cast<std::size_t>(draws.a.cols()) != fixed.count())
        throw DimensionError("posterior: draws and fixed basis disagree on B_f");
    if (!(fixed.grid() == grid)) throw DimensionError("posterior: basis built on a different grid");
}

}  // namespace

CenteredMuDraws center_mu(const PosteriorDraws& draws, const OrthonormalBasis& fixed, const TimeGrid& grid) {
    require_draws(draws, fixed, grid);
    std::vector<PhaseFunction> phases;
    phases.reserve(draws.size() * draws.observations);
    for (std::size_t j = 0; j < draws.size(); ++j)
        for (std::size_t i = 0; i < draws.observations; ++i) phases.push_back(draws.phase(j, i));

    CenteredMuDraws out;
    out.gamma_bar = phases.empty() ? PhaseFunction::identity() : mean_phase(phases, grid);
    const Eigen::MatrixXd design = warped_fixed_design(fixed, out.gamma_bar, grid);
    out.values = draws.a * design.transpose();
    return out;
}

double empirical_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ArgumentError("empirical_quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("empirical_quantile: p outside [0,1]");
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

PointwiseSummary pointwise_summary(const CenteredMuDraws& centered) {
    const Eigen::Index n = centered.values.rows();
    if (n < 2) throw ArgumentError("pointwise_summary: need at least 2 draws");
    const Eigen::Index T = centered.values.cols();
    PointwiseSummary s{FunctionSample(T), FunctionSample(T), FunctionSample(T)};
    std::vector<double> column(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < T; ++k) {
        for (Eigen::Index j = 0; j < n; ++j) column[static_cast<std::size_t>(j)] = centered.values(j, k);
        s.mean[k] = centered.values.col(k).mean();
        s.lower[k] = empirical_quantile(column, 0.025);
        s.upper[k] = empirical_quantile(column, 0.975);
    }
    return s;
}

double delta_mu(const FunctionSample& estimate, const FunctionSample& truth, const TimeGrid& grid) {
    require_on_grid(estimate, grid, "delta_mu estimate");
    require_on_grid(truth, grid, "delta_mu truth");
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        const auto k = static_cast<Eigen::Index>(j);
        const double d = estimate[k] - truth[k];
        total += d * d * (grid[j + 1] - grid[j]);
    }
    return total;
}

double delta_mu_aligned(const FunctionSample& estimate, const FunctionSample& truth, const TimeGrid& grid) {
    double best = delta_mu(estimate, truth, grid);
    for (int step = -99; step <= 99; ++step) {
        if (step == 0) continue;
        const auto gamma = PhaseFunction::parametric(step / 100.0);
        best = std::min(best, delta_mu(act_norm_preserving(estimate, gamma, grid), truth, grid));
    }
    return best;
}

std::vector<FunctionSample> rotated_fit(const PosteriorDraws& draws, std::size_t observation,
                                        const OrthonormalBasis& fixed, const TimeGrid& grid) {
    require_draws(draws, fixed, grid);
    if (observation >= draws.observations) throw ArgumentError("rotated_fit: observation index out of range");
    std::vector<FunctionSample> out;
    out.reserve(draws.size());
    for (std::size_t j = 0; j < draws.size(); ++j) {
        const Eigen::MatrixXd design = warped_fixed_design(fixed, draws.phase(j, observation), grid);
        out.emplace_back(design * draws.a.row(static_cast<Eigen::Index>(j)).transpose());
    }
    return out;
}

FunctionSample cross_sectional_mean(const Dataset& data) {
    if (data.empty()) throw ArgumentError("cross_sectional_mean: empty dataset");
    FunctionSample mean = FunctionSample::Zero(data.front().size());
    for (const auto& f : data) {
        if (f.size() != mean.size()) throw DimensionError("cross_sectional_mean: ragged dataset");
        mean += f;
    }
    return mean / static_cast<double>(data.size());
}

}  // namespace sasfm
