#include "sasfm/fpca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

#include "sasfm/error.hpp"

namespace sasfm {

namespace {

constexpr std::size_t kCdKnots = 7;
constexpr std::size_t kCdMaxSweeps = 30;
constexpr double kCenteringTolerance = 1e-6;

Alignment align_pm1_grid(const FunctionSample& f, const FunctionSample& mu, const TimeGrid& grid) {
    Alignment best{PhaseFunction::identity(), alignment_cost(f, mu, PhaseFunction::identity(), grid)};
    for (int step = -99; step <= 99; ++step) {
        if (step == 0) continue;
        auto gamma = PhaseFunction::parametric(step / 100.0);
        const double c = alignment_cost(f, mu, gamma, grid);
        if (c < best.cost) best = {std::move(gamma), c};
    }
    return best;
}

Alignment align_piecewise_cd(const FunctionSample& f, const FunctionSample& mu, const TimeGrid& grid) {
    const Alignment start = align_pm1_grid(f, mu, grid);
    const auto knots = uniform_knots(kCdKnots);
    std::vector<double> values(kCdKnots);
    for (std::size_t k = 0; k < kCdKnots; ++k) values[k] = start.gamma.eval(knots[k]);
    values.front() = 0.0;
    values.back() = 1.0;

    auto cost_of = [&](const std::vector<double>& v) {
        return alignment_cost(f, mu, PhaseFunction::piecewise(knots, v), grid);
    };
    double best = cost_of(values);
    for (std::size_t sweep = 0; sweep < kCdMaxSweeps; ++sweep) {
        const double before = best;
        for (std::size_t k = 1; k + 1 < kCdKnots; ++k) {
            const double lo_gap = (knots[k] - knots[k - 1]) * kSlopeFloor * 10.0;
            const double hi_gap = (knots[k + 1] - knots[k]) * kSlopeFloor * 10.0;
            const double lo = values[k - 1] + lo_gap;
            const double hi = values[k + 1] - hi_gap;
            if (!(lo < hi)) continue;
            std::vector<double> trial = values;
            auto line = [&](double x) {
                trial[k] = x;
                return cost_of(trial);
            };
            const auto [x, c] = boost::math::tools::brent_find_minima(line, lo, hi, 30);
            if (c < best) {
                best = c;
                values[k] = x;
            }
        }
        if (before - best <= 1e-12 * std::max(1.0, before)) break;
    }
    Alignment out{PhaseFunction::piecewise(knots, values), best};
    if (start.cost < out.cost) return start;
    return out;
}

}  // namespace

const char* to_string(AlignFamily family) {
    return family == AlignFamily::PM1Grid ? "pm1_grid" : "piecewise_cd";
}

AlignFamily align_family_from_string(const std::string& name) {
    if (name == "pm1_grid") return AlignFamily::PM1Grid;
    if (name == "piecewise_cd") return AlignFamily::PiecewiseCD;
    throw ArgumentError("unknown alignment family '" + name + "'");
}

double alignment_cost(const FunctionSample& f, const FunctionSample& mu, const PhaseFunction& gamma,
                      const TimeGrid& grid) {
    const FunctionSample diff = mu - act_norm_preserving(f, gamma, grid);
    return inner_product(diff, diff, grid);
}

Alignment align_to_template(const FunctionSample& f, const FunctionSample& mu, const TimeGrid& grid,
                            AlignFamily family) {
    require_on_grid(f, grid, "align_to_template f");
    require_on_grid(mu, grid, "align_to_template mu");
    if (!f.allFinite() || !mu.allFinite()) throw DomainError("align_to_template: non-finite input");
    return family == AlignFamily::PM1Grid ? align_pm1_grid(f, mu, grid) : align_piecewise_cd(f, mu, grid);
}

CenteredMean centered_mean(const Dataset& data, const TimeGrid& grid, std::size_t iters, AlignFamily family) {
    if (data.empty()) throw ArgumentError("centered_mean: empty dataset");
    CenteredMean out;
    out.mean = FunctionSample::Zero(static_cast<Eigen::Index>(grid.size()));
    for (const auto& f : data) {
        require_on_grid(f, grid, "centered_mean observation");
        out.mean += f;
    }
    out.mean /= static_cast<double>(data.size());
    out.aligned = data;
    out.phases.assign(data.size(), PhaseFunction::identity());

    for (std::size_t round = 0; round < iters; ++round) {
        double objective = 0.0;
        FunctionSample next = FunctionSample::Zero(out.mean.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            Alignment al = align_to_template(data[i], out.mean, grid, family);
            objective += al.cost;
            out.aligned[i] = act_norm_preserving(data[i], al.gamma, grid);
            out.phases[i] = std::move(al.gamma);
            next += out.aligned[i];
        }
        next /= static_cast<double>(data.size());
        out.objective.push_back(objective);
        ++out.rounds;
        const double scale = std::max(l2_norm(out.mean, grid), std::numeric_limits<double>::min());
        const double change = l2_norm(next - out.mean, grid) / scale;
        out.mean = std::move(next);
        if (change < kCenteringTolerance) break;
    }
    return out;
}

std::size_t FpcaResult::components_for(double fraction) const {
    double cumulative = 0.0;
    for (Eigen::Index k = 0; k < energy.size(); ++k) {
        cumulative += energy[k];
        if (cumulative >= fraction) return static_cast<std::size_t>(k + 1);
    }
    return static_cast<std::size_t>(energy.size());
}

FpcaResult fpca_basis(const Dataset& aligned, const TimeGrid& grid, const FunctionSample& mu_bar,
                      std::size_t num_components) {
    if (aligned.size() < 2) throw ArgumentError("fpca_basis: need at least 2 observations");
    require_on_grid(mu_bar, grid, "fpca_basis mean");
    const auto T = static_cast<Eigen::Index>(grid.size());
    if (num_components > grid.size()) throw ArgumentError("fpca_basis: more components than grid points");
    Eigen::MatrixXd residuals(static_cast<Eigen::Index>(aligned.size()), T);
    for (std::size_t i = 0; i < aligned.size(); ++i) {
        require_on_grid(aligned[i], grid, "fpca_basis observation");
        residuals.row(static_cast<Eigen::Index>(i)) = (aligned[i] - mu_bar).transpose();
    }
    const Eigen::MatrixXd K = residuals.transpose() * residuals / static_cast<double>(aligned.size() - 1);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeFullU);

    FpcaResult out;
    out.components = svd.matrixU().leftCols(static_cast<Eigen::Index>(num_components));
    out.singular_values = svd.singularValues();
    const double total = out.singular_values.sum();
    out.energy = total > 0.0 ? Eigen::VectorXd(out.singular_values / total) : Eigen::VectorXd::Zero(T);
    return out;
}

double projection_residual(const FunctionSample& f, const OrthonormalBasis& basis, const TimeGrid& grid,
                           bool optimize_phase, AlignFamily family) {
    require_on_grid(f, grid, "projection_residual");
    if (!(basis.grid() == grid)) throw DimensionError("projection_residual: basis built on a different grid");
    const Eigen::MatrixXd& phi = basis.eval_matrix();
    const Eigen::VectorXd coef = phi.transpose() * grid.weights().asDiagonal() * f;
    const FunctionSample f_hat = phi * coef;
    if (!optimize_phase) return l2_norm(f - f_hat, grid);
    return std::sqrt(std::max(0.0, align_to_template(f_hat, f, grid, family).cost));
}

}  // namespace sasfm
