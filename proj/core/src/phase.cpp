#include "sasfm/phase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sasfm/error.hpp"

namespace sasfm {

namespace {

void check_time(double t, const char* what) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError(std::string(what) + ": t outside [0,1]");
}

void validate_knots(std::span<const double> knots) {
    if (knots.size() < 2) throw ArgumentError("knot set needs at least 2 points");
    if (knots.front() != 0.0 || knots.back() != 1.0) throw ArgumentError("knots must start at 0 and end at 1");
    for (std::size_t k = 1; k < knots.size(); ++k)
        if (!(knots[k] > knots[k - 1])) throw ArgumentError("knots must be strictly increasing");
}

std::size_t pl_segment(const std::vector<double>& knots, double t) {
    if (t >= 1.0) return knots.size() - 2;
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    const auto k = static_cast<std::size_t>(it - knots.begin());
    return std::min(k == 0 ? 0 : k - 1, knots.size() - 2);
}

FunctionSample act(const FunctionSample& f, const PhaseFunction& gamma, const TimeGrid& grid, double power) {
    require_on_grid(f, grid, "phase action");
    FunctionSample out(f.size());
    for (Eigen::Index j = 0; j < f.size(); ++j) {
        const double t = grid.points()[j];
        const double value = interp_linear(f, grid, gamma.eval(t));
        out[j] = power == 0.0 ? value : value * std::pow(gamma.deriv(t), power);
    }
    return out;
}

}  // namespace

PhaseFunction PhaseFunction::parametric(double alpha) {
    if (!(alpha > -1.0 && alpha < 1.0))
        throw DegeneratePhaseError("parametric phase requires alpha in (-1,1)");
    return PhaseFunction(Parametric{alpha});
}

PhaseFunction PhaseFunction::piecewise(std::vector<double> knots, std::vector<double> values) {
    validate_knots(knots);
    if (values.size() != knots.size()) throw DimensionError("piecewise phase: knots/values length mismatch");
    if (values.front() != 0.0 || values.back() != 1.0)
        throw DegeneratePhaseError("piecewise phase must map 0 to 0 and 1 to 1");
    for (std::size_t k = 1; k < knots.size(); ++k) {
        const double slope = (values[k] - values[k - 1]) / (knots[k] - knots[k - 1]);
        if (!(slope > kSlopeFloor))
            throw DegeneratePhaseError("piecewise phase slope below floor on segment " + std::to_string(k));
    }
    return PhaseFunction(PiecewiseLinear{std::move(knots), std::move(values)});
}

double PhaseFunction::eval(double t) const {
    check_time(t, "phase eval");
    if (const auto* p = std::get_if<Parametric>(&rep_)) return t + p->alpha * t * (t - 1.0);
    const auto& pl = std::get<PiecewiseLinear>(rep_);
    const std::size_t k = pl_segment(pl.knots, t);
    const double t0 = pl.knots[k];
    const double t1 = pl.knots[k + 1];
    if (t == t0) return pl.values[k];
    if (t == t1) return pl.values[k + 1];
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * pl.values[k] + w * pl.values[k + 1];
}

double PhaseFunction::deriv(double t) const {
    check_time(t, "phase deriv");
    if (const auto* p = std::get_if<Parametric>(&rep_)) return 1.0 + p->alpha * (2.0 * t - 1.0);
    const auto& pl = std::get<PiecewiseLinear>(rep_);
    const std::size_t k = pl_segment(pl.knots, t);
    return (pl.values[k + 1] - pl.values[k]) / (pl.knots[k + 1] - pl.knots[k]);
}

double PhaseFunction::alpha() const {
    if (const auto* p = std::get_if<Parametric>(&rep_)) return p->alpha;
    throw ArgumentError("phase function is not parametric");
}

const PhaseFunction::PiecewiseLinear& PhaseFunction::piecewise_data() const {
    if (const auto* p = std::get_if<PiecewiseLinear>(&rep_)) return *p;
    throw ArgumentError("phase function is not piecewise linear");
}

FunctionSample PhaseFunction::sample(const TimeGrid& grid) const {
    return grid.sample([this](double t) { return eval(t); });
}

std::vector<double> uniform_knots(std::size_t count) {
    if (count < 2) throw ArgumentError("uniform_knots: need at least 2 knots");
    std::vector<double> knots(count);
    const double denom = static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) knots[k] = static_cast<double>(k) / denom;
    knots.back() = 1.0;
    return knots;
}

std::vector<double> knot_spacings(std::span<const double> knots) {
    validate_knots(knots);
    std::vector<double> out(knots.size() - 1);
    for (std::size_t j = 0; j + 1 < knots.size(); ++j) out[j] = knots[j + 1] - knots[j];
    return out;
}

PhaseFunction compose_on(const PhaseFunction& outer, const PhaseFunction& inner, std::span<const double> knots) {
    validate_knots(knots);
    std::vector<double> values(knots.size());
    for (std::size_t k = 0; k < knots.size(); ++k) values[k] = outer.eval(inner.eval(knots[k]));
    values.front() = 0.0;
    values.back() = 1.0;
    return PhaseFunction::piecewise(std::vector<double>(knots.begin(), knots.end()), std::move(values));
}

PhaseFunction compose(const PhaseFunction& outer, const PhaseFunction& inner, std::size_t resolution) {
    const auto knots = uniform_knots(resolution);
    return compose_on(outer, inner, knots);
}

PhaseFunction invert(const PhaseFunction& gamma, std::size_t resolution) {
    if (!gamma.is_parametric()) {
        const auto& pl = gamma.piecewise_data();
        return PhaseFunction::piecewise(pl.values, pl.knots);
    }
    if (gamma.alpha() == 0.0) return PhaseFunction::identity();
    const auto samples = uniform_knots(resolution);
    std::vector<double> images(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) images[k] = gamma.eval(samples[k]);
    images.front() = 0.0;
    images.back() = 1.0;
    for (std::size_t k = 1; k < images.size(); ++k)
        if (!(images[k] > images[k - 1])) throw DegeneratePhaseError("invert: phase not strictly increasing");
    return PhaseFunction::piecewise(std::move(images), samples);
}

FunctionSample act_norm_preserving(const FunctionSample& f, const PhaseFunction& gamma, const TimeGrid& grid) {
    return act(f, gamma, grid, 0.5);
}

FunctionSample act_value_preserving(const FunctionSample& f, const PhaseFunction& gamma, const TimeGrid& grid) {
    return act(f, gamma, grid, 0.0);
}

FunctionSample act_area_preserving(const FunctionSample& f, const PhaseFunction& gamma, const TimeGrid& grid) {
    return act(f, gamma, grid, 1.0);
}

PhaseIncrements to_increments(const PhaseFunction& gamma, std::span<const double> knots) {
    validate_knots(knots);
    PhaseIncrements inc;
    inc.knots.assign(knots.begin(), knots.end());
    inc.deltas.resize(knots.size() - 1);
    double previous = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
        double delta;
        if (j + 2 == knots.size()) {
            delta = 1.0 - total;
        } else {
            const double next = gamma.eval(knots[j + 1]);
            delta = next - previous;
            previous = next;
        }
        if (!(delta > 0.0)) throw DegeneratePhaseError("to_increments: non-positive increment " + std::to_string(j + 1));
        inc.deltas[j] = delta;
        total += delta;
    }
    return inc;
}

PhaseFunction from_increments(const PhaseIncrements& inc) {
    validate_knots(inc.knots);
    if (inc.deltas.size() + 1 != inc.knots.size()) throw DimensionError("from_increments: deltas/knots mismatch");
    std::vector<double> values(inc.knots.size());
    values[0] = 0.0;
    for (std::size_t j = 0; j < inc.deltas.size(); ++j) {
        if (!(inc.deltas[j] > 0.0)) throw DegeneratePhaseError("from_increments: non-positive increment");
        values[j + 1] = values[j] + inc.deltas[j];
    }
    values.back() = 1.0;
    return PhaseFunction::piecewise(inc.knots, std::move(values));
}

std::vector<double> sample_dirichlet(std::span<const double> concentrations, Rng& rng) {
    std::vector<double> logs(concentrations.size());
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < concentrations.size(); ++j) {
        if (!(concentrations[j] > 0.0)) throw ArgumentError("Dirichlet concentrations must be positive");
        logs[j] = log_gamma_draw(concentrations[j], rng);
        max_log = std::max(max_log, logs[j]);
    }
    double total = 0.0;
    for (double& v : logs) {
        v = std::exp(v - max_log);
        total += v;
    }
    for (double& v : logs) v /= total;
    return logs;
}

PhaseFunction sample_dirichlet_phase(double theta, std::span<const double> knots, Rng& rng) {
    if (!(theta > 0.0)) throw ArgumentError("Dirichlet phase concentration must be positive");
    auto conc = knot_spacings(knots);
    for (double& c : conc) c *= theta;
    PhaseIncrements inc{sample_dirichlet(conc, rng), std::vector<double>(knots.begin(), knots.end())};
    return from_increments(inc);
}

double dirichlet_log_density(std::span<const double> x, std::span<const double> concentrations) {
    if (x.size() != concentrations.size()) throw DimensionError("dirichlet_log_density: size mismatch");
    double total_conc = 0.0;
    double value = 0.0;
    double sum = 0.0;
    for (double v : x) sum += v;
    if (std::abs(sum - 1.0) > 1e-9) return -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] > 0.0)) return -std::numeric_limits<double>::infinity();
        total_conc += concentrations[j];
        value += (concentrations[j] - 1.0) * std::log(x[j]) - std::lgamma(concentrations[j]);
    }
    return value + std::lgamma(total_conc);
}

PhaseFunction mean_phase(std::span<const PhaseFunction> phases, const TimeGrid& grid) {
    if (phases.empty()) throw ArgumentError("mean_phase: empty phase list");
    FunctionSample acc = FunctionSample::Zero(static_cast<Eigen::Index>(grid.size()));
    for (const auto& g : phases) acc += g.sample(grid);
    acc /= static_cast<double>(phases.size());
    std::vector<double> knots(grid.points().data(), grid.points().data() + grid.size());
    std::vector<double> values(acc.data(), acc.data() + acc.size());
    values.front() = 0.0;
    values.back() = 1.0;
    return PhaseFunction::piecewise(std::move(knots), std::move(values));
}

double sup_distance(const PhaseFunction& a, const PhaseFunction& b, const TimeGrid& grid) {
    return (a.sample(grid) - b.sample(grid)).cwiseAbs().maxCoeff();
}

}  // namespace sasfm
