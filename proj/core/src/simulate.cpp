#include "sasfm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sasfm/basis.hpp"
#include "sasfm/error.hpp"
#include "sasfm/phase.hpp"
#include "sasfm/random.hpp"

namespace sasfm {

namespace {

constexpr std::size_t kWarpKnots = 5;
constexpr double kWarpTheta = 30.0;
constexpr std::size_t kValueWarpedRandomCount = 6;

Eigen::VectorXd normal_vector(Eigen::Index size, double sd, Rng& rng) {
    Eigen::VectorXd v(size);
    for (Eigen::Index k = 0; k < size; ++k) v[k] = sd * standard_normal(rng);
    return v;
}

}  // namespace

const char* to_string(Generator g) {
    switch (g) {
        case Generator::FromModelPM1: return "pm1";
        case Generator::FromModelPM2: return "pm2";
        case Generator::ValueWarped: return "value_warped";
    }
    return "?";
}

Generator generator_from_string(const std::string& name) {
    if (name == "pm1") return Generator::FromModelPM1;
    if (name == "pm2") return Generator::FromModelPM2;
    if (name == "value_warped") return Generator::ValueWarped;
    throw ArgumentError("unknown generator '" + name + "'");
}

void SimSpec::validate() const {
    if (n == 0) throw ArgumentError("simulate: n must be positive");
    if (T < 2) throw ArgumentError("simulate: T must be at least 2");
    if (!(sigma2 >= 0.0) || !(sigma_c2 >= 0.0)) throw ArgumentError("simulate: variances must be non-negative");
    if (generator == Generator::ValueWarped && (mu_id < 1 || mu_id > 3))
        throw ArgumentError("simulate: mu_id must be 1, 2 or 3");
}

SimulatedData generate_from_model(const SimSpec& spec, const ModelConfig& config) {
    spec.validate();
    config.validate();
    if (spec.generator == Generator::ValueWarped) throw ArgumentError("generate_from_model: value-warped generator");
    Rng rng(spec.seed);
    TimeGrid grid = TimeGrid::uniform(spec.T);
    const ModelBases bases = make_bases(config, grid);
    const auto Bf = static_cast<Eigen::Index>(config.fixed_count);
    const auto Br = static_cast<Eigen::Index>(config.random_count);
    const auto knots = uniform_knots(kWarpKnots);

    SimulatedData out{grid, {}, {}, {}, Eigen::MatrixXd(static_cast<Eigen::Index>(spec.n), Br)};
    out.truth.a = normal_vector(Bf, 1.0, rng);
    out.truth.sigma2 = spec.sigma2;
    out.truth.sigma_c2 = spec.sigma_c2;
    out.mu = bases.fixed.expand(out.truth.a);
    const double sd_c = std::sqrt(spec.sigma_c2);
    const double sd = std::sqrt(spec.sigma2);
    for (std::size_t i = 0; i < spec.n; ++i) {
        PhaseFunction gamma = spec.generator == Generator::FromModelPM1
                                  ? PhaseFunction::parametric(uniform(rng, -1.0, 1.0))
                                  : sample_dirichlet_phase(kWarpTheta, knots, rng);
        const Eigen::VectorXd c = normal_vector(Br, sd_c, rng);
        const WarpedDesign d = warped_design(bases.fixed, bases.random, gamma, grid);
        FunctionSample f = d.phi * out.truth.a + d.phi_tilde * c;
        for (Eigen::Index k = 0; k < f.size(); ++k) f[k] += sd * std::sqrt(d.gamma_dot[k]) * standard_normal(rng);
        out.random_coefficients.row(static_cast<Eigen::Index>(i)) = c.transpose();
        out.data.push_back(std::move(f));
        out.truth.phases.push_back(std::move(gamma));
    }
    return out;
}

double fixed_effect_value(int id, double t) {
    using std::numbers::pi;
    switch (id) {
        case 1: return (std::sin(3.0 * pi * t) + 3.0 * pi * t) / 4.0;
        case 2: return std::exp(-(t - 0.25) * (t - 0.25) / 0.04) + std::exp(-(t - 0.75) * (t - 0.75) / 0.02);
        case 3: return std::cos(2.0 * pi * t + pi / 2.0);
        default: throw ArgumentError("fixed_effect_library: id must be 1, 2 or 3");
    }
}

FunctionSample fixed_effect_library(int id, const TimeGrid& grid) {
    fixed_effect_value(id, 0.0);
    return grid.sample([id](double t) { return fixed_effect_value(id, t); });
}

SimulatedData generate_value_warped(const SimSpec& spec) {
    spec.validate();
    if (spec.generator != Generator::ValueWarped) throw ArgumentError("generate_value_warped: wrong generator");
    Rng rng(spec.seed);
    TimeGrid grid = TimeGrid::uniform(spec.T);
    const auto Br = static_cast<Eigen::Index>(kValueWarpedRandomCount);
    const auto knots = uniform_knots(kWarpKnots);

    SimulatedData out{grid, {}, {}, fixed_effect_library(spec.mu_id, grid),
                      Eigen::MatrixXd(static_cast<Eigen::Index>(spec.n), Br)};
    out.truth.sigma2 = spec.sigma2;
    out.truth.sigma_c2 = spec.sigma_c2;
    const double sd_c = std::sqrt(spec.sigma_c2);
    const double sd = std::sqrt(spec.sigma2);
    std::vector<double> basis_row(kValueWarpedRandomCount);
    for (std::size_t i = 0; i < spec.n; ++i) {
        PhaseFunction gamma = sample_dirichlet_phase(kWarpTheta, knots, rng);
        const Eigen::VectorXd c = normal_vector(Br, sd_c, rng);
        FunctionSample f(static_cast<Eigen::Index>(spec.T));
        for (std::size_t j = 0; j < spec.T; ++j) {
            const double s = std::clamp(gamma.eval(grid[j]), 0.0, 1.0);
            bspline_generators(kValueWarpedRandomCount, s, basis_row);
            const double v = Eigen::Map<const Eigen::VectorXd>(basis_row.data(), Br).dot(c);
            f[static_cast<Eigen::Index>(j)] = fixed_effect_value(spec.mu_id, s) + v + sd * standard_normal(rng);
        }
        out.random_coefficients.row(static_cast<Eigen::Index>(i)) = c.transpose();
        out.data.push_back(std::move(f));
        out.truth.phases.push_back(std::move(gamma));
    }
    return out;
}

}  // namespace sasfm
