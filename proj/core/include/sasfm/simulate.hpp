#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "sasfm/grid.hpp"
#include "sasfm/model.hpp"

namespace sasfm {

enum class Generator {
    FromModelPM1,
    FromModelPM2,
    ValueWarped,  ///< value-preserving warps of a library mean plus spline random effects
};

const char* to_string(Generator g);
Generator generator_from_string(const std::string& name);

struct SimSpec {
    std::size_t n = 30;
    std::size_t T = 50;
    Generator generator = Generator::FromModelPM1;
    int mu_id = 3;  ///< library mean for ValueWarped
    double sigma2 = 0.1;
    double sigma_c2 = 0.25;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SimulatedData {
    TimeGrid grid;
    Dataset data;
    ModelState truth;       ///< for ValueWarped: a is empty, phases are the warps
    FunctionSample mu;      ///< true fixed effect on the grid
    Eigen::MatrixXd random_coefficients;  ///< n x B_r
};

/// f_i = Phi_i a + PhiTilde_i c_i + eps_i with Var(eps_ij) = sigma2 gamma_i'(t_j), on a uniform grid.
SimulatedData generate_from_model(const SimSpec& spec, const ModelConfig& config);

/// mu_1 = (sin(3 pi t) + 3 pi t)/4, mu_2 = two Gaussian bumps, mu_3 = cos(2 pi t + pi/2).
double fixed_effect_value(int id, double t);
FunctionSample fixed_effect_library(int id, const TimeGrid& grid);

/**
 * f_i = (mu + v_i) o gamma_i + eps_i with v_i a combination of 6 raw cubic
 * B-splines (partition of unity) with N(0, sigma_c2) coefficients, gamma_i piecewise linear with
 * Dirichlet(30 t) increments on {0, .25, .5, .75, 1}, eps iid N(0, sigma2).
 */
SimulatedData generate_value_warped(const SimSpec& spec);

}  // namespace sasfm
