#include "sasfm/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sasfm/error.hpp"

namespace sasfm {

TimeGrid::TimeGrid(std::vector<double> points) {
    if (points.size() < 2) throw ArgumentError("time grid needs at least 2 points");
    if (points.front() != 0.0 || points.back() != 1.0)
        throw ArgumentError("time grid must start at 0 and end at 1");
    for (std::size_t k = 1; k < points.size(); ++k) {
        if (!(points[k] > points[k - 1]))
            throw ArgumentError("time grid must be strictly increasing (index " + std::to_string(k) + ")");
    }
    const auto count = static_cast<Eigen::Index>(points.size());
    points_ = Eigen::Map<const Eigen::VectorXd>(points.data(), count);
    weights_ = Eigen::VectorXd::Zero(count);
    for (Eigen::Index k = 0; k + 1 < count; ++k) {
        const double half = 0.5 * (points_[k + 1] - points_[k]);
        weights_[k] += half;
        weights_[k + 1] += half;
    }
    const double step = 1.0 / static_cast<double>(count - 1);
    uniform_ = true;
    for (Eigen::Index k = 0; k < count; ++k) {
        if (std::abs(points_[k] - static_cast<double>(k) * step) > 1e-14) {
            uniform_ = false;
            break;
        }
    }
}

TimeGrid TimeGrid::uniform(std::size_t count) {
    if (count < 2) throw ArgumentError("time grid needs at least 2 points");
    std::vector<double> pts(count);
    const double denom = static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) pts[k] = static_cast<double>(k) / denom;
    pts.back() = 1.0;
    return TimeGrid(std::move(pts));
}

std::size_t TimeGrid::segment(double t) const {
    const auto last = static_cast<std::size_t>(points_.size() - 1);
    if (t >= 1.0) return last - 1;
    if (t <= 0.0) return 0;
    std::size_t k;
    if (uniform_) {
        k = std::min(static_cast<std::size_t>(t * static_cast<double>(last)), last - 1);
        while (k > 0 && points_[static_cast<Eigen::Index>(k)] > t) --k;
        while (k + 1 < last && points_[static_cast<Eigen::Index>(k + 1)] <= t) ++k;
    } else {
        const double* begin = points_.data();
        const double* it = std::upper_bound(begin, begin + points_.size(), t);
        k = static_cast<std::size_t>(it - begin) - 1;
        k = std::min(k, last - 1);
    }
    return k;
}

void require_on_grid(const FunctionSample& f, const TimeGrid& grid, const char* what) {
    if (static_cast<std::size_t>(f.size()) != grid.size())
        throw DimensionError(std::string(what) + ": expected " + std::to_string(grid.size()) +
                             " values, got " + std::to_string(f.size()));
}

double inner_product(const FunctionSample& f, const FunctionSample& g, const TimeGrid& grid) {
    require_on_grid(f, grid, "inner_product(f)");
    require_on_grid(g, grid, "inner_product(g)");
    return (f.array() * g.array() * grid.weights().array()).sum();
}

double l2_norm(const FunctionSample& f, const TimeGrid& grid) {
    return std::sqrt(std::max(0.0, inner_product(f, f, grid)));
}

double interp_linear(const FunctionSample& f, const TimeGrid& grid, double t) {
    require_on_grid(f, grid, "interp_linear");
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("interp_linear: t outside [0,1]");
    const auto k = static_cast<Eigen::Index>(grid.segment(t));
    const double t0 = grid.points()[k];
    const double t1 = grid.points()[k + 1];
    if (t == t0) return f[k];
    if (t == t1) return f[k + 1];
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * f[k] + w * f[k + 1];
}

}  // namespace sasfm
