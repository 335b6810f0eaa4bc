#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "face/device_model.hpp"

namespace face {

struct DegenerateCosts : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Inputs of the cost-effectiveness analysis: how much flash (theta, as a
// fraction of the base buffer) buys the same I/O-time reduction as a DRAM
// increment of delta.
struct BreakEvenParams {
    double delta = 0.0;    // DRAM increment fraction
    double c_disk = 0.0;   // per-page disk access time, seconds
    double c_flash = 0.0;  // per-page flash access time, seconds
    double alpha = 1.0;    // hit-rate model constant (cancels in break-even)
    double base_pages = 1; // base buffer size (model input only)
};

inline void validate(const BreakEvenParams &p) {
    if (!(p.c_flash > 0.0) || !(p.c_disk > p.c_flash)) {
        throw DegenerateCosts("need c_disk > c_flash > 0");
    }
    if (p.delta < 0.0) throw std::invalid_argument("delta must be nonnegative");
    if (!(p.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
}

inline double break_even_exponent(const BreakEvenParams &p) {
    validate(p);
    return p.c_disk / (p.c_disk - p.c_flash);
}

// Break-even flash increment: 1 + theta = (1 + delta)^(c_disk/(c_disk - c_flash)).
inline double break_even_theta(const BreakEvenParams &p) {
    return std::pow(1.0 + p.delta, break_even_exponent(p)) - 1.0;
}

// Hit-rate increment predicted by the log model for growing a buffer from
// base_pages to size pages: alpha * log(size / base).
inline double hit_rate_model(double alpha, double base_pages, double size_pages) {
    if (!(base_pages > 0.0) || size_pages < base_pages) {
        throw std::invalid_argument("need size >= base > 0");
    }
    return alpha * std::log(size_pages / base_pages);
}

// Per-page access time derived from a device profile, mixing random read and
// write costs by the read share of the workload.
inline double per_page_access_time(const DeviceProfile &p, double read_weight) {
    if (read_weight < 0.0 || read_weight > 1.0) {
        throw std::invalid_argument("read weight must be in [0, 1]");
    }
    return read_weight / p.rand_read_iops + (1.0 - read_weight) / p.rand_write_iops;
}

// Least-squares fit of alpha for hit_rate = alpha * log(size) + c over
// observed (size, hit_rate) points.
inline double fit_alpha(const std::vector<std::pair<double, double>> &points) {
    if (points.size() < 2) throw std::invalid_argument("need at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto &[size, rate] : points) {
        double x = std::log(size);
        sx += x;
        sy += rate;
        sxx += x * x;
        sxy += x * rate;
    }
    double n = static_cast<double>(points.size());
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12) throw std::invalid_argument("degenerate fit");
    return (n * sxy - sx * sy) / denom;
}

}  // namespace face
