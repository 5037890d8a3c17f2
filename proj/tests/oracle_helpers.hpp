// Test-only reference computations: bisection inverses, finite differences,
// Monte Carlo estimators, and brute-force grid searches. These provide the
// expected values for the tests and stay independent of the implementation
// paths they are used to check.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// Inverse of a strictly increasing function by bisection.
inline double bisect_inverse(const std::function<double(double)>& f, double target,
                             double lo, double hi, double x_tol = 1e-13) {
    for (int i = 0; i < 300 && hi - lo > x_tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Central finite difference.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

struct MeanSe {
    double mean;
    double se;
};

/// Sample mean and its standard error over n draws of `sample()`.
template <typename F>
MeanSe mc_mean(F&& sample, std::size_t n) {
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = sample();
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sumsq / static_cast<double>(n) - mean * mean;
    return MeanSe{mean, std::sqrt(var / static_cast<double>(n))};
}

/// Argmin of f over an equally spaced grid on [lo, hi] subject to an
/// optional feasibility predicate. Returns the grid point.
template <typename F, typename Feasible>
double grid_argmin(F&& f, Feasible&& feasible, double lo, double hi,
                   std::size_t points) {
    double best_x = lo;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / points;
        if (!feasible(x)) continue;
        const double v = f(x);
        if (v < best_val) {
            best_val = v;
            best_x = x;
        }
    }
    return best_x;
}

/// Deterministic test RNG.
inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

} // namespace oracle
