// Small numerical toolkit: adaptive Gauss-Kronrod quadrature, bisection
// root finding, and golden-section minimization. All routines are pure
// and deterministic.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace pubopt {

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss-Legendre rule
// (QUADPACK dqk15 abscissae/weights).
inline constexpr double kKronrodNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <typename F>
void gauss_kronrod_15(const F& f, double a, double b, double& value, double& err) {
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);
    const double fc = f(c);
    double gauss = fc * kGaussWeights[3];
    double kronrod = fc * kKronrodWeights[7];
    for (int i = 0; i < 7; ++i) {
        const double x = h * kKronrodNodes[i];
        const double fsum = f(c - x) + f(c + x);
        kronrod += fsum * kKronrodWeights[i];
        if (i % 2 == 1) gauss += fsum * kGaussWeights[i / 2];
    }
    value = kronrod * h;
    err = std::abs((kronrod - gauss) * h);
}

template <typename F>
double integrate_recursive(const F& f, double a, double b, double tol, int depth) {
    double value = 0.0, err = 0.0;
    gauss_kronrod_15(f, a, b, value, err);
    if (err <= tol || depth <= 0) return value;
    const double mid = 0.5 * (a + b);
    return integrate_recursive(f, a, mid, 0.5 * tol, depth - 1) +
           integrate_recursive(f, mid, b, 0.5 * tol, depth - 1);
}

} // namespace detail

/// Adaptive quadrature of f over [a,b] to absolute tolerance abs_tol.
template <typename F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-10,
                 int max_depth = 40) {
    if (!(b >= a)) throw std::invalid_argument("integrate: b < a");
    if (a == b) return 0.0;
    return detail::integrate_recursive(f, a, b, abs_tol, max_depth);
}

/// Adaptive quadrature over consecutive segments delimited by `points`
/// (sorted; the integrand may have kinks at interior points).
template <typename F>
double integrate_segments(const F& f, const std::vector<double>& points,
                          double abs_tol = 1e-10) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        if (points[i + 1] > points[i]) {
            total += integrate(f, points[i], points[i + 1], abs_tol);
        }
    }
    return total;
}

/// Sorted, deduplicated list of segment boundaries clipped to [lo, hi].
inline std::vector<double> clip_breakpoints(std::vector<double> pts, double lo,
                                            double hi) {
    pts.push_back(lo);
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (double p : pts) {
        if (p < lo || p > hi) continue;
        if (out.empty() || p > out.back()) out.push_back(p);
    }
    return out;
}

/// Root of a continuous function on [lo, hi] by bisection. The bracket
/// must straddle a sign change.
template <typename F>
double bisect_root(const F& f, double lo, double hi, double x_tol = 1e-12,
                   int max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) {
        throw std::invalid_argument("bisect_root: no sign change on bracket");
    }
    for (int i = 0; i < max_iter && hi - lo > x_tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Minimizer of a continuous function on [lo, hi] by golden-section search.
template <typename F>
double golden_section_min(const F& f, double lo, double hi, double x_tol = 1e-10) {
    constexpr double kInvPhi = 0.61803398874989484820;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > x_tol) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = f(x2);
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace pubopt
