#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "wgqed/errors.hpp"

namespace wgqed {

struct QuadOptions {
    double abs_tol = 1e-12;
    int max_intervals = 30000;
};

template <class T>
struct QuadResult {
    T value{};
    double error_estimate = 0.0;
    int intervals = 0;
    bool converged = false;
};

namespace detail {

// Gauss 7 / Kronrod 15 nodes and weights (QUADPACK dqk15 constants).
inline constexpr double kGK15Nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kKronrodW[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGaussW[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T, class F>
void gk15(const F& f, double a, double b, T& value, double& err) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const T fc = f(mid);
    T resg = kGaussW[3] * fc;
    T resk = kKronrodW[7] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kGK15Nodes[i];
        const T sum = f(mid - dx) + f(mid + dx);
        resk += kKronrodW[i] * sum;
        if (i % 2 == 1) resg += kGaussW[i / 2] * sum;
    }
    value = resk * half;
    err = std::abs(resk - resg) * std::abs(half);
    // QUADPACK-style sharpening of the raw Gauss/Kronrod difference.
    err = std::pow(200.0 * err, 1.5) < err ? std::pow(200.0 * err, 1.5) : err;
}

}  // namespace detail

// Adaptive Gauss-Kronrod 7/15 on [a, b] with an absolute-error target.
// Splits the worst interval first; the error estimate is the sum of
// per-interval Kronrod-Gauss differences.
template <class T, class F>
QuadResult<T> integrate_adaptive(const F& f, double a, double b,
                                 const QuadOptions& opt = {}) {
    QuadResult<T> out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    struct Interval {
        double a, b, err;
        T value;
    };
    std::vector<Interval> heap;
    heap.reserve(256);
    auto push = [&heap](Interval iv) {
        heap.push_back(iv);
        std::push_heap(heap.begin(), heap.end(),
                       [](const Interval& x, const Interval& y) { return x.err < y.err; });
    };
    auto pop = [&heap]() {
        std::pop_heap(heap.begin(), heap.end(),
                      [](const Interval& x, const Interval& y) { return x.err < y.err; });
        Interval iv = heap.back();
        heap.pop_back();
        return iv;
    };

    Interval first{a, b, 0.0, T{}};
    detail::gk15(f, a, b, first.value, first.err);
    push(first);
    double total_err = first.err;

    while (total_err > opt.abs_tol &&
           static_cast<int>(heap.size()) < opt.max_intervals) {
        Interval worst = pop();
        if (worst.err <= 0.0 || worst.b - worst.a < 1e-300) {
            // Cannot refine further; put it back and stop.
            push(worst);
            break;
        }
        total_err -= worst.err;
        const double mid = 0.5 * (worst.a + worst.b);
        Interval left{worst.a, mid, 0.0, T{}};
        Interval right{mid, worst.b, 0.0, T{}};
        detail::gk15(f, left.a, left.b, left.value, left.err);
        detail::gk15(f, right.a, right.b, right.value, right.err);
        total_err += left.err + right.err;
        push(left);
        push(right);
    }

    T sum{};
    double err = 0.0;
    for (const auto& iv : heap) {
        sum += iv.value;
        err += iv.err;
    }
    out.value = sum;
    out.error_estimate = err;
    out.intervals = static_cast<int>(heap.size());
    out.converged = err <= opt.abs_tol;
    return out;
}

// Integrate across a sorted breakpoint list (the pieces may define the
// integrand piecewise; interval edges are aligned with the seams).
// Throws NumericalError when the summed error estimate misses the target.
template <class T, class F>
T integrate_segments(const F& f, std::span<const double> breakpoints,
                     const QuadOptions& opt = {}) {
    if (breakpoints.size() < 2) throw ParameterError("integrate_segments: need at least two breakpoints");
    T total{};
    double err = 0.0;
    int intervals = 0;
    const int nseg = static_cast<int>(breakpoints.size()) - 1;
    QuadOptions seg_opt = opt;
    seg_opt.abs_tol = opt.abs_tol / nseg;
    for (int s = 0; s < nseg; ++s) {
        auto r = integrate_adaptive<T>(f, breakpoints[s], breakpoints[s + 1], seg_opt);
        total += r.value;
        err += r.error_estimate;
        intervals += r.intervals;
    }
    if (err > opt.abs_tol) {
        throw NumericalError(
            "quadrature did not converge: error estimate " + std::to_string(err) +
            " > tolerance " + std::to_string(opt.abs_tol) + " after " +
            std::to_string(intervals) + " intervals");
    }
    return total;
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        const QuadOptions& opt = {}) {
    auto r = integrate_adaptive<double>(f, a, b, opt);
    if (!r.converged) {
        throw NumericalError("quadrature did not converge: error estimate " +
                             std::to_string(r.error_estimate) + " > tolerance " +
                             std::to_string(opt.abs_tol) + " after " +
                             std::to_string(r.intervals) + " intervals");
    }
    return r.value;
}

}  // namespace wgqed
