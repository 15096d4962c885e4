#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace diffcasimir::quad {

struct Result {
    double value = 0.0;
    double abs_error = 0.0;
    int intervals = 0;
    bool converged = false;
};

struct Tolerance {
    double relative = 1e-6;
    double absolute = 0.0;
    int max_intervals = 200;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule, nodes on [-1, 1].
inline constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
    double a, b, value, error;
    bool operator<(const Interval& o) const { return error < o.error; }
};

template <class F>
Interval gauss_kronrod_15(F& f, double a, double b) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double kronrod = fc * wgk[7];
    double gauss = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        const double f1 = f(centre - dx);
        const double f2 = f(centre + dx);
        kronrod += wgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += wg[j / 2] * (f1 + f2);
    }
    const double value = kronrod * half;
    const double err = std::abs((kronrod - gauss) * half);
    return {a, b, value, err};
}

} // namespace detail

/// Globally adaptive bisection with embedded G7/K15 error estimates.
///
/// `breakpoints` seeds the initial partition of [a, b]; the interval with the
/// largest error estimate is bisected until the summed estimate drops below
/// max(absolute, relative * |value|) or `max_intervals` is reached. The
/// integrand is never evaluated at the end points.
template <class F>
Result integrate(F&& f, std::span<const double> breakpoints, const Tolerance& tol) {
    std::priority_queue<detail::Interval> heap;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (!(breakpoints[i + 1] > breakpoints[i])) continue;
        auto iv = detail::gauss_kronrod_15(f, breakpoints[i], breakpoints[i + 1]);
        total += iv.value;
        total_err += iv.error;
        heap.push(iv);
    }
    Result res;
    auto target = [&] { return std::max(tol.absolute, tol.relative * std::abs(total)); };
    while (!heap.empty() && total_err > target() && static_cast<int>(heap.size()) < tol.max_intervals) {
        const auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // interval cannot be split further in floating point
            heap.push(worst);
            break;
        }
        auto left = detail::gauss_kronrod_15(f, worst.a, mid);
        auto right = detail::gauss_kronrod_15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    total = 0.0;
    total_err = 0.0;
    res.intervals = static_cast<int>(heap.size());
    while (!heap.empty()) {
        total += heap.top().value;
        total_err += heap.top().error;
        heap.pop();
    }
    res.value = total;
    res.abs_error = total_err;
    res.converged = total_err <= std::max(tol.absolute, tol.relative * std::abs(total));
    return res;
}

template <class F>
Result integrate(F&& f, double a, double b, const Tolerance& tol) {
    const std::array<double, 2> pts{a, b};
    return integrate(std::forward<F>(f), std::span<const double>(pts), tol);
}

} // namespace diffcasimir::quad
