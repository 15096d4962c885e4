#include "diffcasimir/lifshitz.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "diffcasimir/constants.hpp"
#include "diffcasimir/error.hpp"
#include "diffcasimir/quadrature.hpp"

namespace diffcasimir {

SpherePlateGeometry::SpherePlateGeometry(double radius, std::vector<double> separations)
    : radius_(radius), z_(std::move(separations)) {
    require(radius_ > 0.0 && std::isfinite(radius_), ErrorCode::Domain, "sphere radius must be positive");
    require(!z_.empty(), ErrorCode::Domain, "separation grid is empty");
    for (std::size_t i = 0; i < z_.size(); ++i) {
        require(z_[i] > 0.0 && std::isfinite(z_[i]), ErrorCode::Domain, "separations must be positive");
        require(i == 0 || z_[i] > z_[i - 1], ErrorCode::Domain, "separation grid must be strictly ascending");
    }
    pfa_warning_ = z_.back() / radius_ > 0.01;
}

void QuadratureSpec::validate() const {
    require(relative_tolerance > 0.0 && relative_tolerance <= 1e-2, ErrorCode::Domain,
            "quadrature relative tolerance must lie in (0, 1e-2]");
    require(xi_cutoff_factor > 10.0 && y_cutoff > 10.0, ErrorCode::Domain, "quadrature cutoffs must exceed 10");
    require(max_subdivisions >= 16, ErrorCode::Domain, "max_subdivisions must be at least 16");
}

std::string QuadratureSpec::describe() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "rel_tol=%g xi_cutoff_factor=%g y_cutoff=%g max_subdivisions=%d",
                  relative_tolerance, xi_cutoff_factor, y_cutoff, max_subdivisions);
    return buf;
}

namespace {

void check_reflection_args(double eps, double xi, double k_perp) {
    require(eps >= 1.0, ErrorCode::Domain, "permittivity on the imaginary axis must be >= 1");
    require(xi >= 0.0 && k_perp >= 0.0, ErrorCode::Domain, "xi and k_perp must be non-negative");
    require(xi > 0.0 || k_perp > 0.0, ErrorCode::Domain, "xi and k_perp cannot both vanish");
}

struct WaveNumbers {
    double q, k;
};

WaveNumbers wave_numbers(double eps, double xi, double k_perp) {
    const double w = xi / constants::c;
    const double q2 = k_perp * k_perp + w * w;
    return {std::sqrt(q2), std::sqrt(q2 + (eps - 1.0) * w * w)};
}

// Dimensionless reflection pair at (t, y): q -> y, xi/c -> t, both in units of 1/(2z).
struct Reflections {
    double tm, te;
};

inline Reflections reflections(double eps, double t, double y) {
    const double k = std::sqrt(y * y + (eps - 1.0) * t * t);
    return {(eps * y - k) / (eps * y + k), (y - k) / (y + k)};
}

struct PointResult {
    double force;
    double rel_error;
    bool converged;
};

PointResult force_point(double radius, double z, const PermittivityModel& sphere, const PermittivityModel& plate,
                        const QuadratureSpec& quad) {
    const double t_max = quad.xi_cutoff_factor;
    const double y_max = quad.y_cutoff;
    const double xi_scale = constants::c / (2.0 * z);

    quad::Tolerance inner_tol{0.1 * quad.relative_tolerance, 0.0, quad.max_subdivisions};
    quad::Tolerance outer_tol{quad.relative_tolerance, 0.0, quad.max_subdivisions};
    bool inner_ok = true;
    double inner_worst = 0.0;

    auto outer = [&](double t) -> double {
        if (t >= y_max) return 0.0;
        const double xi = t * xi_scale;
        const double e1 = sphere.eval(xi);
        const double e2 = plate.eval(xi);
        auto inner = [&](double y) {
            const auto r1 = reflections(e1, t, y);
            const auto r2 = reflections(e2, t, y);
            const double damp = std::exp(-y);
            return y * (std::log1p(-r1.tm * r2.tm * damp) + std::log1p(-r1.te * r2.te * damp));
        };
        std::array<double, 5> pts{t, t + 1.0, t + 4.0, t + 12.0, y_max};
        for (auto& p : pts) p = std::min(p, y_max);
        const auto res = quad::integrate(inner, std::span<const double>(pts), inner_tol);
        if (!res.converged) {
            inner_ok = false;
            inner_worst = std::max(inner_worst, res.abs_error / std::max(std::abs(res.value), 1e-300));
        }
        return res.value;
    };

    const std::array<double, 7> seeds{0.0, 0.05, 0.5, 2.0, 6.0, 15.0, t_max};
    std::vector<double> pts;
    for (double s : seeds)
        if (s <= t_max && (pts.empty() || s > pts.back())) pts.push_back(s);
    const auto res = quad::integrate(outer, std::span<const double>(pts), outer_tol);

    const double prefactor = constants::hbar * constants::c * radius / (16.0 * constants::pi * z * z * z);
    const double rel = res.abs_error / std::max(std::abs(res.value), 1e-300);
    return {prefactor * res.value, std::max(rel, inner_worst), res.converged && inner_ok};
}

} // namespace

double reflection_tm(double eps, double xi, double k_perp) {
    check_reflection_args(eps, xi, k_perp);
    const auto [q, k] = wave_numbers(eps, xi, k_perp);
    return (eps * q - k) / (eps * q + k);
}

double reflection_te(double eps, double xi, double k_perp) {
    check_reflection_args(eps, xi, k_perp);
    const auto [q, k] = wave_numbers(eps, xi, k_perp);
    return (q - k) / (q + k);
}

double lifshitz_force_at(double radius, double z, const PermittivityModel& sphere, const PermittivityModel& plate,
                         const QuadratureSpec& quad) {
    quad.validate();
    require(radius > 0.0 && z > 0.0, ErrorCode::Domain, "radius and separation must be positive");
    const auto p = force_point(radius, z, sphere, plate, quad);
    if (!p.converged)
        throw ConvergenceError("Lifshitz quadrature did not converge at z = " + std::to_string(z / constants::nm) +
                                   " nm",
                               z, p.rel_error);
    return p.force;
}

ForceCurve lifshitz_force(const SpherePlateGeometry& geom, const PermittivityModel& sphere,
                          const PermittivityModel& plate, const QuadratureSpec& quad, unsigned threads) {
    quad.validate();
    const auto& zs = geom.separations();
    std::vector<PointResult> results(zs.size());
    parallel_for(zs.size(), threads, [&](std::size_t i) {
        results[i] = force_point(geom.radius(), zs[i], sphere, plate, quad);
    });

    ForceCurve curve;
    curve.z = zs;
    curve.force.reserve(zs.size());
    std::size_t worst = zs.size();
    for (std::size_t i = 0; i < zs.size(); ++i) {
        curve.force.push_back(results[i].force);
        if (!results[i].converged && (worst == zs.size() || results[i].rel_error > results[worst].rel_error))
            worst = i;
    }
    if (worst != zs.size())
        throw ConvergenceError("Lifshitz quadrature did not converge; worst point z = " +
                                   std::to_string(zs[worst] / constants::nm) + " nm",
                               zs[worst], results[worst].rel_error);
    curve.meta.sphere_model = sphere.label();
    curve.meta.plate_model = plate.label();
    curve.meta.quadrature = quad.describe();
    if (geom.pfa_warning()) curve.meta.note = "max(z)/R > 0.01: proximity approximation outside its usual range";
    return curve;
}

double ideal_metal_force(double radius, double z) {
    require(radius >= 0.0 && z > 0.0, ErrorCode::Domain, "ideal_metal_force needs R >= 0 and z > 0");
    using namespace constants;
    return -pi * pi * pi * hbar * c * radius / (360.0 * z * z * z);
}

ForceCurve difference_force(const ForceCurve& curve_b, const ForceCurve& curve_a) {
    curve_b.validate();
    curve_a.validate();
    ForceCurve a_on_b;
    ForceCurve b = curve_b;
    if (same_grid(curve_b.z, curve_a.z)) {
        a_on_b = curve_a;
    } else {
        const double lo = std::max(curve_a.z.front(), curve_b.z.front());
        const double hi = std::min(curve_a.z.back(), curve_b.z.back());
        std::vector<double> grid;
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < curve_b.size(); ++i) {
            if (curve_b.z[i] >= lo && curve_b.z[i] <= hi) {
                grid.push_back(curve_b.z[i]);
                keep.push_back(i);
            }
        }
        if (grid.empty()) fail(ErrorCode::GridMismatch, "difference_force: curves have disjoint separation grids");
        a_on_b = resample(curve_a, grid);
        b.z = grid;
        b.force.clear();
        std::vector<double> err;
        for (auto i : keep) {
            b.force.push_back(curve_b.force[i]);
            if (curve_b.has_error()) err.push_back(curve_b.error[i]);
        }
        b.error = std::move(err);
    }

    ForceCurve out;
    out.z = b.z;
    out.force.resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out.force[i] = b.force[i] - a_on_b.force[i];
    if (b.has_error() || a_on_b.has_error()) {
        out.error.resize(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double eb = b.has_error() ? b.error[i] : 0.0;
            const double ea = a_on_b.has_error() ? a_on_b.error[i] : 0.0;
            out.error[i] = std::hypot(eb, ea);
        }
    }
    out.meta.sphere_model = curve_b.meta.sphere_model;
    out.meta.plate_model = curve_b.meta.plate_model + " - " + curve_a.meta.plate_model;
    out.meta.quadrature = curve_b.meta.quadrature;
    out.meta.roughness_applied = curve_b.meta.roughness_applied && curve_a.meta.roughness_applied;
    out.meta.synthetic = curve_b.meta.synthetic || curve_a.meta.synthetic;
    return out;
}

ForceInterpolant::ForceInterpolant(const ForceCurve& curve) {
    curve.validate();
    require(curve.size() >= 2, ErrorCode::Domain, "force interpolant needs at least two points");
    sign_ = curve.force.front() < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        require(curve.force[i] * sign_ > 0.0, ErrorCode::Domain, "force interpolant needs a curve of one sign");
        lz_.push_back(std::log(curve.z[i]));
        lf_.push_back(std::log(std::abs(curve.force[i])));
    }
    // Fritsch-Carlson slopes
    const std::size_t n = lz_.size();
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = lz_[i + 1] - lz_[i];
        d[i] = (lf_[i + 1] - lf_[i]) / h[i];
    }
    slope_.assign(n, 0.0);
    slope_[0] = d[0];
    slope_[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) continue;
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        slope_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
}

double ForceInterpolant::operator()(double z) const {
    require(z > 0.0, ErrorCode::Domain, "interpolant evaluated at non-positive separation");
    const double x = std::log(z);
    const double eps = 1e-12;
    require(x >= lz_.front() - eps && x <= lz_.back() + eps, ErrorCode::Domain,
            "separation " + std::to_string(z / constants::nm) + " nm outside the interpolated force range");
    auto it = std::upper_bound(lz_.begin(), lz_.end(), x);
    std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - lz_.begin()), 1, lz_.size() - 1);
    const std::size_t lo = hi - 1;
    const double h = lz_[hi] - lz_[lo];
    const double s = std::clamp((x - lz_[lo]) / h, 0.0, 1.0);
    const double s2 = s * s, s3 = s2 * s;
    const double v = (2 * s3 - 3 * s2 + 1) * lf_[lo] + (s3 - 2 * s2 + s) * h * slope_[lo] +
                     (-2 * s3 + 3 * s2) * lf_[hi] + (s3 - s2) * h * slope_[hi];
    return sign_ * std::exp(v);
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace diffcasimir
