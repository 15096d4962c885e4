#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "diffcasimir/constants.hpp"
#include "diffcasimir/electrostatics.hpp"
#include "diffcasimir/error.hpp"
#include "diffcasimir/stats.hpp"

namespace diffcasimir {

namespace {

// A scan re-expressed against d = z_piezo + m S, sorted by d.
struct RelativeScan {
    double voltage;
    std::vector<double> d;
    std::vector<double> s;

    bool covers(double x) const {
        const double tol = 1e-9 * std::max(std::abs(d.front()), std::abs(d.back()));
        return x >= d.front() - tol && x <= d.back() + tol;
    }

    double at(double x) const {
        auto it = std::upper_bound(d.begin(), d.end(), x);
        std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - d.begin()), 1, d.size() - 1);
        const std::size_t lo = hi - 1;
        const double w = std::clamp((x - d[lo]) / (d[hi] - d[lo]), 0.0, 1.0);
        return (1.0 - w) * s[lo] + w * s[hi];
    }
};

std::vector<RelativeScan> to_relative(const std::vector<ScanRecord>& scans, double m) {
    std::vector<RelativeScan> out;
    for (const auto& scan : scans) {
        scan.validate();
        std::vector<std::pair<double, double>> pts;
        for (const auto& smp : scan.samples) pts.emplace_back(smp.z_piezo + m * smp.signal, smp.signal);
        std::sort(pts.begin(), pts.end());
        RelativeScan r{scan.voltage, {}, {}};
        for (const auto& [d, s] : pts) {
            if (!r.d.empty() && d <= r.d.back()) continue;
            r.d.push_back(d);
            r.s.push_back(s);
        }
        if (r.d.size() >= 2) out.push_back(std::move(r));
    }
    return out;
}

int distinct_voltages(const std::vector<RelativeScan>& scans, double x) {
    std::set<double> v;
    for (const auto& s : scans)
        if (s.covers(x)) v.insert(s.voltage);
    return static_cast<int>(v.size());
}

ParabolaFit fit_one(const std::vector<RelativeScan>& scans, double x) {
    std::vector<double> v, s;
    for (const auto& sc : scans) {
        if (!sc.covers(x)) continue;
        v.push_back(sc.voltage);
        s.push_back(sc.at(x));
    }
    const double vbar = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    Eigen::MatrixXd a(v.size(), 3);
    Eigen::VectorXd y(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double u = v[i] - vbar;
        a(i, 0) = u * u;
        a(i, 1) = u;
        a(i, 2) = 1.0;
        y(i) = s[i];
    }
    const Eigen::Matrix3d normal = a.transpose() * a;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
    if (lu.rank() < 3) fail(ErrorCode::RankDeficient, "parabola fit is rank deficient");
    const Eigen::Vector3d coef = lu.solve(a.transpose() * y);
    const Eigen::Matrix3d inv = lu.inverse();
    const double qa = coef(0), qb = coef(1), qc = coef(2);

    ParabolaFit fit{};
    fit.separation_rel = x;
    fit.voltages = static_cast<int>(v.size());
    fit.curvature = -qa;
    fit.v0 = vbar - qb / (2.0 * qa);
    fit.s0 = qc - qb * qb / (4.0 * qa);
    const Eigen::Vector3d g(qb / (2.0 * qa * qa), -1.0 / (2.0 * qa), 0.0);
    fit.v0_variance_factor = g.dot(inv * g);
    fit.curvature_variance_factor = inv(0, 0);
    fit.rss = (a * coef - y).squaredNorm();
    return fit;
}

double coulomb_slope(double z, double radius) {
    const double h = 1e-4 * z;
    return (coulomb_coefficient(z + h, radius) - coulomb_coefficient(z - h, radius)) / (2.0 * h);
}

struct KmZ0Fit {
    double kappa, z0;      // kappa = 1/km
    Eigen::Matrix2d cov;   // scaled covariance of (kappa, z0)
    double reduced_chi2;
    int iterations;
};

KmZ0Fit fit_km_z0(const std::vector<ParabolaFit>& pts, double radius, double z0_guess, int max_iterations) {
    const std::size_t n = pts.size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / pts[i].curvature_variance_factor;

    // Small-gap start: 1/C = (d + z0) / (kappa pi eps0 R) is linear in d.
    double kappa = 0.0, z0 = z0_guess;
    {
        double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(pts[i].curvature > 0.0)) continue;
            const double x = pts[i].separation_rel, yv = 1.0 / pts[i].curvature;
            const double wi = w[i] * pts[i].curvature * pts[i].curvature * pts[i].curvature * pts[i].curvature;
            sw += wi; sx += wi * x; sy += wi * yv; sxx += wi * x * x; sxy += wi * x * yv;
        }
        const double det = sw * sxx - sx * sx;
        if (sw > 0.0 && det > 0.0) {
            const double slope = (sw * sxy - sx * sy) / det;
            const double icpt = (sy - slope * sx) / sw;
            if (slope > 0.0) {
                kappa = 1.0 / (slope * constants::pi * constants::eps0 * radius);
                z0 = icpt / slope;
            }
        }
        // keep every separation positive
        double d_min = INFINITY;
        for (const auto& p : pts) d_min = std::min(d_min, p.separation_rel);
        if (!(d_min + z0 > 0.0)) z0 = z0_guess;
        if (!(d_min + z0 > 0.0)) z0 = 1.0 * constants::nm - d_min;
    }

    auto residuals = [&](double k, double zz, Eigen::VectorXd& r) -> bool {
        r.resize(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const double z = pts[i].separation_rel + zz;
            if (!(z > 0.0)) return false;
            r(static_cast<Eigen::Index>(i)) = pts[i].curvature - k * coulomb_coefficient(z, radius);
        }
        return true;
    };
    auto wrss = [&](const Eigen::VectorXd& r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += w[i] * r(static_cast<Eigen::Index>(i)) * r(static_cast<Eigen::Index>(i));
        return acc;
    };

    Eigen::VectorXd r;
    if (!residuals(kappa, z0, r)) fail(ErrorCode::Convergence, "calibration fit: invalid starting separation offset");
    if (!(kappa > 0.0)) {
        // linear least squares for kappa at the starting z0
        double num = 0, den = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double xv = coulomb_coefficient(pts[i].separation_rel + z0, radius);
            num += w[i] * xv * pts[i].curvature;
            den += w[i] * xv * xv;
        }
        kappa = num / den;
        residuals(kappa, z0, r);
    }
    double cost = wrss(r);

    Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), 2);
    auto jacobian = [&](double k, double zz) {
        for (std::size_t i = 0; i < n; ++i) {
            const double z = pts[i].separation_rel + zz;
            jac(static_cast<Eigen::Index>(i), 0) = coulomb_coefficient(z, radius);
            jac(static_cast<Eigen::Index>(i), 1) = k * coulomb_slope(z, radius);
        }
    };
    Eigen::VectorXd wv(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) wv(static_cast<Eigen::Index>(i)) = w[i];

    int it = 0;
    bool converged = false;
    for (; it < max_iterations; ++it) {
        jacobian(kappa, z0);
        const Eigen::Matrix2d jtj = jac.transpose() * wv.asDiagonal() * jac;
        const Eigen::Vector2d jtr = jac.transpose() * wv.asDiagonal() * r;
        const Eigen::Vector2d step = jtj.ldlt().solve(jtr);
        double lambda = 1.0;
        bool accepted = false;
        Eigen::VectorXd r_new;
        for (int h = 0; h < 40; ++h, lambda *= 0.5) {
            const double k_new = kappa + lambda * step(0);
            const double z_new = z0 + lambda * step(1);
            if (residuals(k_new, z_new, r_new) && wrss(r_new) <= cost) {
                kappa = k_new;
                z0 = z_new;
                r = r_new;
                cost = wrss(r_new);
                accepted = true;
                break;
            }
        }
        const bool tiny = std::abs(lambda * step(0)) <= 1e-13 * std::abs(kappa) &&
                          std::abs(lambda * step(1)) <= 1e-13 * std::max(std::abs(z0), constants::nm);
        if (!accepted || tiny) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("calibration fit for km and z0 did not converge", z0, std::sqrt(cost));

    jacobian(kappa, z0);
    const Eigen::Matrix2d jtj = jac.transpose() * wv.asDiagonal() * jac;
    const double dof = static_cast<double>(n) - 2.0;
    const double chi2 = dof > 0.0 ? cost / dof : 0.0;
    return {kappa, z0, chi2 * jtj.inverse(), chi2, it + 1};
}

} // namespace

std::vector<ParabolaFit> fit_parabola_per_z(const std::vector<ScanRecord>& scans, const std::vector<double>& grid,
                                            double m) {
    const auto rel = to_relative(scans, m);
    std::vector<ParabolaFit> out;
    out.reserve(grid.size());
    for (double x : grid) {
        if (distinct_voltages(rel, x) < 3)
            fail(ErrorCode::RankDeficient,
                 "fewer than three voltages cover d = " + std::to_string(x / constants::nm) + " nm");
        out.push_back(fit_one(rel, x));
    }
    return out;
}

DeflectionCoefficient estimate_deflection_coefficient(const std::vector<ContactPoint>& contacts, double confidence) {
    std::set<double> volts;
    for (const auto& c : contacts) volts.insert(c.voltage);
    require(volts.size() >= 2, ErrorCode::RankDeficient, "deflection coefficient needs at least two voltages");
    const double n = static_cast<double>(contacts.size());
    double sx = 0, sy = 0;
    for (const auto& c : contacts) {
        sx += c.signal;
        sy += c.z_piezo;
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& c : contacts) {
        sxx += (c.signal - mx) * (c.signal - mx);
        sxy += (c.signal - mx) * (c.z_piezo - my);
    }
    require(sxx > 0.0 && sxx > 1e-24 * (mx * mx + 1e-300) * n, ErrorCode::RankDeficient,
            "contact signals show no spread; deflection coefficient undetermined");
    const double slope = sxy / sxx;
    const double icpt = my - slope * mx;
    DeflectionCoefficient out{-slope, INFINITY, -icpt, INFINITY};
    if (contacts.size() > 2) {
        double rss = 0.0;
        for (const auto& c : contacts) {
            const double e = c.z_piezo - (icpt + slope * c.signal);
            rss += e * e;
        }
        const double s2 = rss / (n - 2.0);
        const double t = student_t_quantile(0.5 * (1.0 + confidence), n - 2.0);
        out.m_error = t * std::sqrt(s2 / sxx);
        out.z0_error = t * std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    }
    return out;
}

CalibrationResult extract_calibration(const std::vector<ScanRecord>& scans, double m, double radius,
                                      const CalibrationOptions& opt) {
    require(radius > 0.0 && m >= 0.0, ErrorCode::Domain, "calibration needs R > 0 and m >= 0");
    require(opt.fit_max > opt.fit_min, ErrorCode::Domain, "calibration fit range is empty");
    require(opt.offset_mode == OffsetMode::CoFit || static_cast<bool>(opt.independent_force), ErrorCode::Domain,
            "offset subtraction needs an independent force");
    const auto rel = to_relative(scans, m);
    require(rel.size() >= 3, ErrorCode::RankDeficient, "calibration needs at least three usable scans");

    std::vector<double> grid;
    if (opt.grid_step > 0.0) {
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& s : rel) {
            lo = std::min(lo, s.d.front());
            hi = std::max(hi, s.d.back());
        }
        for (double k = std::ceil(lo / opt.grid_step); k * opt.grid_step <= hi; k += 1.0) grid.push_back(k * opt.grid_step);
    } else {
        const auto longest = std::max_element(rel.begin(), rel.end(),
                                              [](const auto& a, const auto& b) { return a.d.size() < b.d.size(); });
        grid = longest->d;
    }

    std::vector<ParabolaFit> fits;
    for (double x : grid)
        if (distinct_voltages(rel, x) >= 3) fits.push_back(fit_one(rel, x));

    CalibrationResult res;
    res.m = m;
    res.confidence = opt.confidence;
    double z0 = 0.0;
    std::vector<ParabolaFit> sel;
    std::vector<double> prev_keys;
    KmZ0Fit fit{};
    for (int pass = 0; pass < 10; ++pass) {
        sel.clear();
        std::vector<double> keys;
        for (const auto& f : fits) {
            const double z = f.separation_rel + z0;
            if (z >= opt.fit_min && z <= opt.fit_max) {
                sel.push_back(f);
                keys.push_back(f.separation_rel);
            }
        }
        require(sel.size() >= 3, ErrorCode::Domain, "calibration fit range excludes (almost) all data");
        if (pass > 0 && keys == prev_keys) break;
        fit = fit_km_z0(sel, radius, z0, opt.max_iterations);
        res.iterations += fit.iterations;
        z0 = fit.z0;
        prev_keys = std::move(keys);
    }

    const double npts = static_cast<double>(sel.size());
    const double t2 = student_t_quantile(0.5 * (1.0 + opt.confidence), std::max(1.0, npts - 2.0));
    res.km = 1.0 / fit.kappa;
    res.km_error = t2 * std::sqrt(std::max(0.0, fit.cov(0, 0))) / (fit.kappa * fit.kappa);
    res.z0 = fit.z0;
    res.z0_error = t2 * std::sqrt(std::max(0.0, fit.cov(1, 1)));
    res.points_used = static_cast<int>(sel.size());

    // inverse-variance mean of V0 with Birge scaling
    double sw = 0.0, swv = 0.0;
    for (const auto& f : sel) {
        const double w = 1.0 / f.v0_variance_factor;
        sw += w;
        swv += w * f.v0;
    }
    res.v0 = swv / sw;
    double scatter = 0.0, mean_plain = 0.0;
    for (const auto& f : sel) {
        scatter += (f.v0 - res.v0) * (f.v0 - res.v0) / f.v0_variance_factor;
        mean_plain += f.v0;
    }
    mean_plain /= npts;
    const double t1 = student_t_quantile(0.5 * (1.0 + opt.confidence), npts - 1.0);
    res.v0_error = t1 * std::sqrt(scatter / (npts - 1.0) / sw);
    double var_plain = 0.0;
    for (const auto& f : sel) var_plain += (f.v0 - mean_plain) * (f.v0 - mean_plain);
    res.v0_series_std = std::sqrt(var_plain / (npts - 1.0));

    // pooled residual variance of the parabola fits inside the range
    double rss = 0.0, dof = 0.0;
    for (const auto& f : sel) {
        rss += f.rss;
        dof += f.voltages - 3;
    }
    const double s2 = dof > 0.0 ? rss / dof : 0.0;
    // curvature weights are relative; normalise by the pooled signal variance
    res.reduced_chi2 = s2 > 0.0 ? fit.reduced_chi2 / s2 : 0.0;
    res.offset_mode = opt.offset_mode;
    std::vector<double> s0_inside;
    for (const auto& f : fits) {
        const double z = f.separation_rel + res.z0;
        const bool inside = z >= opt.fit_min && z <= opt.fit_max;
        double s0 = f.s0;
        if (opt.offset_mode == OffsetMode::Subtract)
            s0 = inside ? s0 - opt.independent_force(z) / res.km : std::numeric_limits<double>::quiet_NaN();
        if (inside) s0_inside.push_back(s0);
        res.v0_series.push_back({z, f.v0, std::sqrt(s2 * f.v0_variance_factor)});
        res.s0_series.push_back({z, s0, 0.0});
        res.curvature_series.push_back({z, f.curvature, std::sqrt(s2 * f.curvature_variance_factor)});
    }
    if (s0_inside.size() > 1) {
        const double n = static_cast<double>(s0_inside.size());
        const double mean = std::accumulate(s0_inside.begin(), s0_inside.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : s0_inside) ss += (v - mean) * (v - mean);
        res.s0_std = std::sqrt(ss / (n - 1.0));
    }
    return res;
}

CalibrationResult extract_calibration(const std::vector<ScanRecord>& scans, const DeflectionCoefficient& m,
                                      double radius, const CalibrationOptions& options) {
    auto res = extract_calibration(scans, m.m, radius, options);
    res.m_error = m.m_error;
    return res;
}

std::vector<OffsetComparison> compare_offset(const CalibrationResult& result, const SeparationForce& force,
                                             double s0_offset) {
    std::vector<OffsetComparison> out;
    for (const auto& p : result.s0_series) {
        if (!(p.separation > 0.0)) continue;
        out.push_back({p.separation, p.value, s0_offset + force(p.separation) / result.km});
    }
    return out;
}

} // namespace diffcasimir
