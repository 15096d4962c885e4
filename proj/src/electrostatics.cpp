#include "diffcasimir/electrostatics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diffcasimir/constants.hpp"
#include "diffcasimir/error.hpp"

namespace diffcasimir {

double coulomb_coefficient(double z, double radius) {
    require(z > 0.0 && radius > 0.0, ErrorCode::Domain, "coulomb coefficient needs z > 0 and R > 0");
    const double x = z / radius;
    require(x < 0.1, ErrorCode::Domain, "coulomb coefficient requires z/R < 0.1");
    // acosh(1 + x) without cancellation
    const double alpha = std::log1p(x + std::sqrt(x * (2.0 + x)));
    const double coth_a = 1.0 / std::tanh(alpha);
    double sum = 0.0;
    constexpr long max_terms = 1000000;
    for (long n = 2; n <= max_terms; ++n) {
        const double na = static_cast<double>(n) * alpha;
        const double e = std::exp(-na);
        const double one_minus_e2 = -std::expm1(-2.0 * na);
        const double coth_na = (1.0 + e * e) / one_minus_e2;
        const double csch_na = 2.0 * e / one_minus_e2;
        const double term = (static_cast<double>(n) * coth_na - coth_a) * csch_na;
        sum += term;
        if (na > 1.0 && std::abs(term) < 1e-12 * std::abs(sum)) return 2.0 * constants::pi * constants::eps0 * sum;
    }
    throw ConvergenceError("capacitance series did not converge within 1e6 terms at z = " +
                               std::to_string(z / constants::nm) + " nm",
                           z, std::numeric_limits<double>::quiet_NaN());
}

double coulomb_coefficient_leading(double z, double radius) {
    require(z > 0.0 && radius > 0.0, ErrorCode::Domain, "coulomb coefficient needs z > 0 and R > 0");
    return constants::pi * constants::eps0 * radius / z;
}

double electrostatic_force(double z, double radius, double voltage, double v0) {
    const double dv = voltage - v0;
    if (dv == 0.0) return 0.0;
    return -coulomb_coefficient(z, radius) * dv * dv;
}

double deflection_at_separation(const CalibrationParams& p, double radius, double voltage, double z,
                                const SeparationForce& extra_force) {
    double force = electrostatic_force(z, radius, voltage, p.v0);
    if (extra_force) force += extra_force(z);
    return force / p.km + p.s0_offset;
}

namespace {

double signal_slope(const CalibrationParams& p, double radius, double voltage, double z, const SeparationForce& extra) {
    const double h = 1e-5 * z;
    return (deflection_at_separation(p, radius, voltage, z + h, extra) -
            deflection_at_separation(p, radius, voltage, z - h, extra)) /
           (2.0 * h);
}

} // namespace

DeflectionState forward_deflection(const CalibrationParams& p, double radius, double voltage, double z_piezo,
                                   const SeparationForce& extra_force) {
    require(p.km > 0.0 && p.m >= 0.0, ErrorCode::Domain, "forward_deflection needs km > 0 and m >= 0");
    const double target = z_piezo + p.z0;
    // f(z) = z - m S(z) - target is increasing and convex on the stable branch,
    // so Newton from the force-free position descends monotonically onto the root.
    double z = target + p.m * p.s0_offset;
    require(z > 0.0, ErrorCode::Domain, "forward_deflection: separation would be non-positive");
    constexpr double dz_tol = 1e-3 * constants::nm;
    bool polished = false;
    for (int it = 1; it <= 200; ++it) {
        const double s = deflection_at_separation(p, radius, voltage, z, extra_force);
        const double f = z - p.m * s - target;
        const double df = 1.0 - p.m * signal_slope(p, radius, voltage, z, extra_force);
        if (!(df > 0.0))
            fail(ErrorCode::Instability, "jump to contact: no stable separation at z_piezo = " +
                                             std::to_string(z_piezo / constants::nm) + " nm");
        const double step = f / df;
        const double next = z - step;
        if (!(next > 0.0))
            fail(ErrorCode::Instability, "deflection iteration reached contact at z_piezo = " +
                                             std::to_string(z_piezo / constants::nm) + " nm");
        z = next;
        if (std::abs(step) < dz_tol) {
            if (polished) {
                return {deflection_at_separation(p, radius, voltage, z, extra_force), z, it};
            }
            polished = true; // one more quadratic step
        }
    }
    fail(ErrorCode::Instability, "deflection iteration did not settle at z_piezo = " +
                                     std::to_string(z_piezo / constants::nm) + " nm");
}

void ScanRecord::validate() const {
    require(samples.size() >= 10, ErrorCode::Domain, "scan needs at least 10 samples");
    const bool up = samples[1].z_piezo > samples[0].z_piezo;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const bool step_up = samples[i].z_piezo > samples[i - 1].z_piezo;
        require(step_up == up && samples[i].z_piezo != samples[i - 1].z_piezo, ErrorCode::Domain,
                "scan z_piezo must be strictly monotone");
    }
}

SweepPreset sample_a_sweep() {
    // km quoted per unit signal; nN scale (see README)
    return {{-0.341, 1.646e-9, 32.4e-9, 47.8e-9, 0.0}, -0.712, -0.008, 29, 300e-9, 2.5e-6};
}

SweepPreset sample_b_sweep() {
    return {{-0.337, 1.700e-9, 32.3e-9, 47.9e-9, 0.0}, -0.611, -0.008, 25, 100e-9, 2.5e-6};
}

std::vector<double> voltage_sweep(double v_lo, double v_hi, int count) {
    require(count >= 1, ErrorCode::Domain, "voltage sweep needs at least one voltage");
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) v[i] = count == 1 ? v_lo : v_lo + (v_hi - v_lo) * i / (count - 1);
    return v;
}

ScanRecord simulate_scan(const CalibrationParams& p, double radius, double voltage,
                         const std::vector<double>& separations_rel, const SeparationForce& extra_force) {
    ScanRecord scan;
    scan.voltage = voltage;
    // walk from far to near and stop at the first unstable point
    std::vector<DeflectionSample> rev;
    for (auto it = separations_rel.rbegin(); it != separations_rel.rend(); ++it) {
        const double z = *it + p.z0;
        if (!(z > 0.0)) break;
        const double stiffness = 1.0 - p.m * signal_slope(p, radius, voltage, z, extra_force);
        if (!(stiffness > 0.0)) break;
        const double s = deflection_at_separation(p, radius, voltage, z, extra_force);
        rev.push_back({*it - p.m * s, s});
    }
    scan.samples.assign(rev.rbegin(), rev.rend());
    return scan;
}

std::vector<ContactPoint> simulate_contacts(const CalibrationParams& p, double radius,
                                            const std::vector<double>& voltages, const SeparationForce& extra_force) {
    std::vector<ContactPoint> out;
    for (double v : voltages) {
        auto stiffness = [&](double z) { return 1.0 - p.m * signal_slope(p, radius, v, z, extra_force); };
        double lo = 1.0 * constants::nm;
        double hi = 0.05 * radius;
        double z_jump = lo;
        if (stiffness(lo) <= 0.0) {
            for (int it = 0; it < 200 && hi - lo > 1e-6 * constants::nm; ++it) {
                const double mid = 0.5 * (lo + hi);
                (stiffness(mid) > 0.0 ? hi : lo) = mid;
            }
            z_jump = hi;
        }
        const double s = deflection_at_separation(p, radius, v, z_jump, extra_force);
        out.push_back({v, s, -p.m * s - p.z0});
    }
    return out;
}

void add_signal_noise(ScanRecord& scan, double sigma, std::mt19937_64& rng) {
    if (sigma <= 0.0) return;
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& s : scan.samples) s.signal += noise(rng);
}

} // namespace diffcasimir
