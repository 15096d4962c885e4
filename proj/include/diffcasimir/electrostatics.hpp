#pragma once

// Electrostatic calibration of the sphere-plate force measurement.
//
// Sign conventions: forces are negative when attractive, so the electrostatic
// force is F_e = -X(z) (V - V0)^2 with X > 0. The deflection signal is
// S = F/km + S0 and the true separation is z = z_piezo + m S + z0; an
// attractive force gives S < 0 and pulls the sphere closer to the plate.
// Lengths are in m, km in N per unit signal, m in m per unit signal.

#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace diffcasimir {

/// Sphere-plate capacitance force coefficient (N/V^2) from the exact bispherical
/// series X = 2 pi eps0 sum_{n>=2} [n coth(n a) - coth a] / sinh(n a),
/// cosh a = 1 + z/R. Requires 0 < z/R < 0.1. Throws ConvergenceError when
/// 1e6 terms do not suffice.
double coulomb_coefficient(double z, double radius);

/// pi eps0 R / z, the small-gap limit of coulomb_coefficient.
double coulomb_coefficient_leading(double z, double radius);

/// -X(z) (V - V0)^2
double electrostatic_force(double z, double radius, double voltage, double v0);

struct CalibrationParams {
    double v0 = 0.0;        // V
    double km = 1.0;        // N per unit signal
    double z0 = 0.0;        // m
    double m = 0.0;         // m per unit signal
    double s0_offset = 0.0; // voltage-independent signal offset
};

/// Optional extra force (e.g. Casimir) entering the offset S0(z) = s0_offset + F(z)/km.
using SeparationForce = std::function<double(double)>;

struct DeflectionState {
    double signal;
    double separation;
    int iterations;
};

/// Solves S = F_e(z)/km + S0(z), z = z_piezo + m S + z0 by Newton iteration
/// to |dz| < 1e-3 nm. Throws Error(Instability) when the stable branch no
/// longer exists (jump to contact) and Error(Domain) when z would be <= 0.
DeflectionState forward_deflection(const CalibrationParams& params, double radius, double voltage, double z_piezo,
                                   const SeparationForce& extra_force = {});

/// Signal without the piezo coupling: S(z) at a known true separation.
double deflection_at_separation(const CalibrationParams& params, double radius, double voltage, double z,
                                const SeparationForce& extra_force = {});

struct DeflectionSample {
    double z_piezo; // m
    double signal;
};

struct ScanRecord {
    double voltage = 0.0;
    std::vector<DeflectionSample> samples;

    /// Throws Error(Domain) with fewer than 10 samples or a non-monotone z_piezo.
    void validate() const;
};

struct ContactPoint {
    double voltage;
    double signal;  // deflection signal at contact
    double z_piezo; // piezo position at contact, m
};

/// Least-squares parabola S(V) = -C (V - V0)^2 + S0 at one separation.
struct ParabolaFit {
    double separation_rel; // d = z_piezo + m S = z - z0, m
    double v0;
    double curvature; // C = X / km, > 0 for attraction
    double s0;
    double v0_variance_factor;        // var(V0) / sigma_S^2
    double curvature_variance_factor; // var(C) / sigma_S^2
    double rss;
    int voltages;
};

/// Fits every point of `grid` (values of d = z - z0). Each scan is converted
/// to d using `m` and linearly interpolated. Throws Error(RankDeficient) when
/// fewer than three distinct voltages cover a grid point.
std::vector<ParabolaFit> fit_parabola_per_z(const std::vector<ScanRecord>& scans, const std::vector<double>& grid,
                                            double m);

struct DeflectionCoefficient {
    double m;
    double m_error;   // half-width at the requested confidence
    double z0;        // intercept estimate: z_piezo = -m S - z0 at contact
    double z0_error;
};

/// Regression of contact z_piezo against contact signal; slope = -m.
/// Throws Error(RankDeficient) for fewer than two voltages or zero signal spread.
DeflectionCoefficient estimate_deflection_coefficient(const std::vector<ContactPoint>& contacts,
                                                      double confidence = 0.95);

/// How the voltage-independent offset S0(z) is reported. CoFit leaves the
/// per-separation intercepts as fitted. Subtract removes an independently
/// known force F(z)/km from them, so a correct force leaves a flat residual.
/// V0, km and z0 are the same in both modes.
enum class OffsetMode { CoFit, Subtract };

struct CalibrationOptions {
    double fit_min = 300e-9; // true separation z, m
    double fit_max = 2.5e-6;
    double grid_step = 0.0; // 0: use the d values of the longest scan
    double confidence = 0.95;
    int max_iterations = 100;
    OffsetMode offset_mode = OffsetMode::CoFit;
    SeparationForce independent_force; // Subtract mode; evaluated inside the fit range only
};

struct SeriesPoint {
    double separation; // true z (m) using the fitted z0
    double value;
    double sigma; // standard error, 0 when not estimable
};

struct CalibrationResult {
    double v0 = 0.0, v0_error = 0.0;
    double km = 0.0, km_error = 0.0;
    double z0 = 0.0, z0_error = 0.0;
    double m = 0.0, m_error = 0.0;
    double v0_series_std = 0.0;
    double confidence = 0.95;
    double reduced_chi2 = 0.0; // km/z0 fit, relative to the pooled parabola residual variance
    OffsetMode offset_mode = OffsetMode::CoFit;
    double s0_std = 0.0; // spread of the reported S0 inside the fit range
    int points_used = 0;
    int iterations = 0;
    std::vector<SeriesPoint> v0_series;
    std::vector<SeriesPoint> s0_series;
    std::vector<SeriesPoint> curvature_series;
};

/// Full extraction: per-separation parabolas, then C(d) = X(d + z0)/km fitted
/// over fit_min <= d + z0 <= fit_max for km and z0. Uncertainties are
/// half-widths at `confidence` from the scaled fit covariance.
CalibrationResult extract_calibration(const std::vector<ScanRecord>& scans, double m, double radius,
                                      const CalibrationOptions& options = {});

/// Same, with m and its error taken from contact data.
CalibrationResult extract_calibration(const std::vector<ScanRecord>& scans, const DeflectionCoefficient& m,
                                      double radius, const CalibrationOptions& options = {});

struct OffsetComparison {
    double separation;
    double fitted;
    double expected;
};

/// Fitted S0(z) against an independently known force divided by km.
std::vector<OffsetComparison> compare_offset(const CalibrationResult& result, const SeparationForce& force,
                                             double s0_offset = 0.0);

// ---- synthetic data -------------------------------------------------------

struct SweepPreset {
    CalibrationParams params;
    double v_lo, v_hi;
    int voltage_count;
    double fit_min, fit_max;
};

SweepPreset sample_a_sweep();
SweepPreset sample_b_sweep();

std::vector<double> voltage_sweep(double v_lo, double v_hi, int count);

/// Noiseless scan sampled at true separations z0 + d for each d in
/// `separations_rel` (ascending). Points beyond the jump to contact are dropped.
ScanRecord simulate_scan(const CalibrationParams& params, double radius, double voltage,
                         const std::vector<double>& separations_rel, const SeparationForce& extra_force = {});

/// Contact signal is taken at the jump-to-contact separation; z_piezo = -m S - z0.
std::vector<ContactPoint> simulate_contacts(const CalibrationParams& params, double radius,
                                            const std::vector<double>& voltages,
                                            const SeparationForce& extra_force = {});

/// Adds N(0, sigma) to every signal.
void add_signal_noise(ScanRecord& scan, double sigma, std::mt19937_64& rng);

} // namespace diffcasimir
