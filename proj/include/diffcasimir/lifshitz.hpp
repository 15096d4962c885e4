#pragma once

// Zero-temperature Lifshitz force between a sphere and a plate in the
// proximity-force form
//
//   F(z) = (hbar R / 2 pi) int k dk int d xi  sum_{TM,TE} ln[1 - r1 r2 exp(-2 z q)],
//
// evaluated in the dimensionless variables t = 2 z xi / c and y = 2 z q, y >= t.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "diffcasimir/force_curve.hpp"
#include "diffcasimir/materials.hpp"

namespace diffcasimir {

class SpherePlateGeometry {
public:
    /// Throws Error(Domain) unless radius > 0 and the grid is positive and ascending.
    SpherePlateGeometry(double radius, std::vector<double> separations);

    double radius() const { return radius_; }
    const std::vector<double>& separations() const { return z_; }
    /// True when max(z)/R exceeds 0.01, where the proximity approximation
    /// starts to lose accuracy.
    bool pfa_warning() const { return pfa_warning_; }

private:
    double radius_;
    std::vector<double> z_;
    bool pfa_warning_;
};

struct QuadratureSpec {
    double relative_tolerance = 1e-6;
    double xi_cutoff_factor = 50.0; // xi_max = factor * c / (2 z)
    double y_cutoff = 60.0;         // upper limit of y = 2 z q
    int max_subdivisions = 2000;

    /// Throws Error(Domain) unless tolerance is in (0, 1e-2] and both cutoffs exceed 10.
    void validate() const;
    std::string describe() const;
};

/// Fresnel coefficients at imaginary frequency; k_perp in rad/m.
double reflection_tm(double eps, double xi, double k_perp);
double reflection_te(double eps, double xi, double k_perp);

/// Single-point force in N. Throws ConvergenceError when the requested
/// tolerance is not reached within max_subdivisions.
double lifshitz_force_at(double radius, double z, const PermittivityModel& sphere, const PermittivityModel& plate,
                         const QuadratureSpec& quad = {});

/// Force on every grid point. Points are independent, so they are spread
/// over `threads` workers (0: hardware concurrency) without affecting the
/// result. On failure the ConvergenceError reports the worst grid point.
ForceCurve lifshitz_force(const SpherePlateGeometry& geom, const PermittivityModel& sphere,
                          const PermittivityModel& plate, const QuadratureSpec& quad = {}, unsigned threads = 0);

/// -pi^3 hbar c R / (360 z^3)
double ideal_metal_force(double radius, double z);

/// Pointwise b - a with errors combined in quadrature. Grids must match, or
/// a is interpolated onto the part of b's grid inside a's span. Throws
/// Error(GridMismatch) when the grids do not overlap.
ForceCurve difference_force(const ForceCurve& curve_b, const ForceCurve& curve_a);

/// Monotone cubic interpolation of ln|F| against ln z. The curve must keep
/// one sign. Evaluation outside the tabulated span throws Error(Domain).
class ForceInterpolant {
public:
    explicit ForceInterpolant(const ForceCurve& curve);
    double operator()(double z) const;
    double z_min() const { return lz_.empty() ? 0.0 : std::exp(lz_.front()); }
    double z_max() const { return lz_.empty() ? 0.0 : std::exp(lz_.back()); }

private:
    std::vector<double> lz_, lf_, slope_;
    double sign_ = -1.0;
};

/// Runs fn(i) for i in [0, count) on up to `threads` workers and rethrows the
/// first exception.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

} // namespace diffcasimir
