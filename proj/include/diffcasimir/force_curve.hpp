#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace diffcasimir {

struct CurveMetadata {
    std::string sphere_model;
    std::string plate_model;
    std::string quadrature; // human-readable settings, empty when not computed
    bool roughness_applied = false;
    bool synthetic = false;
    std::string note;
};

/// Force on a separation grid. SI units: z in m, force and error in N.
/// Negative force means attraction.
struct ForceCurve {
    std::vector<double> z;
    std::vector<double> force;
    std::vector<double> error; // empty, or one entry per grid point
    CurveMetadata meta;

    std::size_t size() const { return z.size(); }
    bool has_error() const { return !error.empty(); }
    /// Throws Error(Domain) on length mismatch or a non-ascending grid.
    void validate() const;
};

/// Linear interpolation of `curve` (force and, if present, error) onto `grid`.
/// Every grid point must lie inside the curve's span.
ForceCurve resample(const ForceCurve& curve, const std::vector<double>& grid);

bool same_grid(const std::vector<double>& a, const std::vector<double>& b, double rel_tol = 1e-12);

} // namespace diffcasimir
