#include "diffcasimir/force_curve.hpp"

#include <algorithm>
#include <cmath>

#include "diffcasimir/error.hpp"

namespace diffcasimir {

void ForceCurve::validate() const {
    require(z.size() == force.size(), ErrorCode::Domain, "force curve: z and F lengths differ");
    require(error.empty() || error.size() == z.size(), ErrorCode::Domain, "force curve: error length differs");
    require(!z.empty(), ErrorCode::Domain, "force curve is empty");
    for (std::size_t i = 1; i < z.size(); ++i)
        require(z[i] > z[i - 1], ErrorCode::Domain, "force curve grid must be strictly ascending");
}

bool same_grid(const std::vector<double>& a, const std::vector<double>& b, double rel_tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) > rel_tol * std::max(std::abs(a[i]), std::abs(b[i]))) return false;
    }
    return true;
}

ForceCurve resample(const ForceCurve& curve, const std::vector<double>& grid) {
    curve.validate();
    ForceCurve out;
    out.meta = curve.meta;
    out.z = grid;
    const auto& z = curve.z;
    const double tol = 1e-12 * std::max(std::abs(z.front()), std::abs(z.back()));
    for (double g : grid) {
        require(g >= z.front() - tol && g <= z.back() + tol, ErrorCode::GridMismatch,
                "resample: grid point outside the curve span");
        std::size_t hi = static_cast<std::size_t>(std::upper_bound(z.begin(), z.end(), g) - z.begin());
        hi = std::clamp<std::size_t>(hi, 1, std::max<std::size_t>(z.size() - 1, 1));
        if (z.size() == 1) {
            out.force.push_back(curve.force[0]);
            if (curve.has_error()) out.error.push_back(curve.error[0]);
            continue;
        }
        const std::size_t lo = hi - 1;
        const double s = std::clamp((g - z[lo]) / (z[hi] - z[lo]), 0.0, 1.0);
        out.force.push_back((1.0 - s) * curve.force[lo] + s * curve.force[hi]);
        if (curve.has_error()) out.error.push_back((1.0 - s) * curve.error[lo] + s * curve.error[hi]);
    }
    return out;
}

} // namespace diffcasimir
