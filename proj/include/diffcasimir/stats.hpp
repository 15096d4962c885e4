#pragma once

// Reduction of repeated force scans and theory/experiment comparison.
// Curves follow the library-wide SI convention (z in m, forces in N).

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diffcasimir/force_curve.hpp"

namespace diffcasimir {

/// Quantile of Student's t distribution with `dof` degrees of freedom.
double student_t_quantile(double probability, double dof);

struct RepeatedScans {
    std::vector<double> z;
    std::vector<std::vector<double>> rows; // one row per repetition

    std::size_t repetitions() const { return rows.size(); }
    /// Throws Error(Domain) for fewer than two rows or ragged rows.
    void validate() const;

    /// Stacks curves, linearly interpolating each onto the first curve's grid.
    static RepeatedScans from_curves(const std::vector<ForceCurve>& curves);
};

struct ErrorProfile {
    std::vector<double> z;
    std::vector<double> value;
};

enum class CombinationRule { Quadrature, DirectSum, Dominant };

const char* rule_name(CombinationRule rule);
/// "quadrature", "direct-sum" or "dominant"; anything else throws Error(Config).
CombinationRule parse_rule(const std::string& name);
double combine_errors(double a, double b, CombinationRule rule);

ForceCurve mean_curve(const RepeatedScans& scans);

/// t_{(1+conf)/2, N-1} * s(z) / sqrt(N). Throws Error(Domain) when N < 2.
ErrorProfile student_t_random_error(const RepeatedScans& scans, double confidence = 0.95);

ErrorProfile combine_random_systematic(const ErrorProfile& random, double systematic,
                                       CombinationRule rule = CombinationRule::Dominant);

/// Quadrature sum of |dF/dz| dz and optical_fraction |F|. The slope comes from
/// three-point differences; throws Error(Domain) for fewer than three points
/// or spacings above 10% of the local separation.
ErrorProfile theory_error(const ForceCurve& curve, double delta_z, double optical_fraction = 0.005);

struct ErrorBudget {
    ErrorProfile random;
    double systematic = 0.0;
    double delta_z = 0.0;
    double optical_fraction = 0.005;
};

struct ConfidenceBand {
    std::vector<double> z;
    std::vector<double> half_width; // Xi(z)
    double confidence = 0.95;
    CombinationRule rule = CombinationRule::Quadrature;
};

/// Throws Error(GridMismatch) unless both profiles share one grid.
ConfidenceBand confidence_band(const ErrorProfile& theory, const ErrorProfile& experiment,
                               CombinationRule rule = CombinationRule::Quadrature, double confidence = 0.95);

struct ConsistencyReport {
    std::size_t points = 0;
    double fraction_inside = 0.0;
    std::size_t worst_index = 0;
    double worst_z = 0.0;
    double worst_ratio = 0.0; // |F_theor - F_expt| / Xi at the worst point
    bool consistent = false;
};

ConsistencyReport consistency_report(const ForceCurve& theory, const ForceCurve& experiment,
                                     const ConfidenceBand& band, double required_fraction = 0.95);

struct Significance {
    ForceCurve difference; // b - a with combined errors
    std::optional<std::pair<double, double>> range; // longest run with |diff| > error
};

/// Both curves need per-point errors on a common grid.
Significance difference_significance(const ForceCurve& mean_a, const ForceCurve& mean_b);

/// `repetitions` copies of `truth` with independent N(0, sigma) noise.
RepeatedScans synthetic_scans(const ForceCurve& truth, double sigma, int repetitions, std::uint64_t seed);

} // namespace diffcasimir
