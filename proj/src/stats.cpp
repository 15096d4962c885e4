#include "diffcasimir/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "diffcasimir/error.hpp"

namespace diffcasimir {

double student_t_quantile(double probability, double dof) {
    require(probability > 0.0 && probability < 1.0 && dof > 0.0, ErrorCode::Domain,
            "t quantile needs 0 < p < 1 and dof > 0");
    return boost::math::quantile(boost::math::students_t_distribution<double>(dof), probability);
}

void RepeatedScans::validate() const {
    require(rows.size() >= 2, ErrorCode::Domain, "repeated scans need at least two repetitions");
    require(!z.empty(), ErrorCode::Domain, "repeated scans have an empty grid");
    for (const auto& r : rows) require(r.size() == z.size(), ErrorCode::Domain, "scan row length differs from grid");
}

RepeatedScans RepeatedScans::from_curves(const std::vector<ForceCurve>& curves) {
    require(!curves.empty(), ErrorCode::Domain, "no curves to stack");
    RepeatedScans out;
    out.z = curves.front().z;
    for (const auto& c : curves) {
        if (same_grid(c.z, out.z)) {
            out.rows.push_back(c.force);
        } else {
            out.rows.push_back(resample(c, out.z).force);
        }
    }
    return out;
}

const char* rule_name(CombinationRule rule) {
    switch (rule) {
    case CombinationRule::Quadrature: return "quadrature";
    case CombinationRule::DirectSum: return "direct-sum";
    case CombinationRule::Dominant: return "dominant";
    }
    return "unknown";
}

CombinationRule parse_rule(const std::string& name) {
    if (name == "quadrature") return CombinationRule::Quadrature;
    if (name == "direct-sum") return CombinationRule::DirectSum;
    if (name == "dominant") return CombinationRule::Dominant;
    fail(ErrorCode::Config, "unknown error combination rule '" + name + "'");
}

double combine_errors(double a, double b, CombinationRule rule) {
    switch (rule) {
    case CombinationRule::Quadrature: return std::hypot(a, b);
    case CombinationRule::DirectSum: return a + b;
    case CombinationRule::Dominant: return std::max(a, b);
    }
    return std::hypot(a, b);
}

ForceCurve mean_curve(const RepeatedScans& scans) {
    scans.validate();
    ForceCurve out;
    out.z = scans.z;
    out.force.assign(scans.z.size(), 0.0);
    for (const auto& r : scans.rows)
        for (std::size_t i = 0; i < r.size(); ++i) out.force[i] += r[i];
    for (auto& f : out.force) f /= static_cast<double>(scans.repetitions());
    return out;
}

ErrorProfile student_t_random_error(const RepeatedScans& scans, double confidence) {
    require(scans.repetitions() >= 2, ErrorCode::Domain, "random error needs at least two repetitions");
    scans.validate();
    require(confidence > 0.0 && confidence < 1.0, ErrorCode::Domain, "confidence must lie in (0, 1)");
    const auto mean = mean_curve(scans);
    const double n = static_cast<double>(scans.repetitions());
    const double t = student_t_quantile(0.5 * (1.0 + confidence), n - 1.0);
    ErrorProfile out{scans.z, std::vector<double>(scans.z.size(), 0.0)};
    for (std::size_t i = 0; i < scans.z.size(); ++i) {
        double ss = 0.0;
        for (const auto& r : scans.rows) ss += (r[i] - mean.force[i]) * (r[i] - mean.force[i]);
        out.value[i] = t * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return out;
}

ErrorProfile combine_random_systematic(const ErrorProfile& random, double systematic, CombinationRule rule) {
    require(systematic >= 0.0, ErrorCode::Domain, "systematic error must be non-negative");
    ErrorProfile out = random;
    for (auto& v : out.value) v = combine_errors(v, systematic, rule);
    return out;
}

ErrorProfile theory_error(const ForceCurve& curve, double delta_z, double optical_fraction) {
    curve.validate();
    require(curve.size() >= 3, ErrorCode::Domain, "theory error needs at least three points for the slope");
    require(delta_z >= 0.0 && optical_fraction >= 0.0, ErrorCode::Domain, "theory error inputs must be >= 0");
    const auto& z = curve.z;
    const auto& f = curve.force;
    const std::size_t n = z.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        require(z[i + 1] - z[i] <= 0.1 * z[i], ErrorCode::Domain,
                "grid too coarse for a numerical slope (spacing above 10% of z)");
    }
    // three-point derivative on a non-uniform grid
    auto slope = [&](std::size_t i0, std::size_t i1, std::size_t i2, double x) {
        const double x0 = z[i0], x1 = z[i1], x2 = z[i2];
        return f[i0] * (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2)) +
               f[i1] * (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
               f[i2] * (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
    };
    ErrorProfile out{z, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        double d;
        if (i == 0) d = slope(0, 1, 2, z[0]);
        else if (i == n - 1) d = slope(n - 3, n - 2, n - 1, z[n - 1]);
        else d = slope(i - 1, i, i + 1, z[i]);
        out.value[i] = std::hypot(std::abs(d) * delta_z, optical_fraction * std::abs(f[i]));
    }
    return out;
}

ConfidenceBand confidence_band(const ErrorProfile& theory, const ErrorProfile& experiment, CombinationRule rule,
                               double confidence) {
    if (!same_grid(theory.z, experiment.z) || theory.value.size() != experiment.value.size())
        fail(ErrorCode::GridMismatch, "confidence band: theory and experiment errors are on different grids");
    ConfidenceBand band;
    band.z = theory.z;
    band.confidence = confidence;
    band.rule = rule;
    band.half_width.resize(theory.value.size());
    for (std::size_t i = 0; i < theory.value.size(); ++i)
        band.half_width[i] = combine_errors(theory.value[i], experiment.value[i], rule);
    return band;
}

ConsistencyReport consistency_report(const ForceCurve& theory, const ForceCurve& experiment,
                                     const ConfidenceBand& band, double required_fraction) {
    if (!same_grid(theory.z, experiment.z) || !same_grid(theory.z, band.z))
        fail(ErrorCode::GridMismatch, "consistency report needs theory, experiment and band on one grid");
    ConsistencyReport rep;
    rep.points = theory.size();
    std::size_t inside = 0;
    for (std::size_t i = 0; i < theory.size(); ++i) {
        const double diff = std::abs(theory.force[i] - experiment.force[i]);
        const double xi = band.half_width[i];
        if (diff <= xi) ++inside;
        const double ratio = xi > 0.0 ? diff / xi : (diff > 0.0 ? INFINITY : 0.0);
        if (i == 0 || ratio > rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.worst_index = i;
            rep.worst_z = theory.z[i];
        }
    }
    rep.fraction_inside = rep.points ? static_cast<double>(inside) / static_cast<double>(rep.points) : 0.0;
    rep.consistent = rep.fraction_inside >= required_fraction;
    return rep;
}

Significance difference_significance(const ForceCurve& mean_a, const ForceCurve& mean_b) {
    require(mean_a.has_error() && mean_b.has_error(), ErrorCode::Domain,
            "difference significance needs per-point errors on both curves");
    if (!same_grid(mean_a.z, mean_b.z)) fail(ErrorCode::GridMismatch, "difference significance needs a common grid");
    Significance out;
    auto& d = out.difference;
    d.z = mean_a.z;
    d.force.resize(d.z.size());
    d.error.resize(d.z.size());
    std::size_t best_start = 0, best_len = 0, run_start = 0, run_len = 0;
    for (std::size_t i = 0; i < d.z.size(); ++i) {
        d.force[i] = mean_b.force[i] - mean_a.force[i];
        d.error[i] = std::hypot(mean_a.error[i], mean_b.error[i]);
        if (std::abs(d.force[i]) > d.error[i]) {
            if (run_len == 0) run_start = i;
            ++run_len;
            if (run_len > best_len) {
                best_len = run_len;
                best_start = run_start;
            }
        } else {
            run_len = 0;
        }
    }
    if (best_len > 0) out.range = std::make_pair(d.z[best_start], d.z[best_start + best_len - 1]);
    return out;
}

RepeatedScans synthetic_scans(const ForceCurve& truth, double sigma, int repetitions, std::uint64_t seed) {
    truth.validate();
    require(repetitions >= 2 && sigma >= 0.0, ErrorCode::Domain, "synthetic scans need N >= 2 and sigma >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    RepeatedScans out;
    out.z = truth.z;
    for (int r = 0; r < repetitions; ++r) {
        std::vector<double> row(truth.force);
        if (sigma > 0.0)
            for (auto& v : row) v += noise(rng);
        out.rows.push_back(std::move(row));
    }
    return out;
}

} // namespace diffcasimir
