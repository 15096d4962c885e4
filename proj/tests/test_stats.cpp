#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "diffcasimir/constants.hpp"
#include "diffcasimir/error.hpp"
#include "diffcasimir/lifshitz.hpp"
#include "diffcasimir/stats.hpp"

using namespace diffcasimir;
using constants::nm;
using constants::pN;

namespace {

// Student t quantile from first principles: Simpson integration of the
// density from 0 to x, then bisection on the CDF.
double t_quantile_oracle(double p, double nu) {
    const double norm = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * M_PI);
    auto pdf = [&](double x) { return norm * std::pow(1.0 + x * x / nu, -(nu + 1) / 2); };
    auto cdf = [&](double x) {
        const int n = 20000;
        const double h = x / n;
        double s = pdf(0.0) + pdf(x);
        for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(i * h);
        return 0.5 + s * h / 3.0;
    };
    double lo = 0.0, hi = 50.0;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ForceCurve power_curve(double z_lo, double step, int count, double a = 1e-30) {
    ForceCurve c;
    for (int i = 0; i < count; ++i) {
        const double z = z_lo + step * i;
        c.z.push_back(z);
        c.force.push_back(-a / (z * z * z));
    }
    return c;
}

ErrorProfile constant_profile(const std::vector<double>& z, double v) { return {z, std::vector<double>(z.size(), v)}; }

} // namespace

TEST_CASE("t quantile against an independent oracle") {
    const double oracle = t_quantile_oracle(0.975, 39.0);
    CHECK(oracle == doctest::Approx(2.0227).epsilon(1e-4));
    CHECK(std::abs(student_t_quantile(0.975, 39.0) - oracle) < 1e-3);
    for (double nu : {2.0, 5.0, 24.0}) CHECK(student_t_quantile(0.975, nu) == doctest::Approx(t_quantile_oracle(0.975, nu)).epsilon(1e-6));
    CHECK_THROWS_AS(student_t_quantile(1.0, 3.0), Error);
}

TEST_CASE("combination rules") {
    CHECK(combine_errors(8.0, 1.2, CombinationRule::Dominant) == 8.0);
    CHECK(combine_errors(3.0, 4.0, CombinationRule::Quadrature) == doctest::Approx(5.0));
    CHECK(combine_errors(19.6, 8.0, CombinationRule::Quadrature) == doctest::Approx(21.17).epsilon(1e-3));
    CHECK(combine_errors(19.6, 8.0, CombinationRule::DirectSum) == doctest::Approx(27.6));
    for (auto rule : {CombinationRule::Quadrature, CombinationRule::DirectSum, CombinationRule::Dominant}) {
        CHECK(combine_errors(7.0, 0.0, rule) == 7.0);
        CHECK(combine_errors(0.0, 7.0, rule) == 7.0);
        CHECK(parse_rule(rule_name(rule)) == rule);
    }
    try {
        parse_rule("median");
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Config);
    }
}

TEST_CASE("rules are symmetric, monotone and ordered on random inputs") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = u(rng), b = u(rng), bump = u(rng);
        for (auto rule : {CombinationRule::Quadrature, CombinationRule::DirectSum, CombinationRule::Dominant}) {
            CHECK(combine_errors(a, b, rule) == combine_errors(b, a, rule));
            CHECK(combine_errors(a + bump, b, rule) >= combine_errors(a, b, rule));
        }
        CHECK(combine_errors(a, b, CombinationRule::Quadrature) <= combine_errors(a, b, CombinationRule::DirectSum));
        const std::vector<double> z{1.0};
        const auto q = confidence_band({z, {a}}, {z, {b}}, CombinationRule::Quadrature);
        const auto d = confidence_band({z, {a}}, {z, {b}}, CombinationRule::DirectSum);
        CHECK(q.half_width[0] <= d.half_width[0]);
    }
}

TEST_CASE("random plus systematic") {
    const std::vector<double> z{60 * nm, 61 * nm};
    const auto total = combine_random_systematic(constant_profile(z, 8 * pN), 1.2 * pN);
    CHECK(total.value[0] == doctest::Approx(8 * pN));
    for (auto rule : {CombinationRule::Quadrature, CombinationRule::DirectSum, CombinationRule::Dominant})
        CHECK(combine_random_systematic(constant_profile(z, 8 * pN), 0.0, rule).value[1] == 8 * pN);
    CHECK_THROWS_AS(combine_random_systematic(constant_profile(z, 8 * pN), -1.0), Error);
}

TEST_CASE("mean curve") {
    RepeatedScans s{{1.0, 2.0, 3.0}, {{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}}};
    CHECK(mean_curve(s).force == std::vector<double>{1.0, 2.0, 3.0});
    RepeatedScans pm{{1.0, 2.0}, {{0.5, -2.0}, {-0.5, 2.0}}};
    CHECK(mean_curve(pm).force == std::vector<double>{0.0, 0.0});
    RepeatedScans ragged{{1.0, 2.0}, {{0.5, -2.0}, {-0.5}}};
    CHECK_THROWS_AS(mean_curve(ragged), Error);

    const auto truth = power_curve(60 * nm, 0.17 * nm, 400);
    const auto scans = synthetic_scans(truth, 12 * pN, 40, 3);
    const auto mean = mean_curve(scans);
    const auto err = student_t_random_error(scans);
    int inside = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (std::abs(mean.force[i] - truth.force[i]) <= err.value[i]) ++inside;
    CHECK(inside >= 0.95 * truth.size() - 3.0 * std::sqrt(0.05 * 0.95 * truth.size()));
}

TEST_CASE("student t random error") {
    RepeatedScans flat{{1.0, 2.0}, {{3.0, 4.0}, {3.0, 4.0}, {3.0, 4.0}}};
    for (double v : student_t_random_error(flat).value) CHECK(v == 0.0);
    RepeatedScans one{{1.0}, {{3.0}}};
    CHECK_THROWS_AS(student_t_random_error(one), Error);

    const auto truth = power_curve(60 * nm, 0.17 * nm, 400);
    const auto scans = synthetic_scans(truth, 12 * pN, 40, 5);
    const auto err = student_t_random_error(scans, 0.95);
    double mean = 0.0;
    for (double v : err.value) mean += v / err.value.size();
    CHECK(mean == doctest::Approx(2.0227 * 12 * pN / std::sqrt(40.0)).epsilon(0.03));
}

TEST_CASE("random error scales as 1/sqrt(N)") {
    const auto truth = power_curve(60 * nm, 0.17 * nm, 400);
    const auto pool = synthetic_scans(truth, 10 * pN, 40, 9);
    RepeatedScans sub{pool.z, {pool.rows.begin(), pool.rows.begin() + 10}};
    auto spread = [](const RepeatedScans& s) {
        const double t = student_t_quantile(0.975, static_cast<double>(s.repetitions()) - 1.0);
        double acc = 0.0;
        for (double v : student_t_random_error(s).value) acc += v / t;
        return acc / s.z.size();
    };
    CHECK(spread(pool) / spread(sub) == doctest::Approx(std::sqrt(10.0 / 40.0)).epsilon(0.05));
}

TEST_CASE("theory error") {
    const auto curve = power_curve(60 * nm, 0.17 * nm, 50);
    for (double v : theory_error(curve, 0.0, 0.0).value) CHECK(v == 0.0);
    const auto slope = theory_error(curve, 1 * nm, 0.0);
    for (std::size_t i = 0; i < curve.size(); ++i)
        CHECK(slope.value[i] == doctest::Approx(3.0 * std::abs(curve.force[i]) * nm / curve.z[i]).epsilon(1e-4));
    const auto coarse = power_curve(60 * nm, 20 * nm, 10);
    CHECK_THROWS_AS(theory_error(coarse, 1 * nm), Error);
    const auto two = power_curve(60 * nm, 0.17 * nm, 2);
    CHECK_THROWS_AS(theory_error(two, 1 * nm), Error);
}

TEST_CASE("theory error near 60 nm is about 5% of the force") {
    const auto cat = builtin_models();
    std::vector<double> z;
    for (int i = 0; i < 7; ++i) z.push_back(59.49 * nm + 0.17 * nm * i);
    const auto f = lifshitz_force(SpherePlateGeometry(100.9e-6, z), cat.get("gold_surrogate"),
                                  cat.get("si_intrinsic_surrogate"));
    const auto e = theory_error(f, 1.0 * nm, 0.005);
    const double pct = e.value[3] / std::abs(f.force[3]);
    CHECK(pct == doctest::Approx(0.049).epsilon(0.015 / 0.049));
}

TEST_CASE("confidence band and consistency") {
    const auto theory = power_curve(60 * nm, 0.17 * nm, 100);
    const auto band = confidence_band(constant_profile(theory.z, 19.6 * pN), constant_profile(theory.z, 8 * pN));
    CHECK(band.half_width[0] == doctest::Approx(21.17 * pN).epsilon(1e-3));
    CHECK(band.rule == CombinationRule::Quadrature);

    CHECK(consistency_report(theory, theory, band).fraction_inside == 1.0);
    CHECK(consistency_report(theory, theory, band).consistent);
    auto shifted = theory;
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted.force[i] += 2.0 * band.half_width[i];
    const auto rep = consistency_report(theory, shifted, band);
    CHECK(rep.fraction_inside == 0.0);
    CHECK_FALSE(rep.consistent);
    CHECK(rep.worst_ratio == doctest::Approx(2.0));

    const auto other = power_curve(61 * nm, 0.17 * nm, 100);
    try {
        confidence_band(constant_profile(theory.z, 1.0), constant_profile(other.z, 1.0));
        FAIL("expected grid mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::GridMismatch);
    }
}

TEST_CASE("consistency fraction under Gaussian noise of half the band") {
    const auto theory = power_curve(60 * nm, 0.17 * nm, 400);
    const double xi = 20 * pN;
    const auto band = confidence_band(constant_profile(theory.z, xi), constant_profile(theory.z, 0.0));
    double total = 0.0;
    constexpr int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
        std::mt19937_64 rng(1000 + s);
        std::normal_distribution<double> g(0.0, xi / 2.0);
        auto expt = theory;
        for (auto& f : expt.force) f += g(rng);
        total += consistency_report(theory, expt, band).fraction_inside;
    }
    CHECK(total / seeds == doctest::Approx(0.95).epsilon(0.03 / 0.95));
}

TEST_CASE("band coverage of the true curve over seeded repetitions") {
    const auto truth = power_curve(60 * nm, 0.17 * nm, 200);
    double covered = 0.0;
    constexpr int reps = 200;
    for (int r = 0; r < reps; ++r) {
        const auto scans = synthetic_scans(truth, 15 * pN, 40, 5000 + r);
        const auto mean = mean_curve(scans);
        const auto band = confidence_band(constant_profile(truth.z, 0.0), student_t_random_error(scans));
        covered += consistency_report(truth, mean, band).fraction_inside;
    }
    CHECK(covered / reps >= 0.92);
}

TEST_CASE("difference significance") {
    auto with_error = [](ForceCurve c, double e) {
        c.error.assign(c.size(), e);
        return c;
    };
    const auto a = with_error(power_curve(60 * nm, 1 * nm, 50), 5 * pN);
    CHECK_FALSE(difference_significance(a, a).range.has_value());

    auto b = a;
    for (auto& f : b.force) f -= 17 * pN;
    const double e = 7 * pN / std::sqrt(2.0);
    const auto sig = difference_significance(with_error(a, e), with_error(b, e));
    REQUIRE(sig.range.has_value());
    CHECK(sig.range->first == a.z.front());
    CHECK(sig.range->second == a.z.back());
    CHECK(sig.difference.error[0] == doctest::Approx(7 * pN));

    ForceCurve zero, five;
    zero.z = five.z = {1.0, 2.0, 3.0};
    zero.force = {0.0, 0.0, 0.0};
    five.force = {5.0, 6.0, 5.0};
    zero.error = {3.0, 3.0, 3.0};
    five.error = {4.0, 4.0, 4.0};
    const auto tie = difference_significance(zero, five);
    REQUIRE(tie.range.has_value());
    CHECK(tie.range->first == 2.0);
    CHECK(tie.range->second == 2.0);

    CHECK_THROWS_AS(difference_significance(power_curve(60 * nm, 1 * nm, 5), a), Error);
}

TEST_CASE("synthetic scans") {
    const auto truth = power_curve(60 * nm, 0.17 * nm, 400);
    const auto a = synthetic_scans(truth, 12 * pN, 40, 99);
    const auto b = synthetic_scans(truth, 12 * pN, 40, 99);
    CHECK(a.rows == b.rows);
    double ss = 0.0;
    std::size_t n = 0;
    for (const auto& row : a.rows)
        for (std::size_t i = 0; i < row.size(); ++i, ++n) ss += (row[i] - truth.force[i]) * (row[i] - truth.force[i]);
    CHECK(n >= 10000);
    CHECK(std::sqrt(ss / n) == doctest::Approx(12 * pN).epsilon(0.05));
}

TEST_CASE("stacking curves on misaligned grids") {
    const auto a = power_curve(60 * nm, 1 * nm, 20);
    auto b = power_curve(59.5 * nm, 1 * nm, 22);
    const auto s = RepeatedScans::from_curves({a, b});
    CHECK(s.z == a.z);
    CHECK(s.rows[1][5] == doctest::Approx(a.force[5]).epsilon(1e-3));
}
