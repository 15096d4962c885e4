#include <cmath>
#include <complex>
#include <fstream>
#include <vector>

#include <doctest.h>

#include "diffcasimir/constants.hpp"
#include "diffcasimir/error.hpp"
#include "diffcasimir/materials.hpp"

using namespace diffcasimir;
using constants::ev_to_rad_s;

namespace {

// Optical table of n + ik for a complex permittivity given on the real axis.
template <class Eps>
OpticalDataTable table_from(Eps eps, double e_lo, double e_hi, int per_decade) {
    std::vector<OpticalRow> rows;
    const int count = static_cast<int>(std::round(std::log10(e_hi / e_lo) * per_decade)) + 1;
    for (int i = 0; i < count; ++i) {
        const double ev = e_lo * std::pow(e_hi / e_lo, static_cast<double>(i) / (count - 1));
        const std::complex<double> nk = std::sqrt(eps(ev_to_rad_s(ev)));
        rows.push_back({ev, nk.real(), std::max(0.0, nk.imag())});
    }
    return OpticalDataTable(rows, "synthetic");
}

std::vector<double> log_grid(double lo, double hi, int count) {
    std::vector<double> g;
    for (int i = 0; i < count; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
    return g;
}

} // namespace

TEST_CASE("drude parameters from the doped sample carriers") {
    const auto d = drude_from_carriers({3.2e26, 0.26, 6.7e-6});
    CHECK(d.plasma_frequency == doctest::Approx(2.0e15).epsilon(0.05));
    CHECK(d.relaxation == doctest::Approx(2.4e14).epsilon(0.05));
}

TEST_CASE("drude parameters from the high-resistivity sample carriers") {
    const auto d = drude_from_carriers({1.2e22, 0.26, 0.43e-2});
    // independent evaluation of e sqrt(n / (eps0 m*)) and eps0 rho wp^2
    const double wp = 1.602176634e-19 * std::sqrt(1.2e22 / (8.8541878128e-12 * 0.26 * 9.1093837015e-31));
    CHECK(d.plasma_frequency == doctest::Approx(wp).epsilon(1e-12));
    CHECK(d.plasma_frequency == doctest::Approx(1.22e13).epsilon(0.02));
    CHECK(d.relaxation == doctest::Approx(5.7e12).epsilon(0.03));
}

TEST_CASE("no carriers means no drude term") {
    const auto d = drude_from_carriers({0.0, 0.26, 1.0});
    CHECK(d.plasma_frequency == 0.0);
    CHECK(d.relaxation == 0.0);
    CHECK_THROWS_AS(drude_from_carriers({-1.0, 0.26, 1.0}), Error);
    CHECK_THROWS_AS(drude_from_carriers({1e20, 0.0, 1.0}), Error);
}

TEST_CASE("drude parameters are homogeneous in n and rho") {
    const CarrierSpec base{3.2e26, 0.26, 6.7e-6};
    const auto d0 = drude_from_carriers(base);
    auto scaled = base;
    scaled.density_m3 *= 4.0;
    CHECK(drude_from_carriers(scaled).plasma_frequency == doctest::Approx(2.0 * d0.plasma_frequency).epsilon(1e-14));
    scaled = base;
    scaled.resistivity_ohm_m *= 3.0;
    CHECK(drude_from_carriers(scaled).relaxation == doctest::Approx(3.0 * d0.relaxation).epsilon(1e-14));
}

TEST_CASE("closed-form model values") {
    const double wp = 1e16, g = 5e13;
    const auto drude = PermittivityModel::drude({wp, g}, "d");
    CHECK(drude(g) == doctest::Approx(1.0 + wp * wp / (2.0 * g * g)).epsilon(1e-14));
    CHECK_THROWS_AS(drude(0.0), Error);
    try {
        drude(0.0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Divergence);
    }

    const auto osc = PermittivityModel::oscillators({{10.0, 6e15, 0.0}}, "o");
    CHECK(osc(6e15) == doctest::Approx(1.0 + 10.0 / 2.0).epsilon(1e-14));
    CHECK(osc(0.0) == doctest::Approx(11.0));
    CHECK(osc(1e25) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(osc(-1.0), Error);
}

TEST_CASE("catalog models") {
    const auto cat = builtin_models();
    const auto& si = cat.get("si_intrinsic_surrogate");
    const auto& si_b = cat.get("si_doped_b");
    const auto& gold = cat.get("gold_surrogate");

    double static_limit = 1.0;
    for (const auto& o : silicon_oscillators()) static_limit += o.strength;
    CHECK(static_limit == doctest::Approx(11.66).epsilon(1e-3));
    CHECK(si(1e6) == doctest::Approx(static_limit).epsilon(1e-9));

    const double xi = 1e14;
    const double wp = 2.0e15, g = 2.4e14;
    const auto d = drude_from_carriers(sample_b_carriers());
    CHECK(si_b(xi) == doctest::Approx(si(xi) + d.plasma_frequency * d.plasma_frequency / (xi * (xi + d.relaxation))));
    // against rounded reference values
    CHECK(si_b(xi) == doctest::Approx(si(xi) + wp * wp / (xi * (xi + g))).epsilon(0.1));

    CHECK(gold(1e22) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(cat.get("unobtainium"), Error);
    CHECK(cat.contains("ideal_metal"));
}

TEST_CASE("catalog models are monotone and ordered") {
    const auto cat = builtin_models();
    for (const auto& name : cat.names()) {
        const auto& m = cat.get(name);
        double prev = INFINITY;
        for (double lx = 11.0; lx <= 19.0; lx += 0.01) {
            const double v = m(std::pow(10.0, lx));
            CHECK(std::isfinite(v));
            CHECK(v >= 1.0);
            CHECK(v <= prev);
            prev = v;
        }
    }
    const auto& a = cat.get("si_intrinsic_surrogate");
    const auto& b = cat.get("si_doped_b");
    for (double lx = 11.0; lx <= 19.0; lx += 0.05) CHECK(b(std::pow(10.0, lx)) > a(std::pow(10.0, lx)));
}

TEST_CASE("optical table validation") {
    CHECK_THROWS_AS(OpticalDataTable({{1.0, 1.0, 0.0}}, "x"), Error);
    CHECK_THROWS_AS(OpticalDataTable({{1.0, 1.0, 0.0}, {1.0, 1.0, 0.0}}, "x"), Error);
    CHECK_THROWS_AS(OpticalDataTable({{1.0, 0.0, 0.0}, {2.0, 1.0, 0.0}}, "x"), Error);
    CHECK_THROWS_AS(OpticalDataTable({{1.0, 1.0, -0.1}, {2.0, 1.0, 0.0}}, "x"), Error);
    CHECK_NOTHROW(OpticalDataTable({{1.0, 1.0, 0.0}, {2.0, 1.5, 0.2}}, "x"));
}

TEST_CASE("optical data file parsing") {
    const auto path = std::filesystem::temp_directory_path() / "diffcasimir_optical_test.txt";
    {
        std::ofstream out(path);
        out << "# energy n k\n0.5, 1.2, 0.1\n1.0 1.5 0.3\n\n2.0\t1.7\t0.4\n";
    }
    const auto t = read_optical_data(path);
    REQUIRE(t.rows().size() == 3);
    CHECK(t.rows()[1].n == 1.5);
    CHECK(t.eps_imag(ev_to_rad_s(1.0)) == doctest::Approx(2.0 * 1.5 * 0.3));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_optical_data(path), Error);
}

TEST_CASE("kramers-kronig: zero absorption gives vacuum") {
    OpticalDataTable t({{0.01, 1.3, 0.0}, {1.0, 1.4, 0.0}, {100.0, 1.1, 0.0}}, "transparent");
    const auto grid = log_grid(1e12, 1e18, 25);
    for (auto policy : {LowFrequencyTail::Zero, LowFrequencyTail::DrudeLike}) {
        const auto m = kk_transform(t, grid, {policy});
        for (double xi : grid) CHECK(m(xi) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("kramers-kronig: damped oscillator oracle within 0.5%") {
    const double w0 = ev_to_rad_s(4.0), g = ev_to_rad_s(0.3), s = 9.0 * w0 * w0;
    auto eps = [&](double w) { return 1.0 + s / std::complex<double>(w0 * w0 - w * w, -g * w); };
    // ~15 rows across the linewidth; coarser tables under-resolve the peak
    const auto table = table_from(eps, 1e-3, 1e4, 200);
    const auto grid = log_grid(1e13, 1e18, 41);
    const auto m = kk_transform(table, grid, {LowFrequencyTail::Zero});
    for (double xi : grid) {
        const double exact = 1.0 + s / (w0 * w0 + xi * xi + g * xi);
        CHECK(m(xi) == doctest::Approx(exact).epsilon(5e-3));
    }
}

TEST_CASE("kramers-kronig: drude oracle within 1%") {
    const double wp = ev_to_rad_s(9.0), g = ev_to_rad_s(0.035);
    auto eps = [&](double w) { return 1.0 - wp * wp / (w * std::complex<double>(w, g)); };
    const auto table = table_from(eps, 1e-4, 1e4, 40);
    const auto grid = log_grid(ev_to_rad_s(1e-3), ev_to_rad_s(1e3), 61);
    const auto m = kk_transform(table, grid, {LowFrequencyTail::DrudeLike});
    for (double xi : grid) {
        const double exact = 1.0 + wp * wp / (xi * (xi + g));
        CHECK(m(xi) == doctest::Approx(exact).epsilon(1e-2));
    }
    // the sampled model interpolates between its grid points and stays monotone
    double prev = INFINITY;
    for (double lx = 12.5; lx <= 18.0; lx += 0.013) {
        const double v = m(std::pow(10.0, lx));
        CHECK(v <= prev);
        prev = v;
    }
}

TEST_CASE("kramers-kronig reports non-convergence") {
    const double w0 = ev_to_rad_s(4.0), g = ev_to_rad_s(0.3), s = 9.0 * w0 * w0;
    auto eps = [&](double w) { return 1.0 + s / std::complex<double>(w0 * w0 - w * w, -g * w); };
    const auto table = table_from(eps, 1e-3, 1e4, 40);
    const std::vector<double> grid{1e15};
    KkOptions opt;
    opt.relative_tolerance = 1e-15;
    opt.max_intervals = 200;
    try {
        kk_transform(table, grid, {LowFrequencyTail::Zero}, opt);
        FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
        CHECK(e.location() == 1e15);
        CHECK(e.achieved_error() > 0.0);
    }
    const std::vector<double> bad{2e15, 1e15};
    CHECK_THROWS_AS(kk_transform(table, bad, {}), Error);
}
