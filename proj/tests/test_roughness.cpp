#include <cmath>
#include <fstream>
#include <random>
#include <vector>

#include <doctest.h>

#include "diffcasimir/constants.hpp"
#include "diffcasimir/error.hpp"
#include "diffcasimir/roughness.hpp"

using namespace diffcasimir;
using constants::nm;

namespace {

double variance_of(const HeightDistribution& d) {
    double m = 0.0, v = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) m += d.probabilities()[k] * d.offsets()[k];
    for (std::size_t k = 0; k < d.size(); ++k) v += d.probabilities()[k] * (d.offsets()[k] - m) * (d.offsets()[k] - m);
    return v;
}

const ForceFunction power_law = [](double z) { return -1e-30 / (z * z * z); };

} // namespace

TEST_CASE("height distribution construction") {
    const HeightDistribution d({1.0 * nm, 3.0 * nm, 2.0 * nm}, {0.25, 0.25, 0.5});
    CHECK(d.mean() == doctest::Approx(0.0).epsilon(1e-12).scale(1e-9));
    CHECK(d.offsets().front() < d.offsets().back());
    double sum = 0.0;
    for (double p : d.probabilities()) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(HeightDistribution({0.0, 1.0}, {0.5, 0.6}), Error);
    CHECK_THROWS_AS(HeightDistribution({0.0, 1.0}, {1.5, -0.5}), Error);
    CHECK_THROWS_AS(HeightDistribution({0.0}, {0.5, 0.5}), Error);
    CHECK(HeightDistribution::point().size() == 1);
}

TEST_CASE("distributions from samples") {
    const double s = 2.0 * nm;
    std::vector<double> two;
    for (int i = 0; i < 50; ++i) {
        two.push_back(s);
        two.push_back(-s);
    }
    const auto d = distribution_from_samples(two, 2);
    REQUIRE(d.size() == 2);
    CHECK(d.offsets()[0] == doctest::Approx(-s));
    CHECK(d.offsets()[1] == doctest::Approx(s));
    CHECK(d.probabilities()[0] == doctest::Approx(0.5));

    const std::vector<double> flat(20, 5.0 * nm);
    const auto c = distribution_from_samples(flat, 64);
    REQUIRE(c.size() == 1);
    CHECK(c.offsets()[0] == 0.0);
    CHECK(c.probabilities()[0] == 1.0);

    std::mt19937_64 rng(42);
    std::normal_distribution<double> g(0.0, 3.0 * nm);
    std::vector<double> draws(100000);
    for (auto& x : draws) x = g(rng);
    const auto h = distribution_from_samples(draws, 64);
    CHECK(variance_of(h) == doctest::Approx(9.0 * nm * nm).epsilon(0.05));
    CHECK(std::abs(h.mean()) < 1e-12 * nm);
}

TEST_CASE("combining surfaces") {
    const double s = 1.5 * nm;
    const HeightDistribution pm({-s, s}, {0.5, 0.5});
    const auto both = combine(pm, pm);
    REQUIRE(both.size() == 3);
    CHECK(both.offsets()[0] == doctest::Approx(-2 * s));
    CHECK(both.offsets()[1] == doctest::Approx(0.0).scale(1e-9));
    CHECK(both.offsets()[2] == doctest::Approx(2 * s));
    CHECK(both.probabilities()[0] == doctest::Approx(0.25));
    CHECK(both.probabilities()[1] == doctest::Approx(0.5));

    const HeightDistribution skew({-1 * nm, 2 * nm}, {2.0 / 3.0, 1.0 / 3.0});
    const auto mirrored = combine(skew, HeightDistribution::point());
    REQUIRE(mirrored.size() == 2);
    CHECK(mirrored.offsets()[0] == doctest::Approx(-2 * nm));
    CHECK(mirrored.probabilities()[0] == doctest::Approx(1.0 / 3.0));

    const auto g = combine(HeightDistribution::gaussian(2 * nm), HeightDistribution::gaussian(3 * nm));
    CHECK(g.size() <= 4096);
    CHECK(variance_of(g) == doctest::Approx(13.0 * nm * nm).epsilon(0.05));
}

TEST_CASE("roughness correction on a power law") {
    const double z = 80 * nm;
    const HeightDistribution two({-0.1 * z, 0.1 * z}, {0.5, 0.5});
    const auto out = roughness_correct(power_law, {z}, two);
    const double expected = (std::pow(0.9, -3) + std::pow(1.1, -3)) / 2.0;
    CHECK(expected == doctest::Approx(1.0615).epsilon(1e-4));
    CHECK(out.force[0] / power_law(z) == doctest::Approx(expected).epsilon(1e-13));

    const auto same = roughness_correct(power_law, {60 * nm, 90 * nm}, HeightDistribution::point());
    CHECK(same.force[0] == power_law(60 * nm));
    CHECK(same.force[1] == power_law(90 * nm));
    CHECK(same.meta.roughness_applied);
}

TEST_CASE("perturbative limit 1 + 6 sigma^2 / z^2") {
    for (double z : {60 * nm, 100 * nm}) {
        const double sigma = 1e-2 * z;
        const auto out = roughness_correct(power_law, {z}, HeightDistribution::gaussian(sigma));
        CHECK(out.force[0] / power_law(z) == doctest::Approx(1.0 + 6.0 * sigma * sigma / (z * z)).epsilon(1e-5));
    }
}

TEST_CASE("convex attraction grows under roughness") {
    std::vector<double> grid;
    for (double z = 40 * nm; z < 200 * nm; z += 5 * nm) grid.push_back(z);
    const auto flat = roughness_correct(power_law, grid, HeightDistribution::point());
    const auto rough = roughness_correct(power_law, grid, HeightDistribution::gaussian(3 * nm), 2);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(rough.force[i]) > std::abs(flat.force[i]));
}

TEST_CASE("touching surfaces are rejected") {
    const HeightDistribution wide({-50 * nm, 50 * nm}, {0.5, 0.5});
    try {
        roughness_correct(power_law, {40 * nm, 80 * nm}, wide);
        FAIL("expected a domain error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Domain);
        CHECK(std::string(e.what()).find("40") != std::string::npos);
    }
}

TEST_CASE("gaussian width tuning") {
    const double z = 60 * nm;
    const double sigma = gaussian_width_for_correction(power_law, z, 0.036);
    const auto out = roughness_correct(power_law, {z}, HeightDistribution::gaussian(sigma));
    CHECK(out.force[0] / power_law(z) - 1.0 == doctest::Approx(0.036).epsilon(1e-6));
    CHECK_THROWS_AS(gaussian_width_for_correction(power_law, z, 10.0), Error);

    // probing stops within twice the needed width, so a force known above 30 nm suffices
    const ForceFunction bounded = [](double x) {
        if (x < 30 * nm) throw Error(ErrorCode::Domain, "outside the tabulated range");
        return power_law(x);
    };
    CHECK(gaussian_width_for_correction(bounded, z, 0.036) == doctest::Approx(sigma).epsilon(1e-9));
}

TEST_CASE("rebinning keeps mass and mean") {
    const auto g = HeightDistribution::gaussian(2 * nm, 200);
    const auto r = g.rebinned(16);
    CHECK(r.size() <= 16);
    double sum = 0.0;
    for (double p : r.probabilities()) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(r.mean()) < 1e-12 * nm);
    CHECK(r.variance() == doctest::Approx(g.variance()).epsilon(0.02));
}

TEST_CASE("topography files") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto raw = dir / "diffcasimir_topo_raw.csv";
    const auto binned = dir / "diffcasimir_topo_binned.csv";
    {
        std::ofstream out(raw);
        out << "# heights\nheight_nm\n";
        for (int i = 0; i < 40; ++i) out << (i % 2 ? 2.0 : -2.0) << '\n';
    }
    {
        std::ofstream out(binned);
        out << "height_nm,probability\n-1,0.25\n0,0.5\n1,0.25\n";
    }
    const auto r = read_topography(raw, 2);
    CHECK(r.variance() == doctest::Approx(4.0 * nm * nm));
    const auto b = read_topography(binned);
    REQUIRE(b.size() == 3);
    CHECK(b.probabilities()[1] == doctest::Approx(0.5));
    std::filesystem::remove(raw);
    std::filesystem::remove(binned);
    CHECK_THROWS_AS(read_topography(raw), Error);
}
