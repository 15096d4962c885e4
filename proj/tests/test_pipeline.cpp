#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <doctest.h>

#include "diffcasimir/config.hpp"
#include "diffcasimir/constants.hpp"
#include "diffcasimir/csv_io.hpp"
#include "diffcasimir/error.hpp"
#include "diffcasimir/lifshitz.hpp"
#include "diffcasimir/pipeline.hpp"

namespace fs = std::filesystem;
using namespace diffcasimir;
using constants::nm;
using constants::pN;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("diffcasimir_pipeline_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// `key = value` lines of a report
std::map<std::string, std::string> report_values(const fs::path& p) {
    std::map<std::string, std::string> out;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return out;
}

ErrorCode code_of(const std::string& text, const fs::path& base = ".") {
    try {
        parse_config(text, base);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a config error");
    return ErrorCode::Domain;
}

} // namespace

TEST_CASE("config parsing") {
    const auto c = parse_config("[geometry]\nradius_um = 50\nz_min_nm = 70 # inline comment\n# full comment\n");
    CHECK(c.radius == doctest::Approx(50e-6));
    CHECK(c.z_min == doctest::Approx(70 * nm));
    CHECK(c.z_grid().size() == 400);
    CHECK(c.preset.empty());

    CHECK(code_of("[geometry]\nradius = 50\n") == ErrorCode::Config);
    CHECK(code_of("[geometrie]\nradius_um = 50\n") == ErrorCode::Config);
    CHECK(code_of("[geometry]\nradius_um = fifty\n") == ErrorCode::Config);
    CHECK(code_of("[statistics]\nband_rule = median\n") == ErrorCode::Config);
    CHECK(code_of("preset = sample_c\n") == ErrorCode::Config);
    CHECK(code_of("[materials]\noptical_data_file = missing.txt\n", scratch("cfg")) == ErrorCode::Config);
    CHECK_THROWS_AS(load_config(scratch("cfg") / "absent.cfg"), Error);
}

TEST_CASE("presets") {
    const auto a = parse_config("preset = sample_a\n");
    const auto b = parse_config("preset = sample_b\n");
    CHECK(a.preset == "sample_a");
    CHECK(a.plate_model == "si_intrinsic_surrogate");
    CHECK(b.plate_model == "si_doped_b");
    CHECK(a.sweep.params.v0 == doctest::Approx(-0.341));
    CHECK(a.sweep.params.km == doctest::Approx(1.646e-9));
    CHECK(b.sweep.params.km == doctest::Approx(1.700e-9));
    CHECK(a.sweep.voltage_count == 29);
    CHECK(b.sweep.voltage_count == 25);
    CHECK(a.calibration.fit_min == doctest::Approx(300 * nm));
    CHECK(b.calibration.fit_min == doctest::Approx(100 * nm));
    CHECK(b.delta_z == doctest::Approx(0.8 * nm));
    CHECK(b.repetitions == 39);
    // later keys override the preset
    const auto tweaked = parse_config("preset = sample_a\n[simulation]\nrepetitions = 12\n");
    CHECK(tweaked.repetitions == 12);
    CHECK(tweaked.sweep.params.v0 == a.sweep.params.v0);
    CHECK_FALSE(preset_text("sample_a").empty());
}

TEST_CASE("config hash") {
    const auto a = parse_config("preset = sample_a\n");
    const auto same = parse_config("# a comment\npreset = sample_a\n\n[geometry]\nradius_um = 100.9\n");
    const auto other = parse_config("preset = sample_a\n[geometry]\nradius_um = 101\n");
    CHECK(a.hash() == same.hash());
    CHECK(a.hash() != other.hash());
    CHECK(a.hash_hex().size() == 16);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("permittivity command") {
    const auto dir = scratch("perm");
    const auto out = cmd_permittivity(parse_config("preset = sample_a\n"), dir);
    REQUIRE(out.files.size() == 1);
    std::ifstream in(out.files[0]);
    std::string line, header;
    int rows = 0;
    double last_gold = 0.0;
    const auto cat = builtin_models();
    while (std::getline(in, line)) {
        if (line[0] == '#') continue;
        if (header.empty()) {
            header = line;
            continue;
        }
        double xi, g, a, b;
        char sep;
        std::istringstream ls(line);
        ls >> xi >> sep >> g >> sep >> a >> sep >> b;
        CHECK(b > a);
        if (std::abs(xi - 1e14) < 1.0) CHECK(b == doctest::Approx(cat.get("si_doped_b")(1e14)).epsilon(1e-5));
        last_gold = g;
        ++rows;
    }
    CHECK(header == "xi_rad_s,eps_gold,eps_si_a,eps_si_b");
    CHECK(rows == 101);
    CHECK(last_gold == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("force command: ideal metals reproduce the closed form") {
    const auto dir = scratch("ideal");
    const auto c = parse_config("[geometry]\nz_min_nm = 60\nz_step_nm = 20\nz_count = 5\n"
                                "[materials]\nsphere = ideal_metal\nplate = ideal_metal\n");
    const auto out = cmd_force(c, dir);
    const auto f = read_force_curve(out.files[0]);
    REQUIRE(f.size() == 5);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(f.force[i] == doctest::Approx(ideal_metal_force(c.radius, f.z[i])).epsilon(2e-3));
    CHECK_FALSE(file_is_synthetic(out.files[0]));
}

TEST_CASE("force command: roughness increases the magnitude") {
    const std::string base = "[geometry]\nz_min_nm = 60\nz_step_nm = 10\nz_count = 5\n";
    const auto flat = read_force_curve(cmd_force(parse_config(base), scratch("flat")).files[0]);
    const auto rough = read_force_curve(
        cmd_force(parse_config(base + "[roughness]\napply = true\nsigma_nm = 2\n"), scratch("rough")).files[0]);
    for (std::size_t i = 0; i < flat.size(); ++i) CHECK(std::abs(rough.force[i]) > std::abs(flat.force[i]));
    CHECK_THROWS_AS(theory_curve(parse_config(base + "[roughness]\napply = true\n"), "si_doped_b"), Error);
}

TEST_CASE("force command: optional magnitude column") {
    const auto c = parse_config("[geometry]\nz_count = 3\n[output]\nmagnitude_column = true\n");
    const auto text = slurp(cmd_force(c, scratch("mag")).files[0]);
    CHECK(text.find("z_nm,F_pN,absF_pN") != std::string::npos);
}

TEST_CASE("difference command") {
    const auto c = parse_config("[geometry]\nz_min_nm = 70\nz_step_nm = 10\nz_count = 9\n");
    const auto same = read_force_curve(cmd_difference(c, &c, scratch("diff0")).files[0]);
    for (double f : same.force) CHECK(f == 0.0);

    const auto d = read_force_curve(cmd_difference(c, nullptr, scratch("diff1")).files[0]);
    REQUIRE(d.size() == 9);
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(d.force[i] < 0.0);
        if (i > 0) CHECK(std::abs(d.force[i]) < std::abs(d.force[i - 1]));
    }
}

TEST_CASE("simulate is reproducible and flagged") {
    const auto c = parse_config("preset = sample_a\n");
    const auto one = scratch("sim1"), two = scratch("sim2"), other = scratch("sim3");
    const auto a = cmd_simulate(c, 7, one);
    cmd_simulate(c, 7, two);
    cmd_simulate(c, 8, other);
    for (const auto& f : a.files) {
        const auto rel = fs::relative(f, one);
        CHECK(slurp(f) == slurp(two / rel));
        CHECK(file_is_synthetic(f));
    }
    CHECK(slurp(one / "scans.csv") != slurp(other / "scans.csv"));

    int sweeps = 0;
    for (const auto& e : fs::directory_iterator(one / "sweeps"))
        if (e.path().extension() == ".csv") ++sweeps;
    CHECK(sweeps == 29);

    const auto theory = read_force_curve(one / "theory.csv");
    const auto scans = read_repeated_scans(one / "scans.csv");
    double ss = 0.0;
    std::size_t n = 0;
    for (const auto& row : scans.rows)
        for (std::size_t i = 0; i < row.size(); ++i, ++n) ss += std::pow(row[i] - theory.force[i], 2);
    CHECK(n >= 10000);
    CHECK(std::sqrt(ss / n) == doctest::Approx(c.force_noise).epsilon(0.05));
}

TEST_CASE("calibrate and compare on simulated data") {
    const auto dir = scratch("cal");
    const auto sim = parse_config("preset = sample_a\n");
    cmd_simulate(sim, 3, dir);

    const auto c = parse_config("preset = sample_a\n[calibration]\nscan_manifest = sweeps/manifest.txt\n"
                                "contacts_file = contacts.csv\n",
                                dir);
    const auto out = cmd_calibrate(c, dir);
    const auto v = report_values(dir / "calibration_report.txt");
    const double v0 = std::stod(v.at("V0_V")), km = std::stod(v.at("km_nN")), z0 = std::stod(v.at("z0_nm"));
    CHECK(std::abs(v0 - -0.341) <= 4.0 * std::stod(v.at("V0_V").substr(v.at("V0_V").find("+-") + 2)));
    CHECK(km == doctest::Approx(1.646).epsilon(0.01));
    CHECK(z0 == doctest::Approx(32.4).epsilon(0.05));
    for (const auto& f : out.files) CHECK(file_is_synthetic(f));

    const auto cmp = cmd_compare(sim, dir);
    for (const auto& f : cmp.files) CHECK(file_is_synthetic(f));
    CHECK(report_values(dir / "compare_report.txt").at("consistent") == "true");

    const auto missing = parse_config("preset = sample_a\n");
    CHECK_THROWS_AS(cmd_calibrate(missing, dir), Error);

    CHECK(code_of("[calibration]\noffset_mode = subtract\n") == ErrorCode::Config);
    CHECK(code_of("[calibration]\noffset_mode = both\n") == ErrorCode::Config);
    const auto far = parse_config("[geometry]\nz_min_nm = 250\nz_step_nm = 25\nz_count = 100\n");
    const auto far_dir = dir / "far";
    fs::create_directories(far_dir);
    cmd_force(far, far_dir);
    const auto sub = parse_config("preset = sample_a\n[calibration]\nscan_manifest = sweeps/manifest.txt\n"
                                  "contacts_file = contacts.csv\noffset_mode = subtract\n"
                                  "independent_force_file = far/force.csv\n",
                                  dir);
    const auto sub_dir = dir / "sub";
    fs::create_directories(sub_dir);
    cmd_calibrate(sub, sub_dir);
    const auto sv = report_values(sub_dir / "calibration_report.txt");
    CHECK(sv.at("V0_V") == v.at("V0_V"));
    CHECK(sv.at("km_nN") == v.at("km_nN"));
    CHECK(slurp(sub_dir / "calibration_report.txt").find("offset_mode = subtract") != std::string::npos);
}

TEST_CASE("compare on measured-looking input is not flagged") {
    const auto dir = scratch("plain");
    const auto c = parse_config("[geometry]\nz_count = 60\n");
    const auto theory = theory_curve(c, c.plate_model);
    {
        std::ofstream t(dir / "theory.csv");
        write_force_curve(t, theory);
        std::ofstream s(dir / "scans.csv");
        write_repeated_scans(s, synthetic_scans(theory, 5 * pN, 10, 1));
    }
    const auto out = cmd_compare(c, dir);
    for (const auto& f : out.files) CHECK_FALSE(file_is_synthetic(f));
}
