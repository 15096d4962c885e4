#include "diffcasimir/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "diffcasimir/constants.hpp"
#include "diffcasimir/csv_io.hpp"
#include "diffcasimir/electrostatics.hpp"
#include "diffcasimir/error.hpp"
#include "diffcasimir/lifshitz.hpp"
#include "diffcasimir/stats.hpp"

namespace fs = std::filesystem;

namespace diffcasimir {

namespace {

constexpr double nm = constants::nm;
constexpr double pN = constants::pN;

std::ofstream open_output(const fs::path& path) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorCode::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

// splitmix64: independent seeds for separate random streams
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string quad_line(const RunConfig& c) { return "quadrature: " + c.quadrature.describe(); }

std::string roughness_line(const RunConfig& c) {
    if (!c.roughness_apply) return "roughness: off";
    if (c.sphere_topography || c.plate_topography) {
        std::string s = "roughness: topography";
        if (c.sphere_topography) s += " sphere=" + c.sphere_topography->filename().string();
        if (c.plate_topography) s += " plate=" + c.plate_topography->filename().string();
        return s;
    }
    return "roughness: gaussian surrogate sigma_nm=" + format_sig(c.roughness_sigma / nm);
}

void write_force_table(std::ostream& out, const ForceCurve& curve, const Comments& comments, bool magnitude) {
    if (!magnitude) {
        write_force_curve(out, curve, comments);
        return;
    }
    curve.validate();
    write_comments(out, comments);
    out << (curve.has_error() ? "z_nm,F_pN,err_pN,absF_pN\n" : "z_nm,F_pN,absF_pN\n");
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out << format_sig(curve.z[i] / nm) << ',' << format_sig(curve.force[i] / pN);
        if (curve.has_error()) out << ',' << format_sig(curve.error[i] / pN);
        out << ',' << format_sig(std::abs(curve.force[i]) / pN) << '\n';
    }
}

double value_at(const ForceCurve& c, double z) {
    return resample(c, {z}).force.front();
}

// Force for simulated calibration offsets. Outside the tabulated span the
// curve continues with the sphere-plate limits, z^-2 close in and z^-3 far
// out; only the jump-to-contact search goes there.
SeparationForce extended(const ForceInterpolant& f) {
    return [f](double z) {
        if (z < f.z_min()) return f(f.z_min()) * std::pow(f.z_min() / z, 2.0);
        if (z > f.z_max()) return f(f.z_max()) * std::pow(f.z_max() / z, 3.0);
        return f(z);
    };
}

} // namespace

std::vector<std::string> output_header(const RunConfig& c, const std::string& command, bool synthetic) {
    std::vector<std::string> h;
    h.push_back("diffcasimir " + command);
    h.push_back("config_hash = " + c.hash_hex());
    if (!c.preset.empty()) h.push_back("preset = " + c.preset);
    h.push_back("units: z_nm in nm, F_pN in pN (negative = attraction), xi in rad/s, V in volts");
    h.push_back(std::string("rules: random+systematic=") + rule_name(c.random_systematic_rule) +
                ", band=" + rule_name(c.band_rule) + ", confidence=" + format_sig(c.confidence));
    h.push_back(std::string("synthetic = ") + (synthetic ? "true" : "false"));
    return h;
}

bool file_is_synthetic(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] != '#') break;
        if (line.find("synthetic = true") != std::string::npos) return true;
    }
    return false;
}

std::optional<HeightDistribution> roughness_distribution(const RunConfig& c) {
    if (!c.roughness_apply) return std::nullopt;
    if (c.sphere_topography && c.plate_topography)
        return combine(read_topography(*c.sphere_topography, c.roughness_bins),
                       read_topography(*c.plate_topography, c.roughness_bins));
    if (c.sphere_topography) return read_topography(*c.sphere_topography, c.roughness_bins);
    if (c.plate_topography) return read_topography(*c.plate_topography, c.roughness_bins);
    require(c.roughness_sigma > 0.0, ErrorCode::Config,
            "roughness.apply needs sigma_nm > 0 or a topography file");
    return HeightDistribution::gaussian(c.roughness_sigma);
}

ForceInterpolant force_interpolant(const RunConfig& c, const std::string& plate_model, double z_lo, double z_hi) {
    require(z_lo > 0.0 && z_hi > z_lo, ErrorCode::Domain, "interpolation span must be positive and ascending");
    const auto cat = c.catalog_models();
    // 1% spacing in z keeps the monotone cubic far below the quadrature tolerance
    const int n = std::max(40, static_cast<int>(std::ceil(std::log(z_hi / z_lo) / 0.01)) + 1);
    std::vector<double> grid(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = z_lo * std::pow(z_hi / z_lo, double(i) / (n - 1));
    grid.back() = z_hi;
    const SpherePlateGeometry geom(c.radius, grid);
    return ForceInterpolant(lifshitz_force(geom, cat.get(c.sphere_model), cat.get(plate_model), c.quadrature, c.threads));
}

ForceCurve theory_curve(const RunConfig& c, const std::string& plate_model) {
    const auto grid = c.z_grid();
    const auto cat = c.catalog_models();
    const auto& sphere = cat.get(c.sphere_model);
    const auto& plate = cat.get(plate_model);
    ForceCurve curve;
    if (const auto dist = roughness_distribution(c)) {
        const double lo = grid.front() + dist->offsets().front();
        const double hi = grid.back() + dist->offsets().back();
        if (!(lo > 0.0)) {
            // let roughness_correct report the touching pair
            roughness_correct([](double) { return 0.0; }, grid, *dist);
        }
        const auto fn = force_interpolant(c, plate_model, lo * (1 - 1e-9), hi * (1 + 1e-9));
        curve = roughness_correct([&fn](double z) { return fn(z); }, grid, *dist, 1);
    } else {
        curve = lifshitz_force(SpherePlateGeometry(c.radius, grid), sphere, plate, c.quadrature, c.threads);
    }
    curve.meta.sphere_model = c.sphere_model;
    curve.meta.plate_model = plate_model;
    curve.meta.quadrature = c.quadrature.describe();
    return curve;
}

CommandOutput cmd_permittivity(const RunConfig& c, const fs::path& out_dir) {
    const auto cat = c.catalog_models();
    const auto& gold = cat.get(c.sphere_model);
    const auto& si_a = cat.get(c.plate_model);
    const auto& si_b = cat.get(c.plate_b_model);
    const fs::path path = out_dir / "permittivity.csv";
    auto out = open_output(path);
    auto header = output_header(c, "permittivity", false);
    header.push_back("columns: eps_gold=" + c.sphere_model + ", eps_si_a=" + c.plate_model + ", eps_si_b=" +
                     c.plate_b_model);
    write_comments(out, header);
    out << "xi_rad_s,eps_gold,eps_si_a,eps_si_b\n";
    constexpr int per_decade = 20;
    constexpr int count = 5 * per_decade + 1;
    for (int i = 0; i < count; ++i) {
        const double xi = std::pow(10.0, 13.0 + static_cast<double>(i) / per_decade);
        out << format_sig(xi, 8) << ',' << format_sig(gold(xi), 10) << ',' << format_sig(si_a(xi), 10) << ','
            << format_sig(si_b(xi), 10) << '\n';
    }
    finish(out, path);
    return {{path}, "permittivity: " + std::to_string(count) + " frequencies 1e13..1e18 rad/s"};
}

CommandOutput cmd_force(const RunConfig& c, const fs::path& out_dir) {
    const auto curve = theory_curve(c, c.plate_model);
    const fs::path path = out_dir / "force.csv";
    auto out = open_output(path);
    auto header = output_header(c, "force", false);
    header.push_back("models: sphere=" + c.sphere_model + ", plate=" + c.plate_model);
    header.push_back(quad_line(c));
    header.push_back(roughness_line(c));
    write_force_table(out, curve, header, c.magnitude_column);
    finish(out, path);
    std::string summary = "force: " + std::to_string(curve.size()) + " points, F(" +
                          format_sig(curve.z.front() / nm) + " nm) = " + format_sig(curve.force.front() / pN) + " pN";
    if (SpherePlateGeometry(c.radius, curve.z).pfa_warning()) summary += "\nwarning: z/R above 0.01";
    return {{path}, summary};
}

CommandOutput cmd_difference(const RunConfig& c, const RunConfig* cb, const fs::path& out_dir) {
    ForceCurve a, b;
    if (cb) {
        a = theory_curve(c, c.plate_model);
        b = theory_curve(*cb, cb->plate_model);
    } else {
        a = theory_curve(c, c.plate_model);
        b = theory_curve(c, c.plate_b_model);
    }
    auto diff = difference_force(b, a);
    diff.error.clear();
    const fs::path path = out_dir / "difference.csv";
    auto out = open_output(path);
    auto header = output_header(c, "difference", false);
    if (cb) header.push_back("config_b_hash = " + cb->hash_hex());
    header.push_back("F_pN = F_b - F_a with a: " + c.sphere_model + "/" + a.meta.plate_model + ", b: " +
                     (cb ? cb->sphere_model : c.sphere_model) + "/" + b.meta.plate_model);
    header.push_back(quad_line(c));
    header.push_back(roughness_line(c));
    write_force_table(out, diff, header, c.magnitude_column);
    finish(out, path);
    std::string summary = "difference: " + std::to_string(diff.size()) + " points";
    if (diff.z.front() <= 70 * nm && diff.z.back() >= 70 * nm)
        summary += ", F_b - F_a at 70 nm = " + format_sig(value_at(diff, 70 * nm) / pN, 4) + " pN";
    return {{path}, summary};
}

CommandOutput cmd_calibrate(const RunConfig& c, const fs::path& out_dir) {
    require(c.scan_manifest.has_value(), ErrorCode::Config, "calibrate needs calibration.scan_manifest");
    const auto scans = read_sweep_set(*c.scan_manifest);
    bool synthetic = file_is_synthetic(*c.scan_manifest);
    auto options = c.calibration;
    if (options.offset_mode == OffsetMode::Subtract) {
        const auto known = read_force_curve(*c.independent_force_file);
        synthetic = synthetic || known.meta.synthetic;
        options.independent_force = [f = ForceInterpolant(known)](double z) { return f(z); };
    }
    CalibrationResult res;
    std::string m_source;
    if (c.contacts_file) {
        synthetic = synthetic || file_is_synthetic(*c.contacts_file);
        const auto dc = estimate_deflection_coefficient(read_contacts(*c.contacts_file), c.confidence);
        res = extract_calibration(scans, dc, c.radius, options);
        m_source = "contacts";
    } else {
        res = extract_calibration(scans, c.deflection_coefficient, c.radius, options);
        m_source = "config";
    }
    const bool subtract = res.offset_mode == OffsetMode::Subtract;

    const fs::path report_path = out_dir / "calibration_report.txt";
    auto rep = open_output(report_path);
    auto header = output_header(c, "calibrate", synthetic);
    header.push_back("scans = " + std::to_string(scans.size()) + ", m from " + m_source);
    header.push_back("fit range z_nm = " + format_sig(c.calibration.fit_min / nm) + ".." +
                     format_sig(c.calibration.fit_max / nm) + ", errors are half-widths at confidence " +
                     format_sig(res.confidence));
    header.push_back(subtract ? "offset_mode = subtract, S0 has the independent force / km removed"
                              : "offset_mode = cofit, S0 is the fitted per-separation intercept");
    write_comments(rep, header);
    std::ostringstream body;
    body << "V0_V = " << format_sig(res.v0, 8) << " +- " << format_sig(res.v0_error, 3) << '\n'
         << "km_nN = " << format_sig(res.km / 1e-9, 8) << " +- " << format_sig(res.km_error / 1e-9, 3) << '\n'
         << "z0_nm = " << format_sig(res.z0 / nm, 8) << " +- " << format_sig(res.z0_error / nm, 3) << '\n'
         << "m_nm = " << format_sig(res.m / nm, 8) << " +- " << format_sig(res.m_error / nm, 3) << '\n'
         << "V0_series_std_V = " << format_sig(res.v0_series_std, 4) << '\n'
         << "S0_std = " << format_sig(res.s0_std, 4) << '\n'
         << "reduced_chi2 = " << format_sig(res.reduced_chi2, 4) << '\n'
         << "points_used = " << res.points_used << '\n'
         << "iterations = " << res.iterations << '\n';
    rep << body.str();
    finish(rep, report_path);

    const fs::path series_path = out_dir / "calibration_series.csv";
    auto ser = open_output(series_path);
    write_comments(ser, header);
    ser << "z_nm,V0_V,V0_sigma_V,C_per_V2,C_sigma_per_V2,S0\n";
    for (std::size_t i = 0; i < res.v0_series.size(); ++i) {
        ser << format_sig(res.v0_series[i].separation / nm, 8) << ',' << format_sig(res.v0_series[i].value, 8) << ','
            << format_sig(res.v0_series[i].sigma, 4) << ',' << format_sig(res.curvature_series[i].value, 8) << ','
            << format_sig(res.curvature_series[i].sigma, 4) << ',' << format_sig(res.s0_series[i].value, 8) << '\n';
    }
    finish(ser, series_path);
    return {{report_path, series_path}, body.str()};
}

CommandOutput cmd_compare(const RunConfig& c, const fs::path& out_dir) {
    const fs::path theory_path = c.theory_file.value_or(out_dir / "theory.csv");
    const fs::path scans_path = c.scans_file.value_or(out_dir / "scans.csv");
    const auto theory_raw = read_force_curve(theory_path);
    const auto scans = read_repeated_scans(scans_path);
    const bool synthetic = theory_raw.meta.synthetic || file_is_synthetic(scans_path);

    const auto mean = mean_curve(scans);
    const auto theory = same_grid(theory_raw.z, scans.z) ? theory_raw : resample(theory_raw, scans.z);
    const auto random = student_t_random_error(scans, c.confidence);
    const auto expt = combine_random_systematic(random, c.systematic_error, c.random_systematic_rule);
    const auto terr = theory_error(theory, c.delta_z, c.optical_fraction);
    const auto band = confidence_band(terr, expt, c.band_rule, c.confidence);
    const auto rep = consistency_report(theory, mean, band, c.consistency_fraction);

    auto header = output_header(c, "compare", synthetic);
    header.push_back("theory = " + theory_path.filename().string() + ", scans = " + scans_path.filename().string() +
                     ", repetitions = " + std::to_string(scans.repetitions()));
    header.push_back("systematic_pN = " + format_sig(c.systematic_error / pN) + ", delta_z_nm = " +
                     format_sig(c.delta_z / nm) + ", optical_fraction = " + format_sig(c.optical_fraction));

    const fs::path band_path = out_dir / "compare_band.csv";
    auto out = open_output(band_path);
    write_comments(out, header);
    out << "z_nm,theory_pN,mean_pN,diff_pN,Xi_pN,expt_err_pN,theory_err_pN\n";
    for (std::size_t i = 0; i < band.z.size(); ++i) {
        out << format_sig(band.z[i] / nm) << ',' << format_sig(theory.force[i] / pN) << ','
            << format_sig(mean.force[i] / pN) << ',' << format_sig((theory.force[i] - mean.force[i]) / pN) << ','
            << format_sig(band.half_width[i] / pN) << ',' << format_sig(expt.value[i] / pN) << ','
            << format_sig(terr.value[i] / pN) << '\n';
    }
    finish(out, band_path);

    std::ostringstream body;
    body << "points = " << rep.points << '\n'
         << "fraction_inside = " << format_sig(rep.fraction_inside, 4) << '\n'
         << "required_fraction = " << format_sig(c.consistency_fraction, 4) << '\n'
         << "consistent = " << (rep.consistent ? "true" : "false") << '\n'
         << "worst_z_nm = " << format_sig(rep.worst_z / nm) << '\n'
         << "worst_ratio = " << format_sig(rep.worst_ratio, 4) << '\n'
         << "random_error_pN_at_zmin = " << format_sig(random.value.front() / pN, 4) << '\n'
         << "theory_error_pN_at_zmin = " << format_sig(terr.value.front() / pN, 4) << '\n'
         << "Xi_pN_at_zmin = " << format_sig(band.half_width.front() / pN, 4) << '\n';
    const fs::path report_path = out_dir / "compare_report.txt";
    auto rout = open_output(report_path);
    write_comments(rout, header);
    rout << body.str();
    finish(rout, report_path);
    return {{band_path, report_path}, body.str()};
}

CommandOutput cmd_simulate(const RunConfig& c, std::uint64_t seed, const fs::path& out_dir) {
    CommandOutput result;
    auto header = output_header(c, "simulate", true);
    header.push_back("seed = " + std::to_string(seed));

    // theory and repeated force scans
    auto theory = theory_curve(c, c.plate_model);
    const fs::path theory_path = out_dir / "theory.csv";
    {
        auto out = open_output(theory_path);
        auto h = header;
        h.push_back("models: sphere=" + c.sphere_model + ", plate=" + c.plate_model);
        h.push_back(quad_line(c));
        h.push_back(roughness_line(c));
        write_force_curve(out, theory, h);
        finish(out, theory_path);
    }
    const auto scans = synthetic_scans(theory, c.force_noise, c.repetitions, stream_seed(seed, 0));
    const fs::path scans_path = out_dir / "scans.csv";
    {
        auto out = open_output(scans_path);
        auto h = header;
        h.push_back("force_noise_pN = " + format_sig(c.force_noise / pN));
        write_repeated_scans(out, scans, h);
        finish(out, scans_path);
    }
    result.files = {theory_path, scans_path};

    // electrostatic calibration sweeps with the Casimir force in the offset
    const auto& p = c.sweep.params;
    std::vector<double> d;
    for (double x = c.sweep_d_min; x <= c.sweep_d_max * (1 + 1e-12); x += c.sweep_d_step) d.push_back(x);
    const auto casimir = extended(force_interpolant(c, c.plate_model, (d.front() + p.z0) * 0.99,
                                                    (d.back() + p.z0) * 1.01));
    const auto volts = voltage_sweep(c.sweep.v_lo, c.sweep.v_hi, c.sweep.voltage_count);
    std::mt19937_64 rng(stream_seed(seed, 1));
    const fs::path sweep_dir = out_dir / "sweeps";
    const fs::path manifest_path = sweep_dir / "manifest.txt";
    auto manifest = open_output(manifest_path);
    auto sweep_header = header;
    sweep_header.push_back("truth: V0_V=" + format_sig(p.v0, 8) + " km_nN=" + format_sig(p.km / 1e-9, 8) +
                           " z0_nm=" + format_sig(p.z0 / nm, 8) + " m_nm=" + format_sig(p.m / nm, 8) +
                           " signal_noise=" + format_sig(c.signal_noise));
    write_comments(manifest, sweep_header);
    for (std::size_t i = 0; i < volts.size(); ++i) {
        auto scan = simulate_scan(p, c.radius, volts[i], d, casimir);
        add_signal_noise(scan, c.signal_noise, rng);
        char name[32];
        std::snprintf(name, sizeof name, "scan_%02zu.csv", i + 1);
        const fs::path path = sweep_dir / name;
        auto out = open_output(path);
        write_scan(out, scan, sweep_header);
        finish(out, path);
        manifest << name << '\n';
        result.files.push_back(path);
    }
    finish(manifest, manifest_path);
    result.files.push_back(manifest_path);

    auto contacts = simulate_contacts(p, c.radius, volts, casimir);
    {
        std::normal_distribution<double> noise(0.0, c.signal_noise);
        if (c.signal_noise > 0.0)
            for (auto& ct : contacts) ct.signal += noise(rng);
    }
    const fs::path contacts_path = out_dir / "contacts.csv";
    {
        auto out = open_output(contacts_path);
        write_contacts(out, contacts, sweep_header);
        finish(out, contacts_path);
    }
    result.files.push_back(contacts_path);
    result.summary = "simulate: seed " + std::to_string(seed) + ", " + std::to_string(c.repetitions) +
                     " force scans, " + std::to_string(volts.size()) + " voltage sweeps (synthetic)";
    return result;
}

} // namespace diffcasimir
