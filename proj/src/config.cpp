#include "diffcasimir/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "diffcasimir/constants.hpp"
#include "diffcasimir/error.hpp"

namespace diffcasimir {

namespace {

struct KeySpec {
    const char* section;
    const char* key;
    const char* fallback;
};

// Every accepted key with its default. Order defines the canonical text.
constexpr KeySpec schema[] = {
    {"geometry", "radius_um", "100.9"},
    {"geometry", "z_min_nm", "60"},
    {"geometry", "z_step_nm", "0.17"},
    {"geometry", "z_count", "400"},

    {"materials", "sphere", "gold_surrogate"},
    {"materials", "plate", "si_intrinsic_surrogate"},
    {"materials", "plate_b", "si_doped_b"},
    {"materials", "gold_plasma_ev", "9.0"},
    {"materials", "gold_relaxation_ev", "0.035"},
    {"materials", "doped_density_cm3", "3.2e20"},
    {"materials", "doped_mass_ratio", "0.26"},
    {"materials", "doped_resistivity_ohm_cm", "6.7e-4"},
    {"materials", "ideal_plasma_ev", "1e5"},
    {"materials", "optical_data_file", ""},
    {"materials", "optical_low_tail", "drude"},

    {"quadrature", "relative_tolerance", "1e-6"},
    {"quadrature", "xi_cutoff_factor", "50"},
    {"quadrature", "y_cutoff", "60"},
    {"quadrature", "max_subdivisions", "2000"},
    {"quadrature", "threads", "0"},

    {"roughness", "apply", "false"},
    {"roughness", "sigma_nm", "0"},
    {"roughness", "sphere_topography_file", ""},
    {"roughness", "plate_topography_file", ""},
    {"roughness", "bin_count", "64"},

    {"calibration", "scan_manifest", ""},
    {"calibration", "contacts_file", ""},
    {"calibration", "deflection_coefficient_nm", "47.8"},
    {"calibration", "fit_min_nm", "300"},
    {"calibration", "fit_max_nm", "2500"},
    {"calibration", "grid_step_nm", "0"},
    {"calibration", "max_iterations", "100"},
    {"calibration", "offset_mode", "cofit"},
    {"calibration", "independent_force_file", ""},

    {"statistics", "confidence", "0.95"},
    {"statistics", "random_systematic_rule", "dominant"},
    {"statistics", "band_rule", "quadrature"},
    {"statistics", "systematic_pN", "1.2"},
    {"statistics", "delta_z_nm", "1.0"},
    {"statistics", "optical_fraction", "0.005"},
    {"statistics", "consistency_fraction", "0.95"},
    {"statistics", "theory_file", ""},
    {"statistics", "scans_file", ""},

    {"simulation", "seed", "1"},
    {"simulation", "force_noise_pN", "25"},
    {"simulation", "repetitions", "40"},
    {"simulation", "signal_noise", "1e-3"},
    {"simulation", "v0_V", "-0.341"},
    {"simulation", "km_nN", "1.646"},
    {"simulation", "z0_nm", "32.4"},
    {"simulation", "m_nm", "47.8"},
    {"simulation", "v_min_V", "-0.712"},
    {"simulation", "v_max_V", "-0.008"},
    {"simulation", "voltage_count", "29"},
    {"simulation", "sweep_d_min_nm", "200"},
    {"simulation", "sweep_d_max_nm", "2600"},
    {"simulation", "sweep_d_step_nm", "20"},

    {"output", "directory", "out"},
    {"output", "magnitude_column", "false"},
};

const char* preset_a = R"(# high-resistivity silicon plate
[geometry]
radius_um = 100.9
z_min_nm = 61.19
z_step_nm = 0.17
z_count = 400
[materials]
sphere = gold_surrogate
plate = si_intrinsic_surrogate
[calibration]
fit_min_nm = 300
fit_max_nm = 2500
deflection_coefficient_nm = 47.8
[statistics]
delta_z_nm = 1.0
[simulation]
repetitions = 40
v0_V = -0.341
km_nN = 1.646
z0_nm = 32.4
m_nm = 47.8
v_min_V = -0.712
v_max_V = -0.008
voltage_count = 29
sweep_d_min_nm = 200
)";

const char* preset_b = R"(# diffusion-doped silicon plate
[geometry]
radius_um = 100.9
z_min_nm = 60.51
z_step_nm = 0.17
z_count = 400
[materials]
sphere = gold_surrogate
plate = si_doped_b
[calibration]
fit_min_nm = 100
fit_max_nm = 2500
deflection_coefficient_nm = 47.9
[statistics]
delta_z_nm = 0.8
[simulation]
repetitions = 39
v0_V = -0.337
km_nN = 1.700
z0_nm = 32.3
m_nm = 47.9
v_min_V = -0.611
v_max_V = -0.008
voltage_count = 25
sweep_d_min_nm = 60
)";

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

const KeySpec* find_key(const std::string& section, const std::string& key) {
    for (const auto& k : schema)
        if (section == k.section && key == k.key) return &k;
    return nullptr;
}

bool known_section(const std::string& section) {
    for (const auto& k : schema)
        if (section == k.section) return true;
    return false;
}

// Applies `text` on top of `entries`. A top-level preset line is returned
// through `preset` and not stored.
void apply_text(const std::string& text, std::map<std::string, std::string>& entries, std::string* preset) {
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "config line " + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') fail(ErrorCode::Config, where + "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_section(section)) fail(ErrorCode::Config, where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(ErrorCode::Config, where + "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) {
            if (key != "preset" || !preset) fail(ErrorCode::Config, where + "key '" + key + "' outside a section");
            *preset = value;
            continue;
        }
        if (!find_key(section, key)) fail(ErrorCode::Config, where + "unknown key '" + key + "' in [" + section + "]");
        entries[section + "." + key] = value;
    }
}

class Reader {
public:
    explicit Reader(const std::map<std::string, std::string>& e) : e_(e) {}

    const std::string& str(const std::string& name) const { return e_.at(name); }

    double num(const std::string& name) const {
        const auto& s = str(name);
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
            fail(ErrorCode::Config, name + ": expected a number, got '" + s + "'");
        return v;
    }

    double positive(const std::string& name) const {
        const double v = num(name);
        if (!(v > 0.0)) fail(ErrorCode::Config, name + " must be positive");
        return v;
    }

    double non_negative(const std::string& name) const {
        const double v = num(name);
        if (!(v >= 0.0)) fail(ErrorCode::Config, name + " must be >= 0");
        return v;
    }

    long integer(const std::string& name, long lo) const {
        const auto& s = str(name);
        errno = 0;
        char* end = nullptr;
        const long v = std::strtol(s.c_str(), &end, 10);
        if (s.empty() || *end != '\0' || errno == ERANGE) fail(ErrorCode::Config, name + ": expected an integer");
        if (v < lo) fail(ErrorCode::Config, name + " must be >= " + std::to_string(lo));
        return v;
    }

    std::uint64_t u64(const std::string& name) const {
        const auto& s = str(name);
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (s.empty() || s.front() == '-' || *end != '\0' || errno == ERANGE)
            fail(ErrorCode::Config, name + ": expected an unsigned integer");
        return v;
    }

    bool flag(const std::string& name) const {
        const auto& s = str(name);
        if (s == "true" || s == "yes" || s == "1") return true;
        if (s == "false" || s == "no" || s == "0") return false;
        fail(ErrorCode::Config, name + ": expected true or false");
    }

    double fraction(const std::string& name) const {
        const double v = num(name);
        if (!(v > 0.0 && v < 1.0)) fail(ErrorCode::Config, name + " must lie in (0, 1)");
        return v;
    }

private:
    const std::map<std::string, std::string>& e_;
};

std::optional<std::filesystem::path> existing_file(const Reader& r, const std::string& name,
                                                   const std::filesystem::path& base) {
    const auto& s = r.str(name);
    if (s.empty()) return std::nullopt;
    std::filesystem::path p(s);
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) fail(ErrorCode::Config, name + ": file not found: " + p.string());
    return p;
}

CombinationRule rule(const Reader& r, const std::string& name) {
    try {
        return parse_rule(r.str(name));
    } catch (const Error& e) {
        fail(ErrorCode::Config, name + ": " + e.what());
    }
}

} // namespace

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string preset_text(const std::string& name) {
    if (name == "sample_a") return std::string("preset = sample_a\n") + preset_a;
    if (name == "sample_b") return std::string("preset = sample_b\n") + preset_b;
    fail(ErrorCode::Config, "unknown preset '" + name + "' (expected sample_a or sample_b)");
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    std::map<std::string, std::string> entries;
    for (const auto& k : schema) entries[std::string(k.section) + "." + k.key] = k.fallback;

    std::map<std::string, std::string> user;
    std::string preset;
    apply_text(text, user, &preset);
    if (!preset.empty()) {
        if (preset == "sample_a") apply_text(preset_a, entries, nullptr);
        else if (preset == "sample_b") apply_text(preset_b, entries, nullptr);
        else fail(ErrorCode::Config, "unknown preset '" + preset + "' (expected sample_a or sample_b)");
    }
    for (auto& [k, v] : user) entries[k] = v;

    RunConfig c;
    c.preset = preset;
    c.base_dir = base_dir;
    const Reader r(entries);
    constexpr double nm = constants::nm;

    c.radius = r.positive("geometry.radius_um") * constants::um;
    c.z_min = r.positive("geometry.z_min_nm") * nm;
    c.z_step = r.positive("geometry.z_step_nm") * nm;
    c.z_count = static_cast<int>(r.integer("geometry.z_count", 1));

    c.sphere_model = r.str("materials.sphere");
    c.plate_model = r.str("materials.plate");
    c.plate_b_model = r.str("materials.plate_b");
    c.catalog.gold_plasma_ev = r.positive("materials.gold_plasma_ev");
    c.catalog.gold_relaxation_ev = r.non_negative("materials.gold_relaxation_ev");
    c.catalog.doped_carriers.density_m3 = r.non_negative("materials.doped_density_cm3") * 1e6;
    c.catalog.doped_carriers.effective_mass_ratio = r.positive("materials.doped_mass_ratio");
    c.catalog.doped_carriers.resistivity_ohm_m = r.non_negative("materials.doped_resistivity_ohm_cm") * 1e-2;
    c.catalog.ideal_plasma_ev = r.positive("materials.ideal_plasma_ev");
    c.optical_data_file = existing_file(r, "materials.optical_data_file", base_dir);
    const auto& tail = r.str("materials.optical_low_tail");
    if (tail == "drude") c.optical_low_tail = LowFrequencyTail::DrudeLike;
    else if (tail == "zero") c.optical_low_tail = LowFrequencyTail::Zero;
    else fail(ErrorCode::Config, "materials.optical_low_tail: expected drude or zero");

    c.quadrature.relative_tolerance = r.positive("quadrature.relative_tolerance");
    c.quadrature.xi_cutoff_factor = r.positive("quadrature.xi_cutoff_factor");
    c.quadrature.y_cutoff = r.positive("quadrature.y_cutoff");
    c.quadrature.max_subdivisions = static_cast<int>(r.integer("quadrature.max_subdivisions", 1));
    try {
        c.quadrature.validate();
    } catch (const Error& e) {
        fail(ErrorCode::Config, std::string("quadrature: ") + e.what());
    }
    c.threads = static_cast<unsigned>(r.integer("quadrature.threads", 0));

    c.roughness_apply = r.flag("roughness.apply");
    c.roughness_sigma = r.non_negative("roughness.sigma_nm") * nm;
    c.sphere_topography = existing_file(r, "roughness.sphere_topography_file", base_dir);
    c.plate_topography = existing_file(r, "roughness.plate_topography_file", base_dir);
    c.roughness_bins = static_cast<int>(r.integer("roughness.bin_count", 2));

    c.scan_manifest = existing_file(r, "calibration.scan_manifest", base_dir);
    c.contacts_file = existing_file(r, "calibration.contacts_file", base_dir);
    c.deflection_coefficient = r.non_negative("calibration.deflection_coefficient_nm") * nm;
    c.calibration.fit_min = r.non_negative("calibration.fit_min_nm") * nm;
    c.calibration.fit_max = r.positive("calibration.fit_max_nm") * nm;
    if (!(c.calibration.fit_max > c.calibration.fit_min))
        fail(ErrorCode::Config, "calibration: fit_max_nm must exceed fit_min_nm");
    c.calibration.grid_step = r.non_negative("calibration.grid_step_nm") * nm;
    c.calibration.max_iterations = static_cast<int>(r.integer("calibration.max_iterations", 1));
    const auto& mode = r.str("calibration.offset_mode");
    if (mode == "cofit") c.calibration.offset_mode = OffsetMode::CoFit;
    else if (mode == "subtract") c.calibration.offset_mode = OffsetMode::Subtract;
    else fail(ErrorCode::Config, "calibration.offset_mode: expected cofit or subtract");
    c.independent_force_file = existing_file(r, "calibration.independent_force_file", base_dir);
    if (c.calibration.offset_mode == OffsetMode::Subtract && !c.independent_force_file)
        fail(ErrorCode::Config, "calibration.offset_mode = subtract needs calibration.independent_force_file");

    c.confidence = r.fraction("statistics.confidence");
    c.calibration.confidence = c.confidence;
    c.random_systematic_rule = rule(r, "statistics.random_systematic_rule");
    c.band_rule = rule(r, "statistics.band_rule");
    c.systematic_error = r.non_negative("statistics.systematic_pN") * constants::pN;
    c.delta_z = r.non_negative("statistics.delta_z_nm") * nm;
    c.optical_fraction = r.non_negative("statistics.optical_fraction");
    c.consistency_fraction = r.fraction("statistics.consistency_fraction");
    c.theory_file = existing_file(r, "statistics.theory_file", base_dir);
    c.scans_file = existing_file(r, "statistics.scans_file", base_dir);

    c.seed = r.u64("simulation.seed");
    c.force_noise = r.non_negative("simulation.force_noise_pN") * constants::pN;
    c.repetitions = static_cast<int>(r.integer("simulation.repetitions", 2));
    c.signal_noise = r.non_negative("simulation.signal_noise");
    auto& sp = c.sweep.params;
    sp.v0 = r.num("simulation.v0_V");
    sp.km = r.positive("simulation.km_nN") * 1e-9;
    sp.z0 = r.num("simulation.z0_nm") * nm;
    sp.m = r.non_negative("simulation.m_nm") * nm;
    sp.s0_offset = 0.0;
    c.sweep.v_lo = r.num("simulation.v_min_V");
    c.sweep.v_hi = r.num("simulation.v_max_V");
    c.sweep.voltage_count = static_cast<int>(r.integer("simulation.voltage_count", 3));
    c.sweep.fit_min = c.calibration.fit_min;
    c.sweep.fit_max = c.calibration.fit_max;
    c.sweep_d_min = r.num("simulation.sweep_d_min_nm") * nm;
    c.sweep_d_max = r.num("simulation.sweep_d_max_nm") * nm;
    c.sweep_d_step = r.positive("simulation.sweep_d_step_nm") * nm;
    if (!(c.sweep_d_max > c.sweep_d_min) || !(c.sweep_d_min + sp.z0 > 0.0))
        fail(ErrorCode::Config, "simulation: sweep separations must be ascending and positive");

    c.magnitude_column = r.flag("output.magnitude_column");
    std::filesystem::path out(r.str("output.directory"));
    if (out.empty()) fail(ErrorCode::Config, "output.directory must not be empty");
    c.output_dir = out.is_relative() ? base_dir / out : out;

    c.entries = std::move(entries);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    return parse_config(ss.str(), base);
}

std::vector<double> RunConfig::z_grid() const {
    std::vector<double> z(static_cast<std::size_t>(z_count));
    for (int i = 0; i < z_count; ++i) z[static_cast<std::size_t>(i)] = z_min + z_step * i;
    return z;
}

std::uint64_t RunConfig::hash() const {
    std::string canon;
    if (!preset.empty()) canon += "preset=" + preset + "\n";
    for (const auto& [k, v] : entries) canon += k + "=" + v + "\n";
    return fnv1a64(canon);
}

std::string RunConfig::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

ModelCatalog RunConfig::catalog_models() const {
    auto cat = builtin_models(catalog);
    if (optical_data_file) {
        // KK grid spanning the frequencies the force integrand samples
        std::vector<double> xi;
        for (double lx = 11.0; lx <= 19.0 + 1e-9; lx += 0.05) xi.push_back(std::pow(10.0, lx));
        cat.add("tabulated", kk_transform(read_optical_data(*optical_data_file), xi, ExtrapolationPolicy{optical_low_tail}));
    }
    return cat;
}

} // namespace diffcasimir
