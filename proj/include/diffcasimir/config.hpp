#pragma once

// Run configuration for the command-line pipeline.
//
// Format: `[section]` headers, `key = value` lines, `#` comments. Every
// physical quantity carries its unit in the key name (radius_um, z_min_nm).
// A top-level `preset = sample_a|sample_b` line seeds all defaults; later
// keys override them. Unknown sections or keys are rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diffcasimir/electrostatics.hpp"
#include "diffcasimir/lifshitz.hpp"
#include "diffcasimir/materials.hpp"
#include "diffcasimir/stats.hpp"

namespace diffcasimir {

struct RunConfig {
    std::string preset; // empty when none

    // geometry
    double radius = 100.9e-6; // m
    double z_min = 60e-9;
    double z_step = 0.17e-9;
    int z_count = 400;

    // materials
    std::string sphere_model = "gold_surrogate";
    std::string plate_model = "si_intrinsic_surrogate";
    std::string plate_b_model = "si_doped_b";
    CatalogOptions catalog;
    std::optional<std::filesystem::path> optical_data_file; // registered as model "tabulated"
    LowFrequencyTail optical_low_tail = LowFrequencyTail::DrudeLike;

    QuadratureSpec quadrature;
    unsigned threads = 0;

    // roughness
    bool roughness_apply = false;
    double roughness_sigma = 0.0; // m, Gaussian surrogate when no topography is given
    std::optional<std::filesystem::path> sphere_topography, plate_topography;
    int roughness_bins = 64;

    // calibration
    std::optional<std::filesystem::path> scan_manifest, contacts_file;
    double deflection_coefficient = 47.8e-9; // m per signal unit, used without contacts
    std::optional<std::filesystem::path> independent_force_file; // force curve removed from S0 in subtract mode
    CalibrationOptions calibration;

    // statistics
    double confidence = 0.95;
    CombinationRule random_systematic_rule = CombinationRule::Dominant;
    CombinationRule band_rule = CombinationRule::Quadrature;
    double systematic_error = 1.2e-12; // N
    double delta_z = 1.0e-9;           // m
    double optical_fraction = 0.005;
    double consistency_fraction = 0.95;
    std::optional<std::filesystem::path> theory_file, scans_file;

    // simulation
    std::uint64_t seed = 1;
    double force_noise = 25e-12; // N
    int repetitions = 40;
    double signal_noise = 1e-3;
    SweepPreset sweep = sample_a_sweep();
    double sweep_d_min = 200e-9, sweep_d_max = 2.6e-6, sweep_d_step = 20e-9;

    bool magnitude_column = false;
    std::filesystem::path output_dir = "out";

    // Effective key/value pairs after preset merging ("section.key" -> value).
    std::map<std::string, std::string> entries;
    std::filesystem::path base_dir;

    std::vector<double> z_grid() const;
    /// FNV-1a 64 of the canonical effective configuration.
    std::uint64_t hash() const;
    std::string hash_hex() const;
    /// Catalog with the configured options, plus "tabulated" when an optical
    /// data file is set.
    ModelCatalog catalog_models() const;
};

/// Throws Error(Config) on syntax errors, unknown keys, bad values or
/// missing referenced files. Relative paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Text of a preset, usable as a starting config file.
std::string preset_text(const std::string& name);

std::uint64_t fnv1a64(const std::string& data);

} // namespace diffcasimir
