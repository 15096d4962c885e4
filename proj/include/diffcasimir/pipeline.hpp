#pragma once

// Commands behind the command-line tool. Each writes its tables into an
// output directory and returns the paths plus a short text summary.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "diffcasimir/config.hpp"
#include "diffcasimir/force_curve.hpp"
#include "diffcasimir/roughness.hpp"

namespace diffcasimir {

struct CommandOutput {
    std::vector<std::filesystem::path> files;
    std::string summary;
};

/// Header comment block shared by every output file.
std::vector<std::string> output_header(const RunConfig& config, const std::string& command, bool synthetic);

/// True when a file's comment block declares `synthetic = true`.
bool file_is_synthetic(const std::filesystem::path& path);

/// Combined offset distribution from the roughness section, or nullopt when
/// roughness is off.
std::optional<HeightDistribution> roughness_distribution(const RunConfig& config);

/// Sphere against `plate_model` on the configured grid, roughness-corrected
/// when enabled.
ForceCurve theory_curve(const RunConfig& config, const std::string& plate_model);

/// Lifshitz force on a log grid spanning [z_lo, z_hi], wrapped for
/// interpolation.
ForceInterpolant force_interpolant(const RunConfig& config, const std::string& plate_model, double z_lo, double z_hi);

CommandOutput cmd_permittivity(const RunConfig& config, const std::filesystem::path& out_dir);
CommandOutput cmd_force(const RunConfig& config, const std::filesystem::path& out_dir);
/// With `config_b`, subtracts config's curve from config_b's curve; otherwise
/// uses plate_b against plate from one config.
CommandOutput cmd_difference(const RunConfig& config, const RunConfig* config_b, const std::filesystem::path& out_dir);
CommandOutput cmd_calibrate(const RunConfig& config, const std::filesystem::path& out_dir);
/// Theory and scans come from the statistics section, or default to
/// theory.csv and scans.csv inside `out_dir` as written by cmd_simulate.
CommandOutput cmd_compare(const RunConfig& config, const std::filesystem::path& out_dir);
CommandOutput cmd_simulate(const RunConfig& config, std::uint64_t seed, const std::filesystem::path& out_dir);

} // namespace diffcasimir
