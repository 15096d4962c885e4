#pragma once

// Plain-text tables exchanged by the command-line tool. Lines starting with
// '#' are comments; every writer takes comment lines for provenance.
//
//   force curve     z_nm,F_pN[,err_pN]               (6 significant digits)
//   repeated scans  z_nm,F_pN_rep1,F_pN_rep2,...
//   scan            # V=<volts>  then  z_piezo_nm,S_def
//   contacts        V,S_contact,z_piezo_contact_nm
//   sweep set       directory of scan files, or a manifest listing them

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "diffcasimir/electrostatics.hpp"
#include "diffcasimir/force_curve.hpp"
#include "diffcasimir/stats.hpp"

namespace diffcasimir {

using Comments = std::vector<std::string>;

std::string format_sig(double value, int digits = 6);

void write_force_curve(std::ostream& out, const ForceCurve& curve, const Comments& comments = {});
ForceCurve read_force_curve(const std::filesystem::path& path);

void write_repeated_scans(std::ostream& out, const RepeatedScans& scans, const Comments& comments = {});
RepeatedScans read_repeated_scans(const std::filesystem::path& path);

void write_scan(std::ostream& out, const ScanRecord& scan, const Comments& comments = {});
ScanRecord read_scan(const std::filesystem::path& path);
/// `path` is a directory (all *.csv files, sorted by name) or a manifest with
/// one scan file per line, relative to the manifest's directory.
std::vector<ScanRecord> read_sweep_set(const std::filesystem::path& path);

void write_contacts(std::ostream& out, const std::vector<ContactPoint>& contacts, const Comments& comments = {});
std::vector<ContactPoint> read_contacts(const std::filesystem::path& path);

void write_comments(std::ostream& out, const Comments& comments);

} // namespace diffcasimir
