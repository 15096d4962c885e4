#include "diffcasimir/csv_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "diffcasimir/constants.hpp"
#include "diffcasimir/error.hpp"

namespace diffcasimir {

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> comments;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    Table t;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto s = trim(line);
        if (s.empty()) continue;
        if (s[0] == '#') {
            t.comments.push_back(trim(s.substr(1)));
            continue;
        }
        auto cells = split(s);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            fail(ErrorCode::Io, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                    std::to_string(t.header.size()) + " columns");
        std::vector<double> row;
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size()) throw std::invalid_argument(c);
            } catch (const std::exception&) {
                fail(ErrorCode::Io, path.string() + ":" + std::to_string(line_no) + ": not a number: '" + c + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) fail(ErrorCode::Io, path.string() + ": missing header row");
    return t;
}

void expect_header(const Table& t, const std::vector<std::string>& names, const std::filesystem::path& path) {
    if (t.header.size() < names.size() || !std::equal(names.begin(), names.end(), t.header.begin()))
        fail(ErrorCode::Io, path.string() + ": unexpected header");
}

} // namespace

std::string format_sig(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, value);
    return buf;
}

void write_comments(std::ostream& out, const Comments& comments) {
    for (const auto& c : comments) out << "# " << c << '\n';
}

void write_force_curve(std::ostream& out, const ForceCurve& curve, const Comments& comments) {
    curve.validate();
    write_comments(out, comments);
    out << (curve.has_error() ? "z_nm,F_pN,err_pN\n" : "z_nm,F_pN\n");
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out << format_sig(curve.z[i] / constants::nm) << ',' << format_sig(curve.force[i] / constants::pN);
        if (curve.has_error()) out << ',' << format_sig(curve.error[i] / constants::pN);
        out << '\n';
    }
}

ForceCurve read_force_curve(const std::filesystem::path& path) {
    const auto t = read_table(path);
    expect_header(t, {"z_nm", "F_pN"}, path);
    const bool with_err = t.header.size() >= 3 && t.header[2] == "err_pN";
    ForceCurve c;
    for (const auto& r : t.rows) {
        c.z.push_back(r[0] * constants::nm);
        c.force.push_back(r[1] * constants::pN);
        if (with_err) c.error.push_back(r[2] * constants::pN);
    }
    for (const auto& line : t.comments)
        if (line.find("synthetic") != std::string::npos) c.meta.synthetic = true;
    c.validate();
    return c;
}

void write_repeated_scans(std::ostream& out, const RepeatedScans& scans, const Comments& comments) {
    scans.validate();
    write_comments(out, comments);
    out << "z_nm";
    for (std::size_t k = 0; k < scans.repetitions(); ++k) out << ",F_pN_rep" << (k + 1);
    out << '\n';
    for (std::size_t i = 0; i < scans.z.size(); ++i) {
        out << format_sig(scans.z[i] / constants::nm);
        for (const auto& r : scans.rows) out << ',' << format_sig(r[i] / constants::pN);
        out << '\n';
    }
}

RepeatedScans read_repeated_scans(const std::filesystem::path& path) {
    const auto t = read_table(path);
    expect_header(t, {"z_nm"}, path);
    RepeatedScans s;
    s.rows.assign(t.header.size() - 1, {});
    for (const auto& r : t.rows) {
        s.z.push_back(r[0] * constants::nm);
        for (std::size_t k = 1; k < r.size(); ++k) s.rows[k - 1].push_back(r[k] * constants::pN);
    }
    s.validate();
    return s;
}

void write_scan(std::ostream& out, const ScanRecord& scan, const Comments& comments) {
    write_comments(out, comments);
    out << "# V=" << format_sig(scan.voltage, 12) << '\n';
    out << "z_piezo_nm,S_def\n";
    for (const auto& s : scan.samples)
        out << format_sig(s.z_piezo / constants::nm, 12) << ',' << format_sig(s.signal, 12) << '\n';
}

ScanRecord read_scan(const std::filesystem::path& path) {
    const auto t = read_table(path);
    expect_header(t, {"z_piezo_nm", "S_def"}, path);
    ScanRecord scan;
    bool have_v = false;
    for (const auto& c : t.comments) {
        if (c.rfind("V=", 0) == 0) {
            try {
                scan.voltage = std::stod(c.substr(2));
                have_v = true;
            } catch (const std::exception&) {
                fail(ErrorCode::Io, path.string() + ": malformed voltage line");
            }
        }
    }
    if (!have_v) fail(ErrorCode::Io, path.string() + ": missing '# V=<volts>' line");
    for (const auto& r : t.rows) scan.samples.push_back({r[0] * constants::nm, r[1]});
    scan.validate();
    return scan;
}

std::vector<ScanRecord> read_sweep_set(const std::filesystem::path& path) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path)) {
        for (const auto& e : std::filesystem::directory_iterator(path))
            if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        std::ifstream in(path);
        if (!in) fail(ErrorCode::Io, "cannot open sweep manifest " + path.string());
        std::string line;
        while (std::getline(in, line)) {
            const auto s = trim(line);
            if (s.empty() || s[0] == '#') continue;
            std::filesystem::path p(s);
            files.push_back(p.is_absolute() ? p : path.parent_path() / p);
        }
    }
    if (files.empty()) fail(ErrorCode::Io, "sweep set " + path.string() + " lists no scan files");
    std::vector<ScanRecord> scans;
    for (const auto& f : files) scans.push_back(read_scan(f));
    return scans;
}

void write_contacts(std::ostream& out, const std::vector<ContactPoint>& contacts, const Comments& comments) {
    write_comments(out, comments);
    out << "V,S_contact,z_piezo_contact_nm\n";
    for (const auto& c : contacts)
        out << format_sig(c.voltage, 12) << ',' << format_sig(c.signal, 12) << ','
            << format_sig(c.z_piezo / constants::nm, 12) << '\n';
}

std::vector<ContactPoint> read_contacts(const std::filesystem::path& path) {
    const auto t = read_table(path);
    expect_header(t, {"V", "S_contact", "z_piezo_contact_nm"}, path);
    std::vector<ContactPoint> out;
    for (const auto& r : t.rows) out.push_back({r[0], r[1], r[2] * constants::nm});
    return out;
}

} // namespace diffcasimir
