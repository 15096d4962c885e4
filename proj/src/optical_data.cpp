#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "diffcasimir/constants.hpp"
#include "diffcasimir/error.hpp"
#include "diffcasimir/materials.hpp"
#include "diffcasimir/quadrature.hpp"

namespace diffcasimir {

namespace {

double interp_positive(double a, double b, double s) {
    if (a > 0.0 && b > 0.0) return std::exp((1.0 - s) * std::log(a) + s * std::log(b));
    return (1.0 - s) * a + s * b;
}

// int_{a}^{inf} d omega / (omega^2 (omega^2 + xi^2)), times a^3.
double high_tail_factor(double a, double xi) {
    const double x = xi / a;
    if (x < 1e-2) {
        const double x2 = x * x;
        return 1.0 / 3.0 - x2 / 5.0 + x2 * x2 / 7.0 - x2 * x2 * x2 / 9.0;
    }
    return (1.0 - std::atan(x) / x) / (x * x);
}

} // namespace

OpticalDataTable::OpticalDataTable(std::vector<OpticalRow> rows, std::string source_label)
    : rows_(std::move(rows)), label_(std::move(source_label)) {
    require(rows_.size() >= 2, ErrorCode::Domain, "optical table needs at least two rows");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto& r = rows_[i];
        require(r.energy_ev > 0.0 && std::isfinite(r.energy_ev), ErrorCode::Domain,
                "optical table photon energies must be positive");
        require(i == 0 || r.energy_ev > rows_[i - 1].energy_ev, ErrorCode::Domain,
                "optical table photon energies must be strictly increasing");
        require(r.n > 0.0 && std::isfinite(r.n), ErrorCode::Domain, "optical table needs n > 0");
        require(r.k >= 0.0 && std::isfinite(r.k), ErrorCode::Domain, "optical table needs k >= 0");
        log_omega_.push_back(std::log(constants::ev_to_rad_s(r.energy_ev)));
    }
}

double OpticalDataTable::omega_min() const { return constants::ev_to_rad_s(rows_.front().energy_ev); }
double OpticalDataTable::omega_max() const { return constants::ev_to_rad_s(rows_.back().energy_ev); }

double OpticalDataTable::eps_imag(double omega) const {
    const double lw = std::log(omega);
    auto it = std::upper_bound(log_omega_.begin(), log_omega_.end(), lw);
    std::size_t hi = static_cast<std::size_t>(it - log_omega_.begin());
    hi = std::clamp<std::size_t>(hi, 1, rows_.size() - 1);
    const std::size_t lo = hi - 1;
    const double s = std::clamp((lw - log_omega_[lo]) / (log_omega_[hi] - log_omega_[lo]), 0.0, 1.0);
    const double n = interp_positive(rows_[lo].n, rows_[hi].n, s);
    const double k = interp_positive(rows_[lo].k, rows_[hi].k, s);
    return 2.0 * n * k;
}

OpticalDataTable read_optical_data(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open optical data file " + path.string());
    std::vector<OpticalRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        OpticalRow r{};
        if (!(ss >> r.energy_ev >> r.n >> r.k))
            fail(ErrorCode::Io, path.string() + ":" + std::to_string(line_no) + ": expected energy_eV, n, k");
        rows.push_back(r);
    }
    return OpticalDataTable(std::move(rows), path.filename().string());
}

PermittivityModel kk_transform(const OpticalDataTable& table, std::span<const double> xi_grid,
                               ExtrapolationPolicy policy, const KkOptions& options) {
    require(!xi_grid.empty(), ErrorCode::Domain, "kk_transform needs a non-empty xi grid");
    for (std::size_t i = 0; i < xi_grid.size(); ++i) {
        require(xi_grid[i] > 0.0 && (i == 0 || xi_grid[i] > xi_grid[i - 1]), ErrorCode::Domain,
                "kk_transform xi grid must be positive and strictly ascending");
    }
    const auto& rows = table.rows();
    std::vector<double> breaks;
    breaks.reserve(rows.size());
    for (const auto& r : rows) breaks.push_back(std::log(constants::ev_to_rad_s(r.energy_ev)));

    const double w_lo = table.omega_min();
    const double w_hi = table.omega_max();
    const double low_coeff = policy.low == LowFrequencyTail::DrudeLike ? table.eps_imag(w_lo) * w_lo : 0.0;
    const double high_coeff = table.eps_imag(w_hi);

    quad::Tolerance tol;
    tol.relative = options.relative_tolerance;
    tol.max_intervals = options.max_intervals > 0 ? options.max_intervals
                                                  : static_cast<int>(4 * rows.size() + 400);

    std::vector<double> eps;
    eps.reserve(xi_grid.size());
    for (double xi : xi_grid) {
        const double low_tail = low_coeff * std::atan(w_lo / xi) / xi;
        const double high_tail = high_coeff * high_tail_factor(w_hi, xi);
        tol.absolute = options.relative_tolerance * (low_tail + high_tail);
        auto integrand = [&](double u) {
            const double w = std::exp(u);
            const double r = xi / w;
            return table.eps_imag(w) / (1.0 + r * r);
        };
        const auto res = quad::integrate(integrand, std::span<const double>(breaks), tol);
        if (!res.converged)
            throw ConvergenceError("Kramers-Kronig quadrature did not converge at xi = " + std::to_string(xi), xi,
                                   res.abs_error);
        double chi = (2.0 / constants::pi) * (res.value + low_tail + high_tail);
        // keep the sampled curve non-increasing despite quadrature noise
        if (!eps.empty()) chi = std::min(chi, eps.back() - 1.0);
        eps.push_back(1.0 + std::max(chi, 0.0));
    }
    return PermittivityModel::tabulated(table, policy, std::vector<double>(xi_grid.begin(), xi_grid.end()),
                                        std::move(eps), "kk(" + table.source_label() + ")");
}

} // namespace diffcasimir
