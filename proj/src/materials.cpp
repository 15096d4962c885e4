#include "diffcasimir/materials.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include "diffcasimir/constants.hpp"
#include "diffcasimir/error.hpp"

namespace diffcasimir {

namespace {

struct OscillatorSet {
    std::vector<Oscillator> set;
};

struct Drude {
    DrudeTerm term;
};

struct Sum {
    std::vector<PermittivityModel> parts;
};

struct Tabulated {
    OpticalDataTable table;
    ExtrapolationPolicy policy;
    std::vector<double> xi;
    std::vector<double> eps;
    std::vector<double> log_xi;
};

double interpolate_susceptibility(const Tabulated& t, double xi) {
    const auto& g = t.xi;
    const std::size_t n = g.size();
    auto chi = [&](std::size_t i) { return t.eps[i] - 1.0; };

    if (xi >= g.back()) {
        // sum-rule asymptote chi ~ xi^-2
        const double r = g.back() / xi;
        return chi(n - 1) * r * r;
    }
    if (xi <= g.front()) {
        if (t.policy.low == LowFrequencyTail::Zero || n < 2) return chi(0);
        if (xi == 0.0)
            fail(ErrorCode::Divergence, "tabulated model with a Drude-like tail diverges at xi = 0");
        const double c0 = chi(0), c1 = chi(1);
        if (!(c0 > 0.0 && c1 > 0.0)) return c0;
        const double slope = std::min(0.0, (std::log(c1) - std::log(c0)) / (t.log_xi[1] - t.log_xi[0]));
        return c0 * std::exp(slope * (std::log(xi) - t.log_xi[0]));
    }
    const auto it = std::upper_bound(g.begin(), g.end(), xi);
    const std::size_t hi = static_cast<std::size_t>(it - g.begin());
    const std::size_t lo = hi - 1;
    const double s = (std::log(xi) - t.log_xi[lo]) / (t.log_xi[hi] - t.log_xi[lo]);
    const double a = chi(lo), b = chi(hi);
    if (a > 0.0 && b > 0.0) return std::exp((1.0 - s) * std::log(a) + s * std::log(b));
    return (1.0 - s) * a + s * b;
}

} // namespace

struct PermittivityModel::Node {
    std::variant<OscillatorSet, Drude, Sum, Tabulated> v;
};

PermittivityModel::PermittivityModel(std::shared_ptr<const Node> node, std::string label)
    : node_(std::move(node)), label_(std::move(label)) {}

PermittivityModel PermittivityModel::oscillators(std::vector<Oscillator> set, std::string label) {
    for (const auto& o : set) {
        require(o.strength >= 0.0 && o.resonance > 0.0 && o.damping >= 0.0, ErrorCode::Domain,
                "oscillator needs strength >= 0, resonance > 0, damping >= 0");
    }
    return {std::make_shared<Node>(Node{OscillatorSet{std::move(set)}}), std::move(label)};
}

PermittivityModel PermittivityModel::drude(DrudeTerm term, std::string label) {
    require(term.plasma_frequency >= 0.0 && term.relaxation >= 0.0, ErrorCode::Domain,
            "Drude term needs plasma frequency >= 0 and relaxation >= 0");
    return {std::make_shared<Node>(Node{Drude{term}}), std::move(label)};
}

PermittivityModel PermittivityModel::sum(std::vector<PermittivityModel> parts, std::string label) {
    require(!parts.empty(), ErrorCode::Domain, "sum model needs at least one part");
    return {std::make_shared<Node>(Node{Sum{std::move(parts)}}), std::move(label)};
}

PermittivityModel PermittivityModel::tabulated(OpticalDataTable table, ExtrapolationPolicy policy,
                                               std::vector<double> xi_grid, std::vector<double> eps_samples,
                                               std::string label) {
    require(xi_grid.size() == eps_samples.size() && !xi_grid.empty(), ErrorCode::Domain,
            "tabulated model needs matching, non-empty xi grid and samples");
    std::vector<double> log_xi;
    log_xi.reserve(xi_grid.size());
    for (std::size_t i = 0; i < xi_grid.size(); ++i) {
        require(xi_grid[i] > 0.0 && (i == 0 || xi_grid[i] > xi_grid[i - 1]), ErrorCode::Domain,
                "xi grid must be positive and strictly ascending");
        require(std::isfinite(eps_samples[i]) && eps_samples[i] >= 1.0, ErrorCode::Domain,
                "tabulated eps(i xi) samples must be finite and >= 1");
        log_xi.push_back(std::log(xi_grid[i]));
    }
    Tabulated t{std::move(table), policy, std::move(xi_grid), std::move(eps_samples), std::move(log_xi)};
    return {std::make_shared<Node>(Node{std::move(t)}), std::move(label)};
}

double PermittivityModel::susceptibility(double xi) const {
    return std::visit(
        [xi](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, OscillatorSet>) {
                double chi = 0.0;
                for (const auto& o : m.set) {
                    const double w2 = o.resonance * o.resonance;
                    chi += o.strength * w2 / (w2 + xi * xi + o.damping * xi);
                }
                return chi;
            } else if constexpr (std::is_same_v<T, Drude>) {
                const double wp = m.term.plasma_frequency;
                if (wp == 0.0) return 0.0;
                if (xi == 0.0) fail(ErrorCode::Divergence, "Drude term diverges at xi = 0; use xi > 0");
                return wp * wp / (xi * (xi + m.term.relaxation));
            } else if constexpr (std::is_same_v<T, Sum>) {
                double chi = 0.0;
                for (const auto& p : m.parts) chi += p.susceptibility(xi);
                return chi;
            } else {
                return interpolate_susceptibility(m, xi);
            }
        },
        node_->v);
}

double PermittivityModel::eval(double xi) const {
    require(xi >= 0.0 && !std::isnan(xi), ErrorCode::Domain, "imaginary frequency must be >= 0");
    if (std::isinf(xi)) return 1.0;
    return 1.0 + susceptibility(xi);
}

bool PermittivityModel::has_free_carriers() const {
    return std::visit(
        [](const auto& m) -> bool {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Drude>) {
                return m.term.plasma_frequency > 0.0;
            } else if constexpr (std::is_same_v<T, Sum>) {
                return std::any_of(m.parts.begin(), m.parts.end(),
                                   [](const auto& p) { return p.has_free_carriers(); });
            } else if constexpr (std::is_same_v<T, Tabulated>) {
                return m.policy.low == LowFrequencyTail::DrudeLike;
            } else {
                return false;
            }
        },
        node_->v);
}

const std::vector<double>* PermittivityModel::xi_grid() const {
    const auto* t = std::get_if<Tabulated>(&node_->v);
    return t ? &t->xi : nullptr;
}

const std::vector<double>* PermittivityModel::samples() const {
    const auto* t = std::get_if<Tabulated>(&node_->v);
    return t ? &t->eps : nullptr;
}

DrudeTerm drude_from_carriers(const CarrierSpec& spec) {
    require(spec.density_m3 >= 0.0 && spec.effective_mass_ratio > 0.0 && spec.resistivity_ohm_m > 0.0,
            ErrorCode::Domain, "carrier spec needs n >= 0, m*/m_e > 0, rho > 0");
    if (spec.density_m3 == 0.0) return {0.0, 0.0};
    using namespace constants;
    const double mass = spec.effective_mass_ratio * m_e;
    const double wp = e * std::sqrt(spec.density_m3) / std::sqrt(eps0 * mass);
    return {wp, eps0 * spec.resistivity_ohm_m * wp * wp};
}

CarrierSpec sample_a_carriers() {
    // 1.2e16 cm^-3, 0.43 Ohm cm
    return {1.2e22, 0.26, 0.43e-2};
}

CarrierSpec sample_b_carriers() {
    // 3.2e20 cm^-3, 6.7e-4 Ohm cm
    return {3.2e26, 0.26, 6.7e-6};
}

std::vector<Oscillator> silicon_oscillators() {
    // Dominant interband oscillator near 4.3 eV plus a weak core-level term.
    return {{10.57, 6.6e15, 0.0}, {0.09, 3.0e16, 0.0}};
}

void ModelCatalog::add(const std::string& name, PermittivityModel model) {
    models_.insert_or_assign(name, std::move(model));
}

const PermittivityModel& ModelCatalog::get(const std::string& name) const {
    auto it = models_.find(name);
    if (it == models_.end()) fail(ErrorCode::Lookup, "unknown permittivity model '" + name + "'");
    return it->second;
}

std::vector<std::string> ModelCatalog::names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : models_) out.push_back(k);
    return out;
}

ModelCatalog builtin_models(const CatalogOptions& options) {
    using constants::ev_to_rad_s;
    ModelCatalog cat;
    cat.add("gold_surrogate",
            PermittivityModel::drude({ev_to_rad_s(options.gold_plasma_ev), ev_to_rad_s(options.gold_relaxation_ev)},
                                     "gold_surrogate"));
    auto si = PermittivityModel::oscillators(silicon_oscillators(), "si_intrinsic_surrogate");
    cat.add("si_intrinsic_surrogate", si);
    auto doped = PermittivityModel::drude(drude_from_carriers(options.doped_carriers), "si_b_free_carriers");
    cat.add("si_doped_b", PermittivityModel::sum({si, doped}, "si_doped_b"));
    cat.add("ideal_metal", PermittivityModel::drude({ev_to_rad_s(options.ideal_plasma_ev), 0.0}, "ideal_metal"));
    return cat;
}

} // namespace diffcasimir
