#pragma once

// Dielectric permittivities on the imaginary frequency axis.
//
// All frequencies are angular frequencies in rad/s. Photon energies in eV are
// accepted only at ingestion (optical tables, catalog options) and converted
// with hbar.

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace diffcasimir {

struct OpticalRow {
    double energy_ev;
    double n;
    double k;
};

/// Complex refractive index n + ik tabulated against photon energy.
class OpticalDataTable {
public:
    /// Throws Error(Domain) unless energies are strictly increasing, there are
    /// at least two rows, n > 0 and k >= 0 everywhere.
    OpticalDataTable(std::vector<OpticalRow> rows, std::string source_label);

    const std::vector<OpticalRow>& rows() const { return rows_; }
    const std::string& source_label() const { return label_; }

    double omega_min() const;
    double omega_max() const;

    /// Im eps = 2 n k with n and k interpolated log-log in frequency.
    /// Only valid inside [omega_min, omega_max].
    double eps_imag(double omega) const;

private:
    std::vector<OpticalRow> rows_;
    std::string label_;
    std::vector<double> log_omega_;
};

/// Reads `energy_eV, n, k` rows separated by commas or whitespace; lines
/// starting with '#' are skipped.
OpticalDataTable read_optical_data(const std::filesystem::path& path);

struct CarrierSpec {
    double density_m3 = 0.0;
    double effective_mass_ratio = 1.0;
    double resistivity_ohm_m = 1.0;
};

/// A plasma frequency with zero relaxation is the dissipationless plasma model.
struct DrudeTerm {
    double plasma_frequency = 0.0; // rad/s
    double relaxation = 0.0;       // rad/s
};

/// omega_p = e sqrt(n / (eps0 m*)), gamma = eps0 rho omega_p^2.
DrudeTerm drude_from_carriers(const CarrierSpec& spec);

/// Bound-charge oscillator: strength * w0^2 / (w0^2 + xi^2 + damping xi).
struct Oscillator {
    double strength;
    double resonance; // rad/s
    double damping;   // rad/s
};

enum class LowFrequencyTail {
    Zero,      // no absorption below the table
    DrudeLike, // omega * Im eps held constant below the table
};

/// Above the table Im eps always decays as omega^-3.
struct ExtrapolationPolicy {
    LowFrequencyTail low = LowFrequencyTail::DrudeLike;
};

class PermittivityModel {
public:
    static PermittivityModel oscillators(std::vector<Oscillator> set, std::string label);
    static PermittivityModel drude(DrudeTerm term, std::string label);
    static PermittivityModel sum(std::vector<PermittivityModel> parts, std::string label);
    /// Samples of eps(i xi) on an ascending grid; evaluation interpolates
    /// (eps - 1) log-log between samples.
    static PermittivityModel tabulated(OpticalDataTable table, ExtrapolationPolicy policy,
                                       std::vector<double> xi_grid, std::vector<double> eps_samples,
                                       std::string label);

    /// eps(i xi). Throws Error(Divergence) at xi == 0 when the model has a
    /// free-carrier term and Error(Domain) for xi < 0.
    double eval(double xi) const;
    double operator()(double xi) const { return eval(xi); }

    bool has_free_carriers() const;
    const std::string& label() const { return label_; }

    /// Non-null only for tabulated models.
    const std::vector<double>* xi_grid() const;
    const std::vector<double>* samples() const;

    struct Node;

private:
    PermittivityModel(std::shared_ptr<const Node> node, std::string label);
    double susceptibility(double xi) const;

    std::shared_ptr<const Node> node_;
    std::string label_;
};

inline double eps_imag_axis(const PermittivityModel& model, double xi) { return model.eval(xi); }

struct KkOptions {
    double relative_tolerance = 1e-6;
    int max_intervals = 0; // 0: scaled to the table size
};

/// Kramers-Kronig evaluation of eps(i xi) = 1 + (2/pi) int omega Im eps / (omega^2 + xi^2)
/// on `xi_grid`, integrated in ln(omega). Throws ConvergenceError carrying
/// the offending xi and the achieved error estimate.
PermittivityModel kk_transform(const OpticalDataTable& table, std::span<const double> xi_grid,
                               ExtrapolationPolicy policy, const KkOptions& options = {});

/// Carrier data for the two silicon samples: a (high resistivity) and b
/// (diffusion-doped, low resistivity).
CarrierSpec sample_a_carriers();
CarrierSpec sample_b_carriers();

/// Two-oscillator surrogate for intrinsic silicon; static limit 11.66.
std::vector<Oscillator> silicon_oscillators();

struct CatalogOptions {
    double gold_plasma_ev = 9.0;
    double gold_relaxation_ev = 0.035;
    CarrierSpec doped_carriers = sample_b_carriers();
    double ideal_plasma_ev = 1e5;
};

class ModelCatalog {
public:
    void add(const std::string& name, PermittivityModel model);
    /// Throws Error(Lookup) for unknown names.
    const PermittivityModel& get(const std::string& name) const;
    bool contains(const std::string& name) const { return models_.contains(name); }
    std::vector<std::string> names() const;

private:
    std::map<std::string, PermittivityModel> models_;
};

/// gold_surrogate, si_intrinsic_surrogate, si_doped_b and ideal_metal (a
/// plasma model with a very large plasma frequency).
ModelCatalog builtin_models(const CatalogOptions& options = {});

} // namespace diffcasimir
