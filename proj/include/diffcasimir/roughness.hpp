#pragma once

// Additive roughness correction: the force is averaged over the distribution
// of local separations z + delta, delta drawn from the combined height
// deviations of both surfaces.

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "diffcasimir/force_curve.hpp"

namespace diffcasimir {

/// Discrete distribution of height offsets (m). Offsets are sorted, equal
/// offsets merged, probabilities normalised and the mean shifted to zero.
class HeightDistribution {
public:
    /// Throws Error(Domain) for negative probabilities, length mismatch or a
    /// probability sum further than 1e-6 from one.
    HeightDistribution(std::vector<double> offsets, std::vector<double> probabilities);

    static HeightDistribution point();
    /// Gaussian of width sigma sampled on `points` equidistant offsets in +-span*sigma.
    static HeightDistribution gaussian(double sigma, int points = 64, double span_sigmas = 4.0);

    const std::vector<double>& offsets() const { return offsets_; }
    const std::vector<double>& probabilities() const { return probs_; }
    std::size_t size() const { return offsets_.size(); }
    double mean() const;
    double variance() const;

    /// Equal-width bins over the support; each bin keeps its probability-weighted mean offset.
    HeightDistribution rebinned(int bins) const;

private:
    std::vector<double> offsets_;
    std::vector<double> probs_;
};

/// Histogram of raw heights with `bin_count` bins, re-centred.
HeightDistribution distribution_from_samples(std::span<const double> heights, int bin_count = 64);

/// Distribution of delta = -(h_sphere + h_plate) for independent surfaces.
/// Supports larger than `max_support` points are re-binned to `rebin_to`.
HeightDistribution combine(const HeightDistribution& sphere, const HeightDistribution& plate,
                           std::size_t max_support = 4096, int rebin_to = 256);

using ForceFunction = std::function<double(double)>;

/// F_rough(z) = sum_k p_k F(z + delta_k). Throws Error(Domain) naming the
/// first pair with z + delta <= 0.
ForceCurve roughness_correct(const ForceFunction& force_fn, const std::vector<double>& grid,
                             const HeightDistribution& dist, unsigned threads = 1);

/// Width of a Gaussian offset distribution for which the relative correction
/// |F_rough/F| - 1 at z_ref equals `target`. The bracket doubles from z_ref/320
/// up to z_ref/5, so force_fn is probed no further out than about twice the
/// answer times the distribution span.
double gaussian_width_for_correction(const ForceFunction& force_fn, double z_ref, double target, int points = 64);

/// `height_nm` (raw samples) or `height_nm,probability` (binned) CSV.
HeightDistribution read_topography(const std::filesystem::path& path, int bin_count = 64);

} // namespace diffcasimir
