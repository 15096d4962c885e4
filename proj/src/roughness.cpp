#include "diffcasimir/roughness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "diffcasimir/constants.hpp"
#include "diffcasimir/error.hpp"
#include "diffcasimir/lifshitz.hpp"

namespace diffcasimir {

HeightDistribution::HeightDistribution(std::vector<double> offsets, std::vector<double> probabilities) {
    require(offsets.size() == probabilities.size() && !offsets.empty(), ErrorCode::Domain,
            "height distribution needs matching, non-empty offsets and probabilities");
    double total = 0.0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        require(std::isfinite(offsets[i]), ErrorCode::Domain, "height offsets must be finite");
        require(probabilities[i] >= 0.0, ErrorCode::Domain, "probabilities must be non-negative");
        total += probabilities[i];
    }
    require(std::abs(total - 1.0) <= 1e-6, ErrorCode::Domain, "probabilities must sum to one");

    std::vector<std::size_t> order(offsets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return offsets[a] < offsets[b]; });

    double scale = 0.0;
    for (double o : offsets) scale = std::max(scale, std::abs(o));
    const double merge_tol = 1e-12 * scale;
    for (auto i : order) {
        if (probabilities[i] == 0.0) continue;
        if (!offsets_.empty() && offsets[i] - offsets_.back() <= merge_tol) {
            probs_.back() += probabilities[i];
        } else {
            offsets_.push_back(offsets[i]);
            probs_.push_back(probabilities[i]);
        }
    }
    require(!offsets_.empty(), ErrorCode::Domain, "height distribution has no mass");
    const double sum = std::accumulate(probs_.begin(), probs_.end(), 0.0);
    for (auto& p : probs_) p /= sum;
    const double m = mean();
    for (auto& o : offsets_) o -= m;
}

HeightDistribution HeightDistribution::point() { return HeightDistribution({0.0}, {1.0}); }

HeightDistribution HeightDistribution::gaussian(double sigma, int points, double span_sigmas) {
    require(sigma >= 0.0 && points >= 1 && span_sigmas > 0.0, ErrorCode::Domain, "invalid Gaussian distribution");
    if (sigma == 0.0 || points == 1) return point();
    std::vector<double> x(points), p(points);
    double total = 0.0;
    for (int i = 0; i < points; ++i) {
        const double u = -span_sigmas + 2.0 * span_sigmas * i / (points - 1);
        x[i] = u * sigma;
        p[i] = std::exp(-0.5 * u * u);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return HeightDistribution(std::move(x), std::move(p));
}

double HeightDistribution::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m += probs_[i] * offsets_[i];
    return m;
}

double HeightDistribution::variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < size(); ++i) v += probs_[i] * (offsets_[i] - m) * (offsets_[i] - m);
    return v;
}

namespace {

// Weighted histogram: equal-width bins over [lo, hi], each bin located at the
// weighted mean of its members.
HeightDistribution histogram(std::span<const double> x, std::span<const double> w, int bins) {
    require(bins >= 1, ErrorCode::Domain, "bin count must be at least 1");
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) return HeightDistribution::point();
    std::vector<double> mass(bins, 0.0), moment(bins, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        int b = static_cast<int>((x[i] - lo) / (hi - lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        mass[b] += w[i];
        moment[b] += w[i] * x[i];
    }
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    std::vector<double> off, prob;
    for (int b = 0; b < bins; ++b) {
        if (mass[b] <= 0.0) continue;
        off.push_back(moment[b] / mass[b]);
        prob.push_back(mass[b] / total);
    }
    return HeightDistribution(std::move(off), std::move(prob));
}

} // namespace

HeightDistribution HeightDistribution::rebinned(int bins) const { return histogram(offsets_, probs_, bins); }

HeightDistribution distribution_from_samples(std::span<const double> heights, int bin_count) {
    require(heights.size() >= 2, ErrorCode::Domain, "need at least two height samples");
    require(bin_count >= 1, ErrorCode::Domain, "bin count must be at least 1");
    std::vector<double> w(heights.size(), 1.0);
    return histogram(heights, w, bin_count);
}

HeightDistribution combine(const HeightDistribution& sphere, const HeightDistribution& plate,
                           std::size_t max_support, int rebin_to) {
    std::vector<double> off, prob;
    off.reserve(sphere.size() * plate.size());
    prob.reserve(sphere.size() * plate.size());
    for (std::size_t i = 0; i < sphere.size(); ++i) {
        for (std::size_t j = 0; j < plate.size(); ++j) {
            off.push_back(-(sphere.offsets()[i] + plate.offsets()[j]));
            prob.push_back(sphere.probabilities()[i] * plate.probabilities()[j]);
        }
    }
    HeightDistribution out(std::move(off), std::move(prob));
    if (out.size() > max_support) return out.rebinned(rebin_to);
    return out;
}

ForceCurve roughness_correct(const ForceFunction& force_fn, const std::vector<double>& grid,
                             const HeightDistribution& dist, unsigned threads) {
    require(!grid.empty(), ErrorCode::Domain, "roughness_correct needs a separation grid");
    const double min_offset = dist.offsets().front();
    for (double z : grid) {
        if (!(z + min_offset > 0.0)) {
            char buf[200];
            std::snprintf(buf, sizeof buf, "surfaces touch: z = %.6g nm with offset %.6g nm gives z + delta <= 0",
                          z / constants::nm, min_offset / constants::nm);
            fail(ErrorCode::Domain, buf);
        }
    }
    ForceCurve out;
    out.z = grid;
    out.force.assign(grid.size(), 0.0);
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < dist.size(); ++k) acc += dist.probabilities()[k] * force_fn(grid[i] + dist.offsets()[k]);
        out.force[i] = acc;
    });
    out.meta.roughness_applied = true;
    return out;
}

double gaussian_width_for_correction(const ForceFunction& force_fn, double z_ref, double target, int points) {
    require(z_ref > 0.0 && target > 0.0, ErrorCode::Domain, "width tuning needs z_ref > 0 and target > 0");
    const double f0 = force_fn(z_ref);
    auto correction = [&](double sigma) {
        const auto d = HeightDistribution::gaussian(sigma, points);
        double acc = 0.0;
        for (std::size_t k = 0; k < d.size(); ++k) acc += d.probabilities()[k] * force_fn(z_ref + d.offsets()[k]);
        return acc / f0 - 1.0;
    };
    // grow the bracket so the force is only probed as far out as needed
    const double cap = z_ref / 5.0;
    double lo = 0.0, hi = cap / 64.0;
    while (correction(hi) < target) {
        require(hi < cap, ErrorCode::Domain, "requested roughness correction is out of reach");
        lo = hi;
        hi = std::min(2.0 * hi, cap);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * z_ref; ++it) {
        const double mid = 0.5 * (lo + hi);
        (correction(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

HeightDistribution read_topography(const std::filesystem::path& path, int bin_count) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open topography file " + path.string());
    std::string line;
    bool binned = false, header_seen = false;
    std::vector<double> h, p;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            if (line.find("height_nm") == std::string::npos)
                fail(ErrorCode::Io, path.string() + ": expected a height_nm header");
            binned = line.find("probability") != std::string::npos;
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double height = 0.0, prob = 0.0;
        if (!(ss >> height) || (binned && !(ss >> prob)))
            fail(ErrorCode::Io, path.string() + ":" + std::to_string(line_no) + ": malformed row");
        h.push_back(height * constants::nm);
        if (binned) p.push_back(prob);
    }
    if (binned) return HeightDistribution(std::move(h), std::move(p));
    return distribution_from_samples(h, bin_count);
}

} // namespace diffcasimir
