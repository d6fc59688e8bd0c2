#pragma once

// Yield statistics of randomly defected gratings: positions uniform along the
// guide, widths Poisson-distributed integers in um.

#include "qfcsim/defect_model.hpp"
#include "qfcsim/errors.hpp"
#include "qfcsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

namespace qfcsim {

struct WidthDistribution {
    double mean_um = 12.3;

    void validate() const { detail::require(mean_um > 0.0, "width mean must be > 0"); }
};

struct McConfig {
    std::int64_t trials = 10000;
    std::uint64_t seed = 42;
    double threshold = 0.9;
    EfficiencyMode mode = EfficiencyMode::peak_in_window;
    unsigned workers = 1;  // hint; results do not depend on it

    void validate() const {
        detail::require(trials >= 1, "trials must be >= 1");
        detail::require(threshold > 0.0 && threshold <= 1.0, "threshold must lie in (0, 1]");
    }
};

inline DefectMap sample_defect_map(const WaveguideSpec& spec, int n_defects,
                                   const WidthDistribution& dist, RandomStream& stream) {
    detail::require(n_defects >= 0, "defect count must be >= 0");
    dist.validate();
    const double L = spec.length_um();
    std::vector<double> positions;
    positions.reserve(n_defects);
    while (static_cast<int>(positions.size()) < n_defects) {
        const double x = L * stream.uniform_open();
        if (std::find(positions.begin(), positions.end(), x) == positions.end())
            positions.push_back(x);
    }
    std::sort(positions.begin(), positions.end());
    std::vector<Defect> defects;
    defects.reserve(n_defects);
    for (double x : positions)
        defects.push_back({x, static_cast<double>(stream.poisson(dist.mean_um))});
    return DefectMap(std::move(defects));
}

/// Per-trial relative efficiencies plus bookkeeping for zero-width draws.
struct TrialSet {
    std::vector<double> relative_eta;
    std::int64_t zero_width_defects = 0;
};

inline TrialSet run_trials(const WaveguideSpec& spec, int n_defects, const WidthDistribution& dist,
                           const McConfig& cfg) {
    cfg.validate();
    dist.validate();
    detail::require(n_defects >= 0, "defect count must be >= 0");
    const auto ref = ideal_reference(spec);
    const auto trials = static_cast<std::size_t>(cfg.trials);
    std::vector<double> eta(trials);
    std::vector<std::int64_t> zero_widths(trials, 0);

    auto work = [&](std::size_t first, std::size_t last) {
        for (std::size_t t = first; t < last; ++t) {
            auto stream = RandomStream::substream(cfg.seed, t);
            const auto map = sample_defect_map(spec, n_defects, dist, stream);
            eta[t] = relative_efficiency(spec, map, cfg.mode, ref);
            zero_widths[t] = std::count_if(map.begin(), map.end(),
                                           [](const Defect& d) { return d.width_um == 0.0; });
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(cfg.workers, 1, std::max<std::size_t>(trials, 1));
    if (workers == 1) {
        work(0, trials);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (trials + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t first = w * chunk;
            const std::size_t last = std::min(trials, first + chunk);
            if (first < last) pool.emplace_back(work, first, last);
        }
    }

    TrialSet out;
    out.relative_eta = std::move(eta);
    for (auto z : zero_widths) out.zero_width_defects += z;
    return out;
}

struct ProbabilityEstimate {
    double p_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::int64_t trials = 0;
    std::int64_t zero_width_defects = 0;

    double half_width() const { return 0.5 * (ci_hi - ci_lo); }
};

/// Fraction of samples at or above `threshold`, with the normal-approximation
/// 95 % interval.
inline ProbabilityEstimate estimate_probability(const std::vector<double>& samples,
                                                double threshold) {
    detail::require(!samples.empty(), "no samples");
    const auto hits = std::count_if(samples.begin(), samples.end(),
                                    [&](double v) { return v >= threshold; });
    const double n = static_cast<double>(samples.size());
    const double p = static_cast<double>(hits) / n;
    const double half = 1.96 * std::sqrt(p * (1.0 - p) / n);
    return {p, p - half, p + half, static_cast<std::int64_t>(samples.size()), 0};
}

inline ProbabilityEstimate success_probability(const WaveguideSpec& spec, int n_defects,
                                               const WidthDistribution& dist,
                                               const McConfig& cfg) {
    const auto set = run_trials(spec, n_defects, dist, cfg);
    auto est = estimate_probability(set.relative_eta, cfg.threshold);
    est.zero_width_defects = set.zero_width_defects;
    return est;
}

struct Histogram {
    std::vector<double> edges;   // bins + 1 values over [0, 1]
    std::vector<double> mass;    // normalized to 1
    double mean = 0.0;
};

/// Values above 1 (numerical overshoot of the peak search) fall in the top bin.
inline Histogram make_histogram(const std::vector<double>& samples, int bins) {
    detail::require(bins >= 2, "bins must be >= 2");
    detail::require(!samples.empty(), "no samples");
    Histogram h;
    h.edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i) h.edges[i] = static_cast<double>(i) / bins;
    std::vector<std::int64_t> counts(bins, 0);
    double sum = 0.0;
    for (double v : samples) {
        const auto idx = std::clamp(static_cast<int>(std::floor(v * bins)), 0, bins - 1);
        ++counts[idx];
        sum += v;
    }
    const double n = static_cast<double>(samples.size());
    h.mass.resize(bins);
    for (int i = 0; i < bins; ++i) h.mass[i] = static_cast<double>(counts[i]) / n;
    h.mean = sum / n;
    return h;
}

inline Histogram efficiency_distribution(const WaveguideSpec& spec, int n_defects,
                                         const WidthDistribution& dist, const McConfig& cfg,
                                         int bins) {
    return make_histogram(run_trials(spec, n_defects, dist, cfg).relative_eta, bins);
}

struct LengthPoint {
    double length_cm = 0.0;
    ProbabilityEstimate estimate;
};

/// Every length reuses the same master seed, so trial t draws the same
/// relative positions and widths at every length.
inline std::vector<LengthPoint> probability_vs_length(const WaveguideSpec& base, int n_defects,
                                                      const std::vector<double>& lengths_cm,
                                                      const WidthDistribution& dist,
                                                      const McConfig& cfg) {
    std::vector<LengthPoint> out;
    out.reserve(lengths_cm.size());
    for (double len : lengths_cm) {
        detail::require(len > 0.0, "lengths must be positive");
        out.push_back({len, success_probability(base.with_length_cm(len), n_defects, dist, cfg)});
    }
    return out;
}

}  // namespace qfcsim
