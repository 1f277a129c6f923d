#include "smartcrop/stats.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smartcrop/rng.h"

namespace smartcrop {

namespace {

std::vector<double> paired_differences(const std::vector<double>& baseline,
                                       const std::vector<double>& candidate) {
    if (baseline.size() < 2) throw std::invalid_argument("paired_bootstrap: need n >= 2");
    if (baseline.size() != candidate.size()) {
        throw std::invalid_argument("paired_bootstrap: sample sizes differ");
    }
    std::vector<double> diffs(baseline.size());
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        diffs[i] = candidate[i] - baseline[i];
        if (!std::isfinite(diffs[i])) {
            throw std::invalid_argument("paired_bootstrap: non-finite score");
        }
    }
    return diffs;
}

// All n^n resample means, one per index tuple, via an odometer counter.
std::vector<double> exhaustive_means(const std::vector<double>& diffs) {
    const std::size_t n = diffs.size();
    double total = 1.0;
    for (std::size_t i = 0; i < n; ++i) total *= static_cast<double>(n);
    if (total > 1e7) {
        throw std::invalid_argument("paired_bootstrap: exhaustive mode needs n^n <= 1e7");
    }
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(total));
    std::vector<std::size_t> odometer(n, 0);
    while (true) {
        double sum = 0.0;
        for (std::size_t idx : odometer) sum += diffs[idx];
        means.push_back(sum / static_cast<double>(n));
        std::size_t digit = 0;
        while (digit < n && ++odometer[digit] == n) {
            odometer[digit] = 0;
            ++digit;
        }
        if (digit == n) break;
    }
    return means;
}

BootstrapResult summarize(std::vector<double> means, const std::vector<double>& diffs) {
    BootstrapResult result;
    result.n = diffs.size();
    result.mean_diff = mean_of(diffs);
    result.resamples = means.size();

    std::size_t at_or_below = 0;
    std::size_t at_or_above = 0;
    for (double m : means) {
        if (m <= 0.0) ++at_or_below;
        if (m >= 0.0) ++at_or_above;
    }
    const double denom = static_cast<double>(means.size());
    double p = 2.0 * static_cast<double>(std::min(at_or_below, at_or_above)) / denom;
    p = std::max(p, 2.0 / (denom + 1.0));
    result.p_value = std::min(p, 1.0);
    result.stars = significance_stars(result.p_value);

    std::sort(means.begin(), means.end());
    result.ci_low = quantile_type7(means, 0.025);
    result.ci_high = quantile_type7(means, 0.975);
    return result;
}

}  // namespace

void PairedSample::validate() const {
    if (ids.size() < 2) throw std::invalid_argument("PairedSample: need n >= 2");
    if (ids.size() != values_a.size() || ids.size() != values_b.size()) {
        throw std::invalid_argument("PairedSample: field lengths differ");
    }
    std::vector<std::string> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("PairedSample: duplicate instance id");
    }
}

BootstrapResult paired_bootstrap(const PairedSample& sample, std::size_t resamples,
                                 std::uint64_t seed, bool exhaustive) {
    sample.validate();
    return paired_bootstrap(sample.values_a, sample.values_b, resamples, seed, exhaustive);
}

BootstrapResult paired_bootstrap(const std::vector<double>& baseline,
                                 const std::vector<double>& candidate, std::size_t resamples,
                                 std::uint64_t seed, bool exhaustive) {
    const std::vector<double> diffs = paired_differences(baseline, candidate);
    if (exhaustive) {
        BootstrapResult result = summarize(exhaustive_means(diffs), diffs);
        result.exhaustive = true;
        return result;
    }
    if (resamples == 0) throw std::invalid_argument("paired_bootstrap: resamples must be positive");
    Rng rng(seed);
    const std::size_t n = diffs.size();
    std::vector<double> means(resamples);
    for (std::size_t r = 0; r < resamples; ++r) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += diffs[rng.uniform_below(n)];
        means[r] = sum / static_cast<double>(n);
    }
    BootstrapResult result = summarize(std::move(means), diffs);
    result.seed = seed;
    return result;
}

std::string significance_stars(double p_value) {
    if (p_value < 0.001) return "***";
    if (p_value < 0.01) return "**";
    if (p_value < 0.05) return "*";
    return "";
}

MeanCi mean_ci(const std::vector<double>& values, std::size_t resamples, std::uint64_t seed) {
    if (values.size() < 2) throw std::invalid_argument("mean_ci: need n >= 2");
    if (resamples == 0) throw std::invalid_argument("mean_ci: resamples must be positive");
    Rng rng(seed);
    const std::size_t n = values.size();
    std::vector<double> means(resamples);
    for (std::size_t r = 0; r < resamples; ++r) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += values[rng.uniform_below(n)];
        means[r] = sum / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    MeanCi ci;
    ci.mean = mean_of(values);
    ci.ci_low = quantile_type7(means, 0.025);
    ci.ci_high = quantile_type7(means, 0.975);
    return ci;
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean_of: empty sample");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median_of: empty sample");
    std::sort(values.begin(), values.end());
    return quantile_type7(values, 0.5);
}

double quantile_type7(const std::vector<double>& sorted_values, double q) {
    if (sorted_values.empty()) throw std::invalid_argument("quantile_type7: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile_type7: q outside [0,1]");
    const std::size_t n = sorted_values.size();
    if (n == 1) return sorted_values[0];
    const double h = static_cast<double>(n - 1) * q;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
}

}  // namespace smartcrop
