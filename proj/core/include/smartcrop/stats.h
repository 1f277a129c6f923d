#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace smartcrop {

// Per-instance scores from two methods, aligned by unique instance id.
struct PairedSample {
    std::vector<std::string> ids;
    std::vector<double> values_a;  // baseline
    std::vector<double> values_b;  // candidate

    void validate() const;  // equal lengths >= 2, ids unique
};

// Paired-difference bootstrap over per-instance scores. Differences are
// candidate - baseline, so a positive mean favors the candidate.
struct BootstrapResult {
    std::size_t n = 0;
    double mean_diff = 0.0;
    double p_value = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t resamples = 0;
    std::uint64_t seed = 0;
    bool exhaustive = false;
    std::string stars;
};

// Resamples instance indices with replacement, takes the mean difference
// of each resample, and reports the two-sided sign p-value
// 2 * min(frac <= 0, frac >= 0), clamped to [2/(resamples+1), 1], plus a
// percentile 95% confidence interval. With exhaustive=true every one of
// the n^n index tuples is enumerated instead of sampled (small n only)
// and the seed is unused.
BootstrapResult paired_bootstrap(const std::vector<double>& baseline,
                                 const std::vector<double>& candidate, std::size_t resamples,
                                 std::uint64_t seed, bool exhaustive = false);
BootstrapResult paired_bootstrap(const PairedSample& sample, std::size_t resamples,
                                 std::uint64_t seed, bool exhaustive = false);

// "***" below 0.001, "**" below 0.01, "*" below 0.05, else "" (strict).
std::string significance_stars(double p_value);

struct MeanCi {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Percentile bootstrap interval for the mean of one sample (95% level).
MeanCi mean_ci(const std::vector<double>& values, std::size_t resamples, std::uint64_t seed);

double mean_of(const std::vector<double>& values);
double median_of(std::vector<double> values);

// Linear-interpolation quantile over an ascending-sorted sample
// (the "type 7" rule: index h = (n-1)*q).
double quantile_type7(const std::vector<double>& sorted_values, double q);

}  // namespace smartcrop
