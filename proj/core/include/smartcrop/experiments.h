#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "smartcrop/crop.h"
#include "smartcrop/decode.h"
#include "smartcrop/flops.h"
#include "smartcrop/oracle.h"
#include "smartcrop/stats.h"
#include "smartcrop/tasks.h"
#include "smartcrop/vocab.h"

namespace smartcrop {

// One benchmark run: the full-canvas baseline plus smartcrop at every
// threshold in tau_grid, on a shared instance set so records pair by id.
struct RunConfig {
    TaskSpec task;
    std::vector<double> tau_grid = {0.5, 0.75, 0.9, 0.95, 0.99};
    ScheduleMode schedule_mode = ScheduleMode::kPreserveDensity;
    bool reuse_first_pass = true;
    CostModel cost;
    std::size_t bootstrap_resamples = 5000;
    std::uint64_t seed = 2026;
    int workers = 1;

    void validate() const;
};

// Fills schedule mode and cost from the task and model shape.
RunConfig make_run_config(const TaskSpec& task, const CostModel& cost);

// One (instance, method) outcome. Decode failures are recorded, not
// fatal; failed records carry the error text and drop out of pairing.
struct InstanceRecord {
    std::string id;
    std::string method;
    double score = 0.0;
    double flops = 0.0;
    std::size_t predicted_length = 0;       // canvas length actually denoised
    std::size_t generated_length = 0;       // answer tokens after EoS truncation
    double mean_processed_length = 0.0;     // average length across forward passes
    bool fallback = false;                  // threshold never reached, no crop
    bool failed = false;
    std::string error;
};

struct MethodSummary {
    std::string method;
    double tau = 0.0;             // meaningful when is_baseline is false
    bool is_baseline = false;
    std::size_t n = 0;
    double mean_score = 0.0;
    double mean_flops = 0.0;
    double mean_predicted_length = 0.0;
    double mean_processed_length = 0.0;
    double mean_generated_length = 0.0;
    // Baseline comparisons; unset on the baseline row itself.
    double flops_saved_mean = 0.0;    // mean of per-instance savings_percent
    double flops_saved_total = 0.0;   // savings_percent of summed FLOPs
    double perf_delta = 0.0;          // mean score difference vs baseline
    BootstrapResult stats;            // paired bootstrap of scores vs baseline
    std::size_t fallback_count = 0;
    std::size_t failed_count = 0;
};

struct BenchmarkResult {
    std::vector<InstanceRecord> records;   // baseline first, then per tau
    std::vector<MethodSummary> summaries;
};

std::string method_name(bool smartcrop, double tau);

// Decodes every instance under every method and aggregates. Enforces
// that mean FLOPs savings never increase with tau (a consequence of
// threshold monotonicity; violation means the run is corrupt).
BenchmarkResult run_benchmark(const LogitOracle& oracle, const Vocabulary& vocab,
                              const std::vector<Instance>& instances, const RunConfig& cfg);

// Deviation sweep: the smartcrop prediction is computed once per
// instance at `tau`, then each delta row decodes with the perturbed
// length forced. Row deltas come from `deltas` (default ten-percent
// increments across [-0.5, 0.5]).
struct SweepRow {
    double delta = 0.0;
    double mean_score = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct SweepResult {
    double tau = 0.0;
    bool scale_new_tokens_only = false;
    std::vector<SweepRow> rows;
    // Reference lines for the same instance set.
    double fc_mean = 0.0;
    double control_mean = 0.0;
};

std::vector<double> default_delta_grid();

SweepResult sensitivity_sweep(const LogitOracle& oracle, const Vocabulary& vocab,
                              const std::vector<Instance>& instances, const RunConfig& cfg,
                              double tau, const std::vector<double>& deltas,
                              bool scale_new_tokens_only);

// Control run: each instance is decoded at a length drawn from a donor
// pool of predicted lengths (clamped into the instance's valid range),
// averaged over seeded repetitions.
struct ControlResult {
    std::size_t repetitions = 0;
    std::uint64_t seed = 0;
    std::vector<double> rep_means;
    double mean = 0.0;
};

ControlResult shuffled_control(const LogitOracle& oracle, const Vocabulary& vocab,
                               const std::vector<Instance>& instances, const RunConfig& cfg,
                               const std::vector<std::size_t>& donor_lengths,
                               std::size_t repetitions, std::uint64_t seed);

// Collects each instance's predicted total length at `tau` (one forward
// pass per instance, no denoising).
std::vector<std::size_t> predicted_lengths(const LogitOracle& oracle, const Vocabulary& vocab,
                                           const std::vector<Instance>& instances,
                                           const RunConfig& cfg, double tau,
                                           std::size_t l_new);

// Window-size robustness: predicted new-token counts for the same
// prompts across a grid of mask-window sizes, summarized by quantiles.
// `truncated` counts instances whose prediction hit the window cap.
struct InvarianceRow {
    std::size_t l_new = 0;
    std::size_t n = 0;
    double q10 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q90 = 0.0;
    std::size_t truncated = 0;
};

struct InvarianceResult {
    std::vector<InvarianceRow> rows;
    std::vector<std::vector<std::size_t>> predicted_new;  // per row, per instance
};

std::vector<std::size_t> default_invariance_grid();

InvarianceResult invariance_study(const LogitOracle& oracle, const Vocabulary& vocab,
                                  const std::vector<Instance>& instances, const RunConfig& cfg,
                                  double tau, const std::vector<std::size_t>& l_new_grid);

// Per-instance score deltas (candidate - baseline) bucketed by the
// baseline's generated length into fixed-width bins. Bins with fewer
// than five pairs are flagged low-confidence, not dropped.
struct BinRow {
    double center = 0.0;
    double mean_delta = 0.0;
    std::size_t count = 0;
    bool low_confidence = false;
};

std::vector<BinRow> correlation_bins(const std::vector<InstanceRecord>& baseline,
                                     const std::vector<InstanceRecord>& candidate,
                                     double bin_width);

// CSV/JSONL writers. Numbers print with %.17g so reruns are
// byte-identical.
void write_records_jsonl(const std::vector<InstanceRecord>& records, std::ostream& os);
std::vector<InstanceRecord> read_records_jsonl(std::istream& is);
void write_summary_csv(const std::vector<MethodSummary>& summaries, std::ostream& os);
void write_sweep_csv(const SweepResult& sweep, std::ostream& os);
void write_invariance_csv(const InvarianceResult& result, std::ostream& os);
void write_bins_csv(const std::vector<BinRow>& rows, std::ostream& os);

}  // namespace smartcrop
