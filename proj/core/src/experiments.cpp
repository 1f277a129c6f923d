#include "smartcrop/experiments.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "smartcrop/parallel.h"
#include "smartcrop/rng.h"

namespace smartcrop {

namespace {

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct MethodSpec {
    std::string name;
    bool smartcrop = false;
    double tau = 0.0;
};

DecodeConfig method_decode_config(const RunConfig& cfg, const MethodSpec& method) {
    DecodeConfig dcfg;
    dcfg.mode = method.smartcrop ? DecodeMode::kSmartCrop : DecodeMode::kFullCanvas;
    dcfg.tau = method.tau;
    dcfg.schedule_mode = cfg.schedule_mode;
    dcfg.reuse_first_pass = cfg.reuse_first_pass;
    return dcfg;
}

InstanceRecord decode_one(const LogitOracle& oracle, const Vocabulary& vocab,
                          const Instance& instance, const RunConfig& cfg,
                          const DecodeConfig& dcfg, const std::string& method) {
    InstanceRecord record;
    record.id = instance.id;
    record.method = method;
    try {
        const DecodeResult res =
            decode(oracle, instance.prompt, cfg.task.l_new, cfg.task.steps, dcfg, vocab);
        const std::vector<int> answer = res.answer_tokens(vocab.eos_id());
        record.score = score_answer(cfg.task.metric, answer, instance.answer);
        record.flops = cfg.cost.trace_flops(res.steps);
        record.predicted_length = res.applied_length;
        record.generated_length = answer.size();
        double total_len = 0.0;
        for (const StepRecord& s : res.steps) total_len += static_cast<double>(s.processed_length);
        record.mean_processed_length = total_len / static_cast<double>(res.steps.size());
        record.fallback = res.crop.has_value() && !dcfg.forced_length.has_value() &&
                          !res.crop->threshold_reached;
    } catch (const std::exception& e) {
        record.failed = true;
        record.error = e.what();
    }
    return record;
}

std::vector<InstanceRecord> decode_all(const LogitOracle& oracle, const Vocabulary& vocab,
                                       const std::vector<Instance>& instances,
                                       const RunConfig& cfg, const DecodeConfig& dcfg,
                                       const std::string& method) {
    std::vector<InstanceRecord> records(instances.size());
    parallel_for(instances.size(), cfg.workers, [&](std::size_t i) {
        records[i] = decode_one(oracle, vocab, instances[i], cfg, dcfg, method);
    });
    return records;
}

// Non-failed records from both methods, matched one-to-one by id.
std::vector<std::pair<const InstanceRecord*, const InstanceRecord*>> pair_records(
    const std::vector<InstanceRecord>& baseline, const std::vector<InstanceRecord>& candidate) {
    std::unordered_map<std::string, const InstanceRecord*> by_id;
    for (const InstanceRecord& r : baseline) {
        if (r.failed) continue;
        if (!by_id.emplace(r.id, &r).second) {
            throw std::invalid_argument("pair_records: duplicate baseline id " + r.id);
        }
    }
    std::vector<std::pair<const InstanceRecord*, const InstanceRecord*>> pairs;
    for (const InstanceRecord& r : candidate) {
        if (r.failed) continue;
        auto it = by_id.find(r.id);
        if (it != by_id.end()) pairs.push_back({it->second, &r});
    }
    return pairs;
}

}  // namespace

void RunConfig::validate() const {
    if (task.l_new == 0 || task.steps == 0) {
        throw std::invalid_argument("RunConfig: task canvas and steps must be positive");
    }
    if (tau_grid.empty()) throw std::invalid_argument("RunConfig: empty tau grid");
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        if (!(tau_grid[i] >= 0.0 && tau_grid[i] <= 1.0)) {
            throw std::invalid_argument("RunConfig: tau outside [0,1]");
        }
        if (i > 0 && !(tau_grid[i] > tau_grid[i - 1])) {
            throw std::invalid_argument("RunConfig: tau grid must increase strictly");
        }
    }
    if (bootstrap_resamples == 0) {
        throw std::invalid_argument("RunConfig: bootstrap_resamples must be positive");
    }
    if (workers < 0) throw std::invalid_argument("RunConfig: workers must be nonnegative");
    cost.validate();
}

RunConfig make_run_config(const TaskSpec& task, const CostModel& cost) {
    RunConfig cfg;
    cfg.task = task;
    cfg.schedule_mode = task.schedule_mode;
    cfg.cost = cost;
    return cfg;
}

std::string method_name(bool smartcrop, double tau) {
    if (!smartcrop) return "fc";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sc-%g", tau);
    return buf;
}

BenchmarkResult run_benchmark(const LogitOracle& oracle, const Vocabulary& vocab,
                              const std::vector<Instance>& instances, const RunConfig& cfg) {
    cfg.validate();
    if (instances.size() < 2) throw std::invalid_argument("run_benchmark: need at least 2 instances");

    std::vector<MethodSpec> methods;
    methods.push_back({method_name(false, 0.0), false, 0.0});
    for (double tau : cfg.tau_grid) methods.push_back({method_name(true, tau), true, tau});

    BenchmarkResult result;
    std::vector<std::vector<InstanceRecord>> per_method;
    per_method.reserve(methods.size());
    for (const MethodSpec& method : methods) {
        per_method.push_back(
            decode_all(oracle, vocab, instances, cfg, method_decode_config(cfg, method), method.name));
    }

    const std::vector<InstanceRecord>& fc = per_method[0];
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        const MethodSpec& method = methods[mi];
        const std::vector<InstanceRecord>& records = per_method[mi];

        MethodSummary summary;
        summary.method = method.name;
        summary.tau = method.tau;
        summary.is_baseline = !method.smartcrop;
        for (const InstanceRecord& r : records) {
            if (r.failed) ++summary.failed_count;
            if (r.fallback) ++summary.fallback_count;
        }

        if (summary.is_baseline) {
            std::vector<double> scores, flops, pred, proc, gen;
            for (const InstanceRecord& r : records) {
                if (r.failed) continue;
                scores.push_back(r.score);
                flops.push_back(r.flops);
                pred.push_back(static_cast<double>(r.predicted_length));
                proc.push_back(r.mean_processed_length);
                gen.push_back(static_cast<double>(r.generated_length));
            }
            summary.n = scores.size();
            summary.mean_score = mean_of(scores);
            summary.mean_flops = mean_of(flops);
            summary.mean_predicted_length = mean_of(pred);
            summary.mean_processed_length = mean_of(proc);
            summary.mean_generated_length = mean_of(gen);
        } else {
            const auto pairs = pair_records(fc, records);
            if (pairs.size() < 2) {
                throw std::runtime_error("run_benchmark: too few paired records for " + method.name);
            }
            std::vector<double> fc_scores, sc_scores, sc_flops, savings, pred, proc, gen;
            double fc_total = 0.0;
            double sc_total = 0.0;
            for (const auto& [b, c] : pairs) {
                fc_scores.push_back(b->score);
                sc_scores.push_back(c->score);
                sc_flops.push_back(c->flops);
                savings.push_back(savings_percent(b->flops, c->flops));
                fc_total += b->flops;
                sc_total += c->flops;
                pred.push_back(static_cast<double>(c->predicted_length));
                proc.push_back(c->mean_processed_length);
                gen.push_back(static_cast<double>(c->generated_length));
            }
            summary.n = pairs.size();
            summary.mean_score = mean_of(sc_scores);
            summary.mean_flops = mean_of(sc_flops);
            summary.mean_predicted_length = mean_of(pred);
            summary.mean_processed_length = mean_of(proc);
            summary.mean_generated_length = mean_of(gen);
            summary.flops_saved_mean = mean_of(savings);
            summary.flops_saved_total = savings_percent(fc_total, sc_total);
            summary.perf_delta = mean_of(sc_scores) - mean_of(fc_scores);
            summary.stats = paired_bootstrap(fc_scores, sc_scores, cfg.bootstrap_resamples,
                                             cfg.seed + 1000003 * (mi + 1));
        }
        result.summaries.push_back(std::move(summary));
    }

    // Raising tau can only keep more of the canvas, so mean savings must
    // not grow with tau; a violation means the decode path is corrupt.
    for (std::size_t i = 2; i < result.summaries.size(); ++i) {
        if (result.summaries[i].flops_saved_mean >
            result.summaries[i - 1].flops_saved_mean + 1e-9) {
            throw std::runtime_error("run_benchmark: savings increased with tau");
        }
    }

    for (std::vector<InstanceRecord>& records : per_method) {
        for (InstanceRecord& r : records) result.records.push_back(std::move(r));
    }
    return result;
}

std::vector<double> default_delta_grid() {
    std::vector<double> grid;
    for (int i = -5; i <= 5; ++i) grid.push_back(static_cast<double>(i) / 10.0);
    return grid;
}

std::vector<std::size_t> predicted_lengths(const LogitOracle& oracle, const Vocabulary& vocab,
                                           const std::vector<Instance>& instances,
                                           const RunConfig& cfg, double tau, std::size_t l_new) {
    std::vector<std::size_t> out(instances.size());
    parallel_for(instances.size(), cfg.workers, [&](std::size_t i) {
        const Canvas canvas = init_canvas(instances[i].prompt, l_new, vocab.mask_id());
        const Matrix logits = oracle.logits(canvas);
        const CropDecision decision = predicted_length(
            survival_curve(eos_probabilities(logits, vocab, canvas.prompt_len)), tau);
        out[i] = decision.predicted_total_length;
    });
    return out;
}

SweepResult sensitivity_sweep(const LogitOracle& oracle, const Vocabulary& vocab,
                              const std::vector<Instance>& instances, const RunConfig& cfg,
                              double tau, const std::vector<double>& deltas,
                              bool scale_new_tokens_only) {
    cfg.validate();
    if (instances.size() < 2) throw std::invalid_argument("sensitivity_sweep: need at least 2 instances");
    if (deltas.empty()) throw std::invalid_argument("sensitivity_sweep: empty delta grid");

    SweepResult result;
    result.tau = tau;
    result.scale_new_tokens_only = scale_new_tokens_only;

    // Baseline reference line.
    MethodSpec fc{method_name(false, 0.0), false, 0.0};
    std::vector<double> fc_scores;
    for (const InstanceRecord& r :
         decode_all(oracle, vocab, instances, cfg, method_decode_config(cfg, fc), fc.name)) {
        if (r.failed) throw std::runtime_error("sensitivity_sweep: baseline decode failed for " + r.id);
        fc_scores.push_back(r.score);
    }
    result.fc_mean = mean_of(fc_scores);

    // The prediction is made once per instance and only the perturbation
    // varies across rows, so delta = 0 reproduces the plain run.
    const std::vector<std::size_t> base =
        predicted_lengths(oracle, vocab, instances, cfg, tau, cfg.task.l_new);

    std::size_t row_index = 0;
    for (double delta : deltas) {
        PerturbationSpec spec;
        spec.delta = delta;
        spec.scale_new_tokens_only = scale_new_tokens_only;
        spec.validate();

        std::vector<double> scores(instances.size());
        parallel_for(instances.size(), cfg.workers, [&](std::size_t i) {
            DecodeConfig dcfg;
            dcfg.mode = DecodeMode::kSmartCrop;
            dcfg.tau = tau;
            dcfg.schedule_mode = cfg.schedule_mode;
            dcfg.reuse_first_pass = cfg.reuse_first_pass;
            dcfg.forced_length =
                perturb_length(base[i], spec, instances[i].prompt.size(),
                               instances[i].prompt.size() + cfg.task.l_new);
            const DecodeResult res =
                decode(oracle, instances[i].prompt, cfg.task.l_new, cfg.task.steps, dcfg, vocab);
            scores[i] = score_answer(cfg.task.metric, res.answer_tokens(vocab.eos_id()),
                                     instances[i].answer);
        });

        const MeanCi ci = mean_ci(scores, cfg.bootstrap_resamples, cfg.seed + 500009 * (row_index + 1));
        result.rows.push_back({delta, ci.mean, ci.ci_low, ci.ci_high});
        ++row_index;
    }

    const ControlResult control = shuffled_control(oracle, vocab, instances, cfg, base, 5, cfg.seed + 777);
    result.control_mean = control.mean;
    return result;
}

ControlResult shuffled_control(const LogitOracle& oracle, const Vocabulary& vocab,
                               const std::vector<Instance>& instances, const RunConfig& cfg,
                               const std::vector<std::size_t>& donor_lengths,
                               std::size_t repetitions, std::uint64_t seed) {
    cfg.validate();
    if (instances.empty()) throw std::invalid_argument("shuffled_control: no instances");
    if (donor_lengths.empty()) throw std::invalid_argument("shuffled_control: empty donor pool");
    if (repetitions == 0) throw std::invalid_argument("shuffled_control: repetitions must be positive");

    ControlResult result;
    result.repetitions = repetitions;
    result.seed = seed;

    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        Rng rng(seed + rep);
        // Draws happen on one stream before the parallel section.
        std::vector<std::size_t> forced(instances.size());
        for (std::size_t i = 0; i < instances.size(); ++i) {
            const std::size_t donor = donor_lengths[rng.uniform_below(donor_lengths.size())];
            const std::size_t lo = instances[i].prompt.size() + 1;
            const std::size_t hi = instances[i].prompt.size() + cfg.task.l_new;
            forced[i] = std::min(std::max(donor, lo), hi);
        }

        std::vector<double> scores(instances.size());
        parallel_for(instances.size(), cfg.workers, [&](std::size_t i) {
            DecodeConfig dcfg;
            dcfg.mode = DecodeMode::kSmartCrop;
            dcfg.tau = 0.5;  // the forced length overrides the curve decision
            dcfg.schedule_mode = cfg.schedule_mode;
            dcfg.reuse_first_pass = cfg.reuse_first_pass;
            dcfg.forced_length = forced[i];
            const DecodeResult res =
                decode(oracle, instances[i].prompt, cfg.task.l_new, cfg.task.steps, dcfg, vocab);
            scores[i] = score_answer(cfg.task.metric, res.answer_tokens(vocab.eos_id()),
                                     instances[i].answer);
        });
        result.rep_means.push_back(mean_of(scores));
    }
    result.mean = mean_of(result.rep_means);
    return result;
}

std::vector<std::size_t> default_invariance_grid() { return {32, 64, 128, 160}; }

InvarianceResult invariance_study(const LogitOracle& oracle, const Vocabulary& vocab,
                                  const std::vector<Instance>& instances, const RunConfig& cfg,
                                  double tau, const std::vector<std::size_t>& l_new_grid) {
    cfg.validate();
    if (instances.empty()) throw std::invalid_argument("invariance_study: no instances");
    if (l_new_grid.empty()) throw std::invalid_argument("invariance_study: empty window grid");

    InvarianceResult result;
    for (std::size_t l_new : l_new_grid) {
        const std::vector<std::size_t> totals =
            predicted_lengths(oracle, vocab, instances, cfg, tau, l_new);
        std::vector<std::size_t> predicted_new(instances.size());
        std::vector<double> values(instances.size());
        InvarianceRow row;
        row.l_new = l_new;
        row.n = instances.size();
        for (std::size_t i = 0; i < instances.size(); ++i) {
            predicted_new[i] = totals[i] - instances[i].prompt.size();
            values[i] = static_cast<double>(predicted_new[i]);
            if (predicted_new[i] == l_new) ++row.truncated;
        }
        std::sort(values.begin(), values.end());
        row.q10 = quantile_type7(values, 0.10);
        row.q25 = quantile_type7(values, 0.25);
        row.q50 = quantile_type7(values, 0.50);
        row.q75 = quantile_type7(values, 0.75);
        row.q90 = quantile_type7(values, 0.90);
        result.rows.push_back(row);
        result.predicted_new.push_back(std::move(predicted_new));
    }
    return result;
}

std::vector<BinRow> correlation_bins(const std::vector<InstanceRecord>& baseline,
                                     const std::vector<InstanceRecord>& candidate,
                                     double bin_width) {
    if (!(bin_width > 0.0)) throw std::invalid_argument("correlation_bins: bin width must be positive");
    const auto pairs = pair_records(baseline, candidate);

    std::map<std::size_t, std::pair<double, std::size_t>> bins;  // index -> (delta sum, count)
    for (const auto& [b, c] : pairs) {
        const std::size_t index =
            static_cast<std::size_t>(std::floor(static_cast<double>(b->generated_length) / bin_width));
        auto& [sum, count] = bins[index];
        sum += c->score - b->score;
        ++count;
    }

    std::vector<BinRow> rows;
    for (const auto& [index, agg] : bins) {
        BinRow row;
        row.center = (static_cast<double>(index) + 0.5) * bin_width;
        row.mean_delta = agg.first / static_cast<double>(agg.second);
        row.count = agg.second;
        row.low_confidence = agg.second < 5;
        rows.push_back(row);
    }
    return rows;
}

void write_records_jsonl(const std::vector<InstanceRecord>& records, std::ostream& os) {
    for (const InstanceRecord& r : records) {
        nlohmann::json j = {{"id", r.id},
                            {"method", r.method},
                            {"score", r.score},
                            {"flops", r.flops},
                            {"predicted_length", r.predicted_length},
                            {"generated_length", r.generated_length},
                            {"mean_processed_length", r.mean_processed_length},
                            {"fallback", r.fallback},
                            {"failed", r.failed},
                            {"error", r.error}};
        os << j.dump() << '\n';
    }
}

std::vector<InstanceRecord> read_records_jsonl(std::istream& is) {
    std::vector<InstanceRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            InstanceRecord r;
            r.id = j.at("id").get<std::string>();
            r.method = j.at("method").get<std::string>();
            r.score = j.at("score").get<double>();
            r.flops = j.at("flops").get<double>();
            r.predicted_length = j.at("predicted_length").get<std::size_t>();
            r.generated_length = j.at("generated_length").get<std::size_t>();
            r.mean_processed_length = j.at("mean_processed_length").get<double>();
            r.fallback = j.at("fallback").get<bool>();
            r.failed = j.at("failed").get<bool>();
            r.error = j.at("error").get<std::string>();
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("read_records_jsonl: line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return out;
}

void write_summary_csv(const std::vector<MethodSummary>& summaries, std::ostream& os) {
    os << "method,tau,n,mean_score,mean_predicted_length,mean_processed_length,"
          "mean_generated_length,mean_flops,flops_saved_mean,flops_saved_total,perf_delta,"
          "p_value,stars,ci_low,ci_high,fallbacks,failures\n";
    for (const MethodSummary& s : summaries) {
        os << s.method << ',';
        if (!s.is_baseline) os << csv_double(s.tau);
        os << ',' << s.n << ',' << csv_double(s.mean_score) << ','
           << csv_double(s.mean_predicted_length) << ',' << csv_double(s.mean_processed_length)
           << ',' << csv_double(s.mean_generated_length) << ',' << csv_double(s.mean_flops) << ',';
        if (!s.is_baseline) {
            os << csv_double(s.flops_saved_mean) << ',' << csv_double(s.flops_saved_total) << ','
               << csv_double(s.perf_delta) << ',' << csv_double(s.stats.p_value) << ','
               << s.stats.stars << ',' << csv_double(s.stats.ci_low) << ','
               << csv_double(s.stats.ci_high);
        } else {
            os << ",,,,,,";
        }
        os << ',' << s.fallback_count << ',' << s.failed_count << '\n';
    }
}

void write_sweep_csv(const SweepResult& sweep, std::ostream& os) {
    os << "delta,mean,ci_low,ci_high,control_mean,fc_mean\n";
    for (const SweepRow& row : sweep.rows) {
        os << csv_double(row.delta) << ',' << csv_double(row.mean_score) << ','
           << csv_double(row.ci_low) << ',' << csv_double(row.ci_high) << ','
           << csv_double(sweep.control_mean) << ',' << csv_double(sweep.fc_mean) << '\n';
    }
}

void write_invariance_csv(const InvarianceResult& result, std::ostream& os) {
    os << "l_new,count,q10,q25,q50,q75,q90,truncated\n";
    for (const InvarianceRow& row : result.rows) {
        os << row.l_new << ',' << row.n << ',' << csv_double(row.q10) << ',' << csv_double(row.q25)
           << ',' << csv_double(row.q50) << ',' << csv_double(row.q75) << ',' << csv_double(row.q90)
           << ',' << row.truncated << '\n';
    }
}

void write_bins_csv(const std::vector<BinRow>& rows, std::ostream& os) {
    os << "bin_center,mean_delta,count,low_confidence\n";
    for (const BinRow& row : rows) {
        os << csv_double(row.center) << ',' << csv_double(row.mean_delta) << ',' << row.count << ','
           << (row.low_confidence ? 1 : 0) << '\n';
    }
}

}  // namespace smartcrop
