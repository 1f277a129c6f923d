#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "smartcrop/experiments.h"
#include "smartcrop/oracle.h"
#include "smartcrop/tasks.h"
#include "smartcrop/vocab.h"

using namespace smartcrop;

namespace {

// Scripted fixture. EoS schedule phi = {0, 0.3, 0.4, 0.8, 1, 1} gives
// cumulative stop probabilities {0, 0.3, 0.58, 0.916, 1, 1}, so the
// predicted total length is prompt+3 at tau 0.5, prompt+4 at tau 0.9 and
// prompt+5 at tau 0.99. With filler {'a'} the decoded answer is always
// "a a a" once the window reaches three slots.
std::vector<double> fixture_schedule() { return {0.0, 0.3, 0.4, 0.8, 1.0, 1.0}; }

ScriptedOracle fixture_oracle(const Vocabulary& vocab) {
    return ScriptedOracle(fixture_schedule(), vocab, {vocab.first_letter_id()});
}

std::vector<Instance> fixture_instances(const Vocabulary& vocab, std::size_t n) {
    std::vector<Instance> out;
    const int a = vocab.first_letter_id();
    for (std::size_t i = 0; i < n; ++i) {
        Instance inst;
        inst.id = "fix-" + std::to_string(i);
        inst.prompt = {vocab.id("x"), vocab.sep_id()};
        inst.answer = {a, a, a};
        out.push_back(std::move(inst));
    }
    return out;
}

RunConfig fixture_config() {
    RunConfig cfg;
    cfg.task.name = "copyk";
    cfg.task.l_new = 6;
    cfg.task.steps = 6;
    cfg.task.metric = "exact_match";
    cfg.tau_grid = {0.5, 0.9, 0.99};
    cfg.cost = CostModel{1.0, 0.0};
    cfg.bootstrap_resamples = 200;
    cfg.seed = 7;
    return cfg;
}

// Throws on any prompt starting with the poison token; used to exercise
// per-instance failure isolation.
class PoisonOracle : public LogitOracle {
public:
    PoisonOracle(const Vocabulary& vocab, int poison)
        : inner_(fixture_schedule(), vocab, {vocab.first_letter_id()}), poison_(poison) {}
    Matrix logits(const Canvas& canvas) const override {
        if (!canvas.tokens.empty() && canvas.tokens[0] == poison_) {
            throw std::runtime_error("poisoned prompt");
        }
        return inner_.logits(canvas);
    }
    int vocab_size() const override { return inner_.vocab_size(); }

private:
    ScriptedOracle inner_;
    int poison_;
};

InstanceRecord make_record(const std::string& id, double score, std::size_t generated_length,
                           bool failed = false) {
    InstanceRecord r;
    r.id = id;
    r.method = "m";
    r.score = score;
    r.generated_length = generated_length;
    r.failed = failed;
    return r;
}

}  // namespace

TEST_CASE("run config validation") {
    RunConfig cfg = fixture_config();
    CHECK_NOTHROW(cfg.validate());

    cfg.tau_grid = {};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = fixture_config();
    cfg.tau_grid = {0.5, 1.5};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = fixture_config();
    cfg.tau_grid = {0.9, 0.5};  // must increase strictly
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = fixture_config();
    cfg.bootstrap_resamples = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = fixture_config();
    cfg.task.l_new = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = fixture_config();
    cfg.workers = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("make_run_config lifts the task schedule mode") {
    TaskSpec task = task_preset("verbose-qa");
    RunConfig cfg = make_run_config(task, CostModel::llada_8b());
    CHECK(cfg.schedule_mode == ScheduleMode::kPreserveSteps);
    CHECK(cfg.task.name == "verbose-qa");
}

TEST_CASE("method names") {
    CHECK(method_name(false, 0.9) == "fc");
    CHECK(method_name(true, 0.9) == "sc-0.9");
    CHECK(method_name(true, 0.75) == "sc-0.75");
    CHECK(method_name(true, 0.99) == "sc-0.99");
}

TEST_CASE("benchmark on the scripted fixture produces analytic records") {
    const Vocabulary vocab = Vocabulary::toy();
    const ScriptedOracle oracle = fixture_oracle(vocab);
    const std::vector<Instance> instances = fixture_instances(vocab, 3);
    const RunConfig cfg = fixture_config();

    const BenchmarkResult result = run_benchmark(oracle, vocab, instances, cfg);

    // Baseline records first, then one block per tau.
    REQUIRE(result.records.size() == 12);
    REQUIRE(result.summaries.size() == 4);
    CHECK(result.records[0].method == "fc");
    CHECK(result.records[3].method == "sc-0.5");
    CHECK(result.records[6].method == "sc-0.9");
    CHECK(result.records[9].method == "sc-0.99");

    // Full canvas: 6 steps over 8 positions at cost c1 = 1 per token.
    const InstanceRecord& fc = result.records[0];
    CHECK(fc.flops == 48.0);
    CHECK(fc.predicted_length == 8);
    CHECK(fc.generated_length == 3);
    CHECK(fc.mean_processed_length == 8.0);
    CHECK(fc.score == 1.0);
    CHECK_FALSE(fc.fallback);

    // tau 0.9 keeps prompt+4 slots; preserve-density gives T' = 4, and
    // the reused first pass runs at the full canvas length:
    // 8 + 3 * 6 = 26 token-positions.
    const InstanceRecord& sc = result.records[6];
    CHECK(sc.predicted_length == 6);
    CHECK(sc.flops == 26.0);
    CHECK(sc.mean_processed_length == doctest::Approx(6.5));
    CHECK(sc.score == 1.0);
    CHECK_FALSE(sc.fallback);

    // Summary block: baseline row, then strictly decreasing savings.
    const MethodSummary& base = result.summaries[0];
    CHECK(base.is_baseline);
    CHECK(base.n == 3);
    CHECK(base.mean_flops == 48.0);
    CHECK(base.mean_score == 1.0);

    const MethodSummary& s05 = result.summaries[1];
    const MethodSummary& s09 = result.summaries[2];
    const MethodSummary& s99 = result.summaries[3];
    CHECK(s05.tau == 0.5);
    CHECK(s05.n == 3);
    CHECK(s05.flops_saved_mean == doctest::Approx(62.5));
    CHECK(s09.flops_saved_mean == doctest::Approx(100.0 * (1.0 - 26.0 / 48.0)));
    CHECK(s99.flops_saved_mean == doctest::Approx(25.0));
    CHECK(s05.flops_saved_total == doctest::Approx(s05.flops_saved_mean));
    CHECK(s09.perf_delta == 0.0);
    CHECK(s09.stats.p_value == 1.0);
    CHECK(s09.stats.n == 3);
    CHECK(s09.fallback_count == 0);
    CHECK(s09.failed_count == 0);
}

TEST_CASE("benchmark results do not depend on the worker count") {
    const Vocabulary vocab = Vocabulary::toy();
    const ScriptedOracle oracle = fixture_oracle(vocab);
    const std::vector<Instance> instances = fixture_instances(vocab, 4);
    RunConfig cfg = fixture_config();

    cfg.workers = 1;
    const BenchmarkResult serial = run_benchmark(oracle, vocab, instances, cfg);
    cfg.workers = 3;
    const BenchmarkResult threaded = run_benchmark(oracle, vocab, instances, cfg);

    std::ostringstream a, b;
    write_records_jsonl(serial.records, a);
    write_records_jsonl(threaded.records, b);
    CHECK(a.str() == b.str());
}

TEST_CASE("a decode failure drops the instance from pairing, not the run") {
    const Vocabulary vocab = Vocabulary::toy();
    std::vector<Instance> instances = fixture_instances(vocab, 4);
    const int poison = vocab.id("z");
    instances[1].prompt[0] = poison;
    const PoisonOracle oracle(vocab, poison);
    const RunConfig cfg = fixture_config();

    const BenchmarkResult result = run_benchmark(oracle, vocab, instances, cfg);

    const InstanceRecord& bad = result.records[1];
    CHECK(bad.failed);
    CHECK(bad.error.find("poisoned") != std::string::npos);
    CHECK(bad.score == 0.0);

    CHECK(result.summaries[0].failed_count == 1);
    CHECK(result.summaries[0].n == 3);
    for (std::size_t i = 1; i < result.summaries.size(); ++i) {
        CHECK(result.summaries[i].failed_count == 1);
        CHECK(result.summaries[i].n == 3);  // paired among the survivors
        CHECK(result.summaries[i].stats.n == 3);
    }
}

TEST_CASE("an unreachable threshold falls back to the full canvas") {
    const Vocabulary vocab = Vocabulary::toy();
    const ScriptedOracle oracle(std::vector<double>(4, 0.0), vocab, {vocab.first_letter_id()});
    std::vector<Instance> instances = fixture_instances(vocab, 2);
    for (Instance& inst : instances) inst.answer.assign(4, vocab.first_letter_id());
    RunConfig cfg = fixture_config();
    cfg.task.l_new = 4;
    cfg.task.steps = 4;
    cfg.tau_grid = {0.9};

    const BenchmarkResult result = run_benchmark(oracle, vocab, instances, cfg);
    const MethodSummary& sc = result.summaries[1];
    CHECK(sc.fallback_count == 2);
    // Reusing the first pass makes the fallback run identical to the
    // baseline, so nothing is saved and nothing is lost.
    CHECK(sc.flops_saved_mean == 0.0);
    CHECK(sc.perf_delta == 0.0);
    for (const InstanceRecord& r : result.records) {
        if (r.method == "sc-0.9") CHECK(r.fallback);
    }
}

TEST_CASE("predicted lengths come straight from the survival curve") {
    const Vocabulary vocab = Vocabulary::toy();
    const ScriptedOracle oracle = fixture_oracle(vocab);
    const std::vector<Instance> instances = fixture_instances(vocab, 3);
    const RunConfig cfg = fixture_config();

    const std::vector<std::size_t> lengths =
        predicted_lengths(oracle, vocab, instances, cfg, 0.9, cfg.task.l_new);
    REQUIRE(lengths.size() == 3);
    for (std::size_t v : lengths) CHECK(v == 6);  // prompt 2 + 4
}

TEST_CASE("sensitivity sweep spans the default grid and degrades under shrinkage") {
    const Vocabulary vocab = Vocabulary::toy();
    const ScriptedOracle oracle = fixture_oracle(vocab);
    const std::vector<Instance> instances = fixture_instances(vocab, 3);
    const RunConfig cfg = fixture_config();

    const std::vector<double> grid = default_delta_grid();
    REQUIRE(grid.size() == 11);
    CHECK(grid.front() == -0.5);
    CHECK(grid.back() == 0.5);

    const SweepResult sweep = sensitivity_sweep(oracle, vocab, instances, cfg, 0.9, grid, false);
    CHECK(sweep.tau == 0.9);
    CHECK_FALSE(sweep.scale_new_tokens_only);
    REQUIRE(sweep.rows.size() == 11);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(sweep.rows[i].delta == grid[i]);

    // delta -0.5 halves the kept window to one slot: the answer cannot
    // fit, so exact match drops to zero; delta 0 reproduces the plain
    // smartcrop run.
    CHECK(sweep.rows[0].mean_score == 0.0);
    CHECK(sweep.rows[5].mean_score == 1.0);
    CHECK(sweep.rows[10].mean_score == 1.0);  // over-length clamps to the canvas
    for (const SweepRow& row : sweep.rows) {
        CHECK(row.ci_low <= row.mean_score + 1e-12);
        CHECK(row.ci_high >= row.mean_score - 1e-12);
    }
    CHECK(sweep.fc_mean == 1.0);
    CHECK(sweep.control_mean == 1.0);  // donors all carry the right length here
}

TEST_CASE("sweep validates its inputs") {
    const Vocabulary vocab = Vocabulary::toy();
    const ScriptedOracle oracle = fixture_oracle(vocab);
    const std::vector<Instance> instances = fixture_instances(vocab, 3);
    const RunConfig cfg = fixture_config();
    CHECK_THROWS_AS(sensitivity_sweep(oracle, vocab, instances, cfg, 0.9, {}, false),
                    std::invalid_argument);
    CHECK_THROWS_AS(sensitivity_sweep(oracle, vocab, {instances[0]}, cfg, 0.9, {0.0}, false),
                    std::invalid_argument);
}

TEST_CASE("shuffled control clamps donors into each instance's window") {
    const Vocabulary vocab = Vocabulary::toy();
    const ScriptedOracle oracle = fixture_oracle(vocab);
    const std::vector<Instance> instances = fixture_instances(vocab, 3);
    const RunConfig cfg = fixture_config();

    // A donor below the window floor forces one-slot decodes: wrong answer.
    const ControlResult tiny = shuffled_control(oracle, vocab, instances, cfg, {1}, 4, 77);
    CHECK(tiny.repetitions == 4);
    CHECK(tiny.seed == 77);
    REQUIRE(tiny.rep_means.size() == 4);
    CHECK(tiny.mean == 0.0);

    // A donor beyond the canvas clamps to the full window: right answer.
    const ControlResult huge = shuffled_control(oracle, vocab, instances, cfg, {100}, 4, 77);
    CHECK(huge.mean == 1.0);

    const ControlResult again = shuffled_control(oracle, vocab, instances, cfg, {1}, 4, 77);
    CHECK(again.rep_means == tiny.rep_means);

    CHECK_THROWS_AS(shuffled_control(oracle, vocab, instances, cfg, {}, 4, 77),
                    std::invalid_argument);
    CHECK_THROWS_AS(shuffled_control(oracle, vocab, instances, cfg, {1}, 0, 77),
                    std::invalid_argument);
}

TEST_CASE("invariance study reports stable windows and flags truncation") {
    const Vocabulary vocab = Vocabulary::toy();
    // Certain stop at the third generated slot, visible from any window
    // of at least three cells.
    std::vector<double> schedule(16, 0.0);
    schedule[2] = 1.0;
    const ScriptedOracle oracle(schedule, vocab, {vocab.first_letter_id()});
    const std::vector<Instance> instances = fixture_instances(vocab, 4);
    const RunConfig cfg = fixture_config();

    const InvarianceResult result = invariance_study(oracle, vocab, instances, cfg, 0.9, {2, 8, 16});
    REQUIRE(result.rows.size() == 3);
    REQUIRE(result.predicted_new.size() == 3);

    // Window 2 cannot see the stop signal: the fallback pins every
    // prediction at the cap.
    CHECK(result.rows[0].l_new == 2);
    CHECK(result.rows[0].n == 4);
    CHECK(result.rows[0].truncated == 4);
    CHECK(result.rows[0].q50 == 2.0);

    // Windows 8 and 16 agree on three new tokens, nothing truncated.
    for (std::size_t i : {std::size_t(1), std::size_t(2)}) {
        CHECK(result.rows[i].truncated == 0);
        CHECK(result.rows[i].q10 == 3.0);
        CHECK(result.rows[i].q50 == 3.0);
        CHECK(result.rows[i].q90 == 3.0);
        for (std::size_t v : result.predicted_new[i]) CHECK(v == 3);
    }

    CHECK_THROWS_AS(invariance_study(oracle, vocab, instances, cfg, 0.9, {}),
                    std::invalid_argument);
}

TEST_CASE("default invariance grid") {
    CHECK(default_invariance_grid() == std::vector<std::size_t>{32, 64, 128, 160});
}

TEST_CASE("correlation bins bucket paired deltas by baseline length") {
    std::vector<InstanceRecord> baseline = {
        make_record("a", 1.0, 0), make_record("b", 1.0, 1), make_record("c", 0.0, 2),
        make_record("d", 1.0, 3), make_record("e", 0.0, 5),
        make_record("f", 1.0, 2, true),  // failed: dropped
        make_record("g", 1.0, 9),        // unpaired: dropped
    };
    std::vector<InstanceRecord> candidate = {
        make_record("a", 0.0, 0), make_record("b", 1.0, 1), make_record("c", 1.0, 2),
        make_record("d", 1.0, 3), make_record("e", 0.0, 4), make_record("f", 0.0, 2),
    };
    for (int i = 0; i < 5; ++i) {  // five pairs in one bin: confident
        baseline.push_back(make_record("h" + std::to_string(i), 1.0, 7));
        candidate.push_back(make_record("h" + std::to_string(i), 1.0, 7));
    }

    const std::vector<BinRow> rows = correlation_bins(baseline, candidate, 2.0);
    REQUIRE(rows.size() == 4);

    CHECK(rows[0].center == 1.0);  // lengths 0 and 1
    CHECK(rows[0].count == 2);
    CHECK(rows[0].mean_delta == doctest::Approx(-0.5));
    CHECK(rows[0].low_confidence);

    CHECK(rows[1].center == 3.0);  // lengths 2 and 3
    CHECK(rows[1].count == 2);
    CHECK(rows[1].mean_delta == doctest::Approx(0.5));

    CHECK(rows[2].center == 5.0);
    CHECK(rows[2].count == 1);
    CHECK(rows[2].mean_delta == 0.0);

    CHECK(rows[3].center == 7.0);
    CHECK(rows[3].count == 5);
    CHECK_FALSE(rows[3].low_confidence);

    CHECK_THROWS_AS(correlation_bins(baseline, candidate, 0.0), std::invalid_argument);
}

TEST_CASE("records survive a jsonl round trip") {
    const Vocabulary vocab = Vocabulary::toy();
    const ScriptedOracle oracle = fixture_oracle(vocab);
    const std::vector<Instance> instances = fixture_instances(vocab, 2);
    const BenchmarkResult result = run_benchmark(oracle, vocab, instances, fixture_config());

    std::ostringstream out;
    write_records_jsonl(result.records, out);
    std::istringstream in(out.str());
    const std::vector<InstanceRecord> back = read_records_jsonl(in);

    REQUIRE(back.size() == result.records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].id == result.records[i].id);
        CHECK(back[i].method == result.records[i].method);
        CHECK(back[i].score == result.records[i].score);
        CHECK(back[i].flops == result.records[i].flops);
        CHECK(back[i].predicted_length == result.records[i].predicted_length);
        CHECK(back[i].generated_length == result.records[i].generated_length);
        CHECK(back[i].mean_processed_length == result.records[i].mean_processed_length);
        CHECK(back[i].fallback == result.records[i].fallback);
        CHECK(back[i].failed == result.records[i].failed);
    }
}

TEST_CASE("malformed record lines are reported with their line number") {
    std::istringstream in("{\"id\": \"a\"}\n");
    try {
        read_records_jsonl(in);
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
}

TEST_CASE("csv writers pin their headers and baseline blanks") {
    const Vocabulary vocab = Vocabulary::toy();
    const ScriptedOracle oracle = fixture_oracle(vocab);
    const std::vector<Instance> instances = fixture_instances(vocab, 3);
    const RunConfig cfg = fixture_config();
    const BenchmarkResult result = run_benchmark(oracle, vocab, instances, cfg);

    std::ostringstream summary;
    write_summary_csv(result.summaries, summary);
    std::istringstream lines(summary.str());
    std::string header, fc_row;
    std::getline(lines, header);
    std::getline(lines, fc_row);
    CHECK(header ==
          "method,tau,n,mean_score,mean_predicted_length,mean_processed_length,"
          "mean_generated_length,mean_flops,flops_saved_mean,flops_saved_total,perf_delta,"
          "p_value,stars,ci_low,ci_high,fallbacks,failures");
    CHECK(fc_row.substr(0, 4) == "fc,,");  // no tau on the baseline row
    const auto commas = [](const std::string& s) {
        return static_cast<std::size_t>(std::count(s.begin(), s.end(), ','));
    };
    CHECK(commas(header) == 16);
    CHECK(commas(fc_row) == 16);

    std::ostringstream sweep_os;
    write_sweep_csv(sensitivity_sweep(oracle, vocab, instances, cfg, 0.9, {0.0}, false), sweep_os);
    CHECK(sweep_os.str().substr(0, sweep_os.str().find('\n')) ==
          "delta,mean,ci_low,ci_high,control_mean,fc_mean");

    std::ostringstream inv_os;
    write_invariance_csv(invariance_study(oracle, vocab, instances, cfg, 0.9, {6}), inv_os);
    CHECK(inv_os.str().substr(0, inv_os.str().find('\n')) ==
          "l_new,count,q10,q25,q50,q75,q90,truncated");

    std::ostringstream bins_os;
    write_bins_csv({{1.0, 0.5, 2, true}}, bins_os);
    CHECK(bins_os.str() == "bin_center,mean_delta,count,low_confidence\n1,0.5,2,1\n");
}
