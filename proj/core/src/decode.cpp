#include "smartcrop/decode.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace smartcrop {

namespace {

struct Candidate {
    std::size_t position;
    int token;
    double confidence;
};

// Argmax token and its softmax probability for one logit row. The argmax
// of the softmax is the argmax of the logits, and its probability is
// 1 / sum_j exp(x_j - x_max), so no full softmax is materialized.
Candidate score_row(const Matrix& logits, std::size_t row) {
    const double* x = logits.data.data() + row * logits.cols;
    double best = x[0];
    std::size_t best_idx = 0;
    for (std::size_t j = 0; j < logits.cols; ++j) {
        if (!std::isfinite(x[j])) {
            throw std::invalid_argument("commit_from_logits: non-finite logit");
        }
        if (x[j] > best) {
            best = x[j];
            best_idx = j;
        }
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < logits.cols; ++j) denom += std::exp(x[j] - best);
    return Candidate{row, static_cast<int>(best_idx), 1.0 / denom};
}

Matrix call_oracle(const LogitOracle& oracle, const Canvas& canvas, std::size_t pass_index) {
    try {
        return oracle.logits(canvas);
    } catch (const std::exception& e) {
        throw std::runtime_error("decode: oracle failed at pass " + std::to_string(pass_index) +
                                 ": " + e.what());
    }
}

// The schedule counts sum to the masked count, so a finished run must
// have no masked slot left.
void ensure_complete(const Canvas& canvas) {
    if (canvas.masked_count() != 0) {
        throw std::runtime_error("decode: run finished with masked positions left");
    }
}

}  // namespace

void DecodeConfig::validate() const {
    if (mode == DecodeMode::kSmartCrop) {
        if (!(tau >= 0.0 && tau <= 1.0)) {
            throw std::invalid_argument("DecodeConfig: tau must lie in [0,1]");
        }
    } else if (forced_length.has_value()) {
        throw std::invalid_argument("DecodeConfig: forced_length requires smartcrop mode");
    }
}

std::vector<int> DecodeResult::answer_tokens(int eos_id) const {
    return eos_truncate(tokens, prompt_len, eos_id);
}

std::size_t commit_from_logits(Canvas& canvas, const Matrix& logits, std::size_t count) {
    if (logits.rows < canvas.length()) {
        throw std::invalid_argument("commit_from_logits: logit matrix shorter than canvas");
    }
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < canvas.length(); ++i) {
        if (canvas.masked[i]) candidates.push_back(score_row(logits, i));
    }
    // Candidates enter in position order, so a stable sort on confidence
    // breaks ties toward the lower position index.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.confidence > b.confidence; });
    const std::size_t n = std::min(count, candidates.size());
    for (std::size_t i = 0; i < n; ++i) {
        canvas.tokens[candidates[i].position] = candidates[i].token;
        canvas.masked[candidates[i].position] = false;
    }
    return n;
}

std::size_t denoise_step(const LogitOracle& oracle, Canvas& canvas, std::size_t count) {
    return commit_from_logits(canvas, oracle.logits(canvas), count);
}

DecodeResult decode(const LogitOracle& oracle, const std::vector<int>& prompt,
                    std::size_t l_new, std::size_t steps, const DecodeConfig& cfg,
                    const Vocabulary& vocab) {
    cfg.validate();
    if (steps == 0) throw std::invalid_argument("decode: steps must be positive");
    if (oracle.vocab_size() != vocab.size()) {
        throw std::invalid_argument("decode: oracle and vocabulary sizes differ");
    }

    Canvas canvas = init_canvas(prompt, l_new, vocab.mask_id());
    DecodeResult result;
    result.prompt_len = canvas.prompt_len;
    result.canvas_len = canvas.length();

    std::size_t pass_index = 0;
    if (cfg.mode == DecodeMode::kFullCanvas) {
        result.applied_length = canvas.length();
        result.scheduled_steps = steps;
        const Schedule schedule = build_schedule(l_new, steps);
        for (std::size_t count : schedule.counts) {
            if (count == 0) continue;
            const Matrix logits = call_oracle(oracle, canvas, pass_index++);
            const std::size_t committed = commit_from_logits(canvas, logits, count);
            result.steps.push_back({canvas.length(), committed});
        }
        ensure_complete(canvas);
        result.tokens = canvas.tokens;
        return result;
    }

    // Smartcrop: the first pass runs on the full canvas and feeds both the
    // crop decision and (when reused) the first round of commits.
    const Matrix first_logits = call_oracle(oracle, canvas, pass_index++);
    const std::size_t full_len = canvas.length();
    CropDecision decision = predicted_length(
        survival_curve(eos_probabilities(first_logits, vocab, canvas.prompt_len)), cfg.tau);
    const std::size_t applied = cfg.forced_length.value_or(decision.predicted_total_length);

    canvas = crop_canvas(canvas, applied);
    result.applied_length = applied;
    result.cropped = applied < full_len;
    result.crop = std::move(decision);

    const std::size_t kept_new = applied - canvas.prompt_len;
    std::size_t reduced_steps = steps;
    if (cfg.schedule_mode == ScheduleMode::kPreserveDensity) {
        const double scaled =
            static_cast<double>(steps) * static_cast<double>(kept_new) / static_cast<double>(l_new);
        reduced_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(scaled + 0.5)));
    }
    result.scheduled_steps = reduced_steps;

    const Schedule schedule = build_schedule(kept_new, reduced_steps);
    std::size_t next = 0;
    if (cfg.reuse_first_pass) {
        // The crop pass doubles as the first scheduled step, charged at the
        // full canvas length it actually processed.
        const std::size_t committed = commit_from_logits(canvas, first_logits, schedule.counts[0]);
        result.steps.push_back({full_len, committed});
        next = 1;
    } else {
        result.steps.push_back({full_len, 0});
    }
    for (std::size_t i = next; i < schedule.counts.size(); ++i) {
        if (schedule.counts[i] == 0) continue;
        const Matrix logits = call_oracle(oracle, canvas, pass_index++);
        const std::size_t committed = commit_from_logits(canvas, logits, schedule.counts[i]);
        result.steps.push_back({canvas.length(), committed});
    }
    ensure_complete(canvas);
    result.tokens = canvas.tokens;
    return result;
}

nlohmann::json decode_trace_json(const DecodeResult& result, const DecodeConfig& cfg) {
    nlohmann::json j;
    j["mode"] = decode_mode_name(cfg.mode);
    j["schedule_mode"] = schedule_mode_name(cfg.schedule_mode);
    j["reuse_first_pass"] = cfg.reuse_first_pass;
    if (cfg.mode == DecodeMode::kSmartCrop) {
        j["tau"] = cfg.tau;
        if (cfg.forced_length.has_value()) j["forced_length"] = *cfg.forced_length;
    }
    j["prompt_len"] = result.prompt_len;
    j["canvas_len"] = result.canvas_len;
    j["applied_length"] = result.applied_length;
    j["scheduled_steps"] = result.scheduled_steps;
    j["cropped"] = result.cropped;
    if (result.crop.has_value()) {
        j["crop"] = {{"tau", result.crop->tau},
                     {"predicted_total_length", result.crop->predicted_total_length},
                     {"threshold_reached", result.crop->threshold_reached},
                     {"cumulative", result.crop->curve.cumulative}};
    }
    nlohmann::json passes = nlohmann::json::array();
    for (const StepRecord& s : result.steps) {
        passes.push_back({{"processed_length", s.processed_length}, {"unmasked", s.unmasked}});
    }
    j["passes"] = std::move(passes);
    j["tokens"] = result.tokens;
    return j;
}

const char* decode_mode_name(DecodeMode mode) {
    return mode == DecodeMode::kFullCanvas ? "fc" : "smartcrop";
}

const char* schedule_mode_name(ScheduleMode mode) {
    return mode == ScheduleMode::kPreserveDensity ? "preserve-density" : "preserve-steps";
}

DecodeMode parse_decode_mode(const std::string& name) {
    if (name == "fc") return DecodeMode::kFullCanvas;
    if (name == "smartcrop") return DecodeMode::kSmartCrop;
    throw std::invalid_argument("unknown decode mode: " + name);
}

ScheduleMode parse_schedule_mode(const std::string& name) {
    if (name == "preserve-density") return ScheduleMode::kPreserveDensity;
    if (name == "preserve-steps") return ScheduleMode::kPreserveSteps;
    throw std::invalid_argument("unknown schedule mode: " + name);
}

}  // namespace smartcrop
