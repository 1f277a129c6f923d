#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "smartcrop/canvas.h"
#include "smartcrop/crop.h"
#include "smartcrop/oracle.h"
#include "smartcrop/schedule.h"
#include "smartcrop/vocab.h"

namespace smartcrop {

enum class DecodeMode { kFullCanvas, kSmartCrop };
enum class ScheduleMode { kPreserveDensity, kPreserveSteps };

struct DecodeConfig {
    DecodeMode mode = DecodeMode::kFullCanvas;
    double tau = 0.9;  // crop threshold; smartcrop mode only
    ScheduleMode schedule_mode = ScheduleMode::kPreserveDensity;
    // When true the crop pass doubles as the first denoising step on the
    // kept window, so cropping adds no extra forward pass.
    bool reuse_first_pass = true;
    // Overrides the curve-predicted length (sensitivity sweeps, shuffled
    // controls). The survival curve is still computed and recorded.
    std::optional<std::size_t> forced_length;

    void validate() const;
};

// One executed forward pass: the canvas length it processed and how many
// tokens it committed. Scheduled steps with a zero count never execute
// and never appear here.
struct StepRecord {
    std::size_t processed_length = 0;
    std::size_t unmasked = 0;
};

struct DecodeResult {
    std::vector<int> tokens;  // final canvas, prompt included
    std::size_t prompt_len = 0;
    std::size_t canvas_len = 0;   // pre-crop canvas length
    std::size_t applied_length = 0;  // canvas length actually denoised
    std::size_t scheduled_steps = 0;  // T for full-canvas, T' for smartcrop
    bool cropped = false;
    std::vector<StepRecord> steps;
    std::optional<CropDecision> crop;  // smartcrop mode only

    std::vector<int> answer_tokens(int eos_id) const;
};

// Commits up to `count` masked positions from a logit matrix covering at
// least the canvas: each masked position takes its argmax token, ranked
// by max softmax probability, ties broken toward lower position index.
// Returns the number of positions committed.
std::size_t commit_from_logits(Canvas& canvas, const Matrix& logits, std::size_t count);

// One forward pass followed by commit_from_logits.
std::size_t denoise_step(const LogitOracle& oracle, Canvas& canvas, std::size_t count);

// Runs the full denoising loop. Full-canvas mode spreads l_new tokens
// over `steps` passes on the fixed canvas. Smartcrop mode spends the
// first pass on the full canvas, cuts the canvas at the predicted (or
// forced) total length, and denoises the kept window; preserve-density
// rescales the step count as max(1, round(steps * kept_new / l_new)),
// preserve-steps keeps `steps`. An unreachable threshold falls back to
// the full canvas and reproduces full-canvas output exactly.
DecodeResult decode(const LogitOracle& oracle, const std::vector<int>& prompt,
                    std::size_t l_new, std::size_t steps, const DecodeConfig& cfg,
                    const Vocabulary& vocab);

// Full trace as JSON: config echo, crop decision, per-pass records,
// final token ids.
nlohmann::json decode_trace_json(const DecodeResult& result, const DecodeConfig& cfg);

const char* decode_mode_name(DecodeMode mode);
const char* schedule_mode_name(ScheduleMode mode);
DecodeMode parse_decode_mode(const std::string& name);
ScheduleMode parse_schedule_mode(const std::string& name);

}  // namespace smartcrop
