#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "smartcrop/canvas.h"
#include "smartcrop/matrix.h"
#include "smartcrop/vocab.h"

namespace smartcrop {

// Per-position EoS probabilities phi for the generation region,
// values[i] = Pr(token at position prompt_len+1+i is EoS), i = 0 .. L_c-L_p-1.
struct EosProbabilities {
    std::size_t prompt_len = 0;
    std::vector<double> values;

    std::size_t canvas_len() const { return prompt_len + values.size(); }
};

// Cumulative termination probabilities over total lengths:
// cumulative[i] = Pr(L* <= prompt_len+1+i). Entries are nondecreasing and
// stay in [0,1].
struct SurvivalCurve {
    std::size_t prompt_len = 0;
    std::vector<double> cumulative;

    std::size_t canvas_len() const { return prompt_len + cumulative.size(); }
};

// Where to cut the canvas: the smallest total length whose cumulative
// termination probability reaches tau, or the full canvas when the
// threshold is never reached.
struct CropDecision {
    double tau = 0.0;
    std::size_t predicted_total_length = 0;  // in [prompt_len+1, canvas_len]
    bool threshold_reached = false;
    SurvivalCurve curve;
};

// Deviation factor for the sensitivity sweep. By default the factor
// scales the full predicted length, prompt included; the alternative
// scales only the predicted new tokens.
struct PerturbationSpec {
    double delta = 0.0;
    bool scale_new_tokens_only = false;

    void validate() const;  // delta must lie in [-0.5, +0.5]
};

// Softmax EoS mass per generation-region position. Prompt rows of the
// logit matrix are ignored. Throws std::invalid_argument if the logit
// matrix has no generation rows or the vocab does not match its width.
EosProbabilities eos_probabilities(const Matrix& logits, const Vocabulary& vocab, std::size_t prompt_len);

// cumulative[l] = 1 - prod_{j<=l} (1 - phi_j), evaluated in log space
// (sum of log1p(-phi), then -expm1) so thousands of tiny phi values do
// not underflow. phi = 1 saturates the curve at 1 from that position on.
SurvivalCurve survival_curve(const EosProbabilities& p);

// Smallest total length where the curve reaches tau. When no position
// qualifies, falls back to the full canvas with threshold_reached=false.
// Throws std::invalid_argument for tau outside [0,1].
CropDecision predicted_length(const SurvivalCurve& curve, double tau);

// round(L * (1 + delta)) with round-half-up ties, clamped to
// [prompt_len+1, canvas_len].
std::size_t perturb_length(std::size_t predicted_total_length, const PerturbationSpec& spec,
                           std::size_t prompt_len, std::size_t canvas_len);

// Drops trailing mask slots so the canvas has exactly target_total_length
// positions. Throws std::invalid_argument if the target is out of range
// or an unmasked position would be removed.
Canvas crop_canvas(const Canvas& canvas, std::size_t target_total_length);

// Two columns: position (total length) and cumulative probability.
void write_survival_csv(const SurvivalCurve& curve, std::ostream& os);

}  // namespace smartcrop
