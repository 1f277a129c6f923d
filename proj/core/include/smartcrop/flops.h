#pragma once

#include <cstddef>
#include <vector>

#include "smartcrop/decode.h"

namespace smartcrop {

// Per-forward-pass cost in FLOPs as a function of processed canvas
// length: step_flops(L) = c1*L + c2*L^2. The linear term carries the
// parameter work (2 FLOPs per parameter per token), the quadratic term
// the attention score/value work (4 FLOPs per layer per head-dim-summed
// position pair, i.e. 4 * n_layers * d_model).
struct CostModel {
    double c1 = 0.0;
    double c2 = 0.0;

    // c1 = 2 * param_count, c2 = 4 * n_layers * d_model.
    static CostModel dense_transformer(double param_count, std::size_t n_layers,
                                       std::size_t d_model);
    // 8B-parameter reference config: c1 = 1.6e10, c2 = 524288.
    static CostModel llada_8b();

    void validate() const;
    double step_flops(std::size_t length) const;
    double trace_flops(const std::vector<StepRecord>& steps) const;
    // Share of step_flops(length) contributed by the linear term.
    double linear_fraction(std::size_t length) const;
};

// 100 * (1 - candidate / baseline); positive when the candidate is
// cheaper. Throws std::invalid_argument unless baseline > 0.
double savings_percent(double baseline_flops, double candidate_flops);

}  // namespace smartcrop
