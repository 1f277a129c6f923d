#pragma once

#include <cstddef>
#include <vector>

namespace smartcrop {

// Per-step unmask counts for a denoising run. Counts sum to the number of
// initially masked positions; zero-count steps (possible when T exceeds
// the masked count) are skipped at run time without a forward pass.
struct Schedule {
    std::vector<std::size_t> counts;

    std::size_t total_steps() const { return counts.size(); }
    std::size_t total_tokens() const;
};

// Spreads n_masked tokens over T steps as evenly as possible: each step
// unmasks floor(n/T) or ceil(n/T) tokens, the larger counts first.
Schedule build_schedule(std::size_t n_masked, std::size_t steps);

}  // namespace smartcrop
