#pragma once

#include <cstddef>
#include <vector>

namespace smartcrop {

// The fixed-length token buffer a diffusion decode operates on: prompt
// tokens followed by generation slots. Masked positions always hold
// mask_id; prompt positions are never masked.
struct Canvas {
    std::vector<int> tokens;
    std::vector<bool> masked;
    std::size_t prompt_len = 0;

    std::size_t length() const { return tokens.size(); }
    std::size_t masked_count() const;
};

// Prompt followed by l_new mask slots. Throws std::invalid_argument on an
// empty prompt or l_new < 1.
Canvas init_canvas(const std::vector<int>& prompt, std::size_t l_new, int mask_id);

// Generated tokens from prompt_len up to (not including) the first eos_id;
// the whole generated region if no eos is present.
std::vector<int> eos_truncate(const std::vector<int>& tokens, std::size_t prompt_len, int eos_id);

}  // namespace smartcrop
