#include "smartcrop/canvas.h"

#include <stdexcept>

namespace smartcrop {

std::size_t Canvas::masked_count() const {
    std::size_t n = 0;
    for (bool m : masked)
        if (m) ++n;
    return n;
}

Canvas init_canvas(const std::vector<int>& prompt, std::size_t l_new, int mask_id) {
    if (prompt.empty()) throw std::invalid_argument("init_canvas: prompt must be nonempty");
    if (l_new < 1) throw std::invalid_argument("init_canvas: l_new must be >= 1");
    Canvas c;
    c.prompt_len = prompt.size();
    c.tokens = prompt;
    c.tokens.resize(prompt.size() + l_new, mask_id);
    c.masked.assign(prompt.size(), false);
    c.masked.resize(prompt.size() + l_new, true);
    return c;
}

std::vector<int> eos_truncate(const std::vector<int>& tokens, std::size_t prompt_len, int eos_id) {
    std::vector<int> out;
    for (std::size_t i = prompt_len; i < tokens.size(); ++i) {
        if (tokens[i] == eos_id) break;
        out.push_back(tokens[i]);
    }
    return out;
}

}  // namespace smartcrop
