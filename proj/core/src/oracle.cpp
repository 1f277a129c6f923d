#include "smartcrop/oracle.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace smartcrop {

namespace {
// Finite stand-in for log(0): exp(kZeroMassLogit - max) underflows to
// exactly 0.0 in double precision for any max in [-1e3, 1e3].
constexpr double kZeroMassLogit = -1e9;
}  // namespace

ScriptedOracle::ScriptedOracle(std::vector<double> eos_schedule, const Vocabulary& vocab,
                               std::vector<int> filler_ids)
    : schedule_(std::move(eos_schedule)), vocab_(vocab), filler_(std::move(filler_ids)) {
    for (double phi : schedule_) {
        if (!(phi >= 0.0 && phi <= 1.0)) {
            throw std::invalid_argument("ScriptedOracle: schedule values must lie in [0,1]");
        }
    }
    if (filler_.empty()) {
        for (int i = 0; i < vocab_.letter_count(); ++i) filler_.push_back(vocab_.first_letter_id() + i);
    }
    if (filler_.empty()) throw std::invalid_argument("ScriptedOracle: filler set must be nonempty");
    for (int id : filler_) {
        if (id < 0 || id >= vocab_.size() || id == vocab_.eos_id() || id == vocab_.mask_id()) {
            throw std::invalid_argument("ScriptedOracle: filler id " + std::to_string(id) + " invalid");
        }
    }
}

Matrix ScriptedOracle::logits(const Canvas& canvas) const {
    if (canvas.length() > canvas.prompt_len + schedule_.size()) {
        throw std::invalid_argument("ScriptedOracle: schedule shorter than canvas generation region");
    }
    Matrix out(canvas.length(), static_cast<std::size_t>(vocab_.size()));
    out.fill(kZeroMassLogit);
    const std::size_t eos = static_cast<std::size_t>(vocab_.eos_id());
    for (std::size_t pos = 0; pos < canvas.length(); ++pos) {
        double* row = out.row(pos);
        if (pos < canvas.prompt_len) {
            // Prompt rows are never read by callers; emit a flat row.
            for (std::size_t j = 0; j < out.cols; ++j) row[j] = 0.0;
            continue;
        }
        const double phi = schedule_[pos - canvas.prompt_len];
        row[eos] = phi > 0.0 ? std::log(phi) : kZeroMassLogit;
        const double filler_mass = (1.0 - phi) / static_cast<double>(filler_.size());
        const double filler_logit = filler_mass > 0.0 ? std::log(filler_mass) : kZeroMassLogit;
        for (int id : filler_) row[static_cast<std::size_t>(id)] = filler_logit;
    }
    return out;
}

}  // namespace smartcrop
