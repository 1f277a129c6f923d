#pragma once

#include <vector>

#include "smartcrop/canvas.h"
#include "smartcrop/matrix.h"
#include "smartcrop/vocab.h"

namespace smartcrop {

// Source of per-position vocabulary logits. Implementations must return
// one finite logit row per canvas position (prompt rows included; callers
// only ever read masked positions).
class LogitOracle {
public:
    virtual ~LogitOracle() = default;
    virtual Matrix logits(const Canvas& canvas) const = 0;
    virtual int vocab_size() const = 0;
};

// Test oracle driven by a per-position EoS probability schedule. At
// generation position i the emitted row softmaxes to exactly
// eos_schedule[i] on the EoS token, with the remaining mass spread
// uniformly over the filler token set and every other token forced to
// zero mass (finite logits; the underflow to zero is exact).
class ScriptedOracle : public LogitOracle {
public:
    ScriptedOracle(std::vector<double> eos_schedule, const Vocabulary& vocab,
                   std::vector<int> filler_ids = {});

    Matrix logits(const Canvas& canvas) const override;
    int vocab_size() const override { return vocab_.size(); }

    const std::vector<double>& schedule() const { return schedule_; }

private:
    std::vector<double> schedule_;
    Vocabulary vocab_;
    std::vector<int> filler_;
};

}  // namespace smartcrop
