#include "smartcrop/crop.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

namespace smartcrop {

void PerturbationSpec::validate() const {
    if (!(delta >= -0.5 && delta <= 0.5)) {
        throw std::invalid_argument("PerturbationSpec: delta must lie in [-0.5, +0.5]");
    }
}

EosProbabilities eos_probabilities(const Matrix& logits, const Vocabulary& vocab, std::size_t prompt_len) {
    if (logits.rows <= prompt_len) {
        throw std::invalid_argument("eos_probabilities: canvas length " + std::to_string(logits.rows) +
                                    " leaves no generation positions after prompt of " +
                                    std::to_string(prompt_len));
    }
    if (logits.cols != static_cast<std::size_t>(vocab.size())) {
        throw std::invalid_argument("eos_probabilities: logit width does not match vocabulary size");
    }
    const std::size_t eos = static_cast<std::size_t>(vocab.eos_id());
    EosProbabilities out;
    out.prompt_len = prompt_len;
    out.values.reserve(logits.rows - prompt_len);
    for (std::size_t i = prompt_len; i < logits.rows; ++i) {
        const double* row = logits.row(i);
        double mx = row[0];
        for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) sum += std::exp(row[j] - mx);
        out.values.push_back(std::exp(row[eos] - mx) / sum);
    }
    return out;
}

SurvivalCurve survival_curve(const EosProbabilities& p) {
    SurvivalCurve out;
    out.prompt_len = p.prompt_len;
    out.cumulative.reserve(p.values.size());
    double log_survival = 0.0;  // sum of log(1 - phi_j); -inf once phi hits 1
    for (double phi : p.values) {
        if (!(phi >= 0.0 && phi <= 1.0)) {
            throw std::invalid_argument("survival_curve: phi outside [0,1]");
        }
        log_survival += std::log1p(-phi);  // log1p(-1) == -inf, saturating the curve
        out.cumulative.push_back(std::min(1.0, -std::expm1(log_survival)));
    }
    return out;
}

CropDecision predicted_length(const SurvivalCurve& curve, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("predicted_length: tau must lie in [0,1]");
    if (curve.cumulative.empty()) throw std::invalid_argument("predicted_length: empty curve");
    CropDecision d;
    d.tau = tau;
    d.curve = curve;
    for (std::size_t i = 0; i < curve.cumulative.size(); ++i) {
        if (curve.cumulative[i] >= tau) {
            d.predicted_total_length = curve.prompt_len + 1 + i;
            d.threshold_reached = true;
            return d;
        }
    }
    d.predicted_total_length = curve.canvas_len();  // no-crop fallback
    d.threshold_reached = false;
    return d;
}

std::size_t perturb_length(std::size_t predicted_total_length, const PerturbationSpec& spec,
                           std::size_t prompt_len, std::size_t canvas_len) {
    spec.validate();
    double scaled;
    if (spec.scale_new_tokens_only) {
        const double new_tokens = static_cast<double>(predicted_total_length - prompt_len);
        scaled = static_cast<double>(prompt_len) + new_tokens * (1.0 + spec.delta);
    } else {
        scaled = static_cast<double>(predicted_total_length) * (1.0 + spec.delta);
    }
    const double rounded = std::floor(scaled + 0.5);  // round half up
    const double lo = static_cast<double>(prompt_len + 1);
    const double hi = static_cast<double>(canvas_len);
    return static_cast<std::size_t>(std::clamp(rounded, lo, hi));
}

Canvas crop_canvas(const Canvas& canvas, std::size_t target_total_length) {
    if (target_total_length < canvas.prompt_len + 1 || target_total_length > canvas.length()) {
        throw std::invalid_argument("crop_canvas: target " + std::to_string(target_total_length) +
                                    " outside [prompt_len+1, canvas length]");
    }
    for (std::size_t i = target_total_length; i < canvas.length(); ++i) {
        if (!canvas.masked[i]) {
            throw std::invalid_argument("crop_canvas: position " + std::to_string(i + 1) +
                                        " is already unmasked and cannot be removed");
        }
    }
    Canvas out;
    out.prompt_len = canvas.prompt_len;
    out.tokens.assign(canvas.tokens.begin(), canvas.tokens.begin() + static_cast<std::ptrdiff_t>(target_total_length));
    out.masked.assign(canvas.masked.begin(), canvas.masked.begin() + static_cast<std::ptrdiff_t>(target_total_length));
    return out;
}

void write_survival_csv(const SurvivalCurve& curve, std::ostream& os) {
    os << "position,cumulative_prob\n";
    char buf[64];
    for (std::size_t i = 0; i < curve.cumulative.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", curve.cumulative[i]);
        os << (curve.prompt_len + 1 + i) << ',' << buf << '\n';
    }
}

}  // namespace smartcrop
