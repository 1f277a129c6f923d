#include "smartcrop/flops.h"

#include <cmath>
#include <stdexcept>

namespace smartcrop {

CostModel CostModel::dense_transformer(double param_count, std::size_t n_layers,
                                       std::size_t d_model) {
    CostModel m;
    m.c1 = 2.0 * param_count;
    m.c2 = 4.0 * static_cast<double>(n_layers) * static_cast<double>(d_model);
    m.validate();
    return m;
}

CostModel CostModel::llada_8b() {
    CostModel m;
    m.c1 = 1.6e10;
    m.c2 = 524288.0;
    return m;
}

void CostModel::validate() const {
    if (!std::isfinite(c1) || !std::isfinite(c2) || c1 < 0.0 || c2 < 0.0) {
        throw std::invalid_argument("CostModel: coefficients must be finite and nonnegative");
    }
    if (c1 == 0.0 && c2 == 0.0) {
        throw std::invalid_argument("CostModel: at least one coefficient must be positive");
    }
}

double CostModel::step_flops(std::size_t length) const {
    const double l = static_cast<double>(length);
    return c1 * l + c2 * l * l;
}

double CostModel::trace_flops(const std::vector<StepRecord>& steps) const {
    double total = 0.0;
    for (const StepRecord& s : steps) total += step_flops(s.processed_length);
    return total;
}

double CostModel::linear_fraction(std::size_t length) const {
    const double total = step_flops(length);
    if (total <= 0.0) throw std::invalid_argument("linear_fraction: zero-cost step");
    return c1 * static_cast<double>(length) / total;
}

double savings_percent(double baseline_flops, double candidate_flops) {
    if (!(baseline_flops > 0.0)) {
        throw std::invalid_argument("savings_percent: baseline must be positive");
    }
    return 100.0 * (1.0 - candidate_flops / baseline_flops);
}

}  // namespace smartcrop
