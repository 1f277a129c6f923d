#include "smartcrop/schedule.h"

#include <stdexcept>

namespace smartcrop {

std::size_t Schedule::total_tokens() const {
    std::size_t sum = 0;
    for (std::size_t c : counts) sum += c;
    return sum;
}

Schedule build_schedule(std::size_t n_masked, std::size_t steps) {
    if (steps == 0) throw std::invalid_argument("build_schedule: steps must be positive");
    Schedule schedule;
    schedule.counts.resize(steps);
    const std::size_t base = n_masked / steps;
    const std::size_t remainder = n_masked % steps;
    for (std::size_t i = 0; i < steps; ++i) {
        schedule.counts[i] = base + (i < remainder ? 1 : 0);
    }
    return schedule;
}

}  // namespace smartcrop
