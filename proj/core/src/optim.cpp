#include "smartcrop/optim.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smartcrop {

void OptimizerConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("OptimizerConfig: learning_rate must be > 0");
    if (beta1 <= 0.0 || beta1 >= 1.0) throw std::invalid_argument("OptimizerConfig: beta1 must be in (0,1)");
    if (beta2 <= 0.0 || beta2 >= 1.0) throw std::invalid_argument("OptimizerConfig: beta2 must be in (0,1)");
    if (epsilon <= 0.0) throw std::invalid_argument("OptimizerConfig: epsilon must be > 0");
}

std::size_t ParamStore::add(const std::string& name, Matrix value) {
    if (by_name_.count(name) != 0) throw std::invalid_argument("ParamStore: duplicate parameter name " + name);
    Entry e;
    e.name = name;
    e.grad = Matrix(value.rows, value.cols);
    e.m = Matrix(value.rows, value.cols);
    e.v = Matrix(value.rows, value.cols);
    e.value = std::move(value);
    entries_.push_back(std::move(e));
    by_name_[name] = entries_.size() - 1;
    return entries_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
    return it->second;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& e : entries_) e.grad.fill(0.0);
}

std::vector<Matrix> ParamStore::make_grad_buffer() const {
    std::vector<Matrix> buf;
    buf.reserve(entries_.size());
    for (const auto& e : entries_) buf.emplace_back(e.value.rows, e.value.cols);
    return buf;
}

void ParamStore::accumulate_grads(const std::vector<Matrix>& buffer) {
    if (buffer.size() != entries_.size()) throw std::invalid_argument("ParamStore: grad buffer entry count mismatch");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        auto& g = entries_[i].grad;
        const auto& b = buffer[i];
        if (!g.same_shape(b)) throw std::invalid_argument("ParamStore: grad buffer shape mismatch at " + entries_[i].name);
        for (std::size_t j = 0; j < g.data.size(); ++j) g.data[j] += b.data[j];
    }
}

void ParamStore::scale_grads(double s) {
    for (auto& e : entries_)
        for (double& g : e.grad.data) g *= s;
}

void optimizer_step(ParamStore& store, OptimizerConfig& cfg) {
    cfg.validate();
    cfg.step += 1;
    const double t = static_cast<double>(cfg.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (auto& e : store.entries()) {
        double* w = e.value.data.data();
        const double* g = e.grad.data.data();
        double* m = e.m.data.data();
        double* v = e.v.data.data();
        const std::size_t n = e.value.size();
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
}

// Relative for sizable gradients, absolute (scaled) once |a|+|n| drops
// below 1e-3; without the floor, probe round-off on near-zero gradients
// dominates the ratio.
static double rel_err(double a, double n) {
    return std::abs(a - n) / std::max(std::abs(a) + std::abs(n), 1e-3);
}

double gradient_check(const std::function<double(ParamStore&)>& f, ParamStore& store, double h,
                      const std::vector<ParamCoord>& coords) {
    if (h <= 0.0) throw std::invalid_argument("gradient_check: h must be > 0");
    // Capture the analytic gradients at the base point first; the probe
    // evaluations below overwrite store.grad.
    const double base = f(store);
    if (!std::isfinite(base)) {
        throw std::runtime_error("gradient_check: objective returned a non-finite value");
    }
    std::vector<double> analytic(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        analytic[i] = store.entry(coords[i].entry).grad.data[coords[i].offset];
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const ParamCoord& c = coords[i];
        double& w = store.entry(c.entry).value.data[c.offset];
        const double saved = w;
        w = saved + h;
        const double fp = f(store);
        w = saved - h;
        const double fm = f(store);
        w = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::runtime_error("gradient_check: objective returned a non-finite value");
        }
        const double numeric = (fp - fm) / (2.0 * h);
        worst = std::max(worst, rel_err(analytic[i], numeric));
    }
    return worst;
}

double gradient_check(const std::function<double(ParamStore&)>& f, ParamStore& store, double h) {
    std::vector<ParamCoord> coords;
    for (std::size_t e = 0; e < store.count(); ++e)
        for (std::size_t i = 0; i < store.entry(e).value.size(); ++i) coords.push_back({e, i});
    return gradient_check(f, store, h, coords);
}

std::vector<ParamCoord> sample_coords(const ParamStore& store, std::size_t n, Rng& rng) {
    const std::size_t total = store.scalar_count();
    n = std::min(n, total);
    std::vector<ParamCoord> coords;
    coords.reserve(n);
    std::vector<std::uint64_t> seen;
    while (coords.size() < n) {
        const std::uint64_t flat = rng.uniform_below(total);
        if (std::find(seen.begin(), seen.end(), flat) != seen.end()) continue;
        seen.push_back(flat);
        std::uint64_t rest = flat;
        for (std::size_t e = 0; e < store.count(); ++e) {
            const std::size_t sz = store.entry(e).value.size();
            if (rest < sz) {
                coords.push_back({e, static_cast<std::size_t>(rest)});
                break;
            }
            rest -= sz;
        }
    }
    return coords;
}

}  // namespace smartcrop
