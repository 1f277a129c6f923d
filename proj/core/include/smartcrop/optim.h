#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "smartcrop/matrix.h"
#include "smartcrop/rng.h"

namespace smartcrop {

// Adam hyperparameters plus the step counter.
struct OptimizerConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;

    void validate() const;
};

// Named parameter tensors with matching gradient slots and Adam moments.
// Entries keep their insertion order; that order defines the on-disk
// weight layout.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Matrix value;
        Matrix grad;
        Matrix m;  // first moment
        Matrix v;  // second moment
    };

    // Registers a parameter and returns its index. Names must be unique.
    std::size_t add(const std::string& name, Matrix value);

    std::size_t index_of(const std::string& name) const;
    bool has(const std::string& name) const { return by_name_.count(name) != 0; }

    Entry& entry(std::size_t idx) { return entries_[idx]; }
    const Entry& entry(std::size_t idx) const { return entries_[idx]; }
    Matrix& value(std::size_t idx) { return entries_[idx].value; }
    Matrix& grad(std::size_t idx) { return entries_[idx].grad; }

    std::size_t count() const { return entries_.size(); }
    std::size_t scalar_count() const;

    void zero_grads();

    // A gradient buffer shaped like the store, for per-example
    // accumulation outside the store itself.
    std::vector<Matrix> make_grad_buffer() const;
    // grads += buffer, entry by entry in declared order.
    void accumulate_grads(const std::vector<Matrix>& buffer);
    void scale_grads(double s);

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> by_name_;
};

// One bias-corrected Adam update over every parameter in the store,
// in place. Increments cfg.step.
void optimizer_step(ParamStore& store, OptimizerConfig& cfg);

// Flat coordinate address into a store: (entry index, offset in data).
struct ParamCoord {
    std::size_t entry = 0;
    std::size_t offset = 0;
};

// Central finite differences of f against the analytic gradients already
// stored in `store.grad`, over the given coordinates. Returns the max
// relative error |a - n| / max(|a| + |n|, 1e-3). Throws std::runtime_error
// if f evaluates to a non-finite value.
double gradient_check(const std::function<double(ParamStore&)>& f, ParamStore& store, double h,
                      const std::vector<ParamCoord>& coords);

// Same, over every coordinate in the store.
double gradient_check(const std::function<double(ParamStore&)>& f, ParamStore& store, double h);

// Uniformly sampled coordinates without replacement (per entry weight =
// scalar count).
std::vector<ParamCoord> sample_coords(const ParamStore& store, std::size_t n, Rng& rng);

}  // namespace smartcrop
