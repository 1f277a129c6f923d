#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "smartcrop/model.h"
#include "smartcrop/optim.h"
#include "smartcrop/rng.h"
#include "smartcrop/tasks.h"
#include "smartcrop/vocab.h"

namespace smartcrop {

// One corrupted canvas: the clean target layout is prompt, answer, then
// EoS padding out to canvas_len; a uniformly drawn mask rate hides a
// random subset of the non-prompt positions, and the loss is taken on
// exactly those hidden positions.
struct TrainingExample {
    std::vector<int> input;
    std::vector<int> targets;
    std::vector<bool> loss_mask;
};

TrainingExample make_training_example(const Instance& instance, std::size_t canvas_len,
                                      const Vocabulary& vocab, Rng& rng);

struct TrainingConfig {
    int epochs = 5;
    int batch_size = 16;
    std::size_t canvas_len = 64;
    // Nonzero: each example draws its canvas length uniformly from
    // [canvas_len_min, canvas_len] (raised to fit the instance), so the
    // model also sees the shorter canvases that cropped decoding
    // produces. Zero keeps every canvas at canvas_len.
    std::size_t canvas_len_min = 0;
    int workers = 1;  // 0 = hardware concurrency
    std::uint64_t seed = 1;
    OptimizerConfig optimizer;

    void validate() const;
};

struct TrainResult {
    std::vector<double> epoch_losses;  // mean batch loss per epoch
    std::size_t examples_seen = 0;
};

// Adam training over shuffled batches. Corruption draws happen on one
// rng stream before each batch fans out, and per-example gradients
// reduce in example order, so results are bit-identical for any worker
// count. Throws std::runtime_error if the loss leaves the finite range.
TrainResult train(DiffusionModel& model, const std::vector<Instance>& instances,
                  const Vocabulary& vocab, const TrainingConfig& cfg);

}  // namespace smartcrop
