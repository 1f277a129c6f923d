#include "smartcrop/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "smartcrop/parallel.h"

namespace smartcrop {

TrainingExample make_training_example(const Instance& instance, std::size_t canvas_len,
                                      const Vocabulary& vocab, Rng& rng) {
    const std::size_t needed = instance.prompt.size() + instance.answer.size() + 1;
    if (instance.prompt.empty()) {
        throw std::invalid_argument("make_training_example: empty prompt");
    }
    if (needed > canvas_len) {
        throw std::invalid_argument("make_training_example: instance does not fit the canvas");
    }

    TrainingExample ex;
    ex.targets.reserve(canvas_len);
    ex.targets = instance.prompt;
    ex.targets.insert(ex.targets.end(), instance.answer.begin(), instance.answer.end());
    while (ex.targets.size() < canvas_len) ex.targets.push_back(vocab.eos_id());

    const std::size_t prompt_len = instance.prompt.size();
    ex.loss_mask.assign(canvas_len, false);
    // Redraw until the corruption hides at least one position; a loss
    // over zero positions is undefined.
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double rate = rng.uniform01();
        bool any = false;
        for (std::size_t i = prompt_len; i < canvas_len; ++i) {
            const bool hide = rng.uniform01() < rate;
            ex.loss_mask[i] = hide;
            any = any || hide;
        }
        if (any) {
            ex.input = ex.targets;
            for (std::size_t i = prompt_len; i < canvas_len; ++i) {
                if (ex.loss_mask[i]) ex.input[i] = vocab.mask_id();
            }
            return ex;
        }
    }
    throw std::runtime_error("make_training_example: corruption never hid a position");
}

void TrainingConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainingConfig: epochs must be positive");
    if (batch_size < 1) throw std::invalid_argument("TrainingConfig: batch_size must be positive");
    if (canvas_len < 2) throw std::invalid_argument("TrainingConfig: canvas_len must be at least 2");
    if (canvas_len_min != 0 && (canvas_len_min < 2 || canvas_len_min > canvas_len)) {
        throw std::invalid_argument(
            "TrainingConfig: canvas_len_min must be 0 or lie in [2, canvas_len]");
    }
    if (workers < 0) throw std::invalid_argument("TrainingConfig: workers must be nonnegative");
    optimizer.validate();
}

TrainResult train(DiffusionModel& model, const std::vector<Instance>& instances,
                  const Vocabulary& vocab, const TrainingConfig& cfg) {
    cfg.validate();
    if (instances.empty()) throw std::invalid_argument("train: no instances");

    Rng rng(cfg.seed);
    OptimizerConfig opt = cfg.optimizer;
    ParamStore& store = model.params();
    const int workers = resolve_workers(cfg.workers);

    TrainResult result;
    std::vector<std::size_t> order(instances.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t epoch_batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t batch_n =
                std::min<std::size_t>(cfg.batch_size, order.size() - start);

            // Canvas draws and corruption consume the rng stream
            // sequentially up front so the draws do not depend on worker
            // interleaving.
            std::vector<TrainingExample> batch;
            batch.reserve(batch_n);
            for (std::size_t i = 0; i < batch_n; ++i) {
                const Instance& inst = instances[order[start + i]];
                std::size_t len = cfg.canvas_len;
                if (cfg.canvas_len_min != 0 && cfg.canvas_len_min < cfg.canvas_len) {
                    const std::size_t span = cfg.canvas_len - cfg.canvas_len_min + 1;
                    len = cfg.canvas_len_min + rng.uniform_below(span);
                    // Raise the draw to fit the instance; instances that
                    // exceed canvas_len still fail the fit check below.
                    len = std::min(std::max(len, inst.prompt.size() + inst.answer.size() + 1),
                                   cfg.canvas_len);
                }
                batch.push_back(make_training_example(inst, len, vocab, rng));
            }

            std::vector<std::vector<Matrix>> buffers(batch_n);
            std::vector<double> losses(batch_n, 0.0);
            for (std::size_t i = 0; i < batch_n; ++i) buffers[i] = store.make_grad_buffer();
            parallel_for(batch_n, workers, [&](std::size_t i) {
                losses[i] = model.train_example(batch[i].input, batch[i].targets,
                                                batch[i].loss_mask, buffers[i]);
            });

            store.zero_grads();
            for (std::size_t i = 0; i < batch_n; ++i) store.accumulate_grads(buffers[i]);
            store.scale_grads(1.0 / static_cast<double>(batch_n));

            double batch_loss = 0.0;
            for (double l : losses) batch_loss += l;
            batch_loss /= static_cast<double>(batch_n);
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(epoch_batches));
            }
            epoch_loss += batch_loss;
            ++epoch_batches;
            result.examples_seen += batch_n;

            optimizer_step(store, opt);
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(epoch_batches));
    }
    return result;
}

}  // namespace smartcrop
