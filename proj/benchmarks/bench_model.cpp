#include <benchmark/benchmark.h>

#include <vector>

#include "smartcrop/canvas.h"
#include "smartcrop/decode.h"
#include "smartcrop/model.h"
#include "smartcrop/rng.h"
#include "smartcrop/vocab.h"

using namespace smartcrop;

namespace {

const DiffusionModel& shared_model() {
    static DiffusionModel model(ModelConfig{}, 1234);
    return model;
}

std::vector<int> masked_canvas(std::size_t len, const Vocabulary& vocab) {
    std::vector<int> tokens(len, vocab.mask_id());
    Rng rng(21);
    // Roughly half the positions carry committed letters.
    for (std::size_t i = 0; i < len; i += 2)
        tokens[i] = vocab.first_letter_id() + static_cast<int>(rng.uniform_below(26));
    return tokens;
}

void BM_forward(benchmark::State& state) {
    const Vocabulary vocab = Vocabulary::toy();
    const std::vector<int> tokens = masked_canvas(static_cast<std::size_t>(state.range(0)), vocab);
    const DiffusionModel& model = shared_model();
    for (auto _ : state) {
        Matrix logits = model.forward(tokens);
        benchmark::DoNotOptimize(logits.data.data());
    }
}

void BM_train_example(benchmark::State& state) {
    const Vocabulary vocab = Vocabulary::toy();
    const std::size_t len = static_cast<std::size_t>(state.range(0));
    const std::vector<int> input = masked_canvas(len, vocab);
    std::vector<int> targets(len, vocab.eos_id());
    std::vector<bool> loss_mask(len, false);
    for (std::size_t i = 1; i < len; i += 2) loss_mask[i] = true;
    DiffusionModel model(ModelConfig{}, 1234);
    auto buffer = model.params().make_grad_buffer();
    for (auto _ : state) {
        double loss = model.train_example(input, targets, loss_mask, buffer);
        benchmark::DoNotOptimize(loss);
    }
}

void BM_decode_full_canvas(benchmark::State& state) {
    const Vocabulary vocab = Vocabulary::toy();
    std::vector<int> prompt = masked_canvas(16, vocab);
    for (int& t : prompt)
        if (t == vocab.mask_id()) t = vocab.first_letter_id();
    prompt.back() = vocab.sep_id();
    DecodeConfig cfg;
    cfg.mode = DecodeMode::kFullCanvas;
    const DiffusionModel& model = shared_model();
    for (auto _ : state) {
        DecodeResult res =
            decode(model, prompt, static_cast<std::size_t>(state.range(0)), 16, cfg, vocab);
        benchmark::DoNotOptimize(res.tokens.data());
    }
}

}  // namespace

BENCHMARK(BM_forward)->Arg(42)->Arg(96)->Arg(170)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_train_example)->Arg(96)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_decode_full_canvas)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
