#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smartcrop/matrix.h"
#include "smartcrop/optim.h"
#include "smartcrop/oracle.h"

namespace smartcrop {

// Bidirectional pre-norm transformer sized for desk-scale experiments.
// Learned absolute position embeddings, tanh-approximation GELU, untied
// output head. All math runs in doubles so finite-difference checks hold
// tightly.
struct ModelConfig {
    int n_layers = 2;
    int n_heads = 4;
    int d_model = 64;
    int d_ff = 256;
    int vocab_size = 64;
    int max_positions = 512;
    double init_std = 0.02;
    double layernorm_eps = 1e-5;

    void validate() const;
};

class DiffusionModel : public LogitOracle {
public:
    // Fresh weights: N(0, init_std) matrices, zero biases, unit
    // layernorm gains.
    DiffusionModel(const ModelConfig& config, std::uint64_t seed);

    // One logit row per input token. Throws std::invalid_argument on
    // out-of-range token ids or inputs longer than max_positions.
    Matrix forward(const std::vector<int>& tokens) const;

    Matrix logits(const Canvas& canvas) const override { return forward(canvas.tokens); }
    int vocab_size() const override { return config_.vocab_size; }

    // Forward, masked cross-entropy against targets on loss_mask rows,
    // and a full backward pass. Gradients accumulate into grad_buffer
    // (laid out like params().make_grad_buffer()); returns the loss.
    double train_example(const std::vector<int>& input_tokens, const std::vector<int>& targets,
                         const std::vector<bool>& loss_mask,
                         std::vector<Matrix>& grad_buffer) const;

    const ModelConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

private:
    struct LayerRefs {
        std::size_t ln1_gamma, ln1_beta;
        std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
        std::size_t ln2_gamma, ln2_beta;
        std::size_t w1, b1, w2, b2;
    };
    struct Cache;

    Matrix run_forward(const std::vector<int>& tokens, Cache* cache) const;
    void run_backward(const std::vector<int>& tokens, const Cache& cache,
                      const Matrix& grad_logits, std::vector<Matrix>& grads) const;

    ModelConfig config_;
    ParamStore params_;
    std::size_t tok_emb_, pos_emb_;
    std::vector<LayerRefs> layers_;
    std::size_t final_gamma_, final_beta_;
    std::size_t head_w_, head_b_;
};

}  // namespace smartcrop
