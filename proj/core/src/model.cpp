#include "smartcrop/model.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "smartcrop/rng.h"

namespace smartcrop {

namespace {

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

double gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluScale * (x + kGeluCubic * x * x * x)));
}

double gelu_grad(double x) {
    const double u = kGeluScale * (x + kGeluCubic * x * x * x);
    const double t = std::tanh(u);
    const double du = kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

// y = x * w + b with b broadcast across rows; b has shape [1, w.cols].
Matrix linear(const Matrix& x, const Matrix& w, const Matrix& b) {
    Matrix y = matmul(x, w);
    for (std::size_t r = 0; r < y.rows; ++r) {
        double* out = y.row(r);
        const double* bias = b.row(0);
        for (std::size_t c = 0; c < y.cols; ++c) out[c] += bias[c];
    }
    return y;
}

void acc_colsum(const Matrix& dy, Matrix& db) {
    for (std::size_t r = 0; r < dy.rows; ++r) {
        const double* src = dy.row(r);
        double* dst = db.row(0);
        for (std::size_t c = 0; c < dy.cols; ++c) dst[c] += src[c];
    }
}

Matrix layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                  Matrix* xhat_out, std::vector<double>* inv_std_out) {
    const std::size_t n = x.cols;
    Matrix y(x.rows, n);
    Matrix xhat(x.rows, n);
    std::vector<double> inv_std(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double* in = x.row(r);
        double mean = 0.0;
        for (std::size_t c = 0; c < n; ++c) mean += in[c];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double d = in[c] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std[r] = inv;
        double* xh = xhat.row(r);
        double* out = y.row(r);
        const double* g = gamma.row(0);
        const double* b = beta.row(0);
        for (std::size_t c = 0; c < n; ++c) {
            xh[c] = (in[c] - mean) * inv;
            out[c] = g[c] * xh[c] + b[c];
        }
    }
    *xhat_out = std::move(xhat);
    *inv_std_out = std::move(inv_std);
    return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat, const std::vector<double>& inv_std,
                           const Matrix& gamma, Matrix& dgamma, Matrix& dbeta) {
    const std::size_t n = dy.cols;
    Matrix dx(dy.rows, n);
    for (std::size_t r = 0; r < dy.rows; ++r) {
        const double* dyr = dy.row(r);
        const double* xh = xhat.row(r);
        const double* g = gamma.row(0);
        double* dgr = dgamma.row(0);
        double* dbr = dbeta.row(0);
        double mean_dxhat = 0.0;
        double mean_dxhat_xhat = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            dgr[c] += dyr[c] * xh[c];
            dbr[c] += dyr[c];
            const double dxhat = dyr[c] * g[c];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xh[c];
        }
        mean_dxhat /= static_cast<double>(n);
        mean_dxhat_xhat /= static_cast<double>(n);
        double* dxr = dx.row(r);
        for (std::size_t c = 0; c < n; ++c) {
            const double dxhat = dyr[c] * g[c];
            dxr[c] = inv_std[r] * (dxhat - mean_dxhat - xh[c] * mean_dxhat_xhat);
        }
    }
    return dx;
}

Matrix take_head(const Matrix& m, int head, std::size_t head_dim) {
    Matrix out(m.rows, head_dim);
    const std::size_t offset = static_cast<std::size_t>(head) * head_dim;
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* src = m.row(r) + offset;
        double* dst = out.row(r);
        for (std::size_t c = 0; c < head_dim; ++c) dst[c] = src[c];
    }
    return out;
}

void put_head(const Matrix& part, int head, Matrix& m) {
    const std::size_t offset = static_cast<std::size_t>(head) * part.cols;
    for (std::size_t r = 0; r < part.rows; ++r) {
        const double* src = part.row(r);
        double* dst = m.row(r) + offset;
        for (std::size_t c = 0; c < part.cols; ++c) dst[c] = src[c];
    }
}

// dS = A .* (dA - rowwise dot(dA, A)), the Jacobian product of a row
// softmax.
Matrix softmax_backward(const Matrix& probs, const Matrix& dprobs) {
    Matrix ds(probs.rows, probs.cols);
    for (std::size_t r = 0; r < probs.rows; ++r) {
        const double* a = probs.row(r);
        const double* da = dprobs.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < probs.cols; ++c) dot += a[c] * da[c];
        double* out = ds.row(r);
        for (std::size_t c = 0; c < probs.cols; ++c) out[c] = a[c] * (da[c] - dot);
    }
    return ds;
}

void add_inplace(Matrix& a, const Matrix& b) {
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

}  // namespace

void ModelConfig::validate() const {
    if (n_layers < 1 || n_heads < 1 || d_model < 1 || d_ff < 1 || vocab_size < 2 ||
        max_positions < 1) {
        throw std::invalid_argument("ModelConfig: dimensions must be positive");
    }
    if (d_model % n_heads != 0) {
        throw std::invalid_argument("ModelConfig: d_model must divide evenly across heads");
    }
    if (!(init_std > 0.0) || !(layernorm_eps > 0.0)) {
        throw std::invalid_argument("ModelConfig: init_std and layernorm_eps must be positive");
    }
}

struct DiffusionModel::Cache {
    struct Layer {
        Matrix ln1_out, ln1_xhat;
        std::vector<double> ln1_inv_std;
        Matrix q, k, v;
        std::vector<Matrix> attn;  // per-head softmaxed scores
        Matrix ctx;
        Matrix x_mid;
        Matrix ln2_out, ln2_xhat;
        std::vector<double> ln2_inv_std;
        Matrix mlp_pre, mlp_act;
    };
    std::vector<Layer> layers;
    Matrix x_final;
    Matrix final_out, final_xhat;
    std::vector<double> final_inv_std;
};

DiffusionModel::DiffusionModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    Rng rng(seed);
    const std::size_t d = static_cast<std::size_t>(config_.d_model);
    const std::size_t ff = static_cast<std::size_t>(config_.d_ff);
    const std::size_t v = static_cast<std::size_t>(config_.vocab_size);

    auto gauss_matrix = [&](std::size_t r, std::size_t c) {
        Matrix m(r, c);
        for (double& x : m.data) x = rng.gauss() * config_.init_std;
        return m;
    };
    auto ones = [](std::size_t c) {
        Matrix m(1, c);
        m.fill(1.0);
        return m;
    };

    tok_emb_ = params_.add("tok_emb", gauss_matrix(v, d));
    pos_emb_ = params_.add("pos_emb", gauss_matrix(static_cast<std::size_t>(config_.max_positions), d));
    for (int l = 0; l < config_.n_layers; ++l) {
        const std::string p = "layers." + std::to_string(l) + ".";
        LayerRefs refs;
        refs.ln1_gamma = params_.add(p + "ln1.gamma", ones(d));
        refs.ln1_beta = params_.add(p + "ln1.beta", Matrix(1, d));
        refs.wq = params_.add(p + "attn.wq", gauss_matrix(d, d));
        refs.bq = params_.add(p + "attn.bq", Matrix(1, d));
        refs.wk = params_.add(p + "attn.wk", gauss_matrix(d, d));
        refs.bk = params_.add(p + "attn.bk", Matrix(1, d));
        refs.wv = params_.add(p + "attn.wv", gauss_matrix(d, d));
        refs.bv = params_.add(p + "attn.bv", Matrix(1, d));
        refs.wo = params_.add(p + "attn.wo", gauss_matrix(d, d));
        refs.bo = params_.add(p + "attn.bo", Matrix(1, d));
        refs.ln2_gamma = params_.add(p + "ln2.gamma", ones(d));
        refs.ln2_beta = params_.add(p + "ln2.beta", Matrix(1, d));
        refs.w1 = params_.add(p + "mlp.w1", gauss_matrix(d, ff));
        refs.b1 = params_.add(p + "mlp.b1", Matrix(1, ff));
        refs.w2 = params_.add(p + "mlp.w2", gauss_matrix(ff, d));
        refs.b2 = params_.add(p + "mlp.b2", Matrix(1, d));
        layers_.push_back(refs);
    }
    final_gamma_ = params_.add("final.gamma", ones(d));
    final_beta_ = params_.add("final.beta", Matrix(1, d));
    head_w_ = params_.add("head.w", gauss_matrix(d, v));
    head_b_ = params_.add("head.b", Matrix(1, v));
}

Matrix DiffusionModel::run_forward(const std::vector<int>& tokens, Cache* cache) const {
    if (tokens.empty()) throw std::invalid_argument("forward: empty input");
    if (tokens.size() > static_cast<std::size_t>(config_.max_positions)) {
        throw std::invalid_argument("forward: input longer than max_positions");
    }
    const std::size_t L = tokens.size();
    const std::size_t d = static_cast<std::size_t>(config_.d_model);
    const int n_heads = config_.n_heads;
    const std::size_t head_dim = d / static_cast<std::size_t>(n_heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    const Matrix& tok = params_.entry(tok_emb_).value;
    const Matrix& pos = params_.entry(pos_emb_).value;
    Matrix x(L, d);
    for (std::size_t i = 0; i < L; ++i) {
        if (tokens[i] < 0 || tokens[i] >= config_.vocab_size) {
            throw std::invalid_argument("forward: token id out of range");
        }
        const double* t = tok.row(static_cast<std::size_t>(tokens[i]));
        const double* p = pos.row(i);
        double* out = x.row(i);
        for (std::size_t c = 0; c < d; ++c) out[c] = t[c] + p[c];
    }

    if (cache) cache->layers.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const LayerRefs& refs = layers_[l];
        Cache::Layer scratch;
        Cache::Layer& lc = cache ? cache->layers[l] : scratch;

        lc.ln1_out = layer_norm(x, params_.entry(refs.ln1_gamma).value,
                                params_.entry(refs.ln1_beta).value, config_.layernorm_eps,
                                &lc.ln1_xhat, &lc.ln1_inv_std);
        lc.q = linear(lc.ln1_out, params_.entry(refs.wq).value, params_.entry(refs.bq).value);
        lc.k = linear(lc.ln1_out, params_.entry(refs.wk).value, params_.entry(refs.bk).value);
        lc.v = linear(lc.ln1_out, params_.entry(refs.wv).value, params_.entry(refs.bv).value);

        lc.ctx = Matrix(L, d);
        lc.attn.clear();
        for (int h = 0; h < n_heads; ++h) {
            const Matrix qh = take_head(lc.q, h, head_dim);
            const Matrix kh = take_head(lc.k, h, head_dim);
            const Matrix vh = take_head(lc.v, h, head_dim);
            Matrix scores = matmul_nt(qh, kh);
            for (double& s : scores.data) s *= scale;
            Matrix probs = row_softmax(scores);
            put_head(matmul(probs, vh), h, lc.ctx);
            lc.attn.push_back(std::move(probs));
        }
        Matrix attn_out =
            linear(lc.ctx, params_.entry(refs.wo).value, params_.entry(refs.bo).value);
        lc.x_mid = std::move(x);
        add_inplace(lc.x_mid, attn_out);

        lc.ln2_out = layer_norm(lc.x_mid, params_.entry(refs.ln2_gamma).value,
                                params_.entry(refs.ln2_beta).value, config_.layernorm_eps,
                                &lc.ln2_xhat, &lc.ln2_inv_std);
        lc.mlp_pre = linear(lc.ln2_out, params_.entry(refs.w1).value, params_.entry(refs.b1).value);
        lc.mlp_act = Matrix(lc.mlp_pre.rows, lc.mlp_pre.cols);
        for (std::size_t i = 0; i < lc.mlp_pre.data.size(); ++i) {
            lc.mlp_act.data[i] = gelu(lc.mlp_pre.data[i]);
        }
        Matrix mlp_out =
            linear(lc.mlp_act, params_.entry(refs.w2).value, params_.entry(refs.b2).value);
        x = lc.x_mid;  // copy: the residual input stays cached
        add_inplace(x, mlp_out);
    }

    Matrix scratch_xhat;
    std::vector<double> scratch_inv;
    Matrix* xhat = cache ? &cache->final_xhat : &scratch_xhat;
    std::vector<double>* inv = cache ? &cache->final_inv_std : &scratch_inv;
    if (cache) cache->x_final = x;
    Matrix final_out = layer_norm(x, params_.entry(final_gamma_).value,
                                  params_.entry(final_beta_).value, config_.layernorm_eps, xhat, inv);
    Matrix logits =
        linear(final_out, params_.entry(head_w_).value, params_.entry(head_b_).value);
    if (cache) cache->final_out = std::move(final_out);
    return logits;
}

Matrix DiffusionModel::forward(const std::vector<int>& tokens) const {
    return run_forward(tokens, nullptr);
}

void DiffusionModel::run_backward(const std::vector<int>& tokens, const Cache& cache,
                                  const Matrix& grad_logits, std::vector<Matrix>& grads) const {
    const std::size_t L = tokens.size();
    const std::size_t d = static_cast<std::size_t>(config_.d_model);
    const int n_heads = config_.n_heads;
    const std::size_t head_dim = d / static_cast<std::size_t>(n_heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    // Output head.
    matmul_tn_acc(cache.final_out, grad_logits, grads[head_w_]);
    acc_colsum(grad_logits, grads[head_b_]);
    Matrix d_final_out = matmul_nt(grad_logits, params_.entry(head_w_).value);
    Matrix dx = layer_norm_backward(d_final_out, cache.final_xhat, cache.final_inv_std,
                                    params_.entry(final_gamma_).value, grads[final_gamma_],
                                    grads[final_beta_]);

    for (std::size_t li = layers_.size(); li-- > 0;) {
        const LayerRefs& refs = layers_[li];
        const Cache::Layer& lc = cache.layers[li];

        // x_out = x_mid + mlp_out: dx flows to both summands.
        Matrix d_mlp_act = matmul_nt(dx, params_.entry(refs.w2).value);
        matmul_tn_acc(lc.mlp_act, dx, grads[refs.w2]);
        acc_colsum(dx, grads[refs.b2]);

        Matrix d_mlp_pre(d_mlp_act.rows, d_mlp_act.cols);
        for (std::size_t i = 0; i < d_mlp_pre.data.size(); ++i) {
            d_mlp_pre.data[i] = d_mlp_act.data[i] * gelu_grad(lc.mlp_pre.data[i]);
        }
        Matrix d_ln2_out = matmul_nt(d_mlp_pre, params_.entry(refs.w1).value);
        matmul_tn_acc(lc.ln2_out, d_mlp_pre, grads[refs.w1]);
        acc_colsum(d_mlp_pre, grads[refs.b1]);

        add_inplace(dx, layer_norm_backward(d_ln2_out, lc.ln2_xhat, lc.ln2_inv_std,
                                            params_.entry(refs.ln2_gamma).value,
                                            grads[refs.ln2_gamma], grads[refs.ln2_beta]));

        // x_mid = x_in + attn_out: dx continues to both.
        Matrix d_ctx = matmul_nt(dx, params_.entry(refs.wo).value);
        matmul_tn_acc(lc.ctx, dx, grads[refs.wo]);
        acc_colsum(dx, grads[refs.bo]);

        Matrix dq(L, d), dk(L, d), dv(L, d);
        for (int h = 0; h < n_heads; ++h) {
            const Matrix d_ctx_h = take_head(d_ctx, h, head_dim);
            const Matrix qh = take_head(lc.q, h, head_dim);
            const Matrix kh = take_head(lc.k, h, head_dim);
            const Matrix vh = take_head(lc.v, h, head_dim);
            const Matrix& probs = lc.attn[static_cast<std::size_t>(h)];

            Matrix d_probs = matmul_nt(d_ctx_h, vh);
            put_head(matmul_tn(probs, d_ctx_h), h, dv);
            Matrix d_scores = softmax_backward(probs, d_probs);
            for (double& s : d_scores.data) s *= scale;
            put_head(matmul(d_scores, kh), h, dq);
            put_head(matmul_tn(d_scores, qh), h, dk);
        }

        Matrix d_ln1_out = matmul_nt(dq, params_.entry(refs.wq).value);
        matmul_tn_acc(lc.ln1_out, dq, grads[refs.wq]);
        acc_colsum(dq, grads[refs.bq]);
        matmul_nt_acc(dk, params_.entry(refs.wk).value, d_ln1_out);
        matmul_tn_acc(lc.ln1_out, dk, grads[refs.wk]);
        acc_colsum(dk, grads[refs.bk]);
        matmul_nt_acc(dv, params_.entry(refs.wv).value, d_ln1_out);
        matmul_tn_acc(lc.ln1_out, dv, grads[refs.wv]);
        acc_colsum(dv, grads[refs.bv]);

        add_inplace(dx, layer_norm_backward(d_ln1_out, lc.ln1_xhat, lc.ln1_inv_std,
                                            params_.entry(refs.ln1_gamma).value,
                                            grads[refs.ln1_gamma], grads[refs.ln1_beta]));
    }

    Matrix& d_tok = grads[tok_emb_];
    Matrix& d_pos = grads[pos_emb_];
    for (std::size_t i = 0; i < L; ++i) {
        const double* src = dx.row(i);
        double* t = d_tok.row(static_cast<std::size_t>(tokens[i]));
        double* p = d_pos.row(i);
        for (std::size_t c = 0; c < d; ++c) {
            t[c] += src[c];
            p[c] += src[c];
        }
    }
}

double DiffusionModel::train_example(const std::vector<int>& input_tokens,
                                     const std::vector<int>& targets,
                                     const std::vector<bool>& loss_mask,
                                     std::vector<Matrix>& grad_buffer) const {
    if (grad_buffer.size() != params_.count()) {
        throw std::invalid_argument("train_example: gradient buffer layout mismatch");
    }
    if (input_tokens.size() != targets.size()) {
        throw std::invalid_argument("train_example: input and target lengths differ");
    }
    Cache cache;
    const Matrix logits = run_forward(input_tokens, &cache);
    const MaskedCrossEntropy ce = masked_cross_entropy(logits, targets, loss_mask);
    run_backward(input_tokens, cache, ce.grad_logits, grad_buffer);
    return ce.loss;
}

}  // namespace smartcrop
