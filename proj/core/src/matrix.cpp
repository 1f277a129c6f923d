#include "smartcrop/matrix.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace smartcrop {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols) {
        throw std::invalid_argument("Matrix: data length " + std::to_string(data.size()) +
                                    " != rows*cols " + std::to_string(rows * cols));
    }
}

static void check_mul_shapes(std::size_t a_cols, std::size_t b_rows, const char* what) {
    if (a_cols != b_rows) {
        throw std::invalid_argument(std::string(what) + ": inner dimensions " + std::to_string(a_cols) +
                                    " and " + std::to_string(b_rows) + " do not match");
    }
}

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    check_mul_shapes(a.cols, b.rows, "matmul");
    // i-k-j order keeps the inner loop contiguous over b and out rows.
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_mul_shapes(a.cols, b.rows, "matmul");
    Matrix out(a.rows, b.cols);
    matmul_acc(a, b, out);
    return out;
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    check_mul_shapes(a.cols, b.cols, "matmul_nt");
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            orow[j] += acc;
        }
    }
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check_mul_shapes(a.cols, b.cols, "matmul_nt");
    Matrix out(a.rows, b.rows);
    matmul_nt_acc(a, b, out);
    return out;
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    check_mul_shapes(a.rows, b.rows, "matmul_tn");
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* orow = out.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
        }
    }
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check_mul_shapes(a.rows, b.rows, "matmul_tn");
    Matrix out(a.cols, b.cols);
    matmul_tn_acc(a, b, out);
    return out;
}

Matrix row_softmax(const Matrix& m) {
    for (double v : m.data) {
        if (!std::isfinite(v)) throw std::invalid_argument("row_softmax: non-finite input entry");
    }
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* in = m.row(i);
        double* o = out.row(i);
        double mx = in[0];
        for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, in[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < m.cols; ++j) o[j] *= inv;
    }
    return out;
}

MaskedCrossEntropy masked_cross_entropy(const Matrix& logits,
                                        const std::vector<int>& targets,
                                        const std::vector<bool>& mask) {
    if (targets.size() != logits.rows || mask.size() != logits.rows) {
        throw std::invalid_argument("masked_cross_entropy: targets/mask length must equal logit rows");
    }
    std::size_t n_masked = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        ++n_masked;
        if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= logits.cols) {
            throw std::invalid_argument("masked_cross_entropy: target id out of range at row " + std::to_string(i));
        }
    }
    if (n_masked == 0) throw std::invalid_argument("masked_cross_entropy: mask selects no positions");

    MaskedCrossEntropy result;
    result.grad_logits = Matrix(logits.rows, logits.cols);
    const double inv_n = 1.0 / static_cast<double>(n_masked);
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        if (!mask[i]) continue;
        const double* in = logits.row(i);
        double* g = result.grad_logits.row(i);
        double mx = in[0];
        for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, in[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            g[j] = std::exp(in[j] - mx);
            sum += g[j];
        }
        loss += std::log(sum) - (in[static_cast<std::size_t>(targets[i])] - mx);
        const double inv_sum = 1.0 / sum;
        for (std::size_t j = 0; j < logits.cols; ++j) g[j] *= inv_sum * inv_n;
        g[static_cast<std::size_t>(targets[i])] -= inv_n;
    }
    result.loss = loss * inv_n;
    return result;
}

}  // namespace smartcrop
