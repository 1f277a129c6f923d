#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace smartcrop {

// Dense row-major matrix of 64-bit reals. All training and inference
// arithmetic runs in double precision so experiment records are
// bit-reproducible across runs.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> d);

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return data.size(); }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// c = a * b. Throws std::invalid_argument on inner-dimension mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

// c = a * b^T and c = a^T * b, used by the hand-written backward passes.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);

// Accumulating variants: out += a * b etc. Shapes must already match.
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out);

// Row-wise softmax, stabilized by subtracting the row max. Rows of the
// result are nonnegative and sum to 1 within 1e-12. Throws
// std::invalid_argument if any input entry is not finite.
Matrix row_softmax(const Matrix& m);

struct MaskedCrossEntropy {
    double loss = 0.0;      // mean negative log-probability over masked positions
    Matrix grad_logits;     // same shape as logits; zero at unmasked rows
};

// Mean cross-entropy of `targets` under row-softmax of `logits`,
// restricted to positions where mask[i] is true. Gradient rows for
// unmasked positions are exactly zero. Throws std::invalid_argument on
// shape mismatch, out-of-range targets, or an empty mask.
MaskedCrossEntropy masked_cross_entropy(const Matrix& logits,
                                        const std::vector<int>& targets,
                                        const std::vector<bool>& mask);

}  // namespace smartcrop
