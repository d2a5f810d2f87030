#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdg/common/random.hpp"
#include "cdg/tensor/tensor.hpp"

namespace cdg::ops {

// Matrix product over the last two axes. `b` is either rank 2 (shared across
// the batch) or has the same leading batch axes as `a`.
Tensor matmul(const Tensor& a, const Tensor& b);
// a[m,k] x b[n,k]^T -> [m,n]
Tensor matmul_transposed(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
// x[..., d] + bias[d], broadcast over leading axes.
Tensor add_bias(const Tensor& x, const Tensor& bias);
// x[n, d] * w[n, 1], each row scaled by its weight.
Tensor scale_rows(const Tensor& x, const Tensor& weights);

// Softmax over the last axis with max subtraction. Entries may be -inf. A row
// that is entirely -inf yields a uniform row and a logged diagnostic.
Tensor softmax_lastdim(const Tensor& x);
Tensor log_softmax_lastdim(const Tensor& x);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

// Inverted dropout; identity when !training or p == 0.
Tensor dropout(const Tensor& x, double p, bool training, Rng& rng);

// Rows of table[V, d] selected by ids -> [n, d].
Tensor embedding(const Tensor& table, std::span<const int> ids);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);

Tensor sum(const Tensor& x);

// Mean negative log-likelihood over active rows of logits[n, V]. Inactive rows
// receive exactly zero gradient. label_smoothing mixes the one-hot target with
// the uniform distribution.
Tensor cross_entropy_masked(const Tensor& logits, std::span<const int> targets,
                            const std::vector<bool>& active, double label_smoothing = 0.0);

}  // namespace cdg::ops
