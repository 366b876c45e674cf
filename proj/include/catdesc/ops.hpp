#pragma once
// Non-differentiable reference math on Tensors: stable softmax, the two
// loss functions, helpers. The autodiff tape has its own implementations;
// tests hold the two routes against each other.

#include "catdesc/tensor.hpp"

namespace catdesc::ops {

// Softmax along `axis`. Max-subtracted, normaliser accumulated in double.
// Throws "non-finite logits" on non-finite input.
Tensor softmax(const Tensor& logits, int axis);

// -log softmax(logits)[target] over a rank-1 logits tensor.
double cross_entropy(const Tensor& logits, std::size_t target_index);

// Positive pair: 1 - cos(v_hat, v_k). Negative pair: max(0, cos - delta).
// Throws "degenerate vector" when either input has zero norm.
double cosine_embedding_loss(const Tensor& v_hat, const Tensor& v_k,
                             bool is_positive, double delta);

double cosine_similarity(const Tensor& a, const Tensor& b);

}  // namespace catdesc::ops
