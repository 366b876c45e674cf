#pragma once
// Reverse-mode autodiff on a per-step tape. Node values and gradients are
// doubles; parameters enter as f32 leaves and gradients are written back
// into the ParameterSet's f32 accumulators after the reverse sweep.
// Creation order is a topological order, so backward() is a single
// reverse pass.

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "catdesc/params.hpp"
#include "catdesc/tensor.hpp"

namespace catdesc::ad {

class Tape;

class Value {
 public:
  Value() = default;
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Value(Tape* t, std::size_t i) : tape_(t), idx_(i) {}
  Tape* tape_ = nullptr;
  std::size_t idx_ = 0;
};

class Tape {
 public:
  // Leaves.
  Value input(const Tensor& t);                       // constant, no gradient
  Value input_vector(const std::vector<double>& v);   // rank-1 constant
  Value param(Param& p);                              // gradient written back

  // Elementwise / shape-preserving.
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value scale(Value a, double c);
  Value add_const(Value a, double c);
  Value relu(Value a);
  Value tanh(Value a);

  // Linear algebra. Rank-1 operands are treated as 1 x n rows; a rank-1
  // left operand yields a rank-1 result.
  Value matmul(Value a, Value b);
  Value matmul_nt(Value a, Value b);   // A * B^T, b stored (n x k)
  Value add_rowvec(Value a, Value v);  // broadcast v over rows of a

  // Structure.
  Value gather_rows(Value m, const std::vector<int>& idx);
  Value concat_cols(const std::vector<Value>& parts);
  Value concat_rows(const std::vector<Value>& parts);
  Value slice_cols(Value a, std::size_t c0, std::size_t c1);
  Value mean_rows(Value a);

  // Rowwise softmax; with `causal` row i is normalised over columns 0..i
  // and masked entries are exactly zero. Throws on non-finite input.
  Value softmax_rows(Value a, bool causal);
  Value layer_norm_rows(Value a, Value gain, Value bias, double eps = 1e-5);

  // Losses (scalar nodes).
  Value cross_entropy(Value logits, std::size_t target);
  Value cross_entropy_rows(Value logits, const std::vector<int>& targets);
  Value cosine_similarity(Value a, Value b);
  Value sum(Value a);

  // Reverse sweep from a scalar loss; accumulates into Param::grad.
  void backward(Value loss);

  double scalar(Value v) const;
  const std::vector<double>& values(Value v) const;
  std::size_t rows(Value v) const;
  std::size_t cols(Value v) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::size_t d0 = 0, d1 = 0;  // rank-1: d0=n, d1=1
    std::uint8_t rank = 1;
    std::vector<double> val;
    std::vector<double> grad;
    std::function<void(Tape&)> back;
  };

  Node& node(Value v) { return nodes_[v.idx_]; }
  const Node& node(Value v) const { return nodes_[v.idx_]; }
  Value make(std::size_t d0, std::size_t d1, std::uint8_t rank);
  void require_same_shape(Value a, Value b) const;

  std::deque<Node> nodes_;
  std::vector<std::pair<std::size_t, Param*>> writebacks_;
};

}  // namespace catdesc::ad
