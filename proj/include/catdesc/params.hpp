#pragma once
// Named parameter storage with per-parameter gradient accumulators, Adam
// with decoupled weight decay, and the binary checkpoint format.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "catdesc/rng.hpp"
#include "catdesc/tensor.hpp"

namespace catdesc {

struct Param {
  Tensor value;
  Tensor grad;  // same shape, zero-initialised

  explicit Param(Tensor v) : value(std::move(v)), grad(Tensor::zeros(value.shape)) {}
  Param() = default;
};

// Parameters keyed by unique name; iteration order is lexicographic, which
// makes optimiser sweeps and checkpoints deterministic.
class ParameterSet {
 public:
  Param& add(const std::string& name, Tensor value);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }

  void zero_grad();
  std::size_t scalar_count() const;

  std::map<std::string, Param>& entries() { return params_; }
  const std::map<std::string, Param>& entries() const { return params_; }

  // Initialisers. Weights: uniform(-1/sqrt(fan_in), +1/sqrt(fan_in));
  // embeddings: N(0, 0.02); biases: zeros.
  Param& add_weight(const std::string& name, std::size_t fan_in,
                    std::vector<std::size_t> shape, Rng& rng);
  Param& add_embedding(const std::string& name, std::vector<std::size_t> shape,
                       Rng& rng);
  Param& add_bias(const std::string& name, std::size_t dim);

 private:
  std::map<std::string, Param> params_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

class AdamState {
 public:
  AdamState(const ParameterSet& params, AdamConfig cfg);

  // One Adam update from the accumulated gradients; decoupled weight decay;
  // gradients are zeroed afterwards.
  void step(ParameterSet& params);

  std::int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
};

// Checkpoint container: magic "CDSC", version u16, then for each parameter
// name length u16, UTF-8 name, rank u8, dims u32 each, f32 payload.
// Little-endian throughout.
void save_checkpoint(const ParameterSet& params, const std::string& path);
ParameterSet load_checkpoint(const std::string& path);

}  // namespace catdesc
