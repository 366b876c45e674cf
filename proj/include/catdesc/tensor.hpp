#pragma once
// Dense row-major tensor of 32-bit floats, rank 1..3. Storage and
// checkpoint carrier for parameters and features; graph arithmetic runs
// in double inside the autodiff tape (see autodiff.hpp).

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace catdesc {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  Tensor() = default;

  Tensor(std::vector<std::size_t> s, std::vector<float> d)
      : shape(std::move(s)), data(std::move(d)) {
    validate();
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    const std::size_t n = count(s);
    return Tensor(std::move(s), std::vector<float>(n, 0.0f));
  }

  static Tensor full(std::vector<std::size_t> s, float v) {
    const std::size_t n = count(s);
    return Tensor(std::move(s), std::vector<float>(n, v));
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    if (s.empty() || s.size() > 3)
      throw std::runtime_error("tensor rank must be 1..3");
    std::size_t n = 1;
    for (const std::size_t d : s) {
      if (d == 0) throw std::runtime_error("tensor dims must be positive");
      n *= d;
    }
    return n;
  }

  void validate() const {
    if (count(shape) != data.size())
      throw std::runtime_error("tensor shape/data size mismatch");
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }

  float& at(std::size_t i) { return data[i]; }
  float at(std::size_t i) const { return data[i]; }
  float& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  float at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

  bool all_finite() const {
    for (const float v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline std::string shape_string(const Tensor& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.shape[i]);
  }
  return s + ")";
}

}  // namespace catdesc
