#include "catdesc/ops.hpp"

#include <cmath>
#include <stdexcept>

#include "catdesc/kernels.hpp"

namespace catdesc::ops {

namespace {

void softmax_span(const float* in, float* out, std::size_t n) {
  double mx = in[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max<double>(mx, in[i]);
  double denom = 0.0;
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = std::exp(static_cast<double>(in[i]) - mx);
    denom += e[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(e[i] / denom);
}

}  // namespace

Tensor softmax(const Tensor& logits, int axis) {
  if (!logits.all_finite()) throw std::runtime_error("non-finite logits");
  const int rank = static_cast<int>(logits.rank());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw std::runtime_error("softmax: bad axis");

  Tensor out = logits;
  // Collapse to (outer, n, inner) around the softmax axis.
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= logits.shape[i];
  const std::size_t n = logits.shape[axis];
  for (int i = axis + 1; i < rank; ++i) inner *= logits.shape[i];

  std::vector<float> slice(n), res(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      for (std::size_t i = 0; i < n; ++i) slice[i] = logits.data[base + i * inner];
      softmax_span(slice.data(), res.data(), n);
      for (std::size_t i = 0; i < n; ++i) out.data[base + i * inner] = res[i];
    }
  }
  return out;
}

double cross_entropy(const Tensor& logits, std::size_t target_index) {
  if (!logits.all_finite()) throw std::runtime_error("non-finite logits");
  if (target_index >= logits.size())
    throw std::runtime_error("cross_entropy: target index out of range");
  double mx = logits.data[0];
  for (const float v : logits.data) mx = std::max<double>(mx, v);
  double denom = 0.0;
  for (const float v : logits.data) denom += std::exp(static_cast<double>(v) - mx);
  const double logz = mx + std::log(denom);
  return logz - static_cast<double>(logits.data[target_index]);
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size())
    throw std::runtime_error("cosine: dimension mismatch");
  const std::size_t n = a.size();
  std::vector<double> da(n), db(n);
  for (std::size_t i = 0; i < n; ++i) {
    da[i] = a.data[i];
    db[i] = b.data[i];
  }
  const auto& k = kernels::active();
  const double dab = k.dot(da.data(), db.data(), n);
  const double naa = k.dot(da.data(), da.data(), n);
  const double nbb = k.dot(db.data(), db.data(), n);
  if (naa == 0.0 || nbb == 0.0) throw std::runtime_error("degenerate vector");
  return dab / (std::sqrt(naa) * std::sqrt(nbb));
}

double cosine_embedding_loss(const Tensor& v_hat, const Tensor& v_k,
                             bool is_positive, double delta) {
  const double c = cosine_similarity(v_hat, v_k);
  if (is_positive) return 1.0 - c;
  return std::max(0.0, c - delta);
}

}  // namespace catdesc::ops
