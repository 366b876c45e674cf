#include "catdesc/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "catdesc/kernels.hpp"

namespace catdesc::ad {

namespace {
const kernels::KernelTable& K() { return kernels::active(); }
}  // namespace

Value Tape::make(std::size_t d0, std::size_t d1, std::uint8_t rank) {
  Node n;
  n.d0 = d0;
  n.d1 = d1;
  n.rank = rank;
  n.val.assign(d0 * d1, 0.0);
  n.grad.assign(d0 * d1, 0.0);
  nodes_.push_back(std::move(n));
  return Value(this, nodes_.size() - 1);
}

void Tape::require_same_shape(Value a, Value b) const {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.d0 != nb.d0 || na.d1 != nb.d1)
    throw std::runtime_error("autodiff: shape mismatch");
}

double Tape::scalar(Value v) const {
  const Node& n = node(v);
  if (n.val.size() != 1) throw std::runtime_error("autodiff: value is not scalar");
  return n.val[0];
}

const std::vector<double>& Tape::values(Value v) const { return node(v).val; }
std::size_t Tape::rows(Value v) const { return node(v).rank == 1 ? 1 : node(v).d0; }
std::size_t Tape::cols(Value v) const { return node(v).rank == 1 ? node(v).d0 : node(v).d1; }

Value Tape::input(const Tensor& t) {
  if (t.rank() > 2) throw std::runtime_error("autodiff: rank > 2 unsupported on tape");
  Value v = t.rank() == 1 ? make(t.shape[0], 1, 1) : make(t.shape[0], t.shape[1], 2);
  Node& n = node(v);
  for (std::size_t i = 0; i < t.size(); ++i) n.val[i] = t.data[i];
  return v;
}

Value Tape::input_vector(const std::vector<double>& src) {
  Value v = make(src.size(), 1, 1);
  node(v).val = src;
  return v;
}

Value Tape::param(Param& p) {
  Value v = input(p.value);
  writebacks_.emplace_back(v.idx_, &p);
  return v;
}

Value Tape::add(Value a, Value b) {
  require_same_shape(a, b);
  const Node& na = node(a);
  Value out = make(na.d0, na.d1, na.rank);
  Node& no = node(out);
  K().add(na.val.data(), node(b).val.data(), no.val.data(), no.val.size());
  no.back = [a, b, out](Tape& t) {
    const auto& g = t.node(out).grad;
    K().axpy(1.0, g.data(), t.node(a).grad.data(), g.size());
    K().axpy(1.0, g.data(), t.node(b).grad.data(), g.size());
  };
  return out;
}

Value Tape::sub(Value a, Value b) {
  require_same_shape(a, b);
  const Node& na = node(a);
  Value out = make(na.d0, na.d1, na.rank);
  Node& no = node(out);
  K().sub(na.val.data(), node(b).val.data(), no.val.data(), no.val.size());
  no.back = [a, b, out](Tape& t) {
    const auto& g = t.node(out).grad;
    K().axpy(1.0, g.data(), t.node(a).grad.data(), g.size());
    K().axpy(-1.0, g.data(), t.node(b).grad.data(), g.size());
  };
  return out;
}

Value Tape::mul(Value a, Value b) {
  require_same_shape(a, b);
  const Node& na = node(a);
  Value out = make(na.d0, na.d1, na.rank);
  Node& no = node(out);
  K().mul(na.val.data(), node(b).val.data(), no.val.data(), no.val.size());
  no.back = [a, b, out](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& av = t.node(a).val;
    const auto& bv = t.node(b).val;
    auto& ga = t.node(a).grad;
    auto& gb = t.node(b).grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * bv[i];
      gb[i] += g[i] * av[i];
    }
  };
  return out;
}

Value Tape::scale(Value a, double c) {
  const Node& na = node(a);
  Value out = make(na.d0, na.d1, na.rank);
  Node& no = node(out);
  K().scale(c, na.val.data(), no.val.data(), no.val.size());
  no.back = [a, out, c](Tape& t) {
    const auto& g = t.node(out).grad;
    K().axpy(c, g.data(), t.node(a).grad.data(), g.size());
  };
  return out;
}

Value Tape::add_const(Value a, double c) {
  const Node& na = node(a);
  Value out = make(na.d0, na.d1, na.rank);
  Node& no = node(out);
  for (std::size_t i = 0; i < na.val.size(); ++i) no.val[i] = na.val[i] + c;
  no.back = [a, out](Tape& t) {
    const auto& g = t.node(out).grad;
    K().axpy(1.0, g.data(), t.node(a).grad.data(), g.size());
  };
  return out;
}

Value Tape::relu(Value a) {
  const Node& na = node(a);
  Value out = make(na.d0, na.d1, na.rank);
  Node& no = node(out);
  for (std::size_t i = 0; i < na.val.size(); ++i)
    no.val[i] = na.val[i] > 0.0 ? na.val[i] : 0.0;
  no.back = [a, out](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& av = t.node(a).val;
    auto& ga = t.node(a).grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (av[i] > 0.0) ga[i] += g[i];
  };
  return out;
}

Value Tape::tanh(Value a) {
  const Node& na = node(a);
  Value out = make(na.d0, na.d1, na.rank);
  Node& no = node(out);
  for (std::size_t i = 0; i < na.val.size(); ++i) no.val[i] = std::tanh(na.val[i]);
  no.back = [a, out](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& ov = t.node(out).val;
    auto& ga = t.node(a).grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += g[i] * (1.0 - ov[i] * ov[i]);
  };
  return out;
}

Value Tape::matmul(Value a, Value b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  const std::size_t m = rows(a), k = cols(a);
  if (nb.rank != 2 || nb.d0 != k)
    throw std::runtime_error("autodiff: matmul inner dimension mismatch");
  const std::size_t n = nb.d1;
  Value out = na.rank == 1 ? make(n, 1, 1) : make(m, n, 2);
  Node& no = node(out);
  K().gemm_nn(m, k, n, na.val.data(), nb.val.data(), no.val.data(), false);
  no.back = [a, b, out, m, k, n](Tape& t) {
    const auto& g = t.node(out).grad;
    // dA += dC * B^T ; dB += A^T * dC
    K().gemm_nt(m, n, k, g.data(), t.node(b).val.data(), t.node(a).grad.data(), true);
    K().gemm_tn(k, m, n, t.node(a).val.data(), g.data(), t.node(b).grad.data(), true);
  };
  return out;
}

Value Tape::add_rowvec(Value a, Value v) {
  const Node& na = node(a);
  const Node& nv = node(v);
  const std::size_t r = rows(a), c = cols(a);
  if (nv.rank != 1 || nv.d0 != c)
    throw std::runtime_error("autodiff: add_rowvec dimension mismatch");
  Value out = make(na.d0, na.d1, na.rank);
  Node& no = node(out);
  for (std::size_t i = 0; i < r; ++i)
    K().add(na.val.data() + i * c, nv.val.data(), no.val.data() + i * c, c);
  no.back = [a, v, out, r, c](Tape& t) {
    const auto& g = t.node(out).grad;
    K().axpy(1.0, g.data(), t.node(a).grad.data(), g.size());
    auto& gv = t.node(v).grad;
    for (std::size_t i = 0; i < r; ++i)
      K().axpy(1.0, g.data() + i * c, gv.data(), c);
  };
  return out;
}

Value Tape::gather_rows(Value m, const std::vector<int>& idx) {
  const Node& nm = node(m);
  if (nm.rank != 2) throw std::runtime_error("autodiff: gather_rows wants a matrix");
  const std::size_t c = nm.d1;
  for (const int i : idx)
    if (i < 0 || static_cast<std::size_t>(i) >= nm.d0)
      throw std::runtime_error("autodiff: gather_rows index out of range");
  Value out = make(idx.size(), c, 2);
  Node& no = node(out);
  for (std::size_t t = 0; t < idx.size(); ++t)
    std::copy_n(nm.val.data() + static_cast<std::size_t>(idx[t]) * c, c,
                no.val.data() + t * c);
  no.back = [m, out, idx, c](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& gm = t.node(m).grad;
    for (std::size_t r = 0; r < idx.size(); ++r)
      K().axpy(1.0, g.data() + r * c,
               gm.data() + static_cast<std::size_t>(idx[r]) * c, c);
  };
  return out;
}

Value Tape::concat_cols(const std::vector<Value>& parts) {
  if (parts.empty()) throw std::runtime_error("autodiff: empty concat");
  const std::size_t r = rows(parts[0]);
  std::size_t total = 0;
  for (const Value p : parts) {
    if (rows(p) != r) throw std::runtime_error("autodiff: concat_cols row mismatch");
    total += cols(p);
  }
  const bool vec = r == 1 && node(parts[0]).rank == 1;
  Value out = vec ? make(total, 1, 1) : make(r, total, 2);
  Node& no = node(out);
  std::size_t off = 0;
  for (const Value p : parts) {
    const std::size_t c = cols(p);
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(node(p).val.data() + i * c, c, no.val.data() + i * total + off);
    off += c;
  }
  no.back = [parts, out, r, total](Tape& t) {
    const auto& g = t.node(out).grad;
    std::size_t off2 = 0;
    for (const Value p : parts) {
      const std::size_t c = t.cols(p);
      auto& gp = t.node(p).grad;
      for (std::size_t i = 0; i < r; ++i)
        K().axpy(1.0, g.data() + i * total + off2, gp.data() + i * c, c);
      off2 += c;
    }
  };
  return out;
}

Value Tape::concat_rows(const std::vector<Value>& parts) {
  if (parts.empty()) throw std::runtime_error("autodiff: empty concat");
  const std::size_t c = cols(parts[0]);
  std::size_t total = 0;
  for (const Value p : parts) {
    if (cols(p) != c) throw std::runtime_error("autodiff: concat_rows col mismatch");
    total += rows(p);
  }
  Value out = make(total, c, 2);
  Node& no = node(out);
  std::size_t off = 0;
  for (const Value p : parts) {
    std::copy_n(node(p).val.data(), node(p).val.size(), no.val.data() + off * c);
    off += rows(p);
  }
  no.back = [parts, out, c](Tape& t) {
    const auto& g = t.node(out).grad;
    std::size_t off2 = 0;
    for (const Value p : parts) {
      auto& gp = t.node(p).grad;
      K().axpy(1.0, g.data() + off2 * c, gp.data(), gp.size());
      off2 += t.rows(p);
    }
  };
  return out;
}

Value Tape::slice_cols(Value a, std::size_t c0, std::size_t c1) {
  const Node& na = node(a);
  if (na.rank != 2 || c0 >= c1 || c1 > na.d1)
    throw std::runtime_error("autodiff: bad column slice");
  const std::size_t r = na.d0, c = c1 - c0, full = na.d1;
  Value out = make(r, c, 2);
  Node& no = node(out);
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(na.val.data() + i * full + c0, c, no.val.data() + i * c);
  no.back = [a, out, r, c, c0, full](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& ga = t.node(a).grad;
    for (std::size_t i = 0; i < r; ++i)
      K().axpy(1.0, g.data() + i * c, ga.data() + i * full + c0, c);
  };
  return out;
}

Value Tape::mean_rows(Value a) {
  const Node& na = node(a);
  if (na.rank != 2) throw std::runtime_error("autodiff: mean_rows wants a matrix");
  const std::size_t r = na.d0, c = na.d1;
  Value out = make(c, 1, 1);
  Node& no = node(out);
  for (std::size_t i = 0; i < r; ++i)
    K().axpy(1.0 / static_cast<double>(r), na.val.data() + i * c, no.val.data(), c);
  no.back = [a, out, r, c](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& ga = t.node(a).grad;
    for (std::size_t i = 0; i < r; ++i)
      K().axpy(1.0 / static_cast<double>(r), g.data(), ga.data() + i * c, c);
  };
  return out;
}

Value Tape::softmax_rows(Value a, bool causal) {
  const Node& na = node(a);
  if (na.rank != 2) throw std::runtime_error("autodiff: softmax_rows wants a matrix");
  const std::size_t r = na.d0, c = na.d1;
  for (const double v : na.val)
    if (!std::isfinite(v)) throw std::runtime_error("non-finite logits");
  Value out = make(r, c, 2);
  Node& no = node(out);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t lim = causal ? std::min(i + 1, c) : c;
    const double* row = na.val.data() + i * c;
    double* orow = no.val.data() + i * c;
    const double mx = K().reduce_max(row, lim);
    double denom = 0.0;
    for (std::size_t j = 0; j < lim; ++j) {
      orow[j] = std::exp(row[j] - mx);
      denom += orow[j];
    }
    for (std::size_t j = 0; j < lim; ++j) orow[j] /= denom;
  }
  no.back = [a, out, r, c, causal](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& y = t.node(out).val;
    auto& ga = t.node(a).grad;
    for (std::size_t i = 0; i < r; ++i) {
      const std::size_t lim = causal ? std::min(i + 1, c) : c;
      const double* gy = g.data() + i * c;
      const double* yy = y.data() + i * c;
      const double dotgy = K().dot(gy, yy, lim);
      double* gx = ga.data() + i * c;
      for (std::size_t j = 0; j < lim; ++j) gx[j] += yy[j] * (gy[j] - dotgy);
    }
  };
  return out;
}

Value Tape::layer_norm_rows(Value a, Value gain, Value bias, double eps) {
  const Node& na = node(a);
  const std::size_t r = rows(a), c = cols(a);
  if (cols(gain) != c || rows(gain) != 1 || cols(bias) != c || rows(bias) != 1)
    throw std::runtime_error("autodiff: layer_norm parameter shape mismatch");
  Value out = make(na.d0, na.d1, na.rank);
  Node& no = node(out);
  std::vector<double> inv_std(r), xhat(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = na.val.data() + i * c;
    const double mu = K().reduce_sum(row, c) / static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (row[j] - mu) * inv_std[i];
      no.val[i * c + j] = xhat[i * c + j] * node(gain).val[j] + node(bias).val[j];
    }
  }
  no.back = [a, gain, bias, out, r, c, inv_std, xhat](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& ga = t.node(a).grad;
    auto& gg = t.node(gain).grad;
    auto& gb = t.node(bias).grad;
    const auto& gv = t.node(gain).val;
    for (std::size_t i = 0; i < r; ++i) {
      const double* gy = g.data() + i * c;
      const double* xh = xhat.data() + i * c;
      double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        gg[j] += gy[j] * xh[j];
        gb[j] += gy[j];
        const double dxh = gy[j] * gv[j];
        mean_dxhat += dxh;
        mean_dxhat_xhat += dxh * xh[j];
      }
      mean_dxhat /= static_cast<double>(c);
      mean_dxhat_xhat /= static_cast<double>(c);
      for (std::size_t j = 0; j < c; ++j) {
        const double dxh = gy[j] * gv[j];
        ga[i * c + j] += inv_std[i] * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
      }
    }
  };
  return out;
}

Value Tape::cross_entropy(Value logits, std::size_t target) {
  return cross_entropy_rows(logits, {static_cast<int>(target)});
}

Value Tape::cross_entropy_rows(Value logits, const std::vector<int>& targets) {
  const Node& nl = node(logits);
  const std::size_t r = rows(logits), v = cols(logits);
  if (targets.size() != r)
    throw std::runtime_error("cross_entropy: one target per row required");
  for (const int t : targets)
    if (t < 0 || static_cast<std::size_t>(t) >= v)
      throw std::runtime_error("cross_entropy: target index out of range");
  for (const double x : nl.val)
    if (!std::isfinite(x)) throw std::runtime_error("non-finite logits");

  Value out = make(1, 1, 1);
  Node& no = node(out);
  auto probs = std::make_shared<std::vector<double>>(r * v);
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = nl.val.data() + i * v;
    double* prow = probs->data() + i * v;
    const double mx = K().reduce_max(row, v);
    double denom = 0.0;
    for (std::size_t j = 0; j < v; ++j) {
      prow[j] = std::exp(row[j] - mx);
      denom += prow[j];
    }
    for (std::size_t j = 0; j < v; ++j) prow[j] /= denom;
    total += mx + std::log(denom) - row[static_cast<std::size_t>(targets[i])];
  }
  no.val[0] = total;
  no.back = [logits, out, targets, probs, r, v](Tape& t) {
    const double gl = t.node(out).grad[0];
    auto& g = t.node(logits).grad;
    for (std::size_t i = 0; i < r; ++i) {
      const double* prow = probs->data() + i * v;
      double* grow = g.data() + i * v;
      for (std::size_t j = 0; j < v; ++j) grow[j] += gl * prow[j];
      grow[static_cast<std::size_t>(targets[i])] -= gl;
    }
  };
  return out;
}

Value Tape::cosine_similarity(Value a, Value b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.val.size() != nb.val.size())
    throw std::runtime_error("cosine: dimension mismatch");
  const std::size_t n = na.val.size();
  const double dab = K().dot(na.val.data(), nb.val.data(), n);
  const double naa = K().dot(na.val.data(), na.val.data(), n);
  const double nbb = K().dot(nb.val.data(), nb.val.data(), n);
  if (naa == 0.0 || nbb == 0.0) throw std::runtime_error("degenerate vector");
  const double denom = std::sqrt(naa) * std::sqrt(nbb);
  const double c = dab / denom;
  Value out = make(1, 1, 1);
  node(out).val[0] = c;
  node(out).back = [a, b, out, c, denom, naa, nbb, n](Tape& t) {
    const double g = t.node(out).grad[0];
    const auto& av = t.node(a).val;
    const auto& bv = t.node(b).val;
    auto& ga = t.node(a).grad;
    auto& gb = t.node(b).grad;
    for (std::size_t i = 0; i < n; ++i) {
      ga[i] += g * (bv[i] / denom - c * av[i] / naa);
      gb[i] += g * (av[i] / denom - c * bv[i] / nbb);
    }
  };
  return out;
}

Value Tape::sum(Value a) {
  const Node& na = node(a);
  Value out = make(1, 1, 1);
  node(out).val[0] = K().reduce_sum(na.val.data(), na.val.size());
  node(out).back = [a, out](Tape& t) {
    const double g = t.node(out).grad[0];
    auto& ga = t.node(a).grad;
    for (double& x : ga) x += g;
  };
  return out;
}

void Tape::backward(Value loss) {
  Node& l = node(loss);
  if (l.val.size() != 1)
    throw std::runtime_error("backward: loss must be scalar");
  l.grad[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;)
    if (nodes_[i].back) nodes_[i].back(*this);
  for (auto& [idx, p] : writebacks_) {
    const auto& g = nodes_[idx].grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      p->grad.data[i] = static_cast<float>(p->grad.data[i] + g[i]);
  }
}

}  // namespace catdesc::ad
