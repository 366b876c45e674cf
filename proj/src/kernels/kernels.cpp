// Scalar reference kernels and backend dispatch.

#include "catdesc/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <string>

namespace catdesc::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_scalar(double alpha, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

double reduce_sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double reduce_max_scalar(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

void gemm_nn_scalar(std::size_t m, std::size_t k, std::size_t n,
                    const double* a, const double* b, double* c,
                    bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) std::memset(crow, 0, n * sizeof(double));
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

void gemm_nt_scalar(std::size_t m, std::size_t k, std::size_t n,
                    const double* a, const double* b, double* c,
                    bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = dot_scalar(arow, b + j * k, k);
      c[i * n + j] = accumulate ? c[i * n + j] + v : v;
    }
  }
}

void gemm_tn_scalar(std::size_t m, std::size_t k, std::size_t n,
                    const double* a, const double* b, double* c,
                    bool accumulate) {
  if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = a[p * m + i];
      if (api == 0.0) continue;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
    }
  }
}

const KernelTable kScalarTable = {
    "scalar",        dot_scalar,        axpy_scalar,       add_scalar,
    sub_scalar,      mul_scalar,        scale_scalar,      reduce_sum_scalar,
    reduce_max_scalar, gemm_nn_scalar,  gemm_nt_scalar,    gemm_tn_scalar,
};

const KernelTable* g_active = nullptr;
Backend g_selected = Backend::kAuto;

}  // namespace

const KernelTable& scalar_table() { return kScalarTable; }

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

void select_backend(Backend b) {
  switch (b) {
    case Backend::kScalar:
      g_active = &kScalarTable;
      break;
    case Backend::kAvx2:
      if (!avx2_supported())
        throw std::runtime_error("avx2 backend requested but CPU lacks AVX2/FMA");
      g_active = &avx2_table();
      break;
    case Backend::kAuto:
      g_active = avx2_supported() ? &avx2_table() : &kScalarTable;
      break;
  }
  g_selected = b;
}

Backend selected_backend() { return g_selected; }

Backend backend_from_name(const char* name) {
  const std::string s(name);
  if (s == "auto") return Backend::kAuto;
  if (s == "scalar") return Backend::kScalar;
  if (s == "avx2") return Backend::kAvx2;
  throw std::runtime_error("unknown kernel backend: " + s);
}

const KernelTable& active() {
  if (g_active == nullptr) select_backend(Backend::kAuto);
  return *g_active;
}

}  // namespace catdesc::kernels
