#pragma once
// Runtime-dispatched compute kernels. Every entry point has a scalar
// reference implementation; on x86 with AVX2+FMA a vectorised variant is
// selected at startup (or explicitly via select_backend). All kernels
// operate on contiguous double arrays, matrices row-major.

#include <cstddef>

namespace catdesc::kernels {

enum class Backend { kAuto, kScalar, kAvx2 };

struct KernelTable {
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*scale)(double alpha, const double* x, double* out, std::size_t n);
  double (*reduce_sum)(const double* x, std::size_t n);
  double (*reduce_max)(const double* x, std::size_t n);

  // C (m x n) = A (m x k) * B (k x n), or += when accumulate is set.
  void (*gemm_nn)(std::size_t m, std::size_t k, std::size_t n,
                  const double* a, const double* b, double* c,
                  bool accumulate);
  // C (m x n) = A (m x k) * B^T with B stored (n x k).
  void (*gemm_nt)(std::size_t m, std::size_t k, std::size_t n,
                  const double* a, const double* b, double* c,
                  bool accumulate);
  // C (m x n) = A^T * B with A stored (k x m), B stored (k x n).
  void (*gemm_tn)(std::size_t m, std::size_t k, std::size_t n,
                  const double* a, const double* b, double* c,
                  bool accumulate);
};

bool avx2_supported();

// Throws std::runtime_error if kAvx2 is requested on a CPU without AVX2.
void select_backend(Backend b);
Backend selected_backend();
Backend backend_from_name(const char* name);

const KernelTable& active();
const KernelTable& scalar_table();
// Only meaningful when avx2_supported(); never dispatched otherwise.
const KernelTable& avx2_table();

}  // namespace catdesc::kernels
