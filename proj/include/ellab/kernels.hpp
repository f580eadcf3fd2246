#pragma once

#include <cstddef>
#include <string_view>

namespace ellab::kernels {

/// Table of hot-loop primitives. One instance per instruction-set backend;
/// all entries must produce results that agree with the scalar reference to
/// rounding (summation order may differ).
struct Ops {
  /// sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// sum_i w[i]*a[i]*b[i]
  double (*dot3)(const double* w, const double* a, const double* b, std::size_t n);
  /// sum_i w[i]*|u[i]|^p  (p >= 1; fast paths for p = 2, 3, 4)
  double (*wabs_pow_sum)(const double* w, const double* u, double p, std::size_t n);
  /// sum_i g[i]*(a[i]-b[i])^2
  double (*diff_sq_wsum)(const double* g, const double* a, const double* b, std::size_t n);
  /// y[i] += alpha*x[i]
  void (*axpy)(double* y, double alpha, const double* x, std::size_t n);
  /// x[i] *= alpha
  void (*scal)(double* x, double alpha, std::size_t n);
  /// out[i] += a[i]*b[i]
  void (*fma_vec)(double* out, const double* a, const double* b, std::size_t n);
  /// out[i] -= a[i]*b[i]
  void (*fms_vec)(double* out, const double* a, const double* b, std::size_t n);
  /// x[i] = |x[i]|
  void (*abs_clamp)(double* x, std::size_t n);
  /// x[i] = min(x[i], cap[i])
  void (*min_cap)(double* x, const double* cap, std::size_t n);
  /// out[i] += c[i]*|u[i]|^q*u[i]  (q >= 0; fast paths for q = 1, 2)
  void (*pow_term_add)(double* out, const double* c, const double* u, double q, std::size_t n);
  const char* name;
};

/// Portable reference implementation; always available.
const Ops& scalar_ops();

/// True when the running CPU supports AVX2+FMA and this binary carries the variant.
bool avx2_supported();

/// AVX2 table; call only when avx2_supported().
const Ops& avx2_ops();

/// Active backend, resolved once from CPU detection and the ELL_LAB_SIMD
/// environment variable ("scalar", "avx2", or "auto"; default auto).
const Ops& ops();
std::string_view active_backend();

/// Override the active backend ("scalar", "avx2", "auto"). Throws
/// std::invalid_argument for unknown names or unsupported requests.
void force_backend(std::string_view name);

}  // namespace ellab::kernels
