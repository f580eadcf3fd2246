#include "ellab/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ellab::kernels {

namespace {

double s_dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double s_dot3(const double* w, const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

double s_wabs_pow_sum(const double* w, const double* u, double p, std::size_t n) {
  double s = 0.0;
  if (p == 2.0) {
    for (std::size_t i = 0; i < n; ++i) s += w[i] * u[i] * u[i];
  } else if (p == 3.0) {
    for (std::size_t i = 0; i < n; ++i) s += w[i] * std::abs(u[i]) * u[i] * u[i];
  } else if (p == 4.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double u2 = u[i] * u[i];
      s += w[i] * u2 * u2;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) s += w[i] * std::pow(std::abs(u[i]), p);
  }
  return s;
}

double s_diff_sq_wsum(const double* g, const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += g[i] * d * d;
  }
  return s;
}

void s_axpy(double* y, double alpha, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void s_scal(double* x, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void s_fma_vec(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

void s_fms_vec(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] -= a[i] * b[i];
}

void s_abs_clamp(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::abs(x[i]);
}

void s_min_cap(double* x, const double* cap, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::min(x[i], cap[i]);
}

void s_pow_term_add(double* out, const double* c, const double* u, double q, std::size_t n) {
  if (q == 1.0) {
    for (std::size_t i = 0; i < n; ++i) out[i] += c[i] * std::abs(u[i]) * u[i];
  } else if (q == 2.0) {
    for (std::size_t i = 0; i < n; ++i) out[i] += c[i] * u[i] * u[i] * u[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] += c[i] * std::pow(std::abs(u[i]), q) * u[i];
  }
}

const Ops kScalar = {
    s_dot,     s_dot3,    s_wabs_pow_sum, s_diff_sq_wsum, s_axpy,        s_scal,
    s_fma_vec, s_fms_vec, s_abs_clamp,    s_min_cap,      s_pow_term_add, "scalar",
};

std::atomic<const Ops*> g_active{nullptr};

const Ops* resolve_auto() {
  if (avx2_supported()) return &avx2_ops();
  return &kScalar;
}

const Ops* resolve_from_env() {
  const char* env = std::getenv("ELL_LAB_SIMD");
  if (env == nullptr || std::string_view(env) == "auto" || std::string_view(env).empty())
    return resolve_auto();
  if (std::string_view(env) == "scalar") return &kScalar;
  if (std::string_view(env) == "avx2") {
    if (!avx2_supported())
      throw std::invalid_argument("ELL_LAB_SIMD=avx2 but AVX2 is unavailable");
    return &avx2_ops();
  }
  throw std::invalid_argument("ELL_LAB_SIMD must be scalar, avx2, or auto");
}

}  // namespace

const Ops& scalar_ops() { return kScalar; }

#if !defined(ELLAB_BUILD_AVX2)
bool avx2_supported() { return false; }
const Ops& avx2_ops() { throw std::logic_error("AVX2 backend not built"); }
#endif

const Ops& ops() {
  const Ops* p = g_active.load(std::memory_order_acquire);
  if (p == nullptr) {
    p = resolve_from_env();
    g_active.store(p, std::memory_order_release);
  }
  return *p;
}

std::string_view active_backend() { return ops().name; }

void force_backend(std::string_view name) {
  if (name == "scalar") {
    g_active.store(&kScalar, std::memory_order_release);
  } else if (name == "avx2") {
    if (!avx2_supported()) throw std::invalid_argument("AVX2 backend unavailable");
    g_active.store(&avx2_ops(), std::memory_order_release);
  } else if (name == "auto") {
    g_active.store(resolve_auto(), std::memory_order_release);
  } else {
    throw std::invalid_argument("unknown backend: " + std::string(name));
  }
}

}  // namespace ellab::kernels
