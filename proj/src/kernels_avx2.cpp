// AVX2+FMA kernel variants. This translation unit is the only one compiled
// with -mavx2; keep everything else ISA-generic.
#include "ellab/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace ellab::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d h = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, h));
}

double v_dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double v_dot3(const double* w, const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wa = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    acc = _mm256_fmadd_pd(wa, _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

double v_wabs_pow_sum(const double* w, const double* u, double p, std::size_t n) {
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  double s = 0.0;
  if (p == 2.0) {
    for (; i + 4 <= n; i += 4) {
      const __m256d uv = _mm256_loadu_pd(u + i);
      acc = _mm256_fmadd_pd(_mm256_mul_pd(uv, uv), _mm256_loadu_pd(w + i), acc);
    }
    s = hsum(acc);
    for (; i < n; ++i) s += w[i] * u[i] * u[i];
  } else if (p == 3.0) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    for (; i + 4 <= n; i += 4) {
      const __m256d uv = _mm256_loadu_pd(u + i);
      const __m256d au = _mm256_andnot_pd(signmask, uv);
      const __m256d u2 = _mm256_mul_pd(uv, uv);
      acc = _mm256_fmadd_pd(_mm256_mul_pd(au, u2), _mm256_loadu_pd(w + i), acc);
    }
    s = hsum(acc);
    for (; i < n; ++i) s += w[i] * std::abs(u[i]) * u[i] * u[i];
  } else if (p == 4.0) {
    for (; i + 4 <= n; i += 4) {
      const __m256d uv = _mm256_loadu_pd(u + i);
      const __m256d u2 = _mm256_mul_pd(uv, uv);
      acc = _mm256_fmadd_pd(_mm256_mul_pd(u2, u2), _mm256_loadu_pd(w + i), acc);
    }
    s = hsum(acc);
    for (; i < n; ++i) {
      const double u2 = u[i] * u[i];
      s += w[i] * u2 * u2;
    }
  } else {
    for (; i < n; ++i) s += w[i] * std::pow(std::abs(u[i]), p);
  }
  return s;
}

double v_diff_sq_wsum(const double* g, const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(_mm256_mul_pd(d, d), _mm256_loadu_pd(g + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += g[i] * d * d;
  }
  return s;
}

void v_axpy(double* y, double alpha, const double* x, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void v_scal(double* x, double alpha, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void v_fma_vec(double* out, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                                              _mm256_loadu_pd(out + i)));
  for (; i < n; ++i) out[i] += a[i] * b[i];
}

void v_fms_vec(double* out, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_fnmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                                               _mm256_loadu_pd(out + i)));
  for (; i < n; ++i) out[i] -= a[i] * b[i];
}

void v_abs_clamp(double* x, std::size_t n) {
  const __m256d signmask = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_andnot_pd(signmask, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] = std::abs(x[i]);
}

void v_min_cap(double* x, const double* cap, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_min_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(cap + i)));
  for (; i < n; ++i) x[i] = std::min(x[i], cap[i]);
}

void v_pow_term_add(double* out, const double* c, const double* u, double q, std::size_t n) {
  std::size_t i = 0;
  if (q == 1.0) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    for (; i + 4 <= n; i += 4) {
      const __m256d uv = _mm256_loadu_pd(u + i);
      const __m256d au = _mm256_andnot_pd(signmask, uv);
      const __m256d term = _mm256_mul_pd(au, uv);
      _mm256_storeu_pd(out + i, _mm256_fmadd_pd(term, _mm256_loadu_pd(c + i),
                                                _mm256_loadu_pd(out + i)));
    }
    for (; i < n; ++i) out[i] += c[i] * std::abs(u[i]) * u[i];
  } else if (q == 2.0) {
    for (; i + 4 <= n; i += 4) {
      const __m256d uv = _mm256_loadu_pd(u + i);
      const __m256d u3 = _mm256_mul_pd(_mm256_mul_pd(uv, uv), uv);
      _mm256_storeu_pd(out + i, _mm256_fmadd_pd(u3, _mm256_loadu_pd(c + i),
                                                _mm256_loadu_pd(out + i)));
    }
    for (; i < n; ++i) out[i] += c[i] * u[i] * u[i] * u[i];
  } else {
    for (; i < n; ++i) out[i] += c[i] * std::pow(std::abs(u[i]), q) * u[i];
  }
}

const Ops kAvx2 = {
    v_dot,     v_dot3,    v_wabs_pow_sum, v_diff_sq_wsum, v_axpy,        v_scal,
    v_fma_vec, v_fms_vec, v_abs_clamp,    v_min_cap,      v_pow_term_add, "avx2",
};

}  // namespace

bool avx2_supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Ops& avx2_ops() { return kAvx2; }

}  // namespace ellab::kernels

#else
#error "kernels_avx2.cpp must be compiled with -mavx2 -mfma"
#endif
