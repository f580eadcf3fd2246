#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellab/kernels.hpp"

using namespace ellab::kernels;

namespace {

std::vector<double> rand_vec(std::size_t n, std::uint64_t seed, double lo = -2.0,
                             double hi = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

struct BackendGuard {
  ~BackendGuard() { force_backend("auto"); }
};

}  // namespace

TEST_CASE("scalar reference values on tiny inputs") {
  const Ops& k = scalar_ops();

  const double a[] = {1.0, 2.0, 3.0};
  const double b[] = {4.0, 5.0, 6.0};
  const double w[] = {2.0, 1.0, 0.5};
  CHECK(k.dot(a, b, 3) == doctest::Approx(32.0).epsilon(1e-15));
  CHECK(k.dot3(w, a, b, 3) == doctest::Approx(27.0).epsilon(1e-15));

  const double ones[] = {1.0, 1.0};
  const double u[] = {-2.0, 3.0};
  CHECK(k.wabs_pow_sum(ones, u, 3.0, 2) == doctest::Approx(35.0).epsilon(1e-15));
  const double w2[] = {2.0};
  const double u2[] = {-3.0};
  CHECK(k.wabs_pow_sum(w2, u2, 2.0, 1) == doctest::Approx(18.0).epsilon(1e-15));
  const double u4[] = {-2.0};
  CHECK(k.wabs_pow_sum(ones, u4, 4.0, 1) == doctest::Approx(16.0).epsilon(1e-15));
  const double u25[] = {4.0};
  CHECK(k.wabs_pow_sum(ones, u25, 2.5, 1) == doctest::Approx(32.0).epsilon(1e-14));

  const double g[] = {2.0, 3.0};
  const double da[] = {5.0, 1.0};
  const double db[] = {3.0, 4.0};
  CHECK(k.diff_sq_wsum(g, da, db, 2) == doctest::Approx(35.0).epsilon(1e-15));

  double y[] = {1.0, 2.0};
  const double x[] = {3.0, -1.0};
  k.axpy(y, 2.0, x, 2);
  CHECK(y[0] == 7.0);
  CHECK(y[1] == 0.0);

  double s[] = {2.0, -4.0};
  k.scal(s, 0.5, 2);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == -2.0);

  double f[] = {1.0};
  const double fa[] = {2.0};
  const double fb[] = {3.0};
  k.fma_vec(f, fa, fb, 1);
  CHECK(f[0] == doctest::Approx(7.0).epsilon(1e-15));
  double fm[] = {10.0};
  k.fms_vec(fm, fa, fb, 1);
  CHECK(fm[0] == doctest::Approx(4.0).epsilon(1e-15));

  double ac[] = {-1.5, 2.0};
  k.abs_clamp(ac, 2);
  CHECK(ac[0] == 1.5);
  CHECK(ac[1] == 2.0);

  double mc[] = {5.0, -1.0};
  const double cap[] = {3.0, 0.0};
  k.min_cap(mc, cap, 2);
  CHECK(mc[0] == 3.0);
  CHECK(mc[1] == -1.0);

  double p2[] = {1.0};
  const double c2[] = {2.0};
  const double v2[] = {-3.0};
  k.pow_term_add(p2, c2, v2, 2.0, 1);
  CHECK(p2[0] == doctest::Approx(-53.0).epsilon(1e-15));
  double p1[] = {0.0};
  k.pow_term_add(p1, c2, v2, 1.0, 1);
  CHECK(p1[0] == doctest::Approx(-18.0).epsilon(1e-15));
  double p0[] = {0.0};
  k.pow_term_add(p0, c2, v2, 0.0, 1);
  CHECK(p0[0] == doctest::Approx(-6.0).epsilon(1e-15));
  double pf[] = {0.0};
  const double cf[] = {1.0};
  const double vf[] = {2.0};
  k.pow_term_add(pf, cf, vf, 2.5, 1);
  CHECK(pf[0] == doctest::Approx(11.313708498984761).epsilon(1e-14));
}

TEST_CASE("reductions agree between scalar and AVX2 backends") {
  if (!avx2_supported()) {
    MESSAGE("AVX2 unavailable on this host; equivalence checks skipped");
    return;
  }
  const Ops& ks = scalar_ops();
  const Ops& kv = avx2_ops();
  const std::size_t sizes[] = {1, 2, 3, 4, 5, 7, 8, 13, 31, 64, 100, 257};
  const double ps[] = {1.0, 2.0, 2.7, 3.0, 4.0};
  for (std::size_t n : sizes) {
    auto a = rand_vec(n, 11 * n + 1);
    auto b = rand_vec(n, 11 * n + 2);
    auto w = rand_vec(n, 11 * n + 3);
    CHECK(kv.dot(a.data(), b.data(), n) ==
          doctest::Approx(ks.dot(a.data(), b.data(), n)).epsilon(1e-12));
    CHECK(kv.dot3(w.data(), a.data(), b.data(), n) ==
          doctest::Approx(ks.dot3(w.data(), a.data(), b.data(), n)).epsilon(1e-12));
    CHECK(kv.diff_sq_wsum(w.data(), a.data(), b.data(), n) ==
          doctest::Approx(ks.diff_sq_wsum(w.data(), a.data(), b.data(), n)).epsilon(1e-12));
    for (double p : ps)
      CHECK(kv.wabs_pow_sum(w.data(), a.data(), p, n) ==
            doctest::Approx(ks.wabs_pow_sum(w.data(), a.data(), p, n)).epsilon(1e-12));
  }
}

TEST_CASE("mutating ops agree between scalar and AVX2 backends") {
  if (!avx2_supported()) {
    MESSAGE("AVX2 unavailable on this host; equivalence checks skipped");
    return;
  }
  const Ops& ks = scalar_ops();
  const Ops& kv = avx2_ops();
  const std::size_t sizes[] = {1, 3, 4, 8, 13, 64, 257};
  const double qs[] = {0.0, 1.0, 2.0, 2.5};
  for (std::size_t n : sizes) {
    const auto base = rand_vec(n, 31 * n + 1);
    const auto x = rand_vec(n, 31 * n + 2);
    const auto y = rand_vec(n, 31 * n + 3);

    auto s1 = base, s2 = base;
    ks.axpy(s1.data(), 1.7, x.data(), n);
    kv.axpy(s2.data(), 1.7, x.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(s2[i] == doctest::Approx(s1[i]).epsilon(1e-14));

    s1 = base, s2 = base;
    ks.scal(s1.data(), -0.37, n);
    kv.scal(s2.data(), -0.37, n);
    for (std::size_t i = 0; i < n; ++i) CHECK(s2[i] == s1[i]);

    s1 = base, s2 = base;
    ks.fma_vec(s1.data(), x.data(), y.data(), n);
    kv.fma_vec(s2.data(), x.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(s2[i] == doctest::Approx(s1[i]).epsilon(1e-14));

    s1 = base, s2 = base;
    ks.fms_vec(s1.data(), x.data(), y.data(), n);
    kv.fms_vec(s2.data(), x.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(s2[i] == doctest::Approx(s1[i]).epsilon(1e-14));

    s1 = base, s2 = base;
    ks.abs_clamp(s1.data(), n);
    kv.abs_clamp(s2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(s2[i] == s1[i]);

    s1 = base, s2 = base;
    ks.min_cap(s1.data(), x.data(), n);
    kv.min_cap(s2.data(), x.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(s2[i] == s1[i]);

    for (double q : qs) {
      s1 = base, s2 = base;
      ks.pow_term_add(s1.data(), x.data(), y.data(), q, n);
      kv.pow_term_add(s2.data(), x.data(), y.data(), q, n);
      for (std::size_t i = 0; i < n; ++i)
        CHECK(s2[i] == doctest::Approx(s1[i]).epsilon(1e-13));
    }
  }
}

TEST_CASE("backend dispatch and forcing") {
  BackendGuard guard;
  CHECK(std::string(ops().name) == active_backend());

  force_backend("scalar");
  CHECK(active_backend() == "scalar");
  CHECK(std::string(ops().name) == "scalar");

  if (avx2_supported()) {
    force_backend("avx2");
    CHECK(active_backend() == "avx2");
    CHECK(std::string(ops().name) == "avx2");
  } else {
    CHECK_THROWS_AS(force_backend("avx2"), std::invalid_argument);
  }

  force_backend("auto");
  if (avx2_supported()) CHECK(active_backend() == "avx2");
  CHECK_THROWS_AS(force_backend("bogus"), std::invalid_argument);
  CHECK_THROWS_AS(force_backend(""), std::invalid_argument);
}
