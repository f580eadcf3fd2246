#include "ellab/linsolve.hpp"

#include <cmath>
#include <stdexcept>

#include "ellab/kernels.hpp"

namespace ellab {

void TriFactor::factor(const std::vector<double>& diag, const std::vector<double>& off) {
  const std::size_t n = diag.size();
  if (off.size() + 1 != n && !(n == 0 && off.empty()))
    throw std::invalid_argument("tridiagonal shape mismatch");
  d_.assign(n, 0.0);
  l_.assign(n > 0 ? n - 1 : 0, 0.0);
  neg_ = 0;
  ok_ = true;
  for (std::size_t i = 0; i < n; ++i) {
    double di = diag[i];
    if (i > 0) di -= l_[i - 1] * l_[i - 1] * d_[i - 1];
    if (di == 0.0) {
      ok_ = false;
      throw std::runtime_error("singular tridiagonal pivot");
    }
    if (di < 0.0) ++neg_;
    d_[i] = di;
    if (i + 1 < n) l_[i] = off[i] / di;
  }
}

void TriFactor::solve(std::vector<double>& rhs) const {
  const std::size_t n = d_.size();
  if (rhs.size() != n) throw std::invalid_argument("rhs size mismatch");
  for (std::size_t i = 1; i < n; ++i) rhs[i] -= l_[i - 1] * rhs[i - 1];
  for (std::size_t i = 0; i < n; ++i) rhs[i] /= d_[i];
  for (std::size_t i = n; i-- > 1;) rhs[i - 1] -= l_[i - 1] * rhs[i];
}

int sturm_count(const std::vector<double>& diag, const std::vector<double>& off, double t) {
  const std::size_t n = diag.size();
  int count = 0;
  double d = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e2 = 0.0;
    if (i > 0) e2 = off[i - 1] * off[i - 1];
    d = (diag[i] - t) - (i > 0 ? e2 / d : 0.0);
    if (d == 0.0) d = -1e-300;  // nudge exact-zero pivots to count consistently
    if (d < 0.0) ++count;
  }
  return count;
}

void TriLU::factor(std::vector<double> sub, std::vector<double> diag, std::vector<double> super) {
  const std::size_t n = diag.size();
  if ((n > 0 && (sub.size() + 1 != n || super.size() + 1 != n)) || (n == 0 && (!sub.empty() || !super.empty())))
    throw std::invalid_argument("tridiagonal shape mismatch");
  dl_ = std::move(sub);
  d_ = std::move(diag);
  du_ = std::move(super);
  du2_.assign(n > 2 ? n - 2 : 0, 0.0);
  piv_.assign(n > 0 ? n - 1 : 0, 0);
  ok_ = true;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d_[i]) >= std::abs(dl_[i])) {
      if (d_[i] == 0.0) {
        ok_ = false;
        return;
      }
      const double fact = dl_[i] / d_[i];
      dl_[i] = fact;
      d_[i + 1] -= fact * du_[i];
      piv_[i] = 0;
    } else {
      const double fact = d_[i] / dl_[i];
      d_[i] = dl_[i];
      dl_[i] = fact;
      const double tmp = du_[i];
      du_[i] = d_[i + 1];
      d_[i + 1] = tmp - fact * d_[i + 1];
      if (i + 2 < n) {
        du2_[i] = du_[i + 1];
        du_[i + 1] = -fact * du_[i + 1];
      }
      piv_[i] = 1;
    }
  }
  if (n > 0 && d_[n - 1] == 0.0) ok_ = false;
}

void TriLU::solve(std::vector<double>& rhs) const {
  const std::size_t n = d_.size();
  if (rhs.size() != n) throw std::invalid_argument("rhs size mismatch");
  if (!ok_) throw std::runtime_error("singular tridiagonal factorization");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (piv_[i] == 0) {
      rhs[i + 1] -= dl_[i] * rhs[i];
    } else {
      const double tmp = rhs[i];
      rhs[i] = rhs[i + 1];
      rhs[i + 1] = tmp - dl_[i] * rhs[i];
    }
  }
  rhs[n - 1] /= d_[n - 1];
  if (n > 1) rhs[n - 2] = (rhs[n - 2] - du_[n - 2] * rhs[n - 1]) / d_[n - 2];
  for (std::size_t i = n; i-- > 2;)
    rhs[i - 2] = (rhs[i - 2] - du_[i - 2] * rhs[i - 1] - du2_[i - 2] * rhs[i]) / d_[i - 2];
}

int conjugate_gradient(std::size_t n, const ApplyFn& apply, const double* b, double* x,
                       const std::vector<double>& jacobi_diag, double rel_tol, int max_iter) {
  const auto& k = kernels::ops();
  std::vector<double> r(n), z(n), p(n), ap(n);
  apply(x, ap.data());
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  const double bnorm = std::sqrt(k.dot(b, b, n));
  if (bnorm == 0.0) {
    for (std::size_t i = 0; i < n; ++i) x[i] = 0.0;
    return 0;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / jacobi_diag[i];
  p = z;
  double rz = k.dot(r.data(), z.data(), n);
  for (int it = 1; it <= max_iter; ++it) {
    apply(p.data(), ap.data());
    const double pap = k.dot(p.data(), ap.data(), n);
    if (pap <= 0.0) return -1;  // lost positive definiteness
    const double alpha = rz / pap;
    k.axpy(x, alpha, p.data(), n);
    k.axpy(r.data(), -alpha, ap.data(), n);
    if (std::sqrt(k.dot(r.data(), r.data(), n)) <= rel_tol * bnorm) return it;
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / jacobi_diag[i];
    const double rz_new = k.dot(r.data(), z.data(), n);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return -1;
}

}  // namespace ellab
