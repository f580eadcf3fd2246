#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace ellab {

/// LDL^T factorization of a symmetric tridiagonal matrix.
class TriFactor {
 public:
  /// Factor diag/off (off has size n-1). Throws when a pivot vanishes.
  void factor(const std::vector<double>& diag, const std::vector<double>& off);
  /// Solve in place against the factored matrix.
  void solve(std::vector<double>& rhs) const;
  std::size_t size() const { return d_.size(); }
  /// Number of negative pivots (inertia), useful for spectral bisection.
  int negative_pivots() const { return neg_; }
  bool valid() const { return ok_; }

 private:
  std::vector<double> d_, l_;
  int neg_ = 0;
  bool ok_ = false;
};

/// Count of eigenvalues of the symmetric tridiagonal matrix (diag - t, off)
/// below zero, by a Sturm pivot sweep robust to zero pivots.
int sturm_count(const std::vector<double>& diag, const std::vector<double>& off, double t);

/// LU factorization with partial pivoting of a general tridiagonal matrix;
/// stable for the indefinite systems arising in saddle and KKT solves.
class TriLU {
 public:
  /// sub has size n-1, diag n, super n-1.
  void factor(std::vector<double> sub, std::vector<double> diag, std::vector<double> super);
  void solve(std::vector<double>& rhs) const;
  bool valid() const { return ok_; }

 private:
  std::vector<double> dl_, d_, du_, du2_;
  std::vector<char> piv_;
  bool ok_ = false;
};

using ApplyFn = std::function<void(const double* x, double* out)>;

/// Jacobi-preconditioned conjugate gradient for SPD operators.
/// Returns iterations used, or -1 when rel_tol was not reached.
int conjugate_gradient(std::size_t n, const ApplyFn& apply, const double* b, double* x,
                       const std::vector<double>& jacobi_diag, double rel_tol, int max_iter);

}  // namespace ellab
