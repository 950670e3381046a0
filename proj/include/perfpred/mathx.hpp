#pragma once

#include <functional>
#include <vector>

namespace perfpred::mathx {

double normal_pdf(double z);
double normal_cdf(double z);

/// Inverse standard normal CDF. Rational approximation (Acklam) refined by
/// one Halley step on erfc, absolute error well under 1e-8 as required.
double normal_quantile(double p);

/// Regularized incomplete beta I_x(a, b) == CDF of Beta(a, b) at x.
double beta_cdf(double x, double a, double b);

/// Beta quantile via bisection on beta_cdf down to an interval of 1e-10.
double beta_quantile(double p, double a, double b);

/// Type-7 (linear interpolation between order statistics) quantile of a
/// sorted sample. p in [0, 1].
double quantile_type7_sorted(const std::vector<double>& sorted, double p);

/// Adaptive Simpson integration to absolute tolerance `tol`.
double integrate_adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  double tol, int max_depth = 60);

struct EigenSym {
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // row-major n*n, column k = k-th eigenvector
  int n = 0;

  double vec(int i, int k) const { return vectors[static_cast<size_t>(i) * n + k]; }
};

/// Eigendecomposition of a symmetric matrix (row-major n*n) by cyclic Jacobi
/// rotations: off-diagonal tolerance 1e-12, at most 100 sweeps. Eigenvalues
/// sorted ascending; each eigenvector's first component of magnitude > 1e-12
/// is made positive so the decomposition is deterministic.
EigenSym jacobi_eigen_sym(const std::vector<double>& m, int n);

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);  // divides by n-1

}  // namespace perfpred::mathx
