#pragma once

#include <vector>

namespace mhgan {

// Row-major double-precision dense matrix for the metric-side linear algebra
// (covariances, matrix square roots, spectra). Network math stays float32;
// these stay small (d <= 64).
struct DMat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  DMat() = default;
  DMat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  static DMat identity(int n);
};

DMat matmul(const DMat& x, const DMat& y);
DMat transpose(const DMat& x);
double trace(const DMat& x);
double frobenius_norm(const DMat& x);
double max_abs_asymmetry(const DMat& x);

// Cyclic Jacobi eigendecomposition of a symmetric matrix:
// A = V diag(w) V^T with eigenvalues descending and V's columns the
// corresponding eigenvectors.
void eigh_symmetric(const DMat& sym, DMat& eigvecs, std::vector<double>& eigvals);

// Singular values, descending, via the eigenvalues of the smaller Gram matrix.
std::vector<double> singular_values(const DMat& x);

}  // namespace mhgan
