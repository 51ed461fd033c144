#include "mhgan/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mhgan/errors.hpp"

namespace mhgan {

DMat DMat::identity(int n) {
  DMat m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

DMat matmul(const DMat& x, const DMat& y) {
  MHGAN_REQUIRE(x.cols == y.rows, "DMat matmul extents differ");
  DMat r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const double v = x.at(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < y.cols; ++j) r.at(i, j) += v * y.at(k, j);
    }
  return r;
}

DMat transpose(const DMat& x) {
  DMat r(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) r.at(j, i) = x.at(i, j);
  return r;
}

double trace(const DMat& x) {
  MHGAN_REQUIRE(x.rows == x.cols, "trace of a non-square matrix");
  double t = 0.0;
  for (int i = 0; i < x.rows; ++i) t += x.at(i, i);
  return t;
}

double frobenius_norm(const DMat& x) {
  double s = 0.0;
  for (double v : x.a) s += v * v;
  return std::sqrt(s);
}

double max_abs_asymmetry(const DMat& x) {
  MHGAN_REQUIRE(x.rows == x.cols, "asymmetry of a non-square matrix");
  double m = 0.0;
  for (int i = 0; i < x.rows; ++i)
    for (int j = i + 1; j < x.cols; ++j)
      m = std::max(m, std::abs(x.at(i, j) - x.at(j, i)));
  return m;
}

void eigh_symmetric(const DMat& sym, DMat& eigvecs, std::vector<double>& eigvals) {
  MHGAN_REQUIRE(sym.rows == sym.cols, "eigh of a non-square matrix");
  const int n = sym.rows;
  DMat b = sym;
  // Work on the symmetrized average so tiny input asymmetry cannot bias sweeps.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      const double v = 0.5 * (b.at(i, j) + b.at(j, i));
      b.at(i, j) = v;
      b.at(j, i) = v;
    }
  DMat v = DMat::identity(n);

  const double scale = std::max(frobenius_norm(b), 1e-300);
  for (int sweep = 0; sweep < 128; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += b.at(i, j) * b.at(i, j);
    if (std::sqrt(off) <= 1e-14 * scale) break;

    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = b.at(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (b.at(q, q) - b.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double bkp = b.at(k, p), bkq = b.at(k, q);
          b.at(k, p) = c * bkp - s * bkq;
          b.at(k, q) = s * bkp + c * bkq;
        }
        for (int k = 0; k < n; ++k) {
          const double bpk = b.at(p, k), bqk = b.at(q, k);
          b.at(p, k) = c * bpk - s * bqk;
          b.at(q, k) = s * bpk + c * bqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
  }

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return b.at(i, i) > b.at(j, j); });

  eigvals.assign(static_cast<size_t>(n), 0.0);
  eigvecs = DMat(n, n);
  for (int j = 0; j < n; ++j) {
    eigvals[static_cast<size_t>(j)] = b.at(order[j], order[j]);
    for (int i = 0; i < n; ++i) eigvecs.at(i, j) = v.at(i, order[j]);
  }
}

std::vector<double> singular_values(const DMat& x) {
  const bool wide = x.rows > x.cols;
  const DMat xt = transpose(x);
  const DMat gram = wide ? matmul(xt, x) : matmul(x, xt);
  DMat vecs;
  std::vector<double> eig;
  eigh_symmetric(gram, vecs, eig);
  for (double& e : eig) e = std::sqrt(std::max(e, 0.0));
  return eig;
}

}  // namespace mhgan
