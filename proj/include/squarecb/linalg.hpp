#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace squarecb {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void axpy(double c, std::span<const double> x, Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline void scale(Vec& x, double c) {
  for (double& v : x) v *= c;
}

inline double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }
inline double clip01(double v) { return clip(v, 0.0, 1.0); }

// Project onto the euclidean ball of the given radius (in place).
inline void project_ball(Vec& v, double radius = 1.0) {
  const double n = norm2(v);
  if (n > radius && n > 0.0) scale(v, radius / n);
}

// Dense square matrix, row major. Small dimensions only.
class Mat {
 public:
  Mat() = default;
  explicit Mat(int n, double diag = 0.0) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {
    for (int i = 0; i < n; ++i) (*this)(i, i) = diag;
  }

  int dim() const { return n_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

  // A += c * x x^T
  void rank1_update(std::span<const double> x, double c = 1.0) {
    if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("rank1_update: dimension mismatch");
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) (*this)(i, j) += c * x[i] * x[j];
  }

  Vec mat_vec(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("mat_vec: dimension mismatch");
    Vec y(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int j = 0; j < n_; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  // x^T A x
  double quad_form(std::span<const double> x) const {
    const Vec ax = mat_vec(x);
    return dot(x, ax);
  }

 private:
  int n_ = 0;
  Vec a_;
};

// Cholesky solve for symmetric positive definite A. Returns nullopt when the
// factorization encounters a non-positive pivot.
inline std::optional<Vec> cholesky_solve(const Mat& a, std::span<const double> b) {
  const int n = a.dim();
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("cholesky_solve: dimension mismatch");
  Mat l(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return std::nullopt;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  Vec x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

// Smallest eigenvalue of a symmetric matrix by inverse-free bisection on
// the Cholesky PD test. Adequate for the small matrices used here.
inline double min_eigenvalue(const Mat& a) {
  const int n = a.dim();
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) off += std::abs(a(i, j));
    lo = std::min(lo, a(i, i) - off);
    hi = std::max(hi, a(i, i) + off);
  }
  auto is_pd_shifted = [&](double mu) {
    Mat s = a;
    for (int i = 0; i < n; ++i) s(i, i) -= mu;
    Vec zero(n, 0.0);
    return cholesky_solve(s, zero).has_value();
  };
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (is_pd_shifted(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace squarecb
