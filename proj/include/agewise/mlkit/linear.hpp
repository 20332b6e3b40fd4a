#pragma once

#include <cmath>

#include "agewise/mlkit/matrix.hpp"

namespace agewise::mlkit {

struct LinearModel {
  std::vector<double> coef;
  double intercept = 0.0;
  bool converged = true;
  int iterations = 0;

  double predict(const double* x) const {
    double s = intercept;
    for (std::size_t j = 0; j < coef.size(); ++j) s += coef[j] * x[j];
    return s;
  }
  std::vector<double> predict(const Matrix& X) const {
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict(X.row(i));
    return out;
  }
};

struct RidgeParams {
  double alpha = 1.0;
  int max_iter = 5000;  // kept for interface parity; the solve is closed-form
};

struct LassoParams {
  double alpha = 0.001;
  int max_iter = 5000;
  double tol = 1e-6;
};

struct EnetParams {
  double alpha = 0.001;
  double l1_ratio = 0.5;
  int max_iter = 1000;
  double tol = 1e-6;
};

namespace detail {

struct Centered {
  Matrix Xc;
  std::vector<double> yc;
  std::vector<double> xmean;
  double ymean = 0.0;
};

inline Centered center(const Matrix& X, const std::vector<double>& y) {
  if (X.rows != y.size() || X.rows == 0) throw model_error("linear fit: shape mismatch");
  check_finite(X, y);
  Centered c;
  c.Xc = X;
  c.yc = y;
  c.xmean.assign(X.cols, 0.0);
  for (std::size_t i = 0; i < X.rows; ++i)
    for (std::size_t j = 0; j < X.cols; ++j) c.xmean[j] += X.at(i, j);
  for (auto& m : c.xmean) m /= static_cast<double>(X.rows);
  c.ymean = mean_of(y);
  for (std::size_t i = 0; i < X.rows; ++i)
    for (std::size_t j = 0; j < X.cols; ++j) c.Xc.at(i, j) -= c.xmean[j];
  for (auto& v : c.yc) v -= c.ymean;
  return c;
}

inline void finish_intercept(LinearModel& m, const Centered& c) {
  double dot = 0.0;
  for (std::size_t j = 0; j < m.coef.size(); ++j) dot += m.coef[j] * c.xmean[j];
  m.intercept = c.ymean - dot;
}

// Dense symmetric positive-definite solve (Cholesky).
inline std::vector<double> spd_solve(std::vector<double> A, std::vector<double> b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = A[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= A[i * n + k] * A[j * n + k];
      if (i == j) {
        if (s <= 0.0) throw model_error("ridge: system not positive definite");
        A[i * n + i] = std::sqrt(s);
      } else {
        A[i * n + j] = s / A[j * n + j];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= A[i * n + k] * b[k];
    b[i] = s / A[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= A[k * n + ii] * b[k];
    b[ii] = s / A[ii * n + ii];
  }
  return b;
}

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Cyclic coordinate descent shared by lasso (l2_pen=0) and elastic net.
inline LinearModel coord_descent(const Matrix& X, const std::vector<double>& y, double l1_pen, double l2_pen,
                                 int max_iter, double tol) {
  auto c = center(X, y);
  const std::size_t m = X.rows, n = X.cols;
  std::vector<double> znorm(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) znorm[j] += c.Xc.at(i, j) * c.Xc.at(i, j);
  LinearModel model;
  model.coef.assign(n, 0.0);
  std::vector<double> r = c.yc;  // residual y - X beta
  const double md = static_cast<double>(m);
  int it = 0;
  bool converged = false;
  for (; it < max_iter && !converged; ++it) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (znorm[j] == 0.0) continue;
      double old = model.coef[j];
      double cj = old * znorm[j];
      for (std::size_t i = 0; i < m; ++i) cj += c.Xc.at(i, j) * r[i];
      double nb = soft_threshold(cj, md * l1_pen) / (znorm[j] + md * l2_pen);
      if (nb != old) {
        for (std::size_t i = 0; i < m; ++i) r[i] -= (nb - old) * c.Xc.at(i, j);
        model.coef[j] = nb;
        max_change = std::max(max_change, std::abs(nb - old));
      }
    }
    if (max_change < tol) converged = true;
  }
  model.converged = converged;
  model.iterations = it;
  finish_intercept(model, c);
  return model;
}

}  // namespace detail

inline LinearModel fit_ridge(const Matrix& X, const std::vector<double>& y, const RidgeParams& p = {}) {
  auto c = detail::center(X, y);
  const std::size_t n = X.cols;
  std::vector<double> A(n * n, 0.0), b(n, 0.0);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const double* row = c.Xc.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      b[j] += row[j] * c.yc[i];
      for (std::size_t k = 0; k <= j; ++k) A[j * n + k] += row[j] * row[k];
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) A[j * n + k] = A[k * n + j];
    A[j * n + j] += p.alpha;
  }
  LinearModel m;
  m.coef = detail::spd_solve(std::move(A), std::move(b), n);
  m.iterations = 1;
  detail::finish_intercept(m, c);
  return m;
}

inline LinearModel fit_lasso(const Matrix& X, const std::vector<double>& y, const LassoParams& p = {}) {
  return detail::coord_descent(X, y, p.alpha, 0.0, p.max_iter, p.tol);
}

inline LinearModel fit_enet(const Matrix& X, const std::vector<double>& y, const EnetParams& p = {}) {
  return detail::coord_descent(X, y, p.alpha * p.l1_ratio, p.alpha * (1.0 - p.l1_ratio), p.max_iter, p.tol);
}

// Objective values, for the non-increasing-per-sweep property checks.
inline double lasso_objective(const Matrix& X, const std::vector<double>& y, const LinearModel& m, double alpha) {
  double rss = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    double d = y[i] - m.predict(X.row(i));
    rss += d * d;
  }
  double l1 = 0.0;
  for (double c : m.coef) l1 += std::abs(c);
  return rss / (2.0 * static_cast<double>(X.rows)) + alpha * l1;
}

}  // namespace agewise::mlkit
