#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "agewise/common.hpp"

namespace agewise::mlkit {

struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double* row(std::size_t i) { return data.data() + i * cols; }

  Matrix take_rows(const std::vector<int>& idx) const {
    Matrix out(idx.size(), cols);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j) out.at(i, j) = at(static_cast<std::size_t>(idx[i]), j);
    return out;
  }
};

inline std::vector<double> take(const std::vector<double>& v, const std::vector<int>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[static_cast<std::size_t>(idx[i])];
  return out;
}

inline void check_finite(const Matrix& X, const std::vector<double>& y) {
  for (double v : X.data)
    if (!std::isfinite(v)) throw model_error("non-finite feature value");
  for (double v : y)
    if (!std::isfinite(v)) throw model_error("non-finite target value");
}

// Per-column mean/std scaler; constant columns keep sigma 1 so they map to 0.
struct Standardizer {
  std::vector<double> mean, sigma;

  void fit(const Matrix& X) {
    mean.assign(X.cols, 0.0);
    sigma.assign(X.cols, 0.0);
    if (X.rows == 0) throw model_error("standardizer: empty matrix");
    for (std::size_t i = 0; i < X.rows; ++i)
      for (std::size_t j = 0; j < X.cols; ++j) mean[j] += X.at(i, j);
    for (auto& m : mean) m /= static_cast<double>(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i)
      for (std::size_t j = 0; j < X.cols; ++j) {
        double d = X.at(i, j) - mean[j];
        sigma[j] += d * d;
      }
    for (auto& s : sigma) {
      s = std::sqrt(s / static_cast<double>(X.rows));
      if (s < 1e-12) s = 1.0;
    }
  }

  Matrix transform(const Matrix& X) const {
    Matrix out = X;
    for (std::size_t i = 0; i < X.rows; ++i)
      for (std::size_t j = 0; j < X.cols; ++j) out.at(i, j) = (X.at(i, j) - mean[j]) / sigma[j];
    return out;
  }

  void transform_row(const double* in, double* out) const {
    for (std::size_t j = 0; j < mean.size(); ++j) out[j] = (in[j] - mean[j]) / sigma[j];
  }
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw model_error("rmse: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

inline double r_squared(const std::vector<double>& truth, const std::vector<double>& pred) {
  double m = mean_of(truth);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - m) * (truth[i] - m);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

}  // namespace agewise::mlkit
