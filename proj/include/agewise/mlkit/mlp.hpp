#pragma once

#include <cmath>
#include <limits>

#include "agewise/mlkit/matrix.hpp"

namespace agewise::mlkit {

struct MlpParams {
  int hidden = 23;
  double start_lr = 0.1;
  int max_epochs = 400;
  int patience = 5;      // epochs without validation improvement before halving lr
  double min_lr = 1e-5;  // training stops once the adaptive lr drops below this
  double val_fraction = 0.2;
  double tol = 1e-7;
  std::uint64_t seed = 0;
};

struct MlpModel {
  int in = 0, hidden = 0;
  std::vector<double> W1;  // hidden x in
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;
  double y_mean = 0.0, y_std = 1.0;

  // network output in standardized-target space
  double forward(const double* x) const {
    double out = b2;
    for (int j = 0; j < hidden; ++j) {
      double z = b1[static_cast<std::size_t>(j)];
      const double* wrow = W1.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(in);
      for (int i = 0; i < in; ++i) z += wrow[i] * x[i];
      out += w2[static_cast<std::size_t>(j)] * std::tanh(z);
    }
    return out;
  }
  double predict(const double* x) const { return y_mean + y_std * forward(x); }
  std::vector<double> predict(const Matrix& X) const {
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict(X.row(i));
    return out;
  }
};

struct MlpGrads {
  std::vector<double> W1, b1, w2;
  double b2 = 0.0;
};

// Half mean squared error in standardized-target space, with gradients.
inline double mlp_loss_grad(const MlpModel& m, const Matrix& X, const std::vector<double>& y, MlpGrads* g) {
  const std::size_t n = X.rows;
  if (g) {
    g->W1.assign(m.W1.size(), 0.0);
    g->b1.assign(m.b1.size(), 0.0);
    g->w2.assign(m.w2.size(), 0.0);
    g->b2 = 0.0;
  }
  double loss = 0.0;
  std::vector<double> h(static_cast<std::size_t>(m.hidden));
  for (std::size_t k = 0; k < n; ++k) {
    const double* x = X.row(k);
    double out = m.b2;
    for (int j = 0; j < m.hidden; ++j) {
      double z = m.b1[static_cast<std::size_t>(j)];
      const double* wrow = m.W1.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(m.in);
      for (int i = 0; i < m.in; ++i) z += wrow[i] * x[i];
      h[static_cast<std::size_t>(j)] = std::tanh(z);
      out += m.w2[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(j)];
    }
    double ys = (y[k] - m.y_mean) / m.y_std;
    double d = out - ys;
    loss += 0.5 * d * d;
    if (g) {
      double dout = d / static_cast<double>(n);
      g->b2 += dout;
      for (int j = 0; j < m.hidden; ++j) {
        double hj = h[static_cast<std::size_t>(j)];
        g->w2[static_cast<std::size_t>(j)] += dout * hj;
        double dz = dout * m.w2[static_cast<std::size_t>(j)] * (1.0 - hj * hj);
        g->b1[static_cast<std::size_t>(j)] += dz;
        double* grow = g->W1.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(m.in);
        for (int i = 0; i < m.in; ++i) grow[i] += dz * x[i];
      }
    }
  }
  return loss / static_cast<double>(n);
}

inline MlpModel init_mlp(std::size_t in, const MlpParams& p) {
  MlpModel m;
  m.in = static_cast<int>(in);
  m.hidden = p.hidden;
  m.W1.resize(static_cast<std::size_t>(p.hidden) * in);
  m.b1.assign(static_cast<std::size_t>(p.hidden), 0.0);
  m.w2.resize(static_cast<std::size_t>(p.hidden));
  rng_t rng = make_rng(p.seed, 0x6d6c70ull);
  double lim1 = std::sqrt(6.0 / static_cast<double>(in + static_cast<std::size_t>(p.hidden)));
  for (auto& w : m.W1) w = runif(rng, -lim1, lim1);
  double lim2 = std::sqrt(6.0 / static_cast<double>(p.hidden + 1));
  for (auto& w : m.w2) w = runif(rng, -lim2, lim2);
  return m;
}

// Full-batch Adam with adaptive learning rate: start at start_lr, halve when the
// validation loss stops improving; keep the best-validation weights.
inline MlpModel fit_mlp(const Matrix& X, const std::vector<double>& y, const MlpParams& p = {}) {
  if (X.rows != y.size() || X.rows == 0) throw model_error("mlp: bad training shape");
  check_finite(X, y);
  MlpModel m = init_mlp(X.cols, p);
  m.y_mean = mean_of(y);
  double var = 0.0;
  for (double v : y) var += (v - m.y_mean) * (v - m.y_mean);
  m.y_std = std::sqrt(var / static_cast<double>(y.size()));
  if (m.y_std < 1e-12) {  // constant target: exact constant predictor
    std::fill(m.w2.begin(), m.w2.end(), 0.0);
    m.b2 = 0.0;
    m.y_std = 1.0;
    return m;
  }
  if (p.max_epochs == 0) return m;

  std::vector<int> idx(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) idx[i] = static_cast<int>(i);
  rng_t rng = make_rng(p.seed, 0x6d6c7076ull);
  shuffle_vec(idx, rng);
  std::size_t nval = X.rows >= 10 ? static_cast<std::size_t>(p.val_fraction * static_cast<double>(X.rows)) : 0;
  std::vector<int> val_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(nval));
  std::vector<int> tr_idx(idx.begin() + static_cast<std::ptrdiff_t>(nval), idx.end());
  Matrix Xtr = X.take_rows(tr_idx), Xval = X.take_rows(val_idx);
  std::vector<double> ytr = take(y, tr_idx), yval = take(y, val_idx);

  const std::size_t np = m.W1.size() + m.b1.size() + m.w2.size() + 1;
  std::vector<double> am(np, 0.0), av(np, 0.0);
  double lr = p.start_lr;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  MlpGrads g;
  MlpModel best = m;
  double best_val = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (int epoch = 1; epoch <= p.max_epochs && lr >= p.min_lr; ++epoch) {
    double loss = mlp_loss_grad(m, Xtr, ytr, &g);
    if (!std::isfinite(loss)) throw model_error("mlp: training diverged (non-finite loss)");
    double bc1 = 1.0 - std::pow(beta1, epoch);
    double bc2 = 1.0 - std::pow(beta2, epoch);
    std::size_t k = 0;
    auto step = [&](double& w, double grad) {
      am[k] = beta1 * am[k] + (1.0 - beta1) * grad;
      av[k] = beta2 * av[k] + (1.0 - beta2) * grad * grad;
      w -= lr * (am[k] / bc1) / (std::sqrt(av[k] / bc2) + eps);
      ++k;
    };
    for (std::size_t i = 0; i < m.W1.size(); ++i) step(m.W1[i], g.W1[i]);
    for (std::size_t i = 0; i < m.b1.size(); ++i) step(m.b1[i], g.b1[i]);
    for (std::size_t i = 0; i < m.w2.size(); ++i) step(m.w2[i], g.w2[i]);
    step(m.b2, g.b2);

    double vloss = nval > 0 ? mlp_loss_grad(m, Xval, yval, nullptr) : mlp_loss_grad(m, Xtr, ytr, nullptr);
    if (!std::isfinite(vloss)) throw model_error("mlp: training diverged (non-finite loss)");
    if (vloss < best_val - p.tol) {
      best_val = vloss;
      best = m;
      stall = 0;
    } else if (++stall >= p.patience) {
      lr *= 0.5;
      stall = 0;
    }
  }
  return best;
}

}  // namespace agewise::mlkit
