#pragma once

#include <cmath>
#include <limits>

#include "agewise/mlkit/matrix.hpp"

namespace agewise::mlkit {

struct BimodalFit {
  double w_lap = 0.0, w_map = 0.0;
  double mu_lap = 0.0, mu_map = 0.0;
  double sigma_lap = 0.0, sigma_map = 0.0;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool single_mode = false;
};

struct Gmm2Options {
  int restarts = 10;
  double tol = 1e-8;
  int max_iter = 500;
  std::uint64_t seed = 0;
  double sigma_floor = 1e-6;  // collapse threshold: below this a restart is degenerate
};

namespace detail {

inline double log_gauss(double x, double mu, double sigma) {
  double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.918938533204672742;  // log(sqrt(2*pi))
}

struct EmResult {
  double w0, mu0, s0, w1, mu1, s1, ll;
  int iters;
  bool degenerate;
};

inline EmResult run_em(const std::vector<double>& v, double mu0, double mu1, const Gmm2Options& opt) {
  const std::size_t n = v.size();
  double w0 = 0.5, w1 = 0.5;
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  double spread = std::max((hi - lo) / 4.0, opt.sigma_floor * 10.0);
  double s0 = spread, s1 = spread;

  // brief 1-d 2-means refinement of the seeds
  for (int r = 0; r < 10; ++r) {
    double sum0 = 0.0, sum1 = 0.0;
    std::size_t n0 = 0, n1 = 0;
    for (double x : v) {
      if (std::abs(x - mu0) <= std::abs(x - mu1)) { sum0 += x; ++n0; }
      else { sum1 += x; ++n1; }
    }
    if (n0 == 0 || n1 == 0) break;
    double m0 = sum0 / static_cast<double>(n0), m1 = sum1 / static_cast<double>(n1);
    if (m0 == mu0 && m1 == mu1) break;
    mu0 = m0;
    mu1 = m1;
  }

  EmResult res{};
  res.degenerate = false;
  double prev_ll = -std::numeric_limits<double>::infinity();
  std::vector<double> resp(n);
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    double ll = 0.0;
    double r0 = 0.0, r1 = 0.0, m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double a = std::log(w0) + log_gauss(v[i], mu0, s0);
      double b = std::log(w1) + log_gauss(v[i], mu1, s1);
      double mx = std::max(a, b);
      double den = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
      ll += den;
      double g0 = std::exp(a - den);
      resp[i] = g0;
      r0 += g0;
      r1 += 1.0 - g0;
      m0 += g0 * v[i];
      m1 += (1.0 - g0) * v[i];
    }
    if (r0 < 1e-12 || r1 < 1e-12) { res.degenerate = true; break; }
    mu0 = m0 / r0;
    mu1 = m1 / r1;
    double q0 = 0.0, q1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      q0 += resp[i] * (v[i] - mu0) * (v[i] - mu0);
      q1 += (1.0 - resp[i]) * (v[i] - mu1) * (v[i] - mu1);
    }
    s0 = std::sqrt(q0 / r0);
    s1 = std::sqrt(q1 / r1);
    if (s0 < opt.sigma_floor || s1 < opt.sigma_floor) { res.degenerate = true; break; }
    w0 = r0 / static_cast<double>(n);
    w1 = r1 / static_cast<double>(n);
    if (std::abs(ll - prev_ll) < opt.tol) { prev_ll = ll; ++it; break; }
    prev_ll = ll;
  }
  res.w0 = w0; res.mu0 = mu0; res.s0 = s0;
  res.w1 = w1; res.mu1 = mu1; res.s1 = s1;
  res.ll = prev_ll;
  res.iters = it;
  if (w0 <= 0.0 || w0 >= 1.0 || !std::isfinite(res.ll)) res.degenerate = true;
  return res;
}

}  // namespace detail

// Two-component Gaussian mixture on raw values. Multiple seeded k-means++
// restarts; best non-degenerate restart by log-likelihood. If every restart
// collapses the fit is flagged single_mode (mean/std of the pooled data).
inline BimodalFit fit_gmm2(const std::vector<double>& values, const Gmm2Options& opt = {}) {
  if (values.size() < 20) throw model_error("fit_gmm2: need at least 20 values");
  for (double v : values)
    if (!std::isfinite(v)) throw model_error("fit_gmm2: non-finite value");
  rng_t rng = make_rng(opt.seed, 0x676d6dull);
  const std::size_t n = values.size();

  BimodalFit best;
  bool have = false;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < opt.restarts; ++r) {
    // k-means++ seeding: first center uniform, second by squared-distance weight
    double c0 = values[static_cast<std::size_t>(rng() % n)];
    double total = 0.0;
    for (double v : values) total += (v - c0) * (v - c0);
    double c1 = c0;
    if (total > 0.0) {
      double target = runif(rng) * total, acc = 0.0;
      for (double v : values) {
        acc += (v - c0) * (v - c0);
        if (acc >= target) { c1 = v; break; }
      }
    }
    auto em = detail::run_em(values, c0, c1, opt);
    if (em.degenerate) continue;
    if (em.ll > best_ll) {
      best_ll = em.ll;
      have = true;
      bool first_low = em.mu0 <= em.mu1;
      best.w_lap = first_low ? em.w0 : em.w1;
      best.w_map = first_low ? em.w1 : em.w0;
      best.mu_lap = first_low ? em.mu0 : em.mu1;
      best.mu_map = first_low ? em.mu1 : em.mu0;
      best.sigma_lap = first_low ? em.s0 : em.s1;
      best.sigma_map = first_low ? em.s1 : em.s0;
      best.log_likelihood = em.ll;
      best.iterations = em.iters;
    }
  }
  if (!have) {
    BimodalFit f;
    f.single_mode = true;
    f.mu_lap = f.mu_map = mean_of(values);
    f.sigma_lap = f.sigma_map = stddev_of(values);
    f.w_lap = f.w_map = 0.5;
    return f;
  }
  return best;
}

// EM log-likelihood trace for the monotonicity property check.
inline std::vector<double> gmm2_ll_trace(const std::vector<double>& values, double mu0, double mu1, int iters) {
  Gmm2Options opt;
  opt.tol = 0.0;
  opt.max_iter = 1;
  std::vector<double> trace;
  double w0 = 0.5, w1 = 0.5;
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  double s0 = std::max((hi - lo) / 4.0, 1e-5), s1 = s0;
  const std::size_t n = values.size();
  std::vector<double> resp(n);
  for (int it = 0; it < iters; ++it) {
    double ll = 0.0, r0 = 0.0, r1 = 0.0, m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double a = std::log(w0) + detail::log_gauss(values[i], mu0, s0);
      double b = std::log(w1) + detail::log_gauss(values[i], mu1, s1);
      double mx = std::max(a, b);
      double den = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
      ll += den;
      double g0 = std::exp(a - den);
      resp[i] = g0;
      r0 += g0; r1 += 1.0 - g0;
      m0 += g0 * values[i]; m1 += (1.0 - g0) * values[i];
    }
    trace.push_back(ll);
    if (r0 < 1e-12 || r1 < 1e-12) break;
    mu0 = m0 / r0; mu1 = m1 / r1;
    double q0 = 0.0, q1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      q0 += resp[i] * (values[i] - mu0) * (values[i] - mu0);
      q1 += (1.0 - resp[i]) * (values[i] - mu1) * (values[i] - mu1);
    }
    s0 = std::max(std::sqrt(q0 / r0), 1e-9);
    s1 = std::max(std::sqrt(q1 / r1), 1e-9);
    w0 = r0 / static_cast<double>(n);
    w1 = r1 / static_cast<double>(n);
  }
  return trace;
}

}  // namespace agewise::mlkit
