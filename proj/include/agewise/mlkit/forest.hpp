#pragma once

#include "agewise/mlkit/tree.hpp"

namespace agewise::mlkit {

struct ForestParams {
  int n_estimators = 1024;
  bool bootstrap = true;
  TreeParams tree{};  // unlimited depth, min_split=2, min_leaf=1
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct RandomForest {
  std::vector<RegressionTree> trees;

  double predict(const double* x) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x);
    return s / static_cast<double>(trees.size());
  }
  std::vector<double> predict(const Matrix& X) const {
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict(X.row(i));
    return out;
  }
};

inline RandomForest fit_random_forest(const Matrix& X, const std::vector<double>& y, const ForestParams& p = {}) {
  if (X.rows < 1 || X.rows != y.size()) throw model_error("random forest: bad training shape");
  check_finite(X, y);
  TreeData data = TreeData::build(X);
  RandomForest rf;
  rf.trees.resize(static_cast<std::size_t>(p.n_estimators));
  const std::size_t m = X.rows;
  parallel_for(rf.trees.size(), p.threads, [&](std::size_t t) {
    std::vector<double> w(m, 1.0);
    if (p.bootstrap) {
      rng_t rng = make_rng(p.seed, 0xf04e57ull + t);
      std::fill(w.begin(), w.end(), 0.0);
      for (std::size_t i = 0; i < m; ++i) w[static_cast<std::size_t>(rng() % m)] += 1.0;
    }
    rf.trees[t] = fit_tree(data, y, p.tree, w);
  });
  return rf;
}

struct GbtParams {
  int n_estimators = 1024;
  double learning_rate = 0.05;
  int max_depth = 3;
  int min_split = 2;
  int min_leaf = 1;
};

struct GradientBoosting {
  double init = 0.0;
  double learning_rate = 0.05;
  std::vector<RegressionTree> trees;

  double predict(const double* x) const {
    double s = init;
    for (const auto& t : trees) s += learning_rate * t.predict(x);
    return s;
  }
  std::vector<double> predict(const Matrix& X) const {
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict(X.row(i));
    return out;
  }
};

inline GradientBoosting fit_gbt(const Matrix& X, const std::vector<double>& y, const GbtParams& p = {}) {
  if (X.rows < 1 || X.rows != y.size()) throw model_error("gbt: bad training shape");
  check_finite(X, y);
  TreeData data = TreeData::build(X);
  GradientBoosting gb;
  gb.learning_rate = p.learning_rate;
  gb.init = mean_of(y);
  TreeParams tp;
  tp.max_depth = p.max_depth;
  tp.min_split = p.min_split;
  tp.min_leaf = p.min_leaf;
  std::vector<double> w(X.rows, 1.0);
  std::vector<double> resid(X.rows);
  std::vector<double> pred(X.rows, gb.init);
  gb.trees.reserve(static_cast<std::size_t>(p.n_estimators));
  for (int t = 0; t < p.n_estimators; ++t) {
    for (std::size_t i = 0; i < X.rows; ++i) resid[i] = y[i] - pred[i];
    RegressionTree tree = fit_tree(data, resid, tp, w);
    for (std::size_t i = 0; i < X.rows; ++i) pred[i] += p.learning_rate * tree.predict(X.row(i));
    gb.trees.push_back(std::move(tree));
  }
  return gb;
}

}  // namespace agewise::mlkit
