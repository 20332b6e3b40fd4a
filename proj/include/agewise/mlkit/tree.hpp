#pragma once

#include <algorithm>

#include "agewise/mlkit/matrix.hpp"

namespace agewise::mlkit {

struct TreeParams {
  int max_depth = -1;  // -1: grow to purity
  int min_split = 2;
  int min_leaf = 1;
};

struct RegressionTree {
  struct Node {
    int feature = -1;  // -1: leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  double predict(const double* x) const {
    int n = 0;
    while (nodes[n].feature >= 0) n = x[nodes[n].feature] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
    return nodes[n].value;
  }
};

// Column-major copy + per-feature sorted sample orders, built once per fit and
// shared by every tree. Nodes then partition the orders instead of re-sorting,
// so a split costs O(features x samples).
struct TreeData {
  std::size_t m = 0, n = 0;
  std::vector<std::vector<double>> col;
  std::vector<std::vector<int>> order;

  static TreeData build(const Matrix& X) {
    TreeData d;
    d.m = X.rows;
    d.n = X.cols;
    d.col.assign(X.cols, std::vector<double>(X.rows));
    d.order.assign(X.cols, {});
    for (std::size_t f = 0; f < X.cols; ++f) {
      auto& c = d.col[f];
      for (std::size_t i = 0; i < X.rows; ++i) c[i] = X.at(i, f);
      auto& o = d.order[f];
      o.resize(X.rows);
      for (std::size_t i = 0; i < X.rows; ++i) o[i] = static_cast<int>(i);
      std::sort(o.begin(), o.end(), [&](int a, int b) { return c[a] != c[b] ? c[a] < c[b] : a < b; });
    }
  return d;
  }
};

inline RegressionTree fit_tree(const TreeData& d, const std::vector<double>& y, const TreeParams& p,
                               const std::vector<double>& weights) {
  if (y.size() != d.m || weights.size() != d.m) throw model_error("fit_tree: shape mismatch");
  RegressionTree tree;
  const std::size_t nf = d.n;

  // Working orders hold only live (weight > 0) samples; node ranges index into them.
  std::vector<std::vector<int>> work(nf);
  std::size_t live = 0;
  for (std::size_t f = 0; f < nf; ++f) {
    auto& w = work[f];
    w.reserve(d.m);
    for (int id : d.order[f])
      if (weights[static_cast<std::size_t>(id)] > 0.0) w.push_back(id);
    live = w.size();
  }
  if (live == 0) throw model_error("fit_tree: no samples with positive weight");

  std::vector<int> lbuf(live), rbuf(live);
  struct Task {
    int node;
    std::size_t begin, end;
    int depth;
  };
  std::vector<Task> stack;
  tree.nodes.push_back({});
  stack.push_back({0, 0, live, 0});

  while (!stack.empty()) {
    Task t = stack.back();
    stack.pop_back();
    double W = 0.0, S = 0.0;
    for (std::size_t i = t.begin; i < t.end; ++i) {
      int id = work[0][i];
      W += weights[static_cast<std::size_t>(id)];
      S += weights[static_cast<std::size_t>(id)] * y[static_cast<std::size_t>(id)];
    }
    auto& node = tree.nodes[static_cast<std::size_t>(t.node)];
    node.value = S / W;

    bool splittable = W >= static_cast<double>(p.min_split) && (p.max_depth < 0 || t.depth < p.max_depth);
    int best_f = -1;
    double best_gain = S * S / W, best_thr = 0.0;
    const double parent_score = best_gain;
    if (splittable) {
      for (std::size_t f = 0; f < nf; ++f) {
        const auto& ord = work[f];
        const auto& cv = d.col[f];
        double wl = 0.0, sl = 0.0;
        for (std::size_t i = t.begin; i + 1 < t.end; ++i) {
          int id = ord[i];
          wl += weights[static_cast<std::size_t>(id)];
          sl += weights[static_cast<std::size_t>(id)] * y[static_cast<std::size_t>(id)];
          double v = cv[static_cast<std::size_t>(id)];
          double vn = cv[static_cast<std::size_t>(ord[i + 1])];
          if (vn <= v) continue;  // not a value boundary
          if (wl < static_cast<double>(p.min_leaf) || W - wl < static_cast<double>(p.min_leaf)) continue;
          double gain = sl * sl / wl + (S - sl) * (S - sl) / (W - wl);
          if (gain > best_gain) {
            best_gain = gain;
            best_f = static_cast<int>(f);
            best_thr = v + (vn - v) / 2.0;
          }
        }
      }
    }
    if (best_f < 0 || best_gain - parent_score <= 1e-12 * (std::abs(parent_score) + 1.0)) continue;  // leaf

    node.feature = best_f;
    node.threshold = best_thr;
    const auto& cb = d.col[static_cast<std::size_t>(best_f)];
    std::size_t nl = 0;
    for (std::size_t f = 0; f < nf; ++f) {
      auto& ord = work[f];
      std::size_t il = 0, ir = 0;
      for (std::size_t i = t.begin; i < t.end; ++i) {
        int id = ord[i];
        if (cb[static_cast<std::size_t>(id)] <= best_thr)
          lbuf[il++] = id;
        else
          rbuf[ir++] = id;
      }
      std::copy(lbuf.begin(), lbuf.begin() + static_cast<std::ptrdiff_t>(il), ord.begin() + static_cast<std::ptrdiff_t>(t.begin));
      std::copy(rbuf.begin(), rbuf.begin() + static_cast<std::ptrdiff_t>(ir), ord.begin() + static_cast<std::ptrdiff_t>(t.begin + il));
      nl = il;
    }
    int left = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    int right = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[static_cast<std::size_t>(t.node)].left = left;
    tree.nodes[static_cast<std::size_t>(t.node)].right = right;
    stack.push_back({right, t.begin + nl, t.end, t.depth + 1});
    stack.push_back({left, t.begin, t.begin + nl, t.depth + 1});
  }
  return tree;
}

}  // namespace agewise::mlkit
