#pragma once

#include <array>
#include <string>

#include "agewise/mlkit/forest.hpp"
#include "agewise/mlkit/gmm.hpp"
#include "agewise/mlkit/linear.hpp"
#include "agewise/mlkit/mlp.hpp"

namespace agewise::mlkit {

inline constexpr std::array<std::string_view, 6> kMemberNames = {"ridge", "lasso", "enet",
                                                                 "random_forest", "gbt", "mlp"};

struct StackedParams {
  RidgeParams ridge{};
  LassoParams lasso{};
  EnetParams enet{};
  ForestParams forest{};
  GbtParams gbt{};
  MlpParams mlp{};
  LassoParams combiner{};  // level-2 lasso
  int folds = 5;
};

struct StackedModel {
  Standardizer sx;  // feature scaler
  LinearModel ridge, lasso, enet;
  RandomForest forest;
  GradientBoosting gbt;
  MlpModel mlp;
  std::array<bool, 6> member_ok{};
  std::array<double, 6> oof_rmse{};  // out-of-fold diagnostics per member
  std::vector<std::string> warnings;
  Standardizer sp;  // member-prediction scaler
  LinearModel l2;
  std::uint64_t fold_seed = 0;

  int n_ok() const {
    int c = 0;
    for (bool b : member_ok) c += b;
    return c;
  }

  // x already standardized by sx
  double member_predict_std(int k, const double* xs) const {
    switch (k) {
      case 0: return ridge.predict(xs);
      case 1: return lasso.predict(xs);
      case 2: return enet.predict(xs);
      case 3: return forest.predict(xs);
      case 4: return gbt.predict(xs);
      case 5: return mlp.predict(xs);
    }
    throw model_error("stacked: bad member index");
  }

  double predict(const double* x) const {
    std::vector<double> xs(sx.mean.size());
    sx.transform_row(x, xs.data());
    std::vector<double> p;
    p.reserve(6);
    for (int k = 0; k < 6; ++k)
      if (member_ok[static_cast<std::size_t>(k)]) p.push_back(member_predict_std(k, xs.data()));
    std::vector<double> ps(p.size());
    sp.transform_row(p.data(), ps.data());
    return l2.predict(ps.data());
  }
  std::vector<double> predict(const Matrix& X) const {
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict(X.row(i));
    return out;
  }
};

namespace detail {

template <typename Fit>
bool try_member(StackedModel& model, int k, Fit&& fit) {
  try {
    fit();
    model.member_ok[static_cast<std::size_t>(k)] = true;
    return true;
  } catch (const std::exception& e) {
    model.member_ok[static_cast<std::size_t>(k)] = false;
    model.warnings.push_back(std::string(kMemberNames[static_cast<std::size_t>(k)]) + " failed: " + e.what());
    return false;
  }
}

}  // namespace detail

// Two-level stacked regressor: six level-1 members fit on the full training set,
// a level-2 lasso fit on their out-of-fold predictions (no leakage).
inline StackedModel fit_stacked(const Matrix& X, const std::vector<double>& y, const StackedParams& params,
                                std::uint64_t fold_seed) {
  if (X.rows < 30) throw model_error("fit_stacked: need at least 30 samples");
  if (X.rows != y.size()) throw model_error("fit_stacked: shape mismatch");
  check_finite(X, y);

  StackedModel model;
  model.fold_seed = fold_seed;
  model.sx.fit(X);
  Matrix Xs = model.sx.transform(X);
  const std::size_t m = X.rows;
  const int folds = params.folds;

  std::vector<int> fold_of(m);
  {
    std::vector<int> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = static_cast<int>(i);
    rng_t rng = make_rng(fold_seed, 0x666f6c64ull);
    shuffle_vec(idx, rng);
    for (std::size_t pos = 0; pos < m; ++pos)
      fold_of[static_cast<std::size_t>(idx[pos])] = static_cast<int>(pos * static_cast<std::size_t>(folds) / m);
  }

  auto member_seed = [&](int k, int fold) { return derive_seed(fold_seed, 0x100u + static_cast<unsigned>(k), static_cast<std::uint64_t>(fold)); };

  // fit member k on rows tr, predict rows va into oof
  auto run_member = [&](int k, const std::vector<int>& tr, const std::vector<int>& va, std::uint64_t seed,
                        std::vector<double>& oof, bool full_fit) {
    Matrix Xtr = Xs.take_rows(tr);
    std::vector<double> ytr = take(y, tr);
    Matrix Xva = Xs.take_rows(va);
    auto put = [&](const std::vector<double>& pred) {
      for (std::size_t i = 0; i < va.size(); ++i) oof[static_cast<std::size_t>(va[i])] = pred[i];
    };
    switch (k) {
      case 0: {
        auto mdl = fit_ridge(Xtr, ytr, params.ridge);
        if (full_fit) model.ridge = mdl; else put(mdl.predict(Xva));
        break;
      }
      case 1: {
        auto mdl = fit_lasso(Xtr, ytr, params.lasso);
        if (full_fit) model.lasso = mdl; else put(mdl.predict(Xva));
        break;
      }
      case 2: {
        auto mdl = fit_enet(Xtr, ytr, params.enet);
        if (full_fit) model.enet = mdl; else put(mdl.predict(Xva));
        break;
      }
      case 3: {
        ForestParams fp = params.forest;
        fp.seed = seed;
        auto mdl = fit_random_forest(Xtr, ytr, fp);
        if (full_fit) model.forest = std::move(mdl); else put(mdl.predict(Xva));
        break;
      }
      case 4: {
        auto mdl = fit_gbt(Xtr, ytr, params.gbt);
        if (full_fit) model.gbt = std::move(mdl); else put(mdl.predict(Xva));
        break;
      }
      case 5: {
        MlpParams mp = params.mlp;
        mp.seed = seed;
        auto mdl = fit_mlp(Xtr, ytr, mp);
        if (full_fit) model.mlp = std::move(mdl); else put(mdl.predict(Xva));
        break;
      }
    }
  };

  std::vector<int> all(m);
  for (std::size_t i = 0; i < m; ++i) all[i] = static_cast<int>(i);
  Matrix P(m, 6);
  for (int k = 0; k < 6; ++k) {
    std::vector<double> oof(m, 0.0);
    bool ok = detail::try_member(model, k, [&] {
      for (int f = 0; f < folds; ++f) {
        std::vector<int> tr, va;
        for (std::size_t i = 0; i < m; ++i) (fold_of[i] == f ? va : tr).push_back(static_cast<int>(i));
        if (va.empty()) continue;
        run_member(k, tr, va, member_seed(k, f), oof, false);
      }
      std::vector<double> dummy;
      run_member(k, all, {}, member_seed(k, 0x7fff), dummy, true);
    });
    if (ok) {
      for (std::size_t i = 0; i < m; ++i) P.at(i, static_cast<std::size_t>(k)) = oof[i];
      model.oof_rmse[static_cast<std::size_t>(k)] = rmse(oof, y);
    }
  }

  int kk = model.n_ok();
  if (kk == 0) throw model_error("fit_stacked: every level-1 member failed");
  Matrix Pk(m, static_cast<std::size_t>(kk));
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t c = 0;
    for (int k = 0; k < 6; ++k)
      if (model.member_ok[static_cast<std::size_t>(k)]) Pk.at(i, c++) = P.at(i, static_cast<std::size_t>(k));
  }
  model.sp.fit(Pk);
  model.l2 = fit_lasso(model.sp.transform(Pk), y, params.combiner);
  return model;
}

}  // namespace agewise::mlkit
