#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "agewise/mlkit/gmm.hpp"
#include "agewise/mlkit/serialize.hpp"
#include "agewise/mlkit/stacked.hpp"

using namespace agewise;
using namespace agewise::mlkit;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {
// Independent ordinary-least-squares oracle: solves the centered normal
// equations by Gaussian elimination with partial pivoting.
LinearModel ols_oracle(const Matrix& X, const std::vector<double>& y) {
  const std::size_t m = X.rows, n = X.cols;
  std::vector<double> xm(n, 0.0);
  double ym = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    ym += y[i];
    for (std::size_t j = 0; j < n; ++j) xm[j] += X.at(i, j);
  }
  ym /= static_cast<double>(m);
  for (auto& v : xm) v /= static_cast<double>(m);
  std::vector<double> A(n * n, 0.0), b(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double xc = X.at(i, j) - xm[j];
      b[j] += xc * (y[i] - ym);
      for (std::size_t k = 0; k < n; ++k) A[j * n + k] += xc * (X.at(i, k) - xm[k]);
    }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(A[r * n + col]) > std::fabs(A[piv * n + col])) piv = r;
    for (std::size_t k = 0; k < n; ++k) std::swap(A[col * n + k], A[piv * n + k]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = A[r * n + col] / A[col * n + col];
      for (std::size_t k = col; k < n; ++k) A[r * n + k] -= f * A[col * n + k];
      b[r] -= f * b[col];
    }
  }
  LinearModel out;
  out.coef.assign(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= A[ii * n + k] * out.coef[k];
    out.coef[ii] = s / A[ii * n + ii];
  }
  double dot = 0.0;
  for (std::size_t j = 0; j < n; ++j) dot += out.coef[j] * xm[j];
  out.intercept = ym - dot;
  return out;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix X(rows, cols);
  rng_t rng = make_rng(seed, 0xda7a);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) X.at(i, j) = runif(rng, -2.0, 2.0);
  return X;
}
}  // namespace

TEST_CASE("ridge with a vanishing penalty recovers least squares") {
  Matrix X = random_matrix(60, 3, 1);
  std::vector<double> y(60);
  rng_t rng = make_rng(2, 0xda7a);
  for (std::size_t i = 0; i < 60; ++i)
    y[i] = 1.5 * X.at(i, 0) - 2.0 * X.at(i, 1) + 0.25 * X.at(i, 2) + 0.7 + rnorm_trunc(rng, 0.0, 0.1);

  LinearModel want = ols_oracle(X, y);
  RidgeParams rp;
  rp.alpha = 1e-10;
  LinearModel got = fit_ridge(X, y, rp);
  for (std::size_t j = 0; j < 3; ++j) REQUIRE_THAT(got.coef[j], WithinAbs(want.coef[j], 1e-8));
  REQUIRE_THAT(got.intercept, WithinAbs(want.intercept, 1e-8));

  SECTION("a real penalty shrinks coefficients toward zero") {
    RidgeParams strong;
    strong.alpha = 1000.0;
    LinearModel shrunk = fit_ridge(X, y, strong);
    for (std::size_t j = 0; j < 3; ++j) REQUIRE(std::fabs(shrunk.coef[j]) < std::fabs(want.coef[j]));
  }
}

TEST_CASE("lasso on an orthogonal design matches the soft-threshold closed form") {
  // Two centered orthogonal columns with squared norm equal to the row count.
  const std::size_t m = 8;
  Matrix X(m, 2);
  const double c0[m] = {1, 1, 1, 1, -1, -1, -1, -1};
  const double c1[m] = {1, -1, 1, -1, 1, -1, 1, -1};
  std::vector<double> y(m);
  for (std::size_t i = 0; i < m; ++i) {
    X.at(i, 0) = c0[i];
    X.at(i, 1) = c1[i];
    y[i] = 3.0 * c0[i] + 0.5 * c1[i] + 2.0;
  }
  auto soft = [](double v, double t) { return v > t ? v - t : (v < -t ? v + t : 0.0); };

  for (double alpha : {0.2, 0.6, 1.0}) {
    LassoParams lp;
    lp.alpha = alpha;
    LinearModel got = fit_lasso(X, y, lp);
    REQUIRE_THAT(got.coef[0], WithinAbs(soft(3.0, alpha), 1e-9));
    REQUIRE_THAT(got.coef[1], WithinAbs(soft(0.5, alpha), 1e-9));
    REQUIRE_THAT(got.intercept, WithinAbs(2.0, 1e-9));
  }

  SECTION("the penalized objective never increases with more sweeps") {
    Matrix Xr = random_matrix(40, 4, 9);
    std::vector<double> yr(40);
    for (std::size_t i = 0; i < 40; ++i) yr[i] = Xr.at(i, 0) - 0.5 * Xr.at(i, 3) + 0.1 * Xr.at(i, 1) * Xr.at(i, 2);
    double prev = 0.0;
    for (int iters = 1; iters <= 10; ++iters) {
      LassoParams lp;
      lp.alpha = 0.05;
      lp.max_iter = iters;
      lp.tol = 0.0;  // force exactly `iters` sweeps
      LinearModel mdl = fit_lasso(Xr, yr, lp);
      double obj = lasso_objective(Xr, yr, mdl, 0.05);
      if (iters > 1) REQUIRE(obj <= prev + 1e-12);
      prev = obj;
    }
  }
}

TEST_CASE("constant targets give zero slopes across all linear fitters") {
  Matrix X = random_matrix(25, 3, 4);
  std::vector<double> y(25, 7.25);
  for (auto fit : {+[](const Matrix& X_, const std::vector<double>& y_) { return fit_ridge(X_, y_, {}); },
                   +[](const Matrix& X_, const std::vector<double>& y_) { return fit_lasso(X_, y_, {}); },
                   +[](const Matrix& X_, const std::vector<double>& y_) { return fit_enet(X_, y_, {}); }}) {
    LinearModel mdl = fit(X, y);
    for (double c : mdl.coef) REQUIRE_THAT(c, WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(mdl.intercept, WithinAbs(7.25, 1e-12));
  }
}

TEST_CASE("regression trees memorize what they are allowed to") {
  SECTION("one sample yields a constant stump") {
    Matrix X(1, 2);
    X.at(0, 0) = 1.0;
    X.at(0, 1) = -1.0;
    RegressionTree t = fit_tree(TreeData::build(X), {5.5}, TreeParams{}, {1.0});
    double probe[2] = {100.0, 3.0};
    REQUIRE(t.predict(probe) == 5.5);
  }
  SECTION("a step function is learned exactly") {
    Matrix X(40, 1);
    std::vector<double> y(40);
    for (std::size_t i = 0; i < 40; ++i) {
      X.at(i, 0) = static_cast<double>(i) / 40.0;
      y[i] = X.at(i, 0) > 0.5 ? 2.0 : -1.0;
    }
    RegressionTree t = fit_tree(TreeData::build(X), y, TreeParams{}, std::vector<double>(40, 1.0));
    for (std::size_t i = 0; i < 40; ++i) REQUIRE_THAT(t.predict(X.row(i)), WithinAbs(y[i], 1e-12));
  }
  SECTION("single boosting round at unit rate equals one tree") {
    Matrix X = random_matrix(50, 2, 12);
    std::vector<double> y(50);
    for (std::size_t i = 0; i < 50; ++i) y[i] = X.at(i, 0) * X.at(i, 1) + 2.0 * X.at(i, 0);
    GbtParams gp;
    gp.n_estimators = 1;
    gp.learning_rate = 1.0;
    gp.max_depth = 3;
    GradientBoosting boosted = fit_gbt(X, y, gp);
    TreeParams tp;
    tp.max_depth = 3;
    RegressionTree single = fit_tree(TreeData::build(X), y, tp, std::vector<double>(50, 1.0));
    for (std::size_t i = 0; i < 50; ++i) REQUIRE_THAT(boosted.predict(X.row(i)), WithinAbs(single.predict(X.row(i)), 1e-9));
  }
  SECTION("more boosting rounds fit the training data better") {
    Matrix X = random_matrix(80, 2, 13);
    std::vector<double> y(80);
    for (std::size_t i = 0; i < 80; ++i) y[i] = std::sin(2.0 * X.at(i, 0)) + 0.3 * X.at(i, 1);
    GbtParams few;
    few.n_estimators = 5;
    few.learning_rate = 0.1;
    GbtParams many = few;
    many.n_estimators = 200;
    double r_few = rmse(y, fit_gbt(X, y, few).predict(X));
    double r_many = rmse(y, fit_gbt(X, y, many).predict(X));
    REQUIRE(r_many < r_few);
  }
  SECTION("bagging averages to roughly the same surface, deterministically") {
    Matrix X = random_matrix(60, 2, 14);
    std::vector<double> y(60);
    for (std::size_t i = 0; i < 60; ++i) y[i] = X.at(i, 0) + X.at(i, 1);
    ForestParams fp;
    fp.n_estimators = 64;
    fp.seed = 3;
    RandomForest a = fit_random_forest(X, y, fp);
    RandomForest b = fit_random_forest(X, y, fp);
    for (std::size_t i = 0; i < 60; ++i) REQUIRE(a.predict(X.row(i)) == b.predict(X.row(i)));
    REQUIRE(rmse(y, a.predict(X)) < 0.5);
  }
}

TEST_CASE("network gradients match finite differences") {
  MlpParams p;
  p.hidden = 4;
  p.seed = 5;
  MlpModel m = init_mlp(3, p);
  Matrix X = random_matrix(12, 3, 6);
  std::vector<double> y(12);
  for (std::size_t i = 0; i < 12; ++i) y[i] = X.at(i, 0) - 0.3 * X.at(i, 2);

  MlpGrads g;
  mlp_loss_grad(m, X, y, &g);
  const double h = 1e-6;
  auto check = [&](double* w, double analytic) {
    double keep = *w;
    *w = keep + h;
    double up = mlp_loss_grad(m, X, y, nullptr);
    *w = keep - h;
    double dn = mlp_loss_grad(m, X, y, nullptr);
    *w = keep;
    double numeric = (up - dn) / (2.0 * h);
    REQUIRE_THAT(analytic, WithinAbs(numeric, 1e-4 * std::max(1.0, std::fabs(numeric))));
  };
  for (std::size_t i = 0; i < m.W1.size(); ++i) check(&m.W1[i], g.W1[i]);
  for (std::size_t j = 0; j < m.b1.size(); ++j) check(&m.b1[j], g.b1[j]);
  for (std::size_t j = 0; j < m.w2.size(); ++j) check(&m.w2[j], g.w2[j]);
  check(&m.b2, g.b2);
}

TEST_CASE("network training behaviours") {
  SECTION("a linear map is learned well") {
    rng_t rng = make_rng(7, 0xda7a);
    Matrix X(200, 1);
    std::vector<double> y(200);
    for (std::size_t i = 0; i < 200; ++i) {
      X.at(i, 0) = runif(rng, 0.0, 1.0);
      y[i] = 3.0 * X.at(i, 0) + 1.0;
    }
    MlpParams p;
    p.seed = 1;
    p.max_epochs = 800;
    MlpModel m = fit_mlp(X, y, p);
    double sse = 0.0;
    for (int i = 0; i < 50; ++i) {
      double x = static_cast<double>(i) / 49.0;
      double e = m.predict(&x) - (3.0 * x + 1.0);
      sse += e * e;
    }
    REQUIRE(sse / 50.0 < 1e-2);
  }
  SECTION("constant targets short-circuit to an exact constant") {
    Matrix X = random_matrix(40, 2, 9);
    std::vector<double> y(40, -3.25);
    MlpModel m = fit_mlp(X, y, MlpParams{});
    double probe[2] = {9.0, -9.0};
    REQUIRE(m.predict(probe) == -3.25);
  }
  SECTION("zero training epochs return the deterministic initialization") {
    Matrix X = random_matrix(40, 2, 10);
    std::vector<double> y(40);
    for (std::size_t i = 0; i < 40; ++i) y[i] = X.at(i, 0);
    MlpParams p;
    p.max_epochs = 0;
    p.seed = 77;
    MlpModel a = fit_mlp(X, y, p);
    MlpModel b = fit_mlp(X, y, p);
    REQUIRE(a.W1 == b.W1);
    REQUIRE(a.b1 == b.b1);
    REQUIRE(a.w2 == b.w2);
    REQUIRE(a.b2 == b.b2);
  }
}

TEST_CASE("stacked committee") {
  SECTION("a constant target passes through every level exactly") {
    Matrix X = random_matrix(40, 3, 20);
    std::vector<double> y(40, 11.5);
    StackedParams sp;
    sp.forest.n_estimators = 16;
    sp.gbt.n_estimators = 8;
    StackedModel m = fit_stacked(X, y, sp, 99);
    REQUIRE(m.n_ok() == 6);
    double probe[3] = {0.3, -1.0, 2.0};
    REQUIRE_THAT(m.predict(probe), WithinAbs(11.5, 1e-9));
  }
  SECTION("the blend is never much worse than its best member") {
    const std::size_t n_tr = 150, n_te = 80;
    Matrix X = random_matrix(n_tr, 3, 21);
    Matrix Xt = random_matrix(n_te, 3, 22);
    auto f = [](const double* r) { return 2.0 * r[0] - r[1] + 0.8 * std::sin(2.5 * r[2]); };
    std::vector<double> y(n_tr), yt(n_te);
    rng_t noise = make_rng(23, 0xda7a);
    for (std::size_t i = 0; i < n_tr; ++i) y[i] = f(X.row(i)) + rnorm_trunc(noise, 0.0, 0.05);
    for (std::size_t i = 0; i < n_te; ++i) yt[i] = f(Xt.row(i));

    StackedParams sp;
    sp.forest.n_estimators = 128;
    sp.gbt.n_estimators = 256;
    StackedModel m = fit_stacked(X, y, sp, 7);
    REQUIRE(m.n_ok() == 6);

    double best = 1e300;
    for (int k = 0; k < 6; ++k) {
      double sse = 0.0;
      for (std::size_t i = 0; i < n_te; ++i) {
        std::vector<double> xs(3);
        m.sx.transform_row(Xt.row(i), xs.data());
        double e = m.member_predict_std(k, xs.data()) - yt[i];
        sse += e * e;
      }
      best = std::min(best, std::sqrt(sse / static_cast<double>(n_te)));
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < n_te; ++i) {
      double e = m.predict(Xt.row(i)) - yt[i];
      sse += e * e;
    }
    double ens = std::sqrt(sse / static_cast<double>(n_te));
    REQUIRE(ens <= 1.1 * best);

    SECTION("refitting with the same fold seed reproduces the model") {
      StackedModel again = fit_stacked(X, y, sp, 7);
      for (std::size_t i = 0; i < n_te; ++i) REQUIRE(again.predict(Xt.row(i)) == m.predict(Xt.row(i)));
    }
    SECTION("serialized form is lossless") {
      std::string blob = save_stacked(m);
      StackedModel back = load_stacked(blob);
      REQUIRE(save_stacked(back) == blob);
      for (std::size_t i = 0; i < n_te; ++i) REQUIRE(back.predict(Xt.row(i)) == m.predict(Xt.row(i)));
    }
  }
  SECTION("feature rescaling by powers of two does not change predictions") {
    const std::size_t n = 60;
    Matrix A = random_matrix(n, 2, 30);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = A.at(i, 0) - 0.4 * A.at(i, 1) + 0.2 * A.at(i, 0) * A.at(i, 1);
    Matrix B = A;
    for (std::size_t i = 0; i < n; ++i) B.at(i, 1) *= 4.0;  // exact in binary floating point

    StackedParams sp;
    sp.forest.n_estimators = 32;
    sp.gbt.n_estimators = 32;
    StackedModel ma = fit_stacked(A, y, sp, 5);
    StackedModel mb = fit_stacked(B, y, sp, 5);
    for (std::size_t i = 0; i < n; ++i) {
      double rb[2] = {A.at(i, 0), A.at(i, 1) * 4.0};
      REQUIRE(mb.predict(rb) == ma.predict(A.row(i)));
    }
  }
  SECTION("too little data is rejected") {
    Matrix X = random_matrix(10, 2, 31);
    REQUIRE_THROWS_WITH(fit_stacked(X, std::vector<double>(10, 1.0), StackedParams{}, 1),
                        ContainsSubstring("need at least 30 samples"));
  }
}

TEST_CASE("model files reject corruption") {
  REQUIRE_THROWS_WITH(load_stacked("agewise-stacked v1"), ContainsSubstring("truncated input"));
  REQUIRE_THROWS_WITH(load_stacked("some other format"), ContainsSubstring("expected"));
}

TEST_CASE("two-component mixture fitting") {
  SECTION("well-separated populations are recovered") {
    std::vector<double> v;
    rng_t rng = make_rng(40, 0xda7a);
    for (int i = 0; i < 500; ++i) v.push_back(rnorm_trunc(rng, 0.0, 1.0));
    for (int i = 0; i < 500; ++i) v.push_back(rnorm_trunc(rng, 30.0, 2.0));
    BimodalFit fit = fit_gmm2(v);
    REQUIRE_FALSE(fit.single_mode);
    REQUIRE(fit.mu_lap < fit.mu_map);
    REQUIRE_THAT(fit.mu_lap, WithinAbs(0.0, 0.5));
    REQUIRE_THAT(fit.mu_map, WithinAbs(30.0, 0.5));
    REQUIRE_THAT(fit.sigma_lap, WithinAbs(1.0, 0.2));
    REQUIRE_THAT(fit.sigma_map, WithinAbs(2.0, 0.35));
    REQUIRE_THAT(fit.w_lap, WithinAbs(0.5, 0.05));
    REQUIRE_THAT(fit.w_map, WithinAbs(0.5, 0.05));

    SECTION("shifting every value shifts the component means") {
      std::vector<double> shifted = v;
      for (auto& x : shifted) x += 100.0;
      BimodalFit f2 = fit_gmm2(shifted);
      REQUIRE_THAT(f2.mu_lap, WithinAbs(fit.mu_lap + 100.0, 1e-6));
      REQUIRE_THAT(f2.mu_map, WithinAbs(fit.mu_map + 100.0, 1e-6));
      REQUIRE_THAT(f2.sigma_lap, WithinAbs(fit.sigma_lap, 1e-6));
      REQUIRE_THAT(f2.sigma_map, WithinAbs(fit.sigma_map, 1e-6));
    }
  }
  SECTION("identical values collapse to a single mode") {
    std::vector<double> v(50, 3.0);
    BimodalFit fit = fit_gmm2(v);
    REQUIRE(fit.single_mode);
  }
  SECTION("the EM likelihood never decreases") {
    std::vector<double> v;
    rng_t rng = make_rng(41, 0xda7a);
    for (int i = 0; i < 100; ++i) v.push_back(rnorm_trunc(rng, 0.0, 1.0));
    for (int i = 0; i < 100; ++i) v.push_back(rnorm_trunc(rng, 5.0, 1.5));
    auto trace = gmm2_ll_trace(v, -1.0, 6.0, 60);
    REQUIRE(trace.size() >= 2);
    for (std::size_t i = 1; i < trace.size(); ++i) REQUIRE(trace[i] >= trace[i - 1] - 1e-10);
  }
  SECTION("tiny samples are rejected") {
    REQUIRE_THROWS_WITH(fit_gmm2(std::vector<double>(19, 1.0)), ContainsSubstring("need at least 20 values"));
  }
}
