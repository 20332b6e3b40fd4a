// Diagnostic: why does the stacked model trail its best member on the
// synthetic validation set?  Prints OOF vs full-fit RMSE per member and the
// level-2 combiner weights.  Not registered with ctest.
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "agewise/mlkit/stacked.hpp"

using namespace agewise;

int main() {
  mlkit::Matrix SX(320, 8), VX(100, 8);
  std::vector<double> sy(320), vy(100);
  rng_t srng = make_rng(0x61636337, 3);
  auto gen_row = [&](mlkit::Matrix& M, std::vector<double>& yy, std::size_t i) {
    for (std::size_t j = 0; j < 8; ++j) M.at(i, j) = runif(srng, 0.0, 1.0);
    yy[i] = 3.0 * M.at(i, 0) - 2.0 * M.at(i, 1) + 1.5 * M.at(i, 2) * M.at(i, 3) +
            std::sin(3.0 * M.at(i, 4)) + 0.05 * rnorm(srng);
  };
  for (std::size_t i = 0; i < 320; ++i) gen_row(SX, sy, i);
  for (std::size_t i = 0; i < 100; ++i) gen_row(VX, vy, i);

  mlkit::StackedModel stack = mlkit::fit_stacked(SX, sy, mlkit::StackedParams{}, 99);

  auto rmse_v = [&](const std::vector<double>& pred, const std::vector<double>& truth) {
    double q = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) q += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return std::sqrt(q / static_cast<double>(truth.size()));
  };

  std::printf("%-14s %10s %10s %10s %12s\n", "member", "oof_rmse", "val_rmse", "train_rmse", "l2_coef");
  std::vector<double> xs(8);
  std::size_t c = 0;
  for (int k = 0; k < 6; ++k) {
    if (!stack.member_ok[static_cast<std::size_t>(k)]) {
      std::printf("%-14s FAILED\n", std::string(mlkit::kMemberNames[static_cast<std::size_t>(k)]).c_str());
      continue;
    }
    std::vector<double> pv(100), pt(320);
    for (std::size_t i = 0; i < 100; ++i) {
      stack.sx.transform_row(VX.row(i), xs.data());
      pv[i] = stack.member_predict_std(k, xs.data());
    }
    for (std::size_t i = 0; i < 320; ++i) {
      stack.sx.transform_row(SX.row(i), xs.data());
      pt[i] = stack.member_predict_std(k, xs.data());
    }
    std::printf("%-14s %10.4f %10.4f %10.4f %12.5f\n",
                std::string(mlkit::kMemberNames[static_cast<std::size_t>(k)]).c_str(),
                stack.oof_rmse[static_cast<std::size_t>(k)], rmse_v(pv, vy), rmse_v(pt, sy),
                stack.l2.coef[c]);
    ++c;
  }
  std::printf("combiner intercept %.5f\n", stack.l2.intercept);
  std::printf("sp means:");
  for (double v : stack.sp.mean) std::printf(" %.4f", v);
  std::printf("\nsp stds:");
  for (double v : stack.sp.sigma) std::printf(" %.4f", v);
  std::printf("\nstack val RMSE %.4f\n", rmse_v(stack.predict(VX), vy));
  return 0;
}
