#pragma once

#include "agewise/mlkit/stacked.hpp"

namespace agewise::mlkit {

namespace ser {

inline void put(std::string& out, double v) { out += fmt_double(v); out += "\n"; }
inline void put(std::string& out, std::uint64_t v) { out += std::to_string(v); out += "\n"; }
inline void put(std::string& out, int v) { out += std::to_string(v); out += "\n"; }
inline void put_vec(std::string& out, const std::vector<double>& v) {
  out += std::to_string(v.size());
  for (double x : v) { out += " "; out += fmt_double(x); }
  out += "\n";
}

struct Reader {
  std::vector<std::string_view> toks;
  std::size_t pos = 0;

  explicit Reader(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && (text[i] == ' ' || text[i] == '\n' || text[i] == '\t' || text[i] == '\r')) ++i;
      std::size_t j = i;
      while (j < text.size() && text[j] != ' ' && text[j] != '\n' && text[j] != '\t' && text[j] != '\r') ++j;
      if (j > i) toks.push_back(text.substr(i, j - i));
      i = j;
    }
  }
  std::string_view next() {
    if (pos >= toks.size()) throw model_error("model load: truncated input");
    return toks[pos++];
  }
  void expect(std::string_view kw) {
    auto t = next();
    if (t != kw) throw model_error("model load: expected '" + std::string(kw) + "', got '" + std::string(t) + "'");
  }
  double num() { return parse_double(next()); }
  int integer() { return static_cast<int>(parse_int(next())); }
  std::uint64_t u64() {
    auto t = next();
    std::uint64_t v{};
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size()) throw model_error("model load: bad integer");
    return v;
  }
  std::vector<double> vec() {
    std::size_t n = static_cast<std::size_t>(integer());
    std::vector<double> v(n);
    for (auto& x : v) x = num();
    return v;
  }
};

inline void write_linear(std::string& out, const LinearModel& m) {
  out += "linear\n";
  put_vec(out, m.coef);
  put(out, m.intercept);
  put(out, m.converged ? 1 : 0);
  put(out, m.iterations);
}

inline LinearModel read_linear(Reader& r) {
  r.expect("linear");
  LinearModel m;
  m.coef = r.vec();
  m.intercept = r.num();
  m.converged = r.integer() != 0;
  m.iterations = r.integer();
  return m;
}

inline void write_tree(std::string& out, const RegressionTree& t) {
  out += "tree " + std::to_string(t.nodes.size()) + "\n";
  for (const auto& n : t.nodes)
    out += std::to_string(n.feature) + " " + fmt_double(n.threshold) + " " + std::to_string(n.left) + " " +
           std::to_string(n.right) + " " + fmt_double(n.value) + "\n";
}

inline RegressionTree read_tree(Reader& r) {
  r.expect("tree");
  std::size_t n = static_cast<std::size_t>(r.integer());
  RegressionTree t;
  t.nodes.resize(n);
  for (auto& node : t.nodes) {
    node.feature = r.integer();
    node.threshold = r.num();
    node.left = r.integer();
    node.right = r.integer();
    node.value = r.num();
  }
  return t;
}

inline void write_scaler(std::string& out, const Standardizer& s) {
  out += "scaler\n";
  put_vec(out, s.mean);
  put_vec(out, s.sigma);
}

inline Standardizer read_scaler(Reader& r) {
  r.expect("scaler");
  Standardizer s;
  s.mean = r.vec();
  s.sigma = r.vec();
  return s;
}

}  // namespace ser

inline std::string save_stacked(const StackedModel& m) {
  std::string out = "agewise-stacked v1\n";
  ser::put(out, m.fold_seed);
  ser::write_scaler(out, m.sx);
  for (int k = 0; k < 6; ++k) {
    out += "member " + std::string(kMemberNames[static_cast<std::size_t>(k)]) + " " +
           (m.member_ok[static_cast<std::size_t>(k)] ? "1" : "0") + "\n";
    if (!m.member_ok[static_cast<std::size_t>(k)]) continue;
    switch (k) {
      case 0: ser::write_linear(out, m.ridge); break;
      case 1: ser::write_linear(out, m.lasso); break;
      case 2: ser::write_linear(out, m.enet); break;
      case 3: {
        out += "forest " + std::to_string(m.forest.trees.size()) + "\n";
        for (const auto& t : m.forest.trees) ser::write_tree(out, t);
        break;
      }
      case 4: {
        out += "gbt " + fmt_double(m.gbt.init) + " " + fmt_double(m.gbt.learning_rate) + " " +
               std::to_string(m.gbt.trees.size()) + "\n";
        for (const auto& t : m.gbt.trees) ser::write_tree(out, t);
        break;
      }
      case 5: {
        out += "mlp " + std::to_string(m.mlp.in) + " " + std::to_string(m.mlp.hidden) + " " +
               fmt_double(m.mlp.b2) + " " + fmt_double(m.mlp.y_mean) + " " + fmt_double(m.mlp.y_std) + "\n";
        ser::put_vec(out, m.mlp.W1);
        ser::put_vec(out, m.mlp.b1);
        ser::put_vec(out, m.mlp.w2);
        break;
      }
    }
  }
  out += "oof";
  for (double v : m.oof_rmse) { out += " "; out += fmt_double(v); }
  out += "\n";
  ser::write_scaler(out, m.sp);
  ser::write_linear(out, m.l2);
  return out;
}

inline StackedModel load_stacked(std::string_view text) {
  ser::Reader r(text);
  r.expect("agewise-stacked");
  r.expect("v1");
  StackedModel m;
  m.fold_seed = r.u64();
  m.sx = ser::read_scaler(r);
  for (int k = 0; k < 6; ++k) {
    r.expect("member");
    r.expect(kMemberNames[static_cast<std::size_t>(k)]);
    m.member_ok[static_cast<std::size_t>(k)] = r.integer() != 0;
    if (!m.member_ok[static_cast<std::size_t>(k)]) continue;
    switch (k) {
      case 0: m.ridge = ser::read_linear(r); break;
      case 1: m.lasso = ser::read_linear(r); break;
      case 2: m.enet = ser::read_linear(r); break;
      case 3: {
        r.expect("forest");
        std::size_t n = static_cast<std::size_t>(r.integer());
        m.forest.trees.resize(n);
        for (auto& t : m.forest.trees) t = ser::read_tree(r);
        break;
      }
      case 4: {
        r.expect("gbt");
        m.gbt.init = r.num();
        m.gbt.learning_rate = r.num();
        std::size_t n = static_cast<std::size_t>(r.integer());
        m.gbt.trees.resize(n);
        for (auto& t : m.gbt.trees) t = ser::read_tree(r);
        break;
      }
      case 5: {
        r.expect("mlp");
        m.mlp.in = r.integer();
        m.mlp.hidden = r.integer();
        m.mlp.b2 = r.num();
        m.mlp.y_mean = r.num();
        m.mlp.y_std = r.num();
        m.mlp.W1 = r.vec();
        m.mlp.b1 = r.vec();
        m.mlp.w2 = r.vec();
        break;
      }
    }
  }
  r.expect("oof");
  for (auto& v : m.oof_rmse) v = r.num();
  m.sp = ser::read_scaler(r);
  m.l2 = ser::read_linear(r);
  return m;
}

}  // namespace agewise::mlkit
