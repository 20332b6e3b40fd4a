#pragma once

#include <limits>
#include <queue>
#include <unordered_map>

#include "agewise/timing_graph.hpp"

namespace agewise {

struct TimingPath {
  int id = -1;
  std::string endpoint;  // capture FF
  std::string launch;    // launch FF
  std::vector<int> lp_arcs;  // clock root -> launch clk pin
  int clkq_arc = -1;
  std::vector<int> dp_arcs;  // launch Q -> capture D
  std::vector<int> cp_arcs;  // clock root -> capture clk pin
  double setup_ps = 0.0;
  double lp_ps = 0.0, clkq_ps = 0.0, dp_ps = 0.0, cp_ps = 0.0;
  double delay_sta_ps = 0.0;
  double slack_ps = 0.0;
};

inline std::vector<int> topo_nodes(const TimingGraph& g) {
  std::vector<int> indeg(g.num_nodes, 0);
  for (const auto& a : g.arcs) ++indeg[a.to];
  std::vector<int> order;
  order.reserve(g.num_nodes);
  for (int v = 0; v < g.num_nodes; ++v)
    if (indeg[v] == 0) order.push_back(v);
  for (std::size_t head = 0; head < order.size(); ++head) {
    int v = order[head];
    for (int a : g.out_arcs[v])
      if (--indeg[g.arcs[a].to] == 0) order.push_back(g.arcs[a].to);
  }
  if (static_cast<int>(order.size()) != g.num_nodes) throw model_error("timing graph contains a cycle");
  return order;
}

// Fixed evaluation order so recomputation is bit-exact: LP, clk->q, DP, +setup, -CP.
inline double path_delay(const TimingGraph& g, const TimingPath& p,
                         const std::unordered_map<int, double>& overrides = {}) {
  for (const auto& [a, d] : overrides) {
    if (a < 0 || a >= static_cast<int>(g.arcs.size())) throw model_error("path_delay: override references unknown arc");
    (void)d;
  }
  auto dly = [&](int a) {
    auto it = overrides.find(a);
    return it == overrides.end() ? g.arcs[a].delay_ps : it->second;
  };
  double acc = 0.0;
  for (int a : p.lp_arcs) acc += dly(a);
  acc += dly(p.clkq_arc);
  for (int a : p.dp_arcs) acc += dly(a);
  acc += p.setup_ps;
  double cp = 0.0;
  for (int a : p.cp_arcs) cp += dly(a);
  double total = acc - cp;
  if (total < 0.0) throw model_error("path_delay: negative path delay from overrides");
  return total;
}

inline std::vector<TimingPath> k_longest_paths(const TimingGraph& g, const std::string& endpoint, int k) {
  if (k < 1) throw model_error("k_longest_paths: k must be >= 1");
  auto fit = g.ff_idx.find(endpoint);
  if (fit == g.ff_idx.end()) throw model_error("k_longest_paths: unknown endpoint '" + endpoint + "'");
  const auto& ft = g.ffs[fit->second];
  const int sink = ft.d_pin;

  constexpr double ninf = -std::numeric_limits<double>::infinity();
  auto order = topo_nodes(g);
  std::vector<double> L(g.num_nodes, ninf);  // longest completion to sink
  L[sink] = 0.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int v = *it;
    for (int a : g.out_arcs[v]) {
      int w = g.arcs[a].to;
      if (L[w] != ninf) L[v] = std::max(L[v], g.arcs[a].delay_ps + L[w]);
    }
  }

  struct Cand {
    double bound;
    double dsofar;
    int node;
    std::vector<int> arcs;
  };
  // Pop order: largest bound first; on ties the lexicographically smallest arc sequence.
  auto later = [](const Cand& a, const Cand& b) {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.arcs > b.arcs;
  };
  std::priority_queue<Cand, std::vector<Cand>, decltype(later)> heap(later);
  if (L[g.clock_root] != ninf) heap.push({L[g.clock_root], 0.0, g.clock_root, {}});

  std::vector<TimingPath> out;
  while (!heap.empty() && static_cast<int>(out.size()) < k) {
    Cand c = heap.top();
    heap.pop();
    if (c.node == sink) {
      TimingPath p;
      p.endpoint = endpoint;
      p.cp_arcs = ft.cp_arcs;
      p.setup_ps = g.lib.setup_ps;
      std::size_t qpos = 0;
      while (qpos < c.arcs.size() && g.arcs[c.arcs[qpos]].kind != ArcKind::ClkToQ) ++qpos;
      if (qpos == c.arcs.size()) throw model_error("k_longest_paths: path without clk->q arc");
      p.lp_arcs.assign(c.arcs.begin(), c.arcs.begin() + qpos);
      p.clkq_arc = c.arcs[qpos];
      p.dp_arcs.assign(c.arcs.begin() + qpos + 1, c.arcs.end());
      p.launch = g.instances[g.arcs[p.clkq_arc].inst].id;
      for (int a : p.lp_arcs) p.lp_ps += g.arcs[a].delay_ps;
      p.clkq_ps = g.arcs[p.clkq_arc].delay_ps;
      for (int a : p.dp_arcs) p.dp_ps += g.arcs[a].delay_ps;
      p.cp_ps = ft.cp_delay_ps;
      p.delay_sta_ps = path_delay(g, p);
      p.slack_ps = g.period_ps - p.delay_sta_ps;
      out.push_back(std::move(p));
      continue;
    }
    for (int a : g.out_arcs[c.node]) {
      int w = g.arcs[a].to;
      if (L[w] == ninf) continue;
      Cand nc;
      nc.dsofar = c.dsofar + g.arcs[a].delay_ps;
      nc.bound = nc.dsofar + L[w];
      nc.node = w;
      nc.arcs = c.arcs;
      nc.arcs.push_back(a);
      heap.push(std::move(nc));
    }
  }
  return out;
}

// All endpoints, k paths each, global ids in endpoint order. Parallelizable per
// endpoint; output is identical regardless of thread count.
inline std::vector<TimingPath> enumerate_paths(const TimingGraph& g, int k, unsigned threads = 1) {
  std::vector<std::vector<TimingPath>> per_ff(g.ffs.size());
  std::vector<std::string> names(g.ffs.size());
  for (std::size_t i = 0; i < g.ffs.size(); ++i) names[i] = g.instances[g.ffs[i].inst].id;
  parallel_for(g.ffs.size(), threads, [&](std::size_t i) { per_ff[i] = k_longest_paths(g, names[i], k); });
  std::vector<TimingPath> out;
  for (auto& v : per_ff)
    for (auto& p : v) {
      p.id = static_cast<int>(out.size());
      out.push_back(std::move(p));
    }
  return out;
}

inline double critical_path_delay(const TimingGraph& g) {
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> D(g.num_nodes, ninf);
  D[g.clock_root] = 0.0;
  for (int v : topo_nodes(g)) {
    if (D[v] == ninf) continue;
    for (int a : g.out_arcs[v]) D[g.arcs[a].to] = std::max(D[g.arcs[a].to], D[v] + g.arcs[a].delay_ps);
  }
  double best = ninf;
  for (const auto& ft : g.ffs)
    if (D[ft.d_pin] != ninf) best = std::max(best, D[ft.d_pin] + g.lib.setup_ps - ft.cp_delay_ps);
  if (best == ninf) throw model_error("critical_path_delay: no register-to-register paths");
  return best;
}

// Per-path delay change when each instance's cell arcs get replaced by the
// given increments (wires contribute nothing). Capture-side increments subtract,
// so a CP-heavy aging pattern can shrink a path's delay.
inline std::vector<double> retime_increments(const TimingGraph& g, const std::vector<TimingPath>& paths,
                                             const std::map<std::string, double>& increments) {
  std::vector<double> delta(g.instances.size(), 0.0);
  for (const auto& [id, v] : increments) {
    if (v < 0.0) throw model_error("retime_increments: negative increment for '" + id + "'");
    delta[static_cast<std::size_t>(g.instance_of(id))] = v;
  }
  std::vector<double> out;
  out.reserve(paths.size());
  for (const auto& p : paths) {
    double d = 0.0;
    for (int a : p.lp_arcs) d += delta[g.arcs[a].inst];
    d += delta[g.arcs[p.clkq_arc].inst];
    for (int a : p.dp_arcs)
      if (g.arcs[a].kind == ArcKind::Cell) d += delta[g.arcs[a].inst];
    for (int a : p.cp_arcs) d -= delta[g.arcs[a].inst];
    out.push_back(d);
  }
  return out;
}

inline std::string emit_paths(const std::vector<TimingPath>& paths) {
  std::string out;
  auto arc_list = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(v[i]);
    }
    return s;
  };
  for (const auto& p : paths) {
    std::vector<int> dp_file;
    dp_file.push_back(p.clkq_arc);
    dp_file.insert(dp_file.end(), p.dp_arcs.begin(), p.dp_arcs.end());
    out += "path " + std::to_string(p.id) + " ep=" + p.endpoint + " d=" + fmt_double(p.delay_sta_ps) +
           " s=" + fmt_double(p.slack_ps) + " lp=" + arc_list(p.lp_arcs) + " dp=" + arc_list(dp_file) +
           " cp=" + arc_list(p.cp_arcs) + "\n";
  }
  return out;
}

inline std::vector<TimingPath> parse_paths(std::string_view text, const TimingGraph& g) {
  std::vector<TimingPath> out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nlpos = text.find('\n', pos);
    std::string_view line = text.substr(pos, (nlpos == std::string_view::npos ? text.size() : nlpos) - pos);
    ++lineno;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    auto toks = split_ws(line);
    if (!toks.empty()) {
      if (toks[0] != "path" || toks.size() != 8) throw parse_error("expected: path <id> ep= d= s= lp= dp= cp=", lineno, 1);
      auto val = [&](std::string_view tok, std::string_view key) {
        auto [k, v] = split_kv(tok);
        if (k != key) throw parse_error("expected '" + std::string(key) + "='", lineno, detail::col_of(line, tok));
        return v;
      };
      auto arc_vec = [&](std::string_view v, std::string_view tok) {
        std::vector<int> ids;
        if (v.empty()) return ids;
        for (auto piece : split_char(v, ',')) {
          int a = static_cast<int>(parse_int(piece, lineno, detail::col_of(line, tok)));
          if (a < 0 || a >= static_cast<int>(g.arcs.size()))
            throw parse_error("arc id out of range: " + std::string(piece), lineno, detail::col_of(line, tok));
          ids.push_back(a);
        }
        return ids;
      };
      TimingPath p;
      p.id = static_cast<int>(parse_int(toks[1], lineno, detail::col_of(line, toks[1])));
      p.endpoint = std::string(val(toks[2], "ep"));
      if (g.ff_idx.find(p.endpoint) == g.ff_idx.end())
        throw parse_error("unknown endpoint '" + p.endpoint + "'", lineno, detail::col_of(line, toks[2]));
      double d = parse_double(val(toks[3], "d"), lineno, detail::col_of(line, toks[3]));
      double s = parse_double(val(toks[4], "s"), lineno, detail::col_of(line, toks[4]));
      p.lp_arcs = arc_vec(val(toks[5], "lp"), toks[5]);
      auto dp_file = arc_vec(val(toks[6], "dp"), toks[6]);
      p.cp_arcs = arc_vec(val(toks[7], "cp"), toks[7]);
      if (dp_file.empty() || g.arcs[dp_file[0]].kind != ArcKind::ClkToQ)
        throw parse_error("dp list must start with the clk->q arc", lineno, detail::col_of(line, toks[6]));
      p.clkq_arc = dp_file[0];
      p.dp_arcs.assign(dp_file.begin() + 1, dp_file.end());
      p.launch = g.instances[g.arcs[p.clkq_arc].inst].id;
      p.setup_ps = g.lib.setup_ps;
      for (int a : p.lp_arcs) p.lp_ps += g.arcs[a].delay_ps;
      p.clkq_ps = g.arcs[p.clkq_arc].delay_ps;
      for (int a : p.dp_arcs) p.dp_ps += g.arcs[a].delay_ps;
      for (int a : p.cp_arcs) p.cp_ps += g.arcs[a].delay_ps;
      p.delay_sta_ps = path_delay(g, p);
      p.slack_ps = g.period_ps - p.delay_sta_ps;
      if (p.delay_sta_ps != d)
        throw parse_error("stored delay disagrees with graph recomputation", lineno, detail::col_of(line, toks[3]));
      if (p.slack_ps != s)
        throw parse_error("stored slack disagrees with graph recomputation", lineno, detail::col_of(line, toks[4]));
      out.push_back(std::move(p));
    }
    if (nlpos == std::string_view::npos) break;
    pos = nlpos + 1;
  }
  return out;
}

}  // namespace agewise
