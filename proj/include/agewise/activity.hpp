#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "agewise/netlist.hpp"

namespace agewise {

struct NetActivity {
  double dc = 0.0;        // fraction of cycles at logic '0'
  std::uint64_t tc = 0;   // transitions over the window
  bool operator==(const NetActivity&) const = default;
};

struct ActivityProfile {
  std::uint64_t cycles = 0;
  std::map<std::string, NetActivity> nets;
  bool operator==(const ActivityProfile&) const = default;

  const NetActivity& at(const std::string& net) const {
    auto it = nets.find(net);
    if (it == nets.end()) throw model_error("activity: no record for net '" + net + "'");
    return it->second;
  }
};

// Zero-delay cycle simulation. Primary inputs and FF outputs are resampled
// uniformly at random each cycle; gates evaluate combinationally in topo order.
inline ActivityProfile simulate_activity(const Netlist& nl, std::uint64_t cycles, std::uint64_t seed) {
  if (cycles < 1) throw model_error("simulate_activity: cycles must be >= 1");
  validate_netlist(nl);

  std::vector<std::string> net_names;
  std::unordered_map<std::string, int> net_idx;
  auto intern = [&](const std::string& n) {
    auto it = net_idx.find(n);
    if (it != net_idx.end()) return it->second;
    net_names.push_back(n);
    int id = static_cast<int>(net_names.size()) - 1;
    net_idx.emplace(n, id);
    return id;
  };
  std::vector<int> free_nets;  // PIs + FF Q nets: randomized every cycle
  for (const auto& pi : nl.inputs) free_nets.push_back(intern(pi));
  for (const auto& f : nl.ffs) free_nets.push_back(intern(f.q));
  struct GateRef { GateType type; int a, b, out; };
  std::vector<GateRef> order;
  for (int gi : topo_order_gates(nl)) {
    const auto& g = nl.gates[gi];
    GateRef r;
    r.type = g.type;
    r.a = intern(g.inputs[0]);
    r.b = g.inputs.size() > 1 ? intern(g.inputs[1]) : r.a;
    r.out = intern(g.output);
    order.push_back(r);
  }
  for (const auto& f : nl.ffs) intern(f.d);  // ensure D nets are interned even if gate-less

  const int n = static_cast<int>(net_names.size());
  std::vector<std::uint8_t> val(n, 0), prev(n, 0);
  std::vector<std::uint64_t> zeros(n, 0), trans(n, 0);

  rng_t rng = make_rng(seed, 0x61637469766974ull);
  std::uint64_t bits = 0;
  int bits_left = 0;
  auto coin = [&]() -> std::uint8_t {
    if (bits_left == 0) { bits = rng(); bits_left = 64; }
    std::uint8_t b = bits & 1;
    bits >>= 1;
    --bits_left;
    return b;
  };

  for (std::uint64_t c = 0; c < cycles; ++c) {
    for (int idx : free_nets) val[idx] = coin();
    for (const auto& g : order) val[g.out] = static_cast<std::uint8_t>(eval_gate(g.type, val[g.a], val[g.b]));
    for (int i = 0; i < n; ++i) {
      zeros[i] += (val[i] == 0);
      if (c > 0 && val[i] != prev[i]) ++trans[i];
    }
    prev = val;
  }

  ActivityProfile out;
  out.cycles = cycles;
  for (int i = 0; i < n; ++i)
    out.nets[net_names[i]] = NetActivity{static_cast<double>(zeros[i]) / static_cast<double>(cycles), trans[i]};
  return out;
}

inline std::pair<std::uint64_t, std::uint64_t> tc_bounds(const ActivityProfile& ap) {
  if (ap.nets.empty()) throw model_error("tc_bounds: empty activity profile");
  std::uint64_t lo = UINT64_MAX, hi = 0;
  for (const auto& [name, a] : ap.nets) {
    lo = std::min(lo, a.tc);
    hi = std::max(hi, a.tc);
  }
  return {lo, hi};
}

inline std::string emit_activity(const ActivityProfile& ap) {
  std::string out = "cycles " + std::to_string(ap.cycles) + "\n";
  for (const auto& [name, a] : ap.nets)
    out += "net " + name + " dc=" + fmt_double(a.dc) + " tc=" + std::to_string(a.tc) + "\n";
  return out;
}

inline ActivityProfile parse_activity(std::string_view text) {
  ActivityProfile ap;
  bool saw_cycles = false;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nlpos = text.find('\n', pos);
    std::string_view line = text.substr(pos, (nlpos == std::string_view::npos ? text.size() : nlpos) - pos);
    ++lineno;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    auto toks = split_ws(line);
    if (!toks.empty()) {
      if (toks[0] == "cycles") {
        if (toks.size() != 2) throw parse_error("cycles takes one value", lineno, 1);
        ap.cycles = static_cast<std::uint64_t>(parse_int(toks[1], lineno, detail::col_of(line, toks[1])));
        saw_cycles = true;
      } else if (toks[0] == "net") {
        if (toks.size() != 4) throw parse_error("net takes: <name> dc=<v> tc=<n>", lineno, 1);
        auto [dk, dv] = split_kv(toks[2]);
        auto [tk, tv] = split_kv(toks[3]);
        if (dk != "dc" || tk != "tc") throw parse_error("expected dc=<v> tc=<n>", lineno, detail::col_of(line, toks[2]));
        NetActivity a;
        a.dc = parse_double(dv, lineno, detail::col_of(line, toks[2]));
        a.tc = static_cast<std::uint64_t>(parse_int(tv, lineno, detail::col_of(line, toks[3])));
        if (a.dc < 0.0 || a.dc > 1.0) throw parse_error("dc out of [0,1]", lineno, detail::col_of(line, toks[2]));
        if (!ap.nets.emplace(std::string(toks[1]), a).second)
          throw parse_error("duplicate net '" + std::string(toks[1]) + "'", lineno, detail::col_of(line, toks[1]));
      } else {
        throw parse_error("unknown statement '" + std::string(toks[0]) + "'", lineno, 1);
      }
    }
    if (nlpos == std::string_view::npos) break;
    pos = nlpos + 1;
  }
  if (!saw_cycles) throw parse_error("missing cycles header", lineno, 1);
  for (const auto& [name, a] : ap.nets)
    if (a.tc > ap.cycles) throw parse_error("tc exceeds cycles for net '" + name + "'", 0, 0);
  return ap;
}

}  // namespace agewise
