#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "agewise/cell_library.hpp"
#include "agewise/common.hpp"

namespace agewise {

struct RouteSeg {
  Layer layer;
  double length_um;
  bool operator==(const RouteSeg&) const = default;
};

struct ClockBuf {
  std::string id;
  Drive drive;
  bool operator==(const ClockBuf&) const = default;
};

struct FlipFlop {
  std::string id;
  std::string d;
  std::string q;
  std::vector<std::string> clkpath;  // clock root -> ... -> this FF's clk pin
  bool operator==(const FlipFlop&) const = default;
};

struct GateInst {
  std::string id;
  GateType type;
  Drive drive;
  std::vector<std::string> inputs;
  std::string output;
  bool operator==(const GateInst&) const = default;
};

struct Netlist {
  double period_ps = 0.0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<ClockBuf> clkbufs;
  std::vector<FlipFlop> ffs;
  std::vector<GateInst> gates;
  std::map<std::string, std::vector<RouteSeg>> routes;
  bool operator==(const Netlist&) const = default;
};

// Gate evaluation on logic values 0/1.
inline int eval_gate(GateType t, int a, int b) {
  switch (t) {
    case GateType::INV: return 1 - a;
    case GateType::BUF: return a;
    case GateType::NAND2: return 1 - (a & b);
    case GateType::NOR2: return 1 - (a | b);
    case GateType::AND2: return a & b;
    case GateType::OR2: return a | b;
    case GateType::XOR2: return a ^ b;
  }
  return 0;
}

// Topological order of gate indices; throws model_error on a combinational cycle.
inline std::vector<int> topo_order_gates(const Netlist& nl) {
  std::unordered_map<std::string_view, int> driver_gate;  // net -> gate index
  for (int i = 0; i < static_cast<int>(nl.gates.size()); ++i) driver_gate[nl.gates[i].output] = i;
  std::vector<int> indeg(nl.gates.size(), 0);
  std::vector<std::vector<int>> consumers(nl.gates.size());
  for (int i = 0; i < static_cast<int>(nl.gates.size()); ++i) {
    for (const auto& in : nl.gates[i].inputs) {
      auto it = driver_gate.find(in);
      if (it != driver_gate.end()) {
        ++indeg[i];
        consumers[it->second].push_back(i);
      }
    }
  }
  std::vector<int> order;
  order.reserve(nl.gates.size());
  std::vector<int> ready;
  for (int i = 0; i < static_cast<int>(nl.gates.size()); ++i)
    if (indeg[i] == 0) ready.push_back(i);
  for (std::size_t head = 0; head < ready.size(); ++head) {
    int g = ready[head];
    order.push_back(g);
    for (int c : consumers[g])
      if (--indeg[c] == 0) ready.push_back(c);
  }
  if (order.size() != nl.gates.size()) throw model_error("combinational cycle detected in netlist");
  return order;
}

namespace detail {

inline std::size_t col_of(std::string_view line, std::string_view tok) {
  return static_cast<std::size_t>(tok.data() - line.data()) + 1;
}

}  // namespace detail

inline void validate_netlist(const Netlist& nl) {
  if (!(nl.period_ps > 0.0)) throw model_error("netlist: period must be positive");

  std::unordered_set<std::string_view> inst_ids;
  auto claim_id = [&](const std::string& id, const char* kind) {
    if (!inst_ids.insert(id).second) throw model_error(std::string("netlist: duplicate instance id '") + id + "' (" + kind + ")");
  };
  for (const auto& b : nl.clkbufs) claim_id(b.id, "clkbuf");
  for (const auto& f : nl.ffs) claim_id(f.id, "ff");
  for (const auto& g : nl.gates) claim_id(g.id, "gate");

  for (const auto& b : nl.clkbufs)
    if (b.drive == Drive::x16) throw model_error("netlist: x16 drive is restricted to data-portion cells ('" + b.id + "')");

  std::unordered_map<std::string_view, int> drivers;  // net -> driver count
  auto add_driver = [&](const std::string& net) { ++drivers[net]; };
  for (const auto& pi : nl.inputs) add_driver(pi);
  for (const auto& f : nl.ffs) add_driver(f.q);
  for (const auto& g : nl.gates) add_driver(g.output);
  for (const auto& [net, cnt] : drivers)
    if (cnt > 1) throw model_error("netlist: net '" + std::string(net) + "' has multiple drivers");

  std::unordered_set<std::string_view> used_nets;
  for (const auto& pi : nl.inputs) used_nets.insert(pi);
  auto require_driven = [&](const std::string& net, const std::string& who) {
    used_nets.insert(net);
    if (drivers.find(net) == drivers.end())
      throw model_error("netlist: undeclared net '" + net + "' referenced by " + who);
  };
  std::unordered_set<std::string_view> buf_ids;
  for (const auto& b : nl.clkbufs) buf_ids.insert(b.id);
  for (const auto& f : nl.ffs) {
    require_driven(f.d, "ff '" + f.id + "'");
    used_nets.insert(f.q);
    for (const auto& b : f.clkpath)
      if (buf_ids.find(b) == buf_ids.end())
        throw model_error("netlist: ff '" + f.id + "' references unknown clock buffer '" + b + "'");
  }
  for (const auto& g : nl.gates) {
    if (static_cast<int>(g.inputs.size()) != num_inputs(g.type))
      throw model_error("netlist: gate '" + g.id + "' has wrong input count for " + std::string(to_string(g.type)));
    for (const auto& in : g.inputs) require_driven(in, "gate '" + g.id + "'");
    used_nets.insert(g.output);
  }
  for (const auto& po : nl.outputs) require_driven(po, "output port");

  for (const auto& net : used_nets) {
    auto it = nl.routes.find(std::string(net));
    if (it == nl.routes.end()) throw model_error("netlist: missing route for net '" + std::string(net) + "'");
  }
  for (const auto& [net, segs] : nl.routes) {
    if (used_nets.find(net) == used_nets.end())
      throw model_error("netlist: route for unknown net '" + net + "'");
    if (segs.empty()) throw model_error("netlist: empty route for net '" + net + "'");
    for (const auto& s : segs)
      if (!(s.length_um > 0.0)) throw model_error("netlist: non-positive segment length on net '" + net + "'");
  }

  topo_order_gates(nl);  // throws on combinational cycle
}

inline Netlist parse_netlist(std::string_view text) {
  Netlist nl;
  bool saw_period = false;
  std::size_t lineno = 0;
  for (std::string_view rest = text; !rest.empty() || lineno == 0;) {
    auto nlpos = rest.find('\n');
    std::string_view line = nlpos == std::string_view::npos ? rest : rest.substr(0, nlpos);
    rest = nlpos == std::string_view::npos ? std::string_view{} : rest.substr(nlpos + 1);
    ++lineno;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    auto toks = split_ws(line);
    if (toks.empty()) {
      if (rest.empty()) break;
      continue;
    }
    auto col = [&](std::string_view t) { return detail::col_of(line, t); };
    auto kv = [&](std::string_view tok, std::string_view key) -> std::string_view {
      auto [k, v] = split_kv(tok);
      if (k != key)
        throw parse_error("expected '" + std::string(key) + "=...', got '" + std::string(tok) + "'", lineno, col(tok));
      return v;
    };
    std::string_view stmt = toks[0];
    if (stmt == "period") {
      if (toks.size() != 2) throw parse_error("period takes one value", lineno, col(stmt));
      if (saw_period) throw parse_error("duplicate period statement", lineno, col(stmt));
      nl.period_ps = parse_double(toks[1], lineno, col(toks[1]));
      saw_period = true;
    } else if (stmt == "input" || stmt == "output") {
      if (toks.size() != 2) throw parse_error(std::string(stmt) + " takes one net name", lineno, col(stmt));
      (stmt == "input" ? nl.inputs : nl.outputs).emplace_back(toks[1]);
    } else if (stmt == "ff") {
      if (toks.size() != 5) throw parse_error("ff takes: <id> d=<net> q=<net> clkpath=<buf,...>", lineno, col(stmt));
      FlipFlop f;
      f.id = std::string(toks[1]);
      f.d = std::string(kv(toks[2], "d"));
      f.q = std::string(kv(toks[3], "q"));
      auto cp = kv(toks[4], "clkpath");
      if (!cp.empty())
        for (auto b : split_char(cp, ',')) {
          if (b.empty()) throw parse_error("empty clock buffer id in clkpath", lineno, col(toks[4]));
          f.clkpath.emplace_back(b);
        }
      if (f.d.empty() || f.q.empty()) throw parse_error("ff requires non-empty d and q nets", lineno, col(stmt));
      nl.ffs.push_back(std::move(f));
    } else if (stmt == "clkbuf") {
      if (toks.size() != 3) throw parse_error("clkbuf takes: <id> drive=<xK>", lineno, col(stmt));
      ClockBuf b;
      b.id = std::string(toks[1]);
      auto dv = kv(toks[2], "drive");
      if (!drive_from_string(dv, b.drive)) throw parse_error("unknown drive '" + std::string(dv) + "'", lineno, col(toks[2]));
      nl.clkbufs.push_back(std::move(b));
    } else if (stmt == "gate") {
      if (toks.size() != 6) throw parse_error("gate takes: <id> <TYPE> <xK> in=<net,...> out=<net>", lineno, col(stmt));
      GateInst g;
      g.id = std::string(toks[1]);
      if (!gate_type_from_string(toks[2], g.type))
        throw parse_error("unknown gate type '" + std::string(toks[2]) + "'", lineno, col(toks[2]));
      if (!drive_from_string(toks[3], g.drive))
        throw parse_error("unknown drive '" + std::string(toks[3]) + "'", lineno, col(toks[3]));
      for (auto in : split_char(kv(toks[4], "in"), ',')) {
        if (in.empty()) throw parse_error("empty input net name", lineno, col(toks[4]));
        g.inputs.emplace_back(in);
      }
      g.output = std::string(kv(toks[5], "out"));
      if (g.output.empty()) throw parse_error("empty output net name", lineno, col(toks[5]));
      nl.gates.push_back(std::move(g));
    } else if (stmt == "route") {
      if (toks.size() != 3) throw parse_error("route takes: <net> <layer>:<len>[,...]", lineno, col(stmt));
      std::string net(toks[1]);
      if (nl.routes.count(net)) throw parse_error("duplicate route for net '" + net + "'", lineno, col(toks[1]));
      std::vector<RouteSeg> segs;
      for (auto seg : split_char(toks[2], ',')) {
        auto cpos = seg.find(':');
        if (cpos == std::string_view::npos)
          throw parse_error("route segment must be <layer>:<len>", lineno, col(toks[2]));
        RouteSeg s;
        if (!layer_from_string(seg.substr(0, cpos), s.layer))
          throw parse_error("unknown layer '" + std::string(seg.substr(0, cpos)) + "'", lineno, col(toks[2]));
        s.length_um = parse_double(seg.substr(cpos + 1), lineno, col(toks[2]));
        segs.push_back(s);
      }
      nl.routes.emplace(std::move(net), std::move(segs));
    } else {
      throw parse_error("unknown statement '" + std::string(stmt) + "'", lineno, col(stmt));
    }
    if (rest.empty() && nlpos == std::string_view::npos) break;
  }
  if (!saw_period) throw parse_error("missing period statement", lineno, 1);
  validate_netlist(nl);
  return nl;
}

inline std::string emit_netlist(const Netlist& nl) {
  std::string out;
  out += "period " + fmt_double(nl.period_ps) + "\n";
  for (const auto& pi : nl.inputs) out += "input " + pi + "\n";
  for (const auto& po : nl.outputs) out += "output " + po + "\n";
  for (const auto& b : nl.clkbufs) out += "clkbuf " + b.id + " drive=" + std::string(to_string(b.drive)) + "\n";
  for (const auto& f : nl.ffs) {
    out += "ff " + f.id + " d=" + f.d + " q=" + f.q + " clkpath=";
    for (std::size_t i = 0; i < f.clkpath.size(); ++i) {
      if (i) out += ",";
      out += f.clkpath[i];
    }
    out += "\n";
  }
  for (const auto& g : nl.gates) {
    out += "gate " + g.id + " " + std::string(to_string(g.type)) + " " + std::string(to_string(g.drive)) + " in=";
    for (std::size_t i = 0; i < g.inputs.size(); ++i) {
      if (i) out += ",";
      out += g.inputs[i];
    }
    out += " out=" + g.output + "\n";
  }
  for (const auto& [net, segs] : nl.routes) {
    out += "route " + net + " ";
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (i) out += ",";
      out += std::string(to_string(segs[i].layer)) + ":" + fmt_double(segs[i].length_um);
    }
    out += "\n";
  }
  return out;
}

}  // namespace agewise
