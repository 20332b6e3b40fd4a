#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "agewise/netlist.hpp"

namespace agewise {

enum class ArcKind : int { Cell, Wire, ClkToQ };

struct Arc {
  ArcKind kind;
  int from;
  int to;
  double delay_ps;
  int inst = -1;  // instance index (Cell/ClkToQ arcs)
  int net = -1;   // net index (Wire arcs)
};

struct Instance {
  enum Kind { Gate, Clkbuf, Ff } kind;
  std::string id;
  GateType type;   // Ff maps to BUF
  Drive drive;     // Ff maps to x1
  int out_node = -1;
  int netlist_idx = -1;
};

struct FfTiming {
  int inst;
  int clk_node;
  int d_pin;
  int q_net;
  int clkq_arc;
  std::vector<int> cp_arcs;  // clock root -> clk pin, in chain order
  double cp_delay_ps;
};

struct TimingGraph {
  CellLibrary lib;
  double period_ps = 0.0;

  std::vector<Instance> instances;
  std::unordered_map<std::string, int> inst_idx;

  std::vector<std::string> net_names;
  std::unordered_map<std::string, int> net_idx;
  std::vector<std::vector<RouteSeg>> net_routes;
  std::vector<double> net_wire_ps;

  int num_nodes = 0;
  int clock_root = 0;
  int net_node_base = 1;  // first net node; clkbuf outputs sit between root and nets
  std::vector<Arc> arcs;
  std::vector<std::vector<int>> out_arcs;

  std::vector<FfTiming> ffs;
  std::unordered_map<std::string, int> ff_idx;

  int instance_of(const std::string& id) const {
    auto it = inst_idx.find(id);
    if (it == inst_idx.end()) throw model_error("timing graph: unknown instance '" + id + "'");
    return it->second;
  }
  int fanout(int inst) const { return static_cast<int>(out_arcs[instances[inst].out_node].size()); }
  // Net driven by a gate or FF (clock buffers drive internal nodes, not nets).
  int net_of_instance(int inst) const {
    if (instances[static_cast<std::size_t>(inst)].kind == Instance::Clkbuf)
      throw model_error("net_of_instance: clock buffers drive no net");
    return instances[static_cast<std::size_t>(inst)].out_node - net_node_base;
  }
};

inline double route_delay_ps(const CellLibrary& lib, const std::vector<RouteSeg>& segs) {
  double d = 0.0;
  for (const auto& s : segs) d += lib.wire_unit(s.layer) * s.length_um;
  return d;
}

inline TimingGraph elaborate(const Netlist& nl, const CellLibrary& lib) {
  validate_netlist(nl);
  lib.validate();
  TimingGraph g;
  g.lib = lib;
  g.period_ps = nl.period_ps;

  auto add_inst = [&](Instance::Kind k, const std::string& id, GateType t, Drive d, int nidx) {
    Instance inst;
    inst.kind = k;
    inst.id = id;
    inst.type = t;
    inst.drive = d;
    inst.netlist_idx = nidx;
    g.instances.push_back(inst);
    g.inst_idx.emplace(id, static_cast<int>(g.instances.size()) - 1);
    return static_cast<int>(g.instances.size()) - 1;
  };
  for (int i = 0; i < static_cast<int>(nl.clkbufs.size()); ++i)
    add_inst(Instance::Clkbuf, nl.clkbufs[i].id, GateType::BUF, nl.clkbufs[i].drive, i);
  for (int i = 0; i < static_cast<int>(nl.ffs.size()); ++i)
    add_inst(Instance::Ff, nl.ffs[i].id, GateType::BUF, Drive::x1, i);
  for (int i = 0; i < static_cast<int>(nl.gates.size()); ++i)
    add_inst(Instance::Gate, nl.gates[i].id, nl.gates[i].type, nl.gates[i].drive, i);

  auto add_net = [&](const std::string& name) {
    g.net_names.push_back(name);
    g.net_idx.emplace(name, static_cast<int>(g.net_names.size()) - 1);
    auto it = nl.routes.find(name);
    g.net_routes.push_back(it == nl.routes.end() ? std::vector<RouteSeg>{} : it->second);
    g.net_wire_ps.push_back(route_delay_ps(lib, g.net_routes.back()));
  };
  for (const auto& pi : nl.inputs) add_net(pi);
  for (const auto& f : nl.ffs) add_net(f.q);
  for (const auto& gt : nl.gates) add_net(gt.output);

  // Node layout: [0] clock root | clkbuf outputs | net nodes | gate input pins | FF D pins.
  g.clock_root = 0;
  int next = 1;
  std::vector<int> buf_node(nl.clkbufs.size());
  for (std::size_t i = 0; i < nl.clkbufs.size(); ++i) buf_node[i] = next++;
  g.net_node_base = next;
  std::vector<int> net_node(g.net_names.size());
  for (std::size_t i = 0; i < g.net_names.size(); ++i) net_node[i] = next++;
  std::vector<std::vector<int>> gate_pin(nl.gates.size());
  for (std::size_t i = 0; i < nl.gates.size(); ++i)
    for (std::size_t j = 0; j < nl.gates[i].inputs.size(); ++j) gate_pin[i].push_back(next++);
  std::vector<int> d_pin(nl.ffs.size());
  for (std::size_t i = 0; i < nl.ffs.size(); ++i) d_pin[i] = next++;
  g.num_nodes = next;
  g.out_arcs.assign(g.num_nodes, {});

  auto add_arc = [&](ArcKind k, int from, int to, double delay, int inst, int net) {
    Arc a;
    a.kind = k;
    a.from = from;
    a.to = to;
    a.delay_ps = delay;
    a.inst = inst;
    a.net = net;
    if (!(delay > 0.0)) throw model_error("timing graph: non-positive arc delay");
    g.arcs.push_back(a);
    g.out_arcs[from].push_back(static_cast<int>(g.arcs.size()) - 1);
    return static_cast<int>(g.arcs.size()) - 1;
  };

  // Clock chains: one arc per (upstream node, buffer) pair, shared across FFs.
  std::map<std::pair<int, int>, int> chain_arc;
  std::unordered_map<std::string, int> buf_of;
  for (std::size_t i = 0; i < nl.clkbufs.size(); ++i) buf_of[nl.clkbufs[i].id] = static_cast<int>(i);
  g.ffs.resize(nl.ffs.size());
  for (std::size_t fi = 0; fi < nl.ffs.size(); ++fi) {
    const auto& f = nl.ffs[fi];
    int at = g.clock_root;
    auto& ft = g.ffs[fi];
    for (const auto& bid : f.clkpath) {
      int bi = buf_of.at(bid);
      auto key = std::make_pair(at, bi);
      auto it = chain_arc.find(key);
      int aid;
      if (it != chain_arc.end()) {
        aid = it->second;
      } else {
        aid = add_arc(ArcKind::Cell, at, buf_node[bi], lib.base_delay(GateType::BUF, nl.clkbufs[bi].drive),
                      g.instance_of(bid), -1);
        chain_arc.emplace(key, aid);
      }
      ft.cp_arcs.push_back(aid);
      at = buf_node[bi];
    }
    ft.clk_node = at;
    ft.inst = g.instance_of(f.id);
    ft.d_pin = d_pin[fi];
    ft.q_net = g.net_idx.at(f.q);
    double cp = 0.0;
    for (int a : ft.cp_arcs) cp += g.arcs[a].delay_ps;
    ft.cp_delay_ps = cp;
    g.ff_idx.emplace(f.id, static_cast<int>(fi));
  }
  for (std::size_t fi = 0; fi < nl.ffs.size(); ++fi) {
    auto& ft = g.ffs[fi];
    ft.clkq_arc = add_arc(ArcKind::ClkToQ, ft.clk_node, net_node[ft.q_net], lib.clk_to_q_ps, ft.inst, -1);
    g.instances[ft.inst].out_node = net_node[ft.q_net];
  }
  for (std::size_t i = 0; i < nl.clkbufs.size(); ++i) g.instances[g.instance_of(nl.clkbufs[i].id)].out_node = buf_node[i];

  for (std::size_t gi = 0; gi < nl.gates.size(); ++gi) {
    const auto& gt = nl.gates[gi];
    int inst = g.instance_of(gt.id);
    int onode = net_node[g.net_idx.at(gt.output)];
    g.instances[inst].out_node = onode;
    for (std::size_t j = 0; j < gt.inputs.size(); ++j)
      add_arc(ArcKind::Cell, gate_pin[gi][j], onode, lib.base_delay(gt.type, gt.drive), inst, -1);
  }

  // Wire arcs: net -> each consumer pin, full lumped net delay each.
  std::vector<std::vector<int>> net_consumers(g.net_names.size());
  for (std::size_t gi = 0; gi < nl.gates.size(); ++gi)
    for (std::size_t j = 0; j < nl.gates[gi].inputs.size(); ++j)
      net_consumers[g.net_idx.at(nl.gates[gi].inputs[j])].push_back(gate_pin[gi][j]);
  for (std::size_t fi = 0; fi < nl.ffs.size(); ++fi)
    net_consumers[g.net_idx.at(nl.ffs[fi].d)].push_back(d_pin[fi]);
  for (std::size_t ni = 0; ni < g.net_names.size(); ++ni)
    for (int pin : net_consumers[ni])
      add_arc(ArcKind::Wire, net_node[ni], pin, g.net_wire_ps[ni], -1, static_cast<int>(ni));

  return g;
}

}  // namespace agewise
