#pragma once

// Shared fixtures and small oracles used across the test binaries.

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "agewise/sta.hpp"

namespace testfix {

// Smallest legal design: one flip-flop looping through one inverter.
inline const char* kMinNetlist = R"(period 500
clkbuf cb0 drive=x4
ff ff0 d=n0 q=q0 clkpath=cb0
gate g0 INV x1 in=q0 out=n0
route q0 M1:2
route n0 M2:10
)";

// Five hand-placed gates with two flip-flops on distinct clock leaves, for
// hand-counted timing checks. Longest path into ff1:
//   lp(cb0 9.92 + cba 13.12) + clkq 40 + [q0 2.0, NAND2x1 20, n0 1.5,
//   INVx2 9.84, n1 2.4, AND2x1 24, n2 8.0] + setup 30 - cp(cb0+cbb 23.04)
//   = 137.74 ps
inline const char* kFiveGateNetlist = R"(period 1000
input pi0
clkbuf cb0 drive=x8
clkbuf cba drive=x2
clkbuf cbb drive=x2
ff ff0 d=n4 q=q0 clkpath=cb0,cba
ff ff1 d=n2 q=q1 clkpath=cb0,cbb
gate g0 NAND2 x1 in=q0,pi0 out=n0
gate g1 INV x2 in=n0 out=n1
gate g2 AND2 x1 in=n1,q1 out=n2
gate g3 OR2 x1 in=q1,n0 out=n3
gate g4 XOR2 x4 in=n3,n1 out=n4
output n2
route pi0 M1:1
route q0 M1:2
route q1 M2:2.5
route n0 M1:1.5
route n1 M3:4
route n2 M2:10
route n3 M4:2
route n4 M1:1,M2:2
)";

// Every complete launch-to-capture path for one endpoint, by depth-first walk
// over the timing graph. Independent of the k-longest search: plain recursion
// from the clock root to the capture FF's D pin.
struct RawPath {
  std::vector<int> arcs;  // lp arcs, clk->q arc, dp arcs, in traversal order
  double delay_ps = 0.0;
};

inline std::vector<RawPath> exhaustive_paths(const agewise::TimingGraph& g, const std::string& endpoint) {
  const auto& ft = g.ffs[static_cast<std::size_t>(g.ff_idx.at(endpoint))];
  const int sink = ft.d_pin;
  std::vector<RawPath> out;
  std::vector<int> stack;
  auto dfs = [&](auto&& self, int node) -> void {
    if (node == sink) {
      RawPath p;
      p.arcs = stack;
      double acc = 0.0;
      for (int a : p.arcs) acc += g.arcs[static_cast<std::size_t>(a)].delay_ps;
      p.delay_ps = acc + g.lib.setup_ps - ft.cp_delay_ps;
      out.push_back(std::move(p));
      return;
    }
    for (int a : g.out_arcs[static_cast<std::size_t>(node)]) {
      stack.push_back(a);
      self(self, g.arcs[static_cast<std::size_t>(a)].to);
      stack.pop_back();
    }
  };
  dfs(dfs, g.clock_root);
  std::sort(out.begin(), out.end(), [](const RawPath& a, const RawPath& b) { return a.delay_ps > b.delay_ps; });
  return out;
}

// Fresh scratch directory under the system temp root; recreated empty.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("agewise_tests_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testfix
