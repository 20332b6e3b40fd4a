#pragma once

#include <algorithm>
#include <bit>
#include <deque>
#include <set>

#include "agewise/aging.hpp"
#include "agewise/sta.hpp"

namespace agewise {

struct GenSpec {
  int num_ffs = 60;
  int gates_per_cone = 40;
  int depth = 34;
  std::uint64_t seed = 1;
  double guardband_fraction = 0.1;
};

namespace gen_detail {

// Candidate wirings are scored on a 256-cycle sampled waveform per net, so the
// steering sees true correlated statistics, not an independence estimate.
constexpr int kSimWords = 4;
constexpr int kSimCycles = kSimWords * 64;
using Bits = std::array<std::uint64_t, kSimWords>;

inline Bits rand_bits(rng_t& rng) {
  Bits b;
  for (auto& w : b) w = rng();
  return b;
}

inline Bits gate_bits(GateType t, const Bits& a, const Bits& b) {
  Bits o{};
  for (int w = 0; w < kSimWords; ++w) {
    std::uint64_t x = a[w], y = b[w];
    switch (t) {
      case GateType::INV: o[w] = ~x; break;
      case GateType::BUF: o[w] = x; break;
      case GateType::NAND2: o[w] = ~(x & y); break;
      case GateType::NOR2: o[w] = ~(x | y); break;
      case GateType::AND2: o[w] = x & y; break;
      case GateType::OR2: o[w] = x | y; break;
      case GateType::XOR2: o[w] = x ^ y; break;
    }
  }
  return o;
}

// Twelve-month threshold-voltage stress for a net with this waveform; the
// quantity each flavor pushes to its own extreme.
inline double stress_v(GateType t, const Bits& bits) {
  int ones = 0, flips = 0;
  for (int w = 0; w < kSimWords; ++w) {
    ones += std::popcount(bits[w]);
    std::uint64_t next = bits[w] >> 1;
    if (w + 1 < kSimWords) next |= bits[w + 1] << 63;
    std::uint64_t diff = bits[w] ^ next;
    if (w + 1 == kSimWords) diff &= ~(1ull << 63);
    flips += std::popcount(diff);
  }
  double dc = 1.0 - static_cast<double>(ones) / kSimCycles;
  double tc_rate = static_cast<double>(flips) / (kSimCycles - 1);
  AgingConditions cond;
  cond.months = 12.0;
  return oracle_delta_vth(t, dc, tc_rate, cond);
}

inline GateType sample_type(rng_t& rng) {
  double r = runif(rng);
  if (r < 0.05) return GateType::INV;
  if (r < 0.12) return GateType::BUF;
  if (r < 0.22) return GateType::NAND2;
  if (r < 0.30) return GateType::NOR2;
  if (r < 0.50) return GateType::AND2;
  if (r < 0.75) return GateType::OR2;
  return GateType::XOR2;
}

inline Drive sample_drive(rng_t& rng) {
  double r = runif(rng);
  if (r < 0.10) return Drive::x0;
  if (r < 0.35) return Drive::x1;
  if (r < 0.60) return Drive::x2;
  if (r < 0.80) return Drive::x4;
  if (r < 0.95) return Drive::x8;
  return Drive::x16;
}

// Chain cells skew weak: long paths are slow because their cells are, which is
// what makes them worth measuring.
inline Drive sample_spine_drive(rng_t& rng) {
  double r = runif(rng);
  if (r < 0.35) return Drive::x0;
  if (r < 0.75) return Drive::x1;
  if (r < 0.90) return Drive::x2;
  return Drive::x4;
}

inline Layer sample_layer(rng_t& rng) {
  double r = runif(rng);
  if (r < 0.25) return Layer::M1;
  if (r < 0.55) return Layer::M2;
  if (r < 0.75) return Layer::M3;
  if (r < 0.90) return Layer::M4;
  return Layer::M5;
}

struct Cand {
  std::string net;
  Bits bits{};
};

}  // namespace gen_detail

// Random sequential benchmark: a shared clock-buffer tree, one combinational
// cone per capture FF fed by other FFs' Q nets, and full per-net routing.
// Cones alternate between a high-stress and a low-stress input-selection
// policy (identical gate/drive/layer palettes, so the two populations match
// structurally) to give downstream consumers a wide usage spread.
inline Netlist generate_netlist(const GenSpec& spec) {
  if (spec.num_ffs < 1 || spec.gates_per_cone < 1 || spec.depth < 1)
    throw model_error("generate_netlist: counts must be >= 1");
  if (spec.guardband_fraction < 0.0 || spec.guardband_fraction > 0.2)
    throw model_error("generate_netlist: guardband_fraction out of [0, 0.2]");
  if (spec.depth > spec.gates_per_cone)
    throw model_error("generate_netlist: infeasible spec (depth exceeds gates per cone)");

  Netlist nl;
  nl.period_ps = 1.0;  // placeholder until the critical path is known

  // Clock tree: root (x8) -> 4 mid (x4) -> 16 leaf (x2) buffers.
  for (int i = 0; i < 21; ++i) {
    ClockBuf cb;
    cb.id = "cb" + std::to_string(i);
    cb.drive = i == 0 ? Drive::x8 : (i <= 4 ? Drive::x4 : Drive::x2);
    nl.clkbufs.push_back(cb);
  }
  auto clkpath_of = [](int ff) {
    int leaf = ff % 16;
    return std::vector<std::string>{"cb0", "cb" + std::to_string(1 + leaf / 4), "cb" + std::to_string(5 + leaf)};
  };

  const int npis = std::max(4, spec.num_ffs / 10);
  for (int i = 0; i < npis; ++i) nl.inputs.push_back("pi" + std::to_string(i));

  for (int i = 0; i < spec.num_ffs; ++i) {
    FlipFlop f;
    f.id = "ff" + std::to_string(i);
    f.q = "q" + std::to_string(i);
    f.clkpath = clkpath_of(i);
    nl.ffs.push_back(f);  // d filled in once the cone exists
  }

  // Unused primary inputs get consumed by level-0 side slots, first come first served.
  std::deque<std::string> pi_queue(nl.inputs.begin(), nl.inputs.end());

  int next_net = 0, next_gate = 0;
  for (int ci = 0; ci < spec.num_ffs; ++ci) {
    const bool hot = (ci % 2) == 0;
    // Both cones of a pair share one structure stream, so their gate types,
    // drives, and shapes coincide; only the input selection differs.
    rng_t rng_struct = make_rng(spec.seed, derive_seed(0x74797065, static_cast<std::uint64_t>(ci / 2)));
    rng_t rng = make_rng(spec.seed, derive_seed(0x636f6e65, static_cast<std::uint64_t>(ci)));

    // Launch registers feeding this cone.
    std::vector<int> others;
    for (int j = 0; j < spec.num_ffs; ++j)
      if (j != ci) others.push_back(j);
    if (others.empty()) others.push_back(ci);
    shuffle_vec(others, rng);
    std::vector<gen_detail::Cand> seed_pool;
    for (std::size_t j = 0; j < std::min<std::size_t>(4, others.size()); ++j)
      seed_pool.push_back({"q" + std::to_string(others[j]), gen_detail::rand_bits(rng)});

    std::vector<int> level_size(static_cast<std::size_t>(spec.depth), 1);
    for (int e = 0; e < spec.gates_per_cone - spec.depth; ++e) ++level_size[static_cast<std::size_t>(e % spec.depth)];

    std::vector<gen_detail::Cand> pool;  // cone-internal nets
    gen_detail::Cand spine;
    for (int lvl = 0; lvl < spec.depth; ++lvl) {
      auto draw = [&]() -> const gen_detail::Cand& {
        std::size_t total = seed_pool.size() + pool.size();
        std::size_t k = static_cast<std::size_t>(rng() % total);
        return k < seed_pool.size() ? seed_pool[k] : pool[k - seed_pool.size()];
      };
      gen_detail::Cand next_spine;
      for (int j = 0; j < level_size[static_cast<std::size_t>(lvl)]; ++j) {
        GateType t = gen_detail::sample_type(rng_struct);
        const bool is_spine = j == 0;
        Drive dr = is_spine ? gen_detail::sample_spine_drive(rng_struct) : gen_detail::sample_drive(rng_struct);
        const int ninp = num_inputs(t);
        gen_detail::Cand forced;
        bool have_forced = false;
        if (is_spine) {
          forced = lvl == 0 ? seed_pool[0] : spine;
          have_forced = true;
        } else if (lvl == 0 && !pi_queue.empty()) {
          forced = {pi_queue.front(), gen_detail::rand_bits(rng)};
          pi_queue.pop_front();
          have_forced = true;
        }
        gen_detail::Cand best_a, best_b;
        double best_score = 0.0;
        bool have_best = false;
        for (int trial = 0; trial < 12; ++trial) {
          gen_detail::Cand a = have_forced ? forced : draw();
          gen_detail::Cand b = a;
          if (ninp == 2) {
            b = draw();
            for (int redo = 0; redo < 4 && b.net == a.net; ++redo) b = draw();
          }
          double stress = gen_detail::stress_v(t, gen_detail::gate_bits(t, a.bits, b.bits));
          double score = hot ? -stress : stress;
          if (!have_best || score < best_score) {
            have_best = true;
            best_score = score;
            best_a = a;
            best_b = b;
          }
        }
        GateInst gi;
        gi.id = "g" + std::to_string(next_gate++);
        gi.type = t;
        gi.drive = dr;
        gi.inputs.push_back(best_a.net);
        if (ninp == 2) gi.inputs.push_back(best_b.net);
        gi.output = "n" + std::to_string(next_net++);
        nl.gates.push_back(gi);
        gen_detail::Cand out{gi.output, gen_detail::gate_bits(t, best_a.bits, best_b.bits)};
        pool.push_back(out);
        if (is_spine) next_spine = out;
      }
      spine = next_spine;
    }
    nl.ffs[static_cast<std::size_t>(ci)].d = spine.net;
  }

  // Routes for every net, identical layer/length palette everywhere.
  {
    rng_t rng = make_rng(spec.seed, 0x726f757465);
    std::vector<std::string> nets = nl.inputs;
    for (const auto& f : nl.ffs) nets.push_back(f.q);
    for (const auto& gi : nl.gates) nets.push_back(gi.output);
    for (const auto& net : nets) {
      int nsegs = 1 + static_cast<int>(rng() % 2);
      std::vector<RouteSeg> segs;
      for (int s = 0; s < nsegs; ++s)
        segs.push_back({gen_detail::sample_layer(rng), 0.25 * static_cast<double>(2 + rng() % 14)});
      nl.routes.emplace(net, std::move(segs));
    }
  }

  // Nets nobody consumes become primary outputs.
  {
    std::set<std::string> consumed;
    for (const auto& gi : nl.gates)
      for (const auto& in : gi.inputs) consumed.insert(in);
    for (const auto& f : nl.ffs) consumed.insert(f.d);
    for (const auto& f : nl.ffs)
      if (!consumed.count(f.q)) nl.outputs.push_back(f.q);
    for (const auto& gi : nl.gates)
      if (!consumed.count(gi.output)) nl.outputs.push_back(gi.output);
  }

  TimingGraph g = elaborate(nl, default_library());
  nl.period_ps = (1.0 + spec.guardband_fraction) * critical_path_delay(g);
  return nl;
}

}  // namespace agewise
