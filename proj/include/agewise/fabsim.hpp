#pragma once

#include <array>

#include "agewise/aging.hpp"
#include "agewise/timing_graph.hpp"

namespace agewise {

struct FabConfig {
  double sigma_random = 0.03;      // per-instance lot noise
  double sigma_systematic = 0.02;  // per-chip, shared within a gate type / layer
  double drift_gate_lo = 0.90, drift_gate_hi = 1.00;
  double drift_layer_lo = 0.90, drift_layer_hi = 1.05;

  void validate() const {
    if (sigma_random < 0.0 || sigma_systematic < 0.0) throw model_error("fab config: negative sigma");
    if (drift_gate_lo > drift_gate_hi || drift_layer_lo > drift_layer_hi)
      throw model_error("fab config: drift interval inverted");
    if (drift_gate_lo <= 0.0 || drift_layer_lo <= 0.0) throw model_error("fab config: drift must stay positive");
  }
};

// One process snapshot: every chip fabricated under it shares these drift factors.
struct FabModel {
  std::uint64_t snapshot_seed = 0;
  FabConfig cfg;
  std::array<std::array<double, kNumDrives>, kNumGateTypes> drift_gate{};
  std::array<double, kNumLayers> drift_layer{};
};

inline FabModel sample_fab_model(const FabConfig& cfg, std::uint64_t snapshot_seed) {
  cfg.validate();
  FabModel fm;
  fm.snapshot_seed = snapshot_seed;
  fm.cfg = cfg;
  rng_t rng = make_rng(snapshot_seed, 0x666162);
  for (int t = 0; t < kNumGateTypes; ++t)
    for (int d = 0; d < kNumDrives; ++d)
      fm.drift_gate[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)] =
          runif(rng, cfg.drift_gate_lo, cfg.drift_gate_hi);
  for (int l = 0; l < kNumLayers; ++l) fm.drift_layer[static_cast<std::size_t>(l)] = runif(rng, cfg.drift_layer_lo, cfg.drift_layer_hi);
  return fm;
}

struct ChipInstance {
  std::string chip_id;
  double age_months = 0.0;
  std::uint64_t snapshot_seed = 0, chip_seed = 0, activity_seed = 0;
  std::vector<double> arc_delays;  // parallel to TimingGraph::arcs
};

// Cell arcs scale by drift(type,drive) x systematic(type) x random(instance);
// wire arcs recompute per segment with drift(layer) x systematic(layer) and no
// per-instance term. Draw order is fixed: type systematics, layer systematics,
// then one random factor per instance in table order.
inline ChipInstance fabricate(const TimingGraph& g, const FabModel& fm, const std::string& chip_id,
                              std::uint64_t chip_seed) {
  ChipInstance chip;
  chip.chip_id = chip_id;
  chip.snapshot_seed = fm.snapshot_seed;
  chip.chip_seed = chip_seed;
  rng_t rng = make_rng(derive_seed(fm.snapshot_seed, chip_seed), 0x63686970);
  std::array<double, kNumGateTypes> sys_gate{};
  for (int t = 0; t < kNumGateTypes; ++t)
    sys_gate[static_cast<std::size_t>(t)] = rnorm_trunc(rng, 1.0, fm.cfg.sigma_systematic);
  std::array<double, kNumLayers> sys_layer{};
  for (int l = 0; l < kNumLayers; ++l)
    sys_layer[static_cast<std::size_t>(l)] = rnorm_trunc(rng, 1.0, fm.cfg.sigma_systematic);
  std::vector<double> rnd(g.instances.size());
  for (auto& v : rnd) v = rnorm_trunc(rng, 1.0, fm.cfg.sigma_random);

  std::vector<double> wire_ps(g.net_names.size(), 0.0);
  for (std::size_t ni = 0; ni < g.net_names.size(); ++ni) {
    double d = 0.0;
    for (const auto& s : g.net_routes[ni]) {
      auto l = static_cast<std::size_t>(s.layer);
      d += g.lib.wire_unit(s.layer) * s.length_um * fm.drift_layer[l] * sys_layer[l];
    }
    wire_ps[ni] = d;
  }

  chip.arc_delays.resize(g.arcs.size());
  for (std::size_t ai = 0; ai < g.arcs.size(); ++ai) {
    const auto& a = g.arcs[ai];
    if (a.kind == ArcKind::Wire) {
      chip.arc_delays[ai] = wire_ps[static_cast<std::size_t>(a.net)];
    } else {
      const auto& inst = g.instances[static_cast<std::size_t>(a.inst)];
      chip.arc_delays[ai] = a.delay_ps *
                            fm.drift_gate[static_cast<std::size_t>(inst.type)][static_cast<std::size_t>(inst.drive)] *
                            sys_gate[static_cast<std::size_t>(inst.type)] * rnd[static_cast<std::size_t>(a.inst)];
    }
  }
  return chip;
}

// In-place field aging: every cell arc of an instance grows by
// fab_delay x kappa x dVth / (vdd - vth0); wires do not age.
inline void age_chip(ChipInstance& chip, const TimingGraph& g, const ActivityProfile& activity,
                     const AgingConditions& cond, const AgingParams& params = {}) {
  if (chip.age_months != 0.0) throw model_error("age_chip: chip has already been aged");
  if (chip.arc_delays.size() != g.arcs.size()) throw model_error("age_chip: arc table does not match graph");
  if (cond.months < 0.0) throw model_error("age_chip: negative age");
  if (!(cond.vdd > g.lib.vth0)) throw model_error("age_chip: vdd must exceed vth0");
  if (cond.months == 0.0) return;
  const double cycles = static_cast<double>(activity.cycles);
  std::vector<double> dvth(g.instances.size());
  for (std::size_t i = 0; i < g.instances.size(); ++i) {
    const auto& inst = g.instances[i];
    double dc, tc_rate;
    if (inst.kind == Instance::Clkbuf) {
      dc = 0.5;
      tc_rate = 1.0;
    } else {
      const auto& a = activity.at(g.net_names[static_cast<std::size_t>(g.net_of_instance(static_cast<int>(i)))]);
      dc = a.dc;
      tc_rate = static_cast<double>(a.tc) / cycles;
    }
    dvth[i] = oracle_delta_vth(inst.type, dc, tc_rate, cond, params);
  }
  const double denom = cond.vdd - g.lib.vth0;
  for (std::size_t ai = 0; ai < g.arcs.size(); ++ai) {
    const auto& a = g.arcs[ai];
    if (a.kind == ArcKind::Wire) continue;
    chip.arc_delays[ai] += chip.arc_delays[ai] * params.kappa * dvth[static_cast<std::size_t>(a.inst)] / denom;
  }
  chip.age_months = cond.months;
}

inline std::string emit_chip(const ChipInstance& chip) {
  std::string out;
  out += "chip " + chip.chip_id + "\n";
  out += "age " + fmt_double(chip.age_months) + "\n";
  out += "seeds snapshot=" + std::to_string(chip.snapshot_seed) + " chip=" + std::to_string(chip.chip_seed) +
         " activity=" + std::to_string(chip.activity_seed) + "\n";
  out += "arcs " + std::to_string(chip.arc_delays.size()) + "\n";
  for (std::size_t i = 0; i < chip.arc_delays.size(); ++i)
    out += "arc " + std::to_string(i) + " " + fmt_double(chip.arc_delays[i]) + "\n";
  return out;
}

inline ChipInstance parse_chip(std::string_view text) {
  ChipInstance chip;
  bool saw_chip = false, saw_age = false, saw_seeds = false;
  long long expect_arcs = -1;
  std::size_t next_arc = 0;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nlpos = text.find('\n', pos);
    std::string_view line = text.substr(pos, (nlpos == std::string_view::npos ? text.size() : nlpos) - pos);
    ++lineno;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    auto toks = split_ws(line);
    if (!toks.empty()) {
      if (toks[0] == "chip") {
        if (saw_chip || toks.size() != 2) throw parse_error("expected one 'chip <id>' line", lineno, 1);
        chip.chip_id = std::string(toks[1]);
        saw_chip = true;
      } else if (toks[0] == "age") {
        if (saw_age || toks.size() != 2) throw parse_error("expected one 'age <months>' line", lineno, 1);
        chip.age_months = parse_double(toks[1], lineno, 1);
        if (chip.age_months < 0.0) throw parse_error("negative age", lineno, 1);
        saw_age = true;
      } else if (toks[0] == "seeds") {
        if (saw_seeds || toks.size() != 4) throw parse_error("expected 'seeds snapshot= chip= activity='", lineno, 1);
        auto grab = [&](std::string_view tok, std::string_view key) {
          auto [k, v] = split_kv(tok);
          if (k != key) throw parse_error("expected '" + std::string(key) + "='", lineno, 1);
          return parse_uint(v, lineno, 1);
        };
        chip.snapshot_seed = grab(toks[1], "snapshot");
        chip.chip_seed = grab(toks[2], "chip");
        chip.activity_seed = grab(toks[3], "activity");
        saw_seeds = true;
      } else if (toks[0] == "arcs") {
        if (expect_arcs >= 0 || toks.size() != 2) throw parse_error("expected one 'arcs <n>' line", lineno, 1);
        expect_arcs = parse_int(toks[1], lineno, 1);
        if (expect_arcs < 0) throw parse_error("negative arc count", lineno, 1);
        chip.arc_delays.reserve(static_cast<std::size_t>(expect_arcs));
      } else if (toks[0] == "arc") {
        if (expect_arcs < 0) throw parse_error("'arc' before 'arcs <n>'", lineno, 1);
        if (toks.size() != 3) throw parse_error("expected 'arc <index> <ps>'", lineno, 1);
        auto idx = parse_int(toks[1], lineno, 1);
        if (idx != static_cast<long long>(next_arc)) throw parse_error("arc indices must be dense and in order", lineno, 1);
        double d = parse_double(toks[2], lineno, 1);
        if (!(d > 0.0)) throw parse_error("non-positive arc delay", lineno, 1);
        chip.arc_delays.push_back(d);
        ++next_arc;
      } else {
        throw parse_error("unknown directive '" + std::string(toks[0]) + "'", lineno, 1);
      }
    }
    if (nlpos == std::string_view::npos) break;
    pos = nlpos + 1;
  }
  if (!saw_chip || !saw_age || !saw_seeds || expect_arcs < 0) throw parse_error("incomplete chip file", lineno, 1);
  if (static_cast<long long>(next_arc) != expect_arcs) throw parse_error("arc count mismatch", lineno, 1);
  return chip;
}

}  // namespace agewise
