#pragma once

#include <cmath>
#include <map>

#include "agewise/fabsim.hpp"
#include "agewise/sta.hpp"

namespace agewise {

struct CfstConfig {
  double f_max_ghz = 4.0;  // fastest clock the tester can sweep to
  double step_ps = 10.0;   // sweep granularity

  double floor_ps() const { return 1000.0 / f_max_ghz; }
  void validate() const {
    if (!(f_max_ghz > 0.0)) throw model_error("cfst config: f_max must be positive");
    if (!(step_ps > 0.0)) throw model_error("cfst config: step must be positive");
  }
};

struct CfstResult {
  std::map<int, double> measurements;  // path id -> quantized delay (ps)
  std::vector<int> unmeasurable;       // paths faster than the tester floor
};

// True silicon delay of one path on one chip: same fixed summation order as the
// nominal analysis, but over the chip's arc delays.
inline double chip_path_delay(const TimingGraph& g, const ChipInstance& chip, const TimingPath& p) {
  if (chip.arc_delays.size() != g.arcs.size()) throw model_error("chip_path_delay: arc table does not match graph");
  double acc = 0.0;
  for (int a : p.lp_arcs) acc += chip.arc_delays[static_cast<std::size_t>(a)];
  acc += chip.arc_delays[static_cast<std::size_t>(p.clkq_arc)];
  for (int a : p.dp_arcs) acc += chip.arc_delays[static_cast<std::size_t>(a)];
  acc += p.setup_ps;
  double cp = 0.0;
  for (int a : p.cp_arcs) cp += chip.arc_delays[static_cast<std::size_t>(a)];
  double total = acc - cp;
  if (total < 0.0) throw model_error("chip_path_delay: negative path delay");
  return total;
}

inline bool cfst_measurable(double d_true_ps, const CfstConfig& cfg) { return d_true_ps >= cfg.floor_ps(); }

// Clock sweep quantization: first grid period (multiples of step, anchored at 0)
// that the path passes at.
inline double cfst_grid(double d_true_ps, const CfstConfig& cfg) {
  return cfg.step_ps * std::ceil(d_true_ps / cfg.step_ps);
}

inline CfstResult cfst_measure(const TimingGraph& g, const std::vector<TimingPath>& paths, const ChipInstance& chip,
                               const CfstConfig& cfg = {}) {
  cfg.validate();
  CfstResult r;
  for (const auto& p : paths) {
    double d = chip_path_delay(g, chip, p);
    if (cfst_measurable(d, cfg))
      r.measurements[p.id] = cfst_grid(d, cfg);
    else
      r.unmeasurable.push_back(p.id);
  }
  return r;
}

inline std::string emit_cfst(const CfstResult& r) {
  std::string out;
  for (const auto& [id, v] : r.measurements) out += "path " + std::to_string(id) + " cfst=" + fmt_double(v) + "\n";
  out += "unmeasurable\n";
  for (int id : r.unmeasurable) out += "path " + std::to_string(id) + "\n";
  return out;
}

inline CfstResult parse_cfst(std::string_view text) {
  CfstResult r;
  bool in_unmeasurable = false;
  bool saw_marker = false;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nlpos = text.find('\n', pos);
    std::string_view line = text.substr(pos, (nlpos == std::string_view::npos ? text.size() : nlpos) - pos);
    ++lineno;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    auto toks = split_ws(line);
    if (!toks.empty()) {
      if (toks[0] == "unmeasurable") {
        if (saw_marker || toks.size() != 1) throw parse_error("expected one 'unmeasurable' marker", lineno, 1);
        in_unmeasurable = true;
        saw_marker = true;
      } else if (toks[0] == "path") {
        if (!in_unmeasurable) {
          if (toks.size() != 3) throw parse_error("expected 'path <id> cfst=<ps>'", lineno, 1);
          int id = static_cast<int>(parse_int(toks[1], lineno, 1));
          auto [k, v] = split_kv(toks[2]);
          if (k != "cfst") throw parse_error("expected 'cfst='", lineno, 1);
          double d = parse_double(v, lineno, 1);
          if (!(d > 0.0)) throw parse_error("non-positive measurement", lineno, 1);
          if (!r.measurements.emplace(id, d).second) throw parse_error("duplicate path id", lineno, 1);
        } else {
          if (toks.size() != 2) throw parse_error("expected 'path <id>'", lineno, 1);
          int id = static_cast<int>(parse_int(toks[1], lineno, 1));
          if (r.measurements.count(id)) throw parse_error("path listed as both measured and unmeasurable", lineno, 1);
          r.unmeasurable.push_back(id);
        }
      } else {
        throw parse_error("unknown directive '" + std::string(toks[0]) + "'", lineno, 1);
      }
    }
    if (nlpos == std::string_view::npos) break;
    pos = nlpos + 1;
  }
  if (!saw_marker) throw parse_error("missing 'unmeasurable' marker", lineno, 1);
  return r;
}

}  // namespace agewise
