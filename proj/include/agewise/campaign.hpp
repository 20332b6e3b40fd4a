#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include "agewise/detector.hpp"
#include "agewise/netlist_gen.hpp"

namespace agewise {

struct CampaignConfig {
  GenSpec gen;  // gen.seed is filled from the global seed at run time
  FabConfig fab;
  std::uint64_t snapshot_seed = 0;  // 0 = derive from the global seed
  long long cycles = 10000;
  double temp_c = 125.0;
  double vdd = 0.85;
  CfstConfig cfst;
  double horizon_months = 12.0;
  double th_ps = 10.0;
  int paths_per_endpoint = 10;
  std::array<int, 13> chips_per_age{};  // index = age in months
  unsigned threads = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "campaign_out";

  CampaignConfig() {
    chips_per_age[0] = 3;
    for (int a = 1; a <= 12; ++a) chips_per_age[static_cast<std::size_t>(a)] = 1;
  }

  int total_chips() const {
    int s = 0;
    for (int c : chips_per_age) s += c;
    return s;
  }

  void validate() const {
    fab.validate();
    cfst.validate();
    if (cycles < 1) throw model_error("campaign config: cycles must be >= 1");
    if (!(horizon_months > 0.0)) throw model_error("campaign config: horizon must be positive");
    if (!(th_ps > 0.0)) throw model_error("campaign config: threshold must be positive");
    if (paths_per_endpoint < 1) throw model_error("campaign config: paths_per_endpoint must be >= 1");
    if (threads < 1) throw model_error("campaign config: threads must be >= 1");
    for (int c : chips_per_age)
      if (c < 0) throw model_error("campaign config: negative chip count");
    if (total_chips() < 1) throw model_error("campaign config: no chips requested");
  }
};

using ConfigMap = std::map<std::string, std::string>;

// "[section]" headers, "key = value" lines, '#' comments. Keys are flattened to
// "section.key".
inline ConfigMap parse_config(std::string_view text) {
  ConfigMap out;
  std::string section;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nlpos = text.find('\n', pos);
    std::string_view line = text.substr(pos, (nlpos == std::string_view::npos ? text.size() : nlpos) - pos);
    ++lineno;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = trim(line);
    if (!line.empty()) {
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) throw parse_error("bad section header", lineno, 1);
        section = std::string(trim(line.substr(1, line.size() - 2)));
        if (section.empty()) throw parse_error("empty section name", lineno, 1);
      } else {
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw parse_error("expected 'key = value'", lineno, 1);
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw parse_error("empty key", lineno, 1);
        if (section.empty()) throw parse_error("key outside any [section]", lineno, 1);
        std::string full = section + "." + std::string(key);
        if (!out.emplace(full, std::string(value)).second)
          throw parse_error("duplicate key '" + full + "'", lineno, 1);
      }
    }
    if (nlpos == std::string_view::npos) break;
    pos = nlpos + 1;
  }
  return out;
}

inline void apply_override(ConfigMap& cfg, std::string_view keyval) {
  auto eq = keyval.find('=');
  if (eq == std::string_view::npos) throw model_error("override must be section.key=value");
  auto key = trim(keyval.substr(0, eq));
  auto value = trim(keyval.substr(eq + 1));
  if (key.find('.') == std::string_view::npos) throw model_error("override key must be section.key");
  cfg[std::string(key)] = std::string(value);
}

inline CampaignConfig campaign_config_from(const ConfigMap& m) {
  CampaignConfig c;
  std::set<std::string> known;
  auto dbl = [&](const char* key, double& slot) {
    known.insert(key);
    if (auto it = m.find(key); it != m.end()) slot = parse_double(it->second);
  };
  auto integer = [&](const char* key, auto& slot) {
    known.insert(key);
    if (auto it = m.find(key); it != m.end()) slot = static_cast<std::decay_t<decltype(slot)>>(parse_int(it->second));
  };
  auto str = [&](const char* key, std::string& slot) {
    known.insert(key);
    if (auto it = m.find(key); it != m.end()) slot = it->second;
  };
  integer("gen.num_ffs", c.gen.num_ffs);
  integer("gen.gates_per_cone", c.gen.gates_per_cone);
  integer("gen.depth", c.gen.depth);
  dbl("gen.guardband_fraction", c.gen.guardband_fraction);
  dbl("fab.sigma_random", c.fab.sigma_random);
  dbl("fab.sigma_systematic", c.fab.sigma_systematic);
  dbl("fab.drift_gate_lo", c.fab.drift_gate_lo);
  dbl("fab.drift_gate_hi", c.fab.drift_gate_hi);
  dbl("fab.drift_layer_lo", c.fab.drift_layer_lo);
  dbl("fab.drift_layer_hi", c.fab.drift_layer_hi);
  integer("fab.snapshot_seed", c.snapshot_seed);
  integer("activity.cycles", c.cycles);
  dbl("aging.temp_c", c.temp_c);
  dbl("aging.vdd", c.vdd);
  dbl("cfst.f_max_ghz", c.cfst.f_max_ghz);
  dbl("cfst.step_ps", c.cfst.step_ps);
  dbl("detect.horizon_months", c.horizon_months);
  dbl("detect.th_ps", c.th_ps);
  integer("detect.paths_per_endpoint", c.paths_per_endpoint);
  for (int a = 0; a <= 12; ++a)
    integer(("campaign.chips_age_" + std::to_string(a)).c_str(), c.chips_per_age[static_cast<std::size_t>(a)]);
  integer("campaign.threads", c.threads);
  integer("campaign.seed", c.seed);
  str("campaign.out_dir", c.out_dir);
  for (const auto& [k, v] : m)
    if (!known.count(k)) throw model_error("unknown config key '" + k + "'");
  c.validate();
  return c;
}

inline std::string emit_config(const CampaignConfig& c) {
  std::string o;
  o += "[gen]\n";
  o += "num_ffs = " + std::to_string(c.gen.num_ffs) + "\n";
  o += "gates_per_cone = " + std::to_string(c.gen.gates_per_cone) + "\n";
  o += "depth = " + std::to_string(c.gen.depth) + "\n";
  o += "guardband_fraction = " + fmt_double(c.gen.guardband_fraction) + "\n";
  o += "\n[fab]\n";
  o += "sigma_random = " + fmt_double(c.fab.sigma_random) + "\n";
  o += "sigma_systematic = " + fmt_double(c.fab.sigma_systematic) + "\n";
  o += "drift_gate_lo = " + fmt_double(c.fab.drift_gate_lo) + "\n";
  o += "drift_gate_hi = " + fmt_double(c.fab.drift_gate_hi) + "\n";
  o += "drift_layer_lo = " + fmt_double(c.fab.drift_layer_lo) + "\n";
  o += "drift_layer_hi = " + fmt_double(c.fab.drift_layer_hi) + "\n";
  o += "snapshot_seed = " + std::to_string(c.snapshot_seed) + "  # 0 = derive from the global seed\n";
  o += "\n[activity]\n";
  o += "cycles = " + std::to_string(c.cycles) + "\n";
  o += "\n[aging]\n";
  o += "temp_c = " + fmt_double(c.temp_c) + "\n";
  o += "vdd = " + fmt_double(c.vdd) + "\n";
  o += "\n[cfst]\n";
  o += "f_max_ghz = " + fmt_double(c.cfst.f_max_ghz) + "\n";
  o += "step_ps = " + fmt_double(c.cfst.step_ps) + "\n";
  o += "\n[detect]\n";
  o += "horizon_months = " + fmt_double(c.horizon_months) + "\n";
  o += "th_ps = " + fmt_double(c.th_ps) + "\n";
  o += "paths_per_endpoint = " + std::to_string(c.paths_per_endpoint) + "\n";
  o += "\n[campaign]\n";
  for (int a = 0; a <= 12; ++a)
    o += "chips_age_" + std::to_string(a) + " = " + std::to_string(c.chips_per_age[static_cast<std::size_t>(a)]) +
         "\n";
  o += "threads = " + std::to_string(c.threads) + "\n";
  o += "seed = " + std::to_string(c.seed) + "\n";
  o += "out_dir = " + c.out_dir + "\n";
  return o;
}

inline std::string default_config_text() { return emit_config(CampaignConfig{}); }

struct ChipRun {
  std::string chip_id;
  int age_months = 0;
  DetectionReport report;
};

struct CampaignResult {
  std::filesystem::path dir;
  std::vector<ChipRun> chips;
};

namespace campaign_detail {

inline std::string chip_name(int age, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "chip_a%02d_c%03d", age, index);
  return buf;
}

inline int age_of_chip_name(const std::string& name) {
  if (name.size() < 13 || name.rfind("chip_a", 0) != 0) throw model_error("unrecognized chip name '" + name + "'");
  return static_cast<int>(parse_int(std::string_view(name).substr(6, 2)));
}

inline std::string two_dec(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string summary_csv(const std::vector<ChipRun>& chips) {
  std::string o = "chip,age_months,valid,n,m,mean_map_ps,mean_lap_ps,ms_ps,th_ps,verdict\n";
  for (const auto& cr : chips) {
    const auto& r = cr.report;
    o += cr.chip_id + "," + std::to_string(cr.age_months) + "," + (r.valid ? "1" : "0") + "," + std::to_string(r.n) +
         "," + std::to_string(r.m) + "," + fmt_double(r.mean_map_ps) + "," + fmt_double(r.mean_lap_ps) + "," +
         fmt_double(r.ms_ps) + "," + fmt_double(r.th_ps) + "," + (r.valid ? r.verdict : "invalid") + "\n";
  }
  return o;
}

inline std::string summary_txt(const std::vector<ChipRun>& chips) {
  std::string o = "age_months  chips  mean_map_ps  mean_lap_ps  ms_ps     aged\n";
  for (int age = 0; age <= 12; ++age) {
    int total = 0, valid = 0, aged = 0;
    double mm = 0.0, ml = 0.0, ms = 0.0;
    for (const auto& cr : chips) {
      if (cr.age_months != age) continue;
      ++total;
      if (!cr.report.valid) continue;
      ++valid;
      mm += cr.report.mean_map_ps;
      ml += cr.report.mean_lap_ps;
      ms += cr.report.ms_ps;
      if (cr.report.verdict == "aged") ++aged;
    }
    if (total == 0) continue;
    double dv = valid ? static_cast<double>(valid) : 1.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-10d  %-5d  %-11s  %-11s  %-8s  %d/%d\n", age, total, two_dec(mm / dv).c_str(),
                  two_dec(ml / dv).c_str(), two_dec(ms / dv).c_str(), aged, total);
    o += buf;
  }
  return o;
}

}  // namespace campaign_detail

// End-to-end: one design + process snapshot, a chip per requested (age, index),
// each chip fabricated, aged, swept on the tester, and run through detection.
inline CampaignResult run_campaign(const CampaignConfig& cfg_in) {
  CampaignConfig cfg = cfg_in;
  cfg.validate();
  namespace fs = std::filesystem;
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir / "chips");

  cfg.gen.seed = derive_seed(cfg.seed, 0x67656e);
  const std::uint64_t snapshot_seed =
      cfg.snapshot_seed ? cfg.snapshot_seed : derive_seed(cfg.seed, 0x736e6170);
  const std::uint64_t act_ref_seed = derive_seed(cfg.seed, 0x616374526566);
  const std::uint64_t act_age_seed = derive_seed(cfg.seed, 0x616374416765);

  write_text_file((dir / "config.resolved.ini").string(), emit_config(cfg));

  Netlist nl = generate_netlist(cfg.gen);
  write_text_file((dir / "netlist.nlf").string(), emit_netlist(nl));
  CellLibrary lib = default_library();
  TimingGraph g = elaborate(nl, lib);

  ActivityProfile act_ref = simulate_activity(nl, cfg.cycles, act_ref_seed);
  write_text_file((dir / "activity_ref.act").string(), emit_activity(act_ref));
  ActivityProfile act_age = simulate_activity(nl, cfg.cycles, act_age_seed);
  write_text_file((dir / "activity_aging.act").string(), emit_activity(act_age));

  auto paths = enumerate_paths(g, cfg.paths_per_endpoint, cfg.threads);
  write_text_file((dir / "paths.paths").string(), emit_paths(paths));

  PathDataset ds = build_dataset(g, paths);
  write_text_file((dir / "features.csv").string(), emit_dataset_csv(ds));

  auto [tc_min, tc_max] = tc_bounds(act_ref);
  AgingConditions base_cond;
  base_cond.temp_c = cfg.temp_c;
  base_cond.vdd = cfg.vdd;
  GateAgingDB db = build_gate_aging_db(lib, static_cast<double>(tc_min), static_cast<double>(tc_max),
                                       static_cast<double>(cfg.cycles), base_cond);
  GateAgeModel age_model = fit_gate_age_model(db, derive_seed(cfg.seed, 0x6d6f64656c));

  AdpSets adp = identify_adp(g, paths, age_model, act_ref, cfg.horizon_months, cfg.cfst);
  write_text_file((dir / "adp.json").string(), emit_adp(adp));

  FabModel fab = sample_fab_model(cfg.fab, snapshot_seed);

  struct Job {
    std::string id;
    int age;
    std::uint64_t chip_seed, split_seed;
  };
  std::vector<Job> jobs;
  {
    int idx = 0;
    for (int age = 0; age <= 12; ++age)
      for (int k = 0; k < cfg.chips_per_age[static_cast<std::size_t>(age)]; ++k) {
        Job j;
        j.id = campaign_detail::chip_name(age, k);
        j.age = age;
        j.chip_seed = derive_seed(cfg.seed, 0x63686970, static_cast<std::uint64_t>(idx));
        j.split_seed = derive_seed(cfg.seed, 0x73706c74, static_cast<std::uint64_t>(idx));
        jobs.push_back(std::move(j));
        ++idx;
      }
  }

  struct Done {
    ChipInstance chip;
    CfstResult cfst;
    DetectionOutcome outcome;
  };
  std::vector<Done> done(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    ChipInstance chip = fabricate(g, fab, job.id, job.chip_seed);
    chip.activity_seed = act_age_seed;
    if (job.age > 0) {
      AgingConditions cond = base_cond;
      cond.months = job.age;
      age_chip(chip, g, act_age, cond);
    }
    CfstResult cf = cfst_measure(g, paths, chip, cfg.cfst);
    auto outcome = run_detection_full(ds, adp, cf, job.id, job.split_seed, cfg.th_ps);
    done[i] = Done{std::move(chip), std::move(cf), std::move(outcome)};
  });

  CampaignResult result;
  result.dir = dir;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    auto& d = done[i];
    write_text_file((dir / "chips" / (job.id + ".chip")).string(), emit_chip(d.chip));
    write_text_file((dir / "chips" / (job.id + ".cfst")).string(), emit_cfst(d.cfst));
    write_text_file((dir / "chips" / (job.id + ".report.json")).string(), emit_report(d.outcome.report));
    write_text_file((dir / "chips" / (job.id + ".hist.csv")).string(), emit_ad_histogram(d.outcome.histogram));
    result.chips.push_back({job.id, job.age, std::move(d.outcome.report)});
  }

  write_text_file((dir / "summary.csv").string(), campaign_detail::summary_csv(result.chips));
  write_text_file((dir / "summary.txt").string(), campaign_detail::summary_txt(result.chips));
  return result;
}

// Re-derive the summary table and per-chip histogram copies from a finished
// campaign directory.
inline CampaignResult cmd_report(const std::string& run_dir) {
  namespace fs = std::filesystem;
  fs::path dir(run_dir);
  if (!fs::exists(dir / "chips")) throw detect_error("report", "no chips/ directory under " + run_dir);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir / "chips")) {
    auto fn = e.path().filename().string();
    if (fn.size() > 12 && fn.substr(fn.size() - 12) == ".report.json")
      names.push_back(fn.substr(0, fn.size() - 12));
  }
  if (names.empty()) throw detect_error("report", "no chip reports under " + run_dir);
  std::sort(names.begin(), names.end());
  CampaignResult result;
  result.dir = dir;
  fs::create_directories(dir / "report");
  for (const auto& name : names) {
    for (const char* ext : {".chip", ".cfst", ".hist.csv"})
      if (!fs::exists(dir / "chips" / (name + ext)))
        throw detect_error("report", "incomplete run dir: missing " + name + ext);
    auto rep = parse_report(read_text_file((dir / "chips" / (name + ".report.json")).string()));
    auto hist = parse_ad_histogram(read_text_file((dir / "chips" / (name + ".hist.csv")).string()));
    write_text_file((dir / "report" / ("hist_" + name + ".csv")).string(), emit_ad_histogram(hist));
    result.chips.push_back({name, campaign_detail::age_of_chip_name(name), std::move(rep)});
  }
  write_text_file((dir / "report" / "summary.csv").string(), campaign_detail::summary_csv(result.chips));
  write_text_file((dir / "report" / "summary.txt").string(), campaign_detail::summary_txt(result.chips));
  return result;
}

}  // namespace agewise
