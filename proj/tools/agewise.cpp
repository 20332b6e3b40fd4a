#include <cstdio>

#include <CLI11.hpp>

#include "agewise/campaign.hpp"

namespace {

using namespace agewise;

struct GlobalArgs {
  std::string config_path;
  std::string out_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

CampaignConfig base_config(const GlobalArgs& ga) {
  ConfigMap m;
  if (!ga.config_path.empty()) m = parse_config(read_text_file(ga.config_path));
  for (const auto& o : ga.overrides) apply_override(m, o);
  CampaignConfig c = campaign_config_from(m);
  if (ga.seed_set) c.seed = ga.seed;
  return c;
}

std::string out_or(const GlobalArgs& ga, const std::string& fallback) {
  return ga.out_path.empty() ? fallback : ga.out_path;
}

Netlist load_netlist(const std::string& path) { return parse_netlist(read_text_file(path)); }

int g_exit = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"side-channel delay workbench: synthetic designs, fab + aging simulation, tester sweeps, detection"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs ga;
  app.add_option("--seed", ga.seed, "global seed (all per-stage streams derive from it)")
      ->each([&](const std::string&) { ga.seed_set = true; });
  app.add_option("--config", ga.config_path, "campaign config file (INI sections)");
  app.add_option("--override", ga.overrides, "config override, section.key=value (repeatable)");
  app.add_option("--out", ga.out_path, "output file (or directory for campaign)");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic netlist");
  int g_ffs = 0, g_gates = 0, g_depth = 0;
  double g_guard = -1.0;
  gen->add_option("--num-ffs", g_ffs, "flip-flop count");
  gen->add_option("--gates-per-cone", g_gates, "combinational gates per FF cone");
  gen->add_option("--depth", g_depth, "logic levels per cone");
  gen->add_option("--guardband-fraction", g_guard, "clock-period guardband over the critical path");
  gen->callback([&] {
    CampaignConfig c = base_config(ga);
    if (gen->count("--num-ffs")) c.gen.num_ffs = g_ffs;
    if (gen->count("--gates-per-cone")) c.gen.gates_per_cone = g_gates;
    if (gen->count("--depth")) c.gen.depth = g_depth;
    if (gen->count("--guardband-fraction")) c.gen.guardband_fraction = g_guard;
    c.gen.seed = derive_seed(c.seed, 0x67656e);
    Netlist nl = generate_netlist(c.gen);
    std::string path = out_or(ga, "netlist.nlf");
    write_text_file(path, emit_netlist(nl));
    std::printf("%s: %zu gates, %zu ffs, period %s ps\n", path.c_str(), nl.gates.size(), nl.ffs.size(),
                fmt_double(nl.period_ps).c_str());
  });

  // activity
  auto* act = app.add_subcommand("activity", "simulate switching activity");
  std::string a_netlist, a_role = "ref";
  long long a_cycles = 0;
  act->add_option("--netlist", a_netlist, "netlist file")->required();
  act->add_option("--cycles", a_cycles, "simulated clock cycles");
  act->add_option("--role", a_role, "seed stream: ref (design-time) or aging (field)")
      ->check(CLI::IsMember({"ref", "aging"}));
  act->callback([&] {
    CampaignConfig c = base_config(ga);
    if (act->count("--cycles")) c.cycles = a_cycles;
    std::uint64_t s = derive_seed(c.seed, a_role == "ref" ? 0x616374526566 : 0x616374416765);
    Netlist nl = load_netlist(a_netlist);
    ActivityProfile ap = simulate_activity(nl, static_cast<std::uint64_t>(c.cycles), s);
    std::string path = out_or(ga, "activity_" + a_role + ".act");
    write_text_file(path, emit_activity(ap));
    std::printf("%s: %zu nets over %llu cycles\n", path.c_str(), ap.nets.size(),
                static_cast<unsigned long long>(ap.cycles));
  });

  // fab
  auto* fab = app.add_subcommand("fab", "fabricate one fresh chip from a process snapshot");
  std::string f_netlist, f_chip_id;
  int f_index = 0;
  fab->add_option("--netlist", f_netlist, "netlist file")->required();
  fab->add_option("--chip-index", f_index, "chip index within the lot (seed derivation)");
  fab->add_option("--chip-id", f_chip_id, "chip name (default derives from the index)");
  fab->callback([&] {
    CampaignConfig c = base_config(ga);
    std::uint64_t snap = c.snapshot_seed ? c.snapshot_seed : derive_seed(c.seed, 0x736e6170);
    Netlist nl = load_netlist(f_netlist);
    TimingGraph g = elaborate(nl, default_library());
    FabModel fm = sample_fab_model(c.fab, snap);
    std::string id = f_chip_id.empty() ? campaign_detail::chip_name(0, f_index) : f_chip_id;
    ChipInstance chip = fabricate(g, fm, id, derive_seed(c.seed, 0x63686970, static_cast<std::uint64_t>(f_index)));
    chip.activity_seed = derive_seed(c.seed, 0x616374416765);
    std::string path = out_or(ga, id + ".chip");
    write_text_file(path, emit_chip(chip));
    std::printf("%s: %zu arcs\n", path.c_str(), chip.arc_delays.size());
  });

  // age
  auto* age = app.add_subcommand("age", "apply stress aging to a fresh chip");
  std::string age_netlist, age_chip_path, age_activity;
  double age_months = 0.0, age_temp = -1.0, age_vdd = -1.0;
  age->add_option("--netlist", age_netlist, "netlist file")->required();
  age->add_option("--chip", age_chip_path, "fresh chip file")->required();
  age->add_option("--activity", age_activity, "field activity profile")->required();
  age->add_option("--months", age_months, "stress duration in months")->required();
  age->add_option("--temp-c", age_temp, "stress temperature, Celsius");
  age->add_option("--vdd", age_vdd, "supply voltage, V");
  age->callback([&] {
    CampaignConfig c = base_config(ga);
    Netlist nl = load_netlist(age_netlist);
    TimingGraph g = elaborate(nl, default_library());
    ChipInstance chip = parse_chip(read_text_file(age_chip_path));
    ActivityProfile ap = parse_activity(read_text_file(age_activity));
    AgingConditions cond;
    cond.months = age_months;
    cond.temp_c = age->count("--temp-c") ? age_temp : c.temp_c;
    cond.vdd = age->count("--vdd") ? age_vdd : c.vdd;
    age_chip(chip, g, ap, cond);
    std::string path = out_or(ga, "aged.chip");
    write_text_file(path, emit_chip(chip));
    std::printf("%s: aged %s months\n", path.c_str(), fmt_double(age_months).c_str());
  });

  // cfst
  auto* cf = app.add_subcommand("cfst", "sweep a chip on the clock-frequency tester");
  std::string cf_netlist, cf_chip;
  int cf_k = 0;
  double cf_fmax = -1.0, cf_step = -1.0;
  cf->add_option("--netlist", cf_netlist, "netlist file")->required();
  cf->add_option("--chip", cf_chip, "chip file")->required();
  cf->add_option("-k,--paths-per-endpoint", cf_k, "longest paths kept per endpoint");
  cf->add_option("--f-max-ghz", cf_fmax, "tester maximum clock frequency");
  cf->add_option("--step-ps", cf_step, "tester period step");
  cf->callback([&] {
    CampaignConfig c = base_config(ga);
    if (cf->count("-k")) c.paths_per_endpoint = cf_k;
    if (cf->count("--f-max-ghz")) c.cfst.f_max_ghz = cf_fmax;
    if (cf->count("--step-ps")) c.cfst.step_ps = cf_step;
    c.cfst.validate();
    Netlist nl = load_netlist(cf_netlist);
    TimingGraph g = elaborate(nl, default_library());
    auto paths = enumerate_paths(g, c.paths_per_endpoint, c.threads);
    ChipInstance chip = parse_chip(read_text_file(cf_chip));
    CfstResult r = cfst_measure(g, paths, chip, c.cfst);
    std::string path = out_or(ga, chip.chip_id + ".cfst");
    write_text_file(path, emit_cfst(r));
    std::printf("%s: %zu measured, %zu below the tester floor\n", path.c_str(), r.measurements.size(),
                r.unmeasurable.size());
  });

  // adp
  auto* adp = app.add_subcommand("adp", "identify age-distinguishing path groups");
  std::string adp_netlist, adp_activity;
  int adp_k = 0;
  double adp_horizon = -1.0;
  adp->add_option("--netlist", adp_netlist, "netlist file")->required();
  adp->add_option("--activity", adp_activity, "design-time reference activity")->required();
  adp->add_option("-k,--paths-per-endpoint", adp_k, "longest paths kept per endpoint");
  adp->add_option("--horizon-months", adp_horizon, "predicted stress horizon");
  adp->callback([&] {
    CampaignConfig c = base_config(ga);
    if (adp->count("-k")) c.paths_per_endpoint = adp_k;
    if (adp->count("--horizon-months")) c.horizon_months = adp_horizon;
    Netlist nl = load_netlist(adp_netlist);
    CellLibrary lib = default_library();
    TimingGraph g = elaborate(nl, lib);
    auto paths = enumerate_paths(g, c.paths_per_endpoint, c.threads);
    ActivityProfile ap = parse_activity(read_text_file(adp_activity));
    auto [tc_min, tc_max] = tc_bounds(ap);
    AgingConditions cond;
    cond.temp_c = c.temp_c;
    cond.vdd = c.vdd;
    GateAgingDB db = build_gate_aging_db(lib, static_cast<double>(tc_min), static_cast<double>(tc_max),
                                         static_cast<double>(ap.cycles), cond);
    GateAgeModel model = fit_gate_age_model(db, derive_seed(c.seed, 0x6d6f64656c));
    AdpSets sets = identify_adp(g, paths, model, ap, c.horizon_months, c.cfst);
    std::string path = out_or(ga, "adp.json");
    write_text_file(path, emit_adp(sets));
    std::printf("%s: %zu most-affected, %zu least-affected, %zu dropped\n", path.c_str(), sets.map_ids.size(),
                sets.lap_ids.size(), sets.dropped_ids.size());
  });

  // detect
  auto* det = app.add_subcommand("detect", "classify one chip as new or aged");
  std::string d_netlist, d_adp, d_cfst, d_chip, d_hist;
  int d_k = 0, d_index = 0;
  double d_th = -1.0;
  std::uint64_t d_split = 0;
  det->add_option("--netlist", d_netlist, "netlist file")->required();
  det->add_option("--adp", d_adp, "path-group file from adp")->required();
  det->add_option("--cfst", d_cfst, "tester sweep file");
  det->add_option("--chip", d_chip, "chip file (sweeps it on the tester internally)");
  det->add_option("-k,--paths-per-endpoint", d_k, "longest paths kept per endpoint");
  det->add_option("--th-ps", d_th, "mean-shift decision threshold");
  det->add_option("--split-seed", d_split, "train/val/test shuffle seed");
  det->add_option("--chip-index", d_index, "derives the split seed when --split-seed is absent");
  det->add_option("--hist", d_hist, "also write the added-delay histogram CSV here");
  det->callback([&] {
    CampaignConfig c = base_config(ga);
    if (det->count("-k")) c.paths_per_endpoint = d_k;
    if (det->count("--th-ps")) c.th_ps = d_th;
    if (d_cfst.empty() == d_chip.empty()) throw model_error("detect: give exactly one of --cfst or --chip");
    Netlist nl = load_netlist(d_netlist);
    TimingGraph g = elaborate(nl, default_library());
    auto paths = enumerate_paths(g, c.paths_per_endpoint, c.threads);
    AdpSets sets = parse_adp(read_text_file(d_adp));
    std::string chip_id;
    CfstResult sweep;
    if (!d_chip.empty()) {
      ChipInstance chip = parse_chip(read_text_file(d_chip));
      chip_id = chip.chip_id;
      CfstConfig tester;
      tester.f_max_ghz = sets.f_max_ghz;
      sweep = cfst_measure(g, paths, chip, tester);
    } else {
      chip_id = std::filesystem::path(d_cfst).stem().string();
      sweep = parse_cfst(read_text_file(d_cfst));
    }
    std::uint64_t split = det->count("--split-seed")
                              ? d_split
                              : derive_seed(c.seed, 0x73706c74, static_cast<std::uint64_t>(d_index));
    PathDataset ds = build_dataset(g, paths);
    auto outcome = run_detection_full(ds, sets, sweep, chip_id, split, c.th_ps);
    std::string path = out_or(ga, "report.json");
    write_text_file(path, emit_report(outcome.report));
    if (!d_hist.empty()) write_text_file(d_hist, emit_ad_histogram(outcome.histogram));
    const auto& r = outcome.report;
    if (r.valid) {
      std::printf("%s: %s (mean shift %s ps, threshold %s ps)\n", chip_id.c_str(), r.verdict.c_str(),
                  fmt_double(r.ms_ps).c_str(), fmt_double(r.th_ps).c_str());
    } else {
      std::fprintf(stderr, "error: %s: %s\n", r.error_stage.c_str(), r.error_cause.c_str());
      g_exit = 2;
    }
  });

  // campaign
  auto* camp = app.add_subcommand("campaign", "run the full multi-chip study");
  camp->callback([&] {
    CampaignConfig c = base_config(ga);
    if (!ga.out_path.empty()) c.out_dir = ga.out_path;
    CampaignResult r = run_campaign(c);
    std::fputs(read_text_file((r.dir / "summary.txt").string()).c_str(), stdout);
    for (const auto& cr : r.chips)
      if (!cr.report.valid) {
        std::fprintf(stderr, "error: %s: %s: %s\n", cr.chip_id.c_str(), cr.report.error_stage.c_str(),
                     cr.report.error_cause.c_str());
        g_exit = 2;
      }
  });

  // report
  auto* rep = app.add_subcommand("report", "summarize a finished campaign directory");
  std::string rep_dir;
  rep->add_option("run_dir", rep_dir, "campaign output directory")->required();
  rep->callback([&] {
    CampaignResult r = cmd_report(rep_dir);
    std::fputs(read_text_file((r.dir / "report" / "summary.txt").string()).c_str(), stdout);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return g_exit;
}
