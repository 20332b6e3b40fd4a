#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "agewise/campaign.hpp"
#include "helpers.hpp"

using namespace agewise;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

CampaignConfig config_with(std::initializer_list<std::pair<const char*, const char*>> kvs) {
  ConfigMap m = parse_config(default_config_text());
  for (const auto& [k, v] : kvs) m[k] = v;
  return campaign_config_from(m);
}

// Campaign artifacts, relative path -> contents. The report/ subtree is what
// cmd_report regenerates, so the raw-tree comparison leaves it out.
std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) {
      std::string rel = fs::relative(e.path(), root).generic_string();
      if (rel.rfind("report/", 0) == 0) continue;
      files[rel] = read_text_file(e.path().string());
    }
  return files;
}

std::string drop_out_dir_line(const std::string& text) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string line = text.substr(pos, (nl == std::string::npos ? text.size() : nl) - pos);
    if (line.rfind("out_dir", 0) != 0) out += line + "\n";
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      out.push_back(text.substr(pos));
      break;
    }
    out.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

struct MiniCampaign {
  CampaignConfig cfg_a, cfg_b;
  CampaignResult res_a, res_b;
};

// One small but complete campaign: 24 endpoints, two fresh chips and one worn
// chip, run twice into separate directories with identical settings.
const MiniCampaign& mini() {
  static const MiniCampaign fixture = [] {
    MiniCampaign m;
    auto dir_a = testfix::scratch_dir("campaign_a");
    auto dir_b = testfix::scratch_dir("campaign_b");
    ConfigMap cm = parse_config(default_config_text());
    apply_override(cm, "gen.num_ffs=24");
    apply_override(cm, "campaign.chips_age_0=2");
    for (int a = 1; a <= 11; ++a)
      apply_override(cm, "campaign.chips_age_" + std::to_string(a) + "=0");
    apply_override(cm, "campaign.chips_age_12=1");
    apply_override(cm, "campaign.seed=5");
    apply_override(cm, "campaign.out_dir=" + (dir_a / "run").generic_string());
    m.cfg_a = campaign_config_from(cm);
    apply_override(cm, "campaign.out_dir=" + (dir_b / "run").generic_string());
    m.cfg_b = campaign_config_from(cm);
    m.res_a = run_campaign(m.cfg_a);
    m.res_b = run_campaign(m.cfg_b);
    return m;
  }();
  return fixture;
}

}  // namespace

TEST_CASE("config text parsing") {
  SECTION("sections flatten to dotted keys, comments and spacing are ignored") {
    ConfigMap m = parse_config("[gen]\nnum_ffs = 5\n# full-line comment\n\n[fab]\nsigma_random=0.5 # inline\n");
    REQUIRE(m.size() == 2);
    REQUIRE(m.at("gen.num_ffs") == "5");
    REQUIRE(m.at("fab.sigma_random") == "0.5");
  }

  SECTION("malformed text") {
    REQUIRE_THROWS_WITH(parse_config("[gen\n"), ContainsSubstring("bad section header"));
    REQUIRE_THROWS_WITH(parse_config("[]\n"), ContainsSubstring("bad section header"));
    REQUIRE_THROWS_WITH(parse_config("[ ]\n"), ContainsSubstring("empty section name"));
    REQUIRE_THROWS_WITH(parse_config("num_ffs = 5\n"), ContainsSubstring("key outside any [section]"));
    REQUIRE_THROWS_WITH(parse_config("[gen]\n= 5\n"), ContainsSubstring("empty key"));
    REQUIRE_THROWS_WITH(parse_config("[gen]\njust words\n"), ContainsSubstring("expected 'key = value'"));
    REQUIRE_THROWS_WITH(parse_config("[gen]\na = 1\na = 2\n"), ContainsSubstring("duplicate key 'gen.a'"));
  }

  SECTION("line numbers point at the offending line") {
    try {
      parse_config("[gen]\nnum_ffs = 5\noops\n");
      FAIL("expected parse_error");
    } catch (const parse_error& e) {
      REQUIRE(e.line() == 3);
    }
  }

  SECTION("overrides replace or add dotted keys") {
    ConfigMap m;
    apply_override(m, "gen.num_ffs=24");
    REQUIRE(m.at("gen.num_ffs") == "24");
    apply_override(m, " gen.num_ffs = 48 ");
    REQUIRE(m.at("gen.num_ffs") == "48");
    REQUIRE_THROWS_WITH(apply_override(m, "gen.num_ffs"), ContainsSubstring("override must be section.key=value"));
    REQUIRE_THROWS_WITH(apply_override(m, "num_ffs=5"), ContainsSubstring("override key must be section.key"));
  }
}

TEST_CASE("config resolution and validation") {
  SECTION("the default text round-trips through parse and emit") {
    CampaignConfig c = campaign_config_from(parse_config(default_config_text()));
    REQUIRE(emit_config(c) == default_config_text());
    REQUIRE(c.gen.num_ffs == 60);
    REQUIRE(c.cycles == 10000);
    REQUIRE(c.th_ps == 10.0);
    REQUIRE(c.chips_per_age[0] == 3);
    REQUIRE(c.chips_per_age[7] == 1);
    REQUIRE(c.total_chips() == 15);
    REQUIRE(c.out_dir == "campaign_out");
    REQUIRE(c.threads == 1);
  }

  SECTION("an empty map yields the defaults") {
    CampaignConfig c = campaign_config_from(ConfigMap{});
    REQUIRE(emit_config(c) == default_config_text());
  }

  SECTION("typed keys land in their slots") {
    CampaignConfig c = config_with({{"gen.num_ffs", "24"},
                                    {"fab.sigma_random", "0.05"},
                                    {"activity.cycles", "2048"},
                                    {"aging.temp_c", "100"},
                                    {"cfst.f_max_ghz", "5"},
                                    {"detect.horizon_months", "6"},
                                    {"campaign.chips_age_4", "9"},
                                    {"fab.snapshot_seed", "77"},
                                    {"campaign.out_dir", "elsewhere"}});
    REQUIRE(c.gen.num_ffs == 24);
    REQUIRE(c.fab.sigma_random == 0.05);
    REQUIRE(c.cycles == 2048);
    REQUIRE(c.temp_c == 100.0);
    REQUIRE(c.cfst.f_max_ghz == 5.0);
    REQUIRE(c.horizon_months == 6.0);
    REQUIRE(c.chips_per_age[4] == 9);
    REQUIRE(c.snapshot_seed == 77);
    REQUIRE(c.out_dir == "elsewhere");
  }

  SECTION("unknown keys are rejected") {
    ConfigMap m{{"gen.bogus", "1"}};
    REQUIRE_THROWS_WITH(campaign_config_from(m), ContainsSubstring("unknown config key 'gen.bogus'"));
  }

  SECTION("invalid settings are rejected") {
    REQUIRE_THROWS_WITH(config_with({{"campaign.chips_age_3", "-1"}}), ContainsSubstring("negative chip count"));
    REQUIRE_THROWS_WITH(config_with({{"activity.cycles", "0"}}), ContainsSubstring("cycles must be >= 1"));
    REQUIRE_THROWS_WITH(config_with({{"detect.th_ps", "0"}}), ContainsSubstring("threshold must be positive"));
    REQUIRE_THROWS_WITH(config_with({{"detect.horizon_months", "-1"}}), ContainsSubstring("horizon must be positive"));
    REQUIRE_THROWS_WITH(config_with({{"detect.paths_per_endpoint", "0"}}),
                        ContainsSubstring("paths_per_endpoint must be >= 1"));
    REQUIRE_THROWS_WITH(config_with({{"campaign.threads", "0"}}), ContainsSubstring("threads must be >= 1"));
    REQUIRE_THROWS_WITH(config_with({{"fab.sigma_random", "-0.1"}}), ContainsSubstring("negative sigma"));
    REQUIRE_THROWS_WITH(config_with({{"cfst.step_ps", "0"}}), ContainsSubstring("step must be positive"));

    ConfigMap none = parse_config(default_config_text());
    for (int a = 0; a <= 12; ++a) apply_override(none, "campaign.chips_age_" + std::to_string(a) + "=0");
    REQUIRE_THROWS_WITH(campaign_config_from(none), ContainsSubstring("no chips requested"));
  }
}

TEST_CASE("chip naming scheme") {
  REQUIRE(campaign_detail::chip_name(0, 0) == "chip_a00_c000");
  REQUIRE(campaign_detail::chip_name(12, 37) == "chip_a12_c037");
  REQUIRE(campaign_detail::age_of_chip_name("chip_a00_c000") == 0);
  REQUIRE(campaign_detail::age_of_chip_name("chip_a12_c037") == 12);
  REQUIRE(campaign_detail::age_of_chip_name(campaign_detail::chip_name(7, 123)) == 7);
  REQUIRE_THROWS_WITH(campaign_detail::age_of_chip_name("chip_a07"), ContainsSubstring("unrecognized chip name"));
  REQUIRE_THROWS_WITH(campaign_detail::age_of_chip_name("lot_a07_c000"), ContainsSubstring("unrecognized chip name"));
}

TEST_CASE("mini campaign produces a complete, parseable artifact tree") {
  const auto& m = mini();
  const fs::path dir = m.res_a.dir;

  SECTION("chip roster") {
    REQUIRE(m.res_a.chips.size() == 3);
    REQUIRE(m.res_a.chips[0].chip_id == "chip_a00_c000");
    REQUIRE(m.res_a.chips[1].chip_id == "chip_a00_c001");
    REQUIRE(m.res_a.chips[2].chip_id == "chip_a12_c000");
    REQUIRE(m.res_a.chips[0].age_months == 0);
    REQUIRE(m.res_a.chips[1].age_months == 0);
    REQUIRE(m.res_a.chips[2].age_months == 12);
  }

  SECTION("expected files exist") {
    for (const char* f : {"config.resolved.ini", "netlist.nlf", "activity_ref.act", "activity_aging.act",
                          "paths.paths", "features.csv", "adp.json", "summary.csv", "summary.txt"}) {
      INFO(f);
      REQUIRE(fs::exists(dir / f));
    }
    for (const auto& cr : m.res_a.chips)
      for (const char* ext : {".chip", ".cfst", ".report.json", ".hist.csv"}) {
        INFO(cr.chip_id << ext);
        REQUIRE(fs::exists(dir / "chips" / (cr.chip_id + ext)));
      }
  }

  SECTION("the resolved config reproduces the run settings") {
    CampaignConfig back = campaign_config_from(parse_config(read_text_file((dir / "config.resolved.ini").string())));
    REQUIRE(emit_config(back) == emit_config(m.cfg_a));
  }

  SECTION("every artifact parses and the pieces agree with each other") {
    Netlist nl = parse_netlist(read_text_file((dir / "netlist.nlf").string()));
    REQUIRE(static_cast<int>(nl.ffs.size()) == 24);
    TimingGraph g = elaborate(nl, default_library());

    auto act_ref = parse_activity(read_text_file((dir / "activity_ref.act").string()));
    auto act_age = parse_activity(read_text_file((dir / "activity_aging.act").string()));
    REQUIRE(act_ref.cycles == 10000);
    REQUIRE(act_age.cycles == 10000);
    REQUIRE(act_ref.nets.size() == act_age.nets.size());
    REQUIRE_FALSE(act_ref == act_age);  // independent reference and field traces

    auto paths = parse_paths(read_text_file((dir / "paths.paths").string()), g);
    REQUIRE(paths.size() >= 100);

    PathDataset ds = parse_dataset_csv(read_text_file((dir / "features.csv").string()));
    REQUIRE(ds.path_ids.size() == paths.size());
    REQUIRE_FALSE(ds.labeled());

    AdpSets adp = parse_adp(read_text_file((dir / "adp.json").string()));
    REQUIRE(adp.map_ids.size() >= 50);
    REQUIRE(adp.lap_ids.size() >= 50);
    std::set<int> path_ids(ds.path_ids.begin(), ds.path_ids.end());
    for (int id : adp.map_ids) REQUIRE(path_ids.count(id) == 1);
    for (int id : adp.lap_ids) REQUIRE(path_ids.count(id) == 1);

    for (const auto& cr : m.res_a.chips) {
      INFO(cr.chip_id);
      ChipInstance chip = parse_chip(read_text_file((dir / "chips" / (cr.chip_id + ".chip")).string()));
      REQUIRE(chip.chip_id == cr.chip_id);
      REQUIRE(chip.age_months == static_cast<double>(cr.age_months));
      REQUIRE(chip.arc_delays.size() == g.arcs.size());

      CfstResult cf = parse_cfst(read_text_file((dir / "chips" / (cr.chip_id + ".cfst")).string()));
      DetectionReport rep = parse_report(read_text_file((dir / "chips" / (cr.chip_id + ".report.json")).string()));
      auto hist = parse_ad_histogram(read_text_file((dir / "chips" / (cr.chip_id + ".hist.csv")).string()));
      REQUIRE(rep.valid);
      REQUIRE(rep.verdict == cr.report.verdict);

      std::size_t map_measured = 0, lap_measured = 0;
      for (int id : adp.map_ids) map_measured += cf.measurements.count(id);
      for (int id : adp.lap_ids) lap_measured += cf.measurements.count(id);
      REQUIRE(hist.size() == map_measured + lap_measured);
      REQUIRE(static_cast<std::size_t>(rep.m) == lap_measured);
      REQUIRE(static_cast<std::size_t>(rep.train_size + rep.val_size + rep.test_size) == map_measured);
    }
  }

  SECTION("verdicts: fresh chips read new, the twelve-month chip reads aged") {
    REQUIRE(m.res_a.chips[0].report.verdict == "new");
    REQUIRE(m.res_a.chips[1].report.verdict == "new");
    REQUIRE(m.res_a.chips[2].report.verdict == "aged");
    REQUIRE(m.res_a.chips[2].report.ms_ps >= 10.0);
  }

  SECTION("summary files") {
    std::string csv = read_text_file((dir / "summary.csv").string());
    auto rows = lines_of(csv);
    REQUIRE(rows.size() == 4);
    REQUIRE(rows[0] == "chip,age_months,valid,n,m,mean_map_ps,mean_lap_ps,ms_ps,th_ps,verdict");
    REQUIRE_THAT(rows[1], ContainsSubstring("chip_a00_c000,0,1,"));
    REQUIRE_THAT(rows[1], ContainsSubstring(",new"));
    REQUIRE_THAT(rows[3], ContainsSubstring("chip_a12_c000,12,1,"));
    REQUIRE_THAT(rows[3], ContainsSubstring(",aged"));

    std::string txt = read_text_file((dir / "summary.txt").string());
    auto tlines = lines_of(txt);
    REQUIRE(tlines.size() == 3);  // header + age 0 + age 12
    REQUIRE_THAT(tlines[0], ContainsSubstring("age_months"));
    REQUIRE(tlines[1].rfind("0 ", 0) == 0);
    REQUIRE_THAT(tlines[1], ContainsSubstring("0/2"));
    REQUIRE(tlines[2].rfind("12 ", 0) == 0);
    REQUIRE_THAT(tlines[2], ContainsSubstring("1/1"));
  }
}

TEST_CASE("re-running a campaign reproduces the artifact tree byte for byte") {
  const auto& m = mini();
  auto tree_a = read_tree(m.res_a.dir);
  auto tree_b = read_tree(m.res_b.dir);
  REQUIRE(tree_a.size() == tree_b.size());
  REQUIRE(tree_a.size() >= 21);  // 9 shared files + 4 per chip
  for (const auto& [rel, content] : tree_a) {
    INFO(rel);
    REQUIRE(tree_b.count(rel) == 1);
    if (rel == "config.resolved.ini")
      REQUIRE(drop_out_dir_line(content) == drop_out_dir_line(tree_b.at(rel)));
    else
      REQUIRE(content == tree_b.at(rel));
  }
}

TEST_CASE("report command rebuilds summaries from a finished run directory") {
  const auto& m = mini();
  const fs::path dir = m.res_a.dir;

  SECTION("regenerated summaries and histograms match the originals") {
    CampaignResult rep = cmd_report(dir.string());
    REQUIRE(rep.chips.size() == 3);
    REQUIRE(rep.chips[0].chip_id == "chip_a00_c000");
    REQUIRE(rep.chips[2].chip_id == "chip_a12_c000");
    REQUIRE(rep.chips[2].age_months == 12);
    REQUIRE(rep.chips[2].report.verdict == m.res_a.chips[2].report.verdict);

    REQUIRE(read_text_file((dir / "report" / "summary.csv").string()) ==
            read_text_file((dir / "summary.csv").string()));
    REQUIRE(read_text_file((dir / "report" / "summary.txt").string()) ==
            read_text_file((dir / "summary.txt").string()));
    for (const auto& cr : rep.chips)
      REQUIRE(read_text_file((dir / "report" / ("hist_" + cr.chip_id + ".csv")).string()) ==
              read_text_file((dir / "chips" / (cr.chip_id + ".hist.csv")).string()));
  }

  SECTION("missing or incomplete directories are reported") {
    auto empty = testfix::scratch_dir("campaign_report_empty");
    try {
      cmd_report(empty.string());
      FAIL("expected detect_error");
    } catch (const detect_error& e) {
      REQUIRE(e.stage() == "report");
      REQUIRE_THAT(e.what(), ContainsSubstring("no chips/ directory under"));
    }

    fs::create_directories(empty / "chips");
    REQUIRE_THROWS_WITH(cmd_report(empty.string()), ContainsSubstring("no chip reports under"));

    auto partial = testfix::scratch_dir("campaign_report_partial");
    fs::create_directories(partial / "chips");
    fs::copy_file(dir / "chips" / "chip_a00_c000.report.json", partial / "chips" / "chip_a00_c000.report.json");
    REQUIRE_THROWS_WITH(cmd_report(partial.string()),
                        ContainsSubstring("incomplete run dir: missing chip_a00_c000.chip"));
  }
}
