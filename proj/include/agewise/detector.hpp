#pragma once

#include <json.hpp>

#include "agewise/aging.hpp"
#include "agewise/cfst.hpp"
#include "agewise/features.hpp"
#include "agewise/mlkit/gmm.hpp"
#include "agewise/mlkit/stacked.hpp"

namespace agewise {

struct AdpSets {
  std::vector<int> map_ids;   // most-aging population
  std::vector<int> lap_ids;   // least-aging population
  std::vector<int> dropped_ids;
  mlkit::BimodalFit fit;
  double f_max_ghz = 0.0;  // measurability filter record
  double period_ps = 0.0;
  double horizon_months = 0.0;
};

// Split measurable paths into most-aging / least-aging sets by the predicted
// delay increase at the horizon: mixture fit, then mu +/- 2 sigma cuts with the
// ambiguous middle dropped.
inline AdpSets identify_adp(const TimingGraph& g, const std::vector<TimingPath>& paths,
                            const GateAgeModel& age_model, const ActivityProfile& activity, double horizon_months,
                            const CfstConfig& cfst_cfg = {}, const mlkit::Gmm2Options& gmm_opts = {}) {
  cfst_cfg.validate();
  if (horizon_months <= 0.0) throw detect_error("adp", "horizon must be positive");
  std::vector<TimingPath> kept;
  for (const auto& p : paths)
    if (p.delay_sta_ps >= cfst_cfg.floor_ps()) kept.push_back(p);
  if (kept.size() < 100)
    throw detect_error("adp", "only " + std::to_string(kept.size()) + " paths measurable at f_max; need at least 100");
  auto preds = predict_path_aging(g, kept, age_model, activity, horizon_months);
  auto fit = mlkit::fit_gmm2(preds, gmm_opts);
  if (fit.single_mode) throw detect_error("adp", "no age-distinguishing structure");
  AdpSets adp;
  adp.fit = fit;
  adp.f_max_ghz = cfst_cfg.f_max_ghz;
  adp.period_ps = g.period_ps;
  adp.horizon_months = horizon_months;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    double v = preds[i];
    bool in_map = v >= fit.mu_map - 2.0 * fit.sigma_map;
    bool in_lap = v <= fit.mu_lap + 2.0 * fit.sigma_lap;
    if (in_map && !in_lap)
      adp.map_ids.push_back(kept[i].id);
    else if (in_lap && !in_map)
      adp.lap_ids.push_back(kept[i].id);
    else
      adp.dropped_ids.push_back(kept[i].id);
  }
  return adp;
}

inline std::string emit_adp(const AdpSets& adp) {
  nlohmann::ordered_json j;
  j["f_max_ghz"] = adp.f_max_ghz;
  j["period_ps"] = adp.period_ps;
  j["horizon_months"] = adp.horizon_months;
  j["fit"] = {{"w_lap", adp.fit.w_lap},       {"w_map", adp.fit.w_map},
              {"mu_lap", adp.fit.mu_lap},     {"mu_map", adp.fit.mu_map},
              {"sigma_lap", adp.fit.sigma_lap}, {"sigma_map", adp.fit.sigma_map},
              {"log_likelihood", adp.fit.log_likelihood}, {"iterations", adp.fit.iterations},
              {"single_mode", adp.fit.single_mode}};
  j["map"] = adp.map_ids;
  j["lap"] = adp.lap_ids;
  j["dropped"] = adp.dropped_ids;
  return j.dump(2) + "\n";
}

inline AdpSets parse_adp(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("bad adp json: ") + e.what(), 1, 1);
  }
  AdpSets adp;
  try {
    adp.f_max_ghz = j.at("f_max_ghz").get<double>();
    adp.period_ps = j.at("period_ps").get<double>();
    adp.horizon_months = j.at("horizon_months").get<double>();
    const auto& f = j.at("fit");
    adp.fit.w_lap = f.at("w_lap").get<double>();
    adp.fit.w_map = f.at("w_map").get<double>();
    adp.fit.mu_lap = f.at("mu_lap").get<double>();
    adp.fit.mu_map = f.at("mu_map").get<double>();
    adp.fit.sigma_lap = f.at("sigma_lap").get<double>();
    adp.fit.sigma_map = f.at("sigma_map").get<double>();
    adp.fit.log_likelihood = f.at("log_likelihood").get<double>();
    adp.fit.iterations = f.at("iterations").get<int>();
    adp.fit.single_mode = f.at("single_mode").get<bool>();
    adp.map_ids = j.at("map").get<std::vector<int>>();
    adp.lap_ids = j.at("lap").get<std::vector<int>>();
    adp.dropped_ids = j.at("dropped").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("bad adp json: ") + e.what(), 1, 1);
  }
  std::set<int> seen(adp.map_ids.begin(), adp.map_ids.end());
  for (int id : adp.lap_ids)
    if (!seen.insert(id).second) throw parse_error("adp sets overlap on path " + std::to_string(id), 1, 1);
  return adp;
}

struct Gtm {
  mlkit::StackedModel model;
  std::vector<int> train_ids, val_ids, test_ids;
  std::array<double, 6> member_val_rmse{};  // -1 marks a failed member
};

namespace detector_detail {

inline std::map<int, std::size_t> row_index(const PathDataset& ds) {
  std::map<int, std::size_t> idx;
  for (std::size_t i = 0; i < ds.path_ids.size(); ++i)
    if (!idx.emplace(ds.path_ids[i], i).second)
      throw model_error("dataset contains duplicate path id " + std::to_string(ds.path_ids[i]));
  return idx;
}

inline std::size_t row_of(const std::map<int, std::size_t>& idx, int id) {
  auto it = idx.find(id);
  if (it == idx.end()) throw detect_error("gtm", "path " + std::to_string(id) + " missing from dataset");
  return it->second;
}

}  // namespace detector_detail

// Per-chip golden timing model: the stacked regressor learns CFST - STA on the
// most-aging set's training split; GTM(p) = STA(p) + model(features(p)).
inline Gtm build_gtm(const PathDataset& ds, const std::map<int, double>& cfst, const AdpSets& adp,
                     std::uint64_t split_seed, const mlkit::StackedParams& params = {}) {
  auto idx = detector_detail::row_index(ds);
  std::vector<int> measured;
  for (int id : adp.map_ids)
    if (cfst.count(id)) measured.push_back(id);
  if (measured.size() < 50)
    throw detect_error("gtm", "only " + std::to_string(measured.size()) +
                                  " measured most-aging paths; need at least 50");
  rng_t rng = make_rng(split_seed, 0x73706c6974);
  shuffle_vec(measured, rng);
  std::size_t n = measured.size();
  std::size_t ntr = n * 6 / 10, nval = n * 2 / 10;
  Gtm gtm;
  gtm.train_ids.assign(measured.begin(), measured.begin() + static_cast<std::ptrdiff_t>(ntr));
  gtm.val_ids.assign(measured.begin() + static_cast<std::ptrdiff_t>(ntr),
                     measured.begin() + static_cast<std::ptrdiff_t>(ntr + nval));
  gtm.test_ids.assign(measured.begin() + static_cast<std::ptrdiff_t>(ntr + nval), measured.end());

  auto label_of = [&](int id) {
    std::size_t r = detector_detail::row_of(idx, id);
    return cfst.at(id) - ds.X.at(r, 36);  // L = CFST - STA
  };
  mlkit::Matrix Xtr(gtm.train_ids.size(), kNumFeatures);
  std::vector<double> ytr(gtm.train_ids.size());
  for (std::size_t i = 0; i < gtm.train_ids.size(); ++i) {
    std::size_t r = detector_detail::row_of(idx, gtm.train_ids[i]);
    for (std::size_t j = 0; j < kNumFeatures; ++j) Xtr.at(i, j) = ds.X.at(r, j);
    ytr[i] = label_of(gtm.train_ids[i]);
  }
  try {
    gtm.model = mlkit::fit_stacked(Xtr, ytr, params, derive_seed(split_seed, 0x67746d));
  } catch (const std::exception& e) {
    throw detect_error("gtm", e.what());
  }

  // Per-member validation RMSE for diagnostics.
  for (std::size_t k = 0; k < mlkit::kMemberNames.size(); ++k) {
    if (!gtm.model.member_ok[k]) {
      gtm.member_val_rmse[k] = -1.0;
      continue;
    }
    double se = 0.0;
    std::vector<double> xs(kNumFeatures), zs(kNumFeatures);
    for (int id : gtm.val_ids) {
      std::size_t r = detector_detail::row_of(idx, id);
      for (std::size_t j = 0; j < kNumFeatures; ++j) xs[j] = ds.X.at(r, j);
      gtm.model.sx.transform_row(xs.data(), zs.data());
      double pred = gtm.model.member_predict_std(static_cast<int>(k), zs.data());
      double err = pred - label_of(id);
      se += err * err;
    }
    gtm.member_val_rmse[k] = gtm.val_ids.empty() ? 0.0 : std::sqrt(se / static_cast<double>(gtm.val_ids.size()));
  }
  return gtm;
}

inline double gtm_predict(const Gtm& gtm, const double* features) {
  return features[36] + gtm.model.predict(features);  // STA + learned delta
}

inline std::map<int, double> added_delays(const std::map<int, double>& cfst, const Gtm& gtm, const PathDataset& ds,
                                          const std::vector<int>& ids) {
  auto idx = detector_detail::row_index(ds);
  std::map<int, double> ad;
  for (int id : ids) {
    auto it = cfst.find(id);
    if (it == cfst.end()) throw detect_error("ad", "missing measurement for path " + std::to_string(id));
    std::size_t r = detector_detail::row_of(idx, id);
    ad[id] = it->second - gtm_predict(gtm, ds.X.row(r));
  }
  return ad;
}

inline double group_mean(const std::map<int, double>& ad, const std::vector<int>& ids, const char* group) {
  if (ids.empty()) throw detect_error("ms", std::string("empty ") + group + " group");
  double s = 0.0;
  for (int id : ids) {
    auto it = ad.find(id);
    if (it == ad.end()) throw detect_error("ms", "no added delay for path " + std::to_string(id));
    s += it->second;
  }
  return s / static_cast<double>(ids.size());
}

// MS = mean added delay over the most-aging evaluation subset minus mean over
// the full least-aging set.
inline double mean_shift(const std::map<int, double>& ad, const std::vector<int>& map_eval_ids,
                         const std::vector<int>& lap_ids) {
  return group_mean(ad, map_eval_ids, "most-aging") - group_mean(ad, lap_ids, "least-aging");
}

inline bool classify_aged(double ms_ps, double th_ps) {
  if (!(th_ps > 0.0)) throw detect_error("classify", "threshold must be positive");
  return th_ps <= ms_ps;
}

struct DetectionReport {
  std::string chip_id;
  bool valid = false;
  std::string error_stage, error_cause;
  int n = 0, m = 0;  // evaluated most-aging paths, least-aging paths
  double mean_map_ps = 0.0, mean_lap_ps = 0.0, ms_ps = 0.0, th_ps = 0.0;
  std::string verdict;  // "new" | "aged"
  int train_size = 0, val_size = 0, test_size = 0;
  int skipped_unmeasured = 0;
  std::array<double, 6> member_val_rmse{};
  std::vector<std::string> warnings;
};

struct DetectionOutcome {
  DetectionReport report;
  std::map<int, double> ad;                                    // evaluation groups only
  std::vector<std::tuple<int, std::string, double>> histogram;  // all measured set members
};

inline DetectionOutcome run_detection_full(const PathDataset& ds, const AdpSets& adp, const CfstResult& chip_cfst,
                                           const std::string& chip_id, std::uint64_t split_seed, double th_ps = 10.0,
                                           const mlkit::StackedParams& params = {}) {
  DetectionOutcome out;
  auto& rep = out.report;
  rep.chip_id = chip_id;
  rep.th_ps = th_ps;
  try {
    Gtm gtm = build_gtm(ds, chip_cfst.measurements, adp, split_seed, params);
    rep.train_size = static_cast<int>(gtm.train_ids.size());
    rep.val_size = static_cast<int>(gtm.val_ids.size());
    rep.test_size = static_cast<int>(gtm.test_ids.size());
    rep.member_val_rmse = gtm.member_val_rmse;
    rep.warnings = gtm.model.warnings;

    std::vector<int> lap_measured;
    for (int id : adp.lap_ids)
      if (chip_cfst.measurements.count(id)) lap_measured.push_back(id);
    rep.skipped_unmeasured = static_cast<int>(adp.map_ids.size() - gtm.train_ids.size() - gtm.val_ids.size() -
                                              gtm.test_ids.size() + adp.lap_ids.size() - lap_measured.size());

    std::vector<int> eval_ids = gtm.test_ids;
    eval_ids.insert(eval_ids.end(), lap_measured.begin(), lap_measured.end());
    out.ad = added_delays(chip_cfst.measurements, gtm, ds, eval_ids);
    rep.n = static_cast<int>(gtm.test_ids.size());
    rep.m = static_cast<int>(lap_measured.size());
    rep.mean_map_ps = group_mean(out.ad, gtm.test_ids, "most-aging");
    rep.mean_lap_ps = group_mean(out.ad, lap_measured, "least-aging");
    rep.ms_ps = rep.mean_map_ps - rep.mean_lap_ps;
    rep.verdict = classify_aged(rep.ms_ps, th_ps) ? "aged" : "new";
    rep.valid = true;

    std::vector<int> map_measured;
    for (int id : adp.map_ids)
      if (chip_cfst.measurements.count(id)) map_measured.push_back(id);
    auto ad_all = added_delays(chip_cfst.measurements, gtm, ds, map_measured);
    for (int id : map_measured) out.histogram.emplace_back(id, "MAP", ad_all.at(id));
    for (int id : lap_measured) out.histogram.emplace_back(id, "LAP", out.ad.at(id));
  } catch (const detect_error& e) {
    rep.valid = false;
    rep.error_stage = e.stage();
    rep.error_cause = e.what();
  } catch (const std::exception& e) {
    rep.valid = false;
    rep.error_stage = "detect";
    rep.error_cause = e.what();
  }
  return out;
}

inline DetectionReport run_detection(const PathDataset& ds, const AdpSets& adp, const CfstResult& chip_cfst,
                                     const std::string& chip_id, std::uint64_t split_seed, double th_ps = 10.0,
                                     const mlkit::StackedParams& params = {}) {
  return run_detection_full(ds, adp, chip_cfst, chip_id, split_seed, th_ps, params).report;
}

inline std::string emit_report(const DetectionReport& r) {
  nlohmann::ordered_json j;
  j["chip"] = r.chip_id;
  j["valid"] = r.valid;
  if (!r.valid) j["error"] = {{"stage", r.error_stage}, {"cause", r.error_cause}};
  j["n"] = r.n;
  j["m"] = r.m;
  j["mean_map_ps"] = r.mean_map_ps;
  j["mean_lap_ps"] = r.mean_lap_ps;
  j["ms_ps"] = r.ms_ps;
  j["th_ps"] = r.th_ps;
  j["verdict"] = r.verdict;
  nlohmann::ordered_json diag;
  diag["train"] = r.train_size;
  diag["val"] = r.val_size;
  diag["test"] = r.test_size;
  diag["skipped_unmeasured"] = r.skipped_unmeasured;
  nlohmann::ordered_json rmse;
  for (std::size_t k = 0; k < mlkit::kMemberNames.size(); ++k) {
    if (r.member_val_rmse[k] < 0.0)
      rmse[std::string(mlkit::kMemberNames[k])] = nullptr;
    else
      rmse[std::string(mlkit::kMemberNames[k])] = r.member_val_rmse[k];
  }
  diag["member_val_rmse_ps"] = rmse;
  diag["warnings"] = r.warnings;
  j["diagnostics"] = diag;
  return j.dump(2) + "\n";
}

inline DetectionReport parse_report(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("bad report json: ") + e.what(), 1, 1);
  }
  DetectionReport r;
  try {
    r.chip_id = j.at("chip").get<std::string>();
    r.valid = j.at("valid").get<bool>();
    if (!r.valid) {
      r.error_stage = j.at("error").at("stage").get<std::string>();
      r.error_cause = j.at("error").at("cause").get<std::string>();
    }
    r.n = j.at("n").get<int>();
    r.m = j.at("m").get<int>();
    r.mean_map_ps = j.at("mean_map_ps").get<double>();
    r.mean_lap_ps = j.at("mean_lap_ps").get<double>();
    r.ms_ps = j.at("ms_ps").get<double>();
    r.th_ps = j.at("th_ps").get<double>();
    r.verdict = j.at("verdict").get<std::string>();
    const auto& d = j.at("diagnostics");
    r.train_size = d.at("train").get<int>();
    r.val_size = d.at("val").get<int>();
    r.test_size = d.at("test").get<int>();
    r.skipped_unmeasured = d.at("skipped_unmeasured").get<int>();
    const auto& rmse = d.at("member_val_rmse_ps");
    for (std::size_t k = 0; k < mlkit::kMemberNames.size(); ++k) {
      const auto& v = rmse.at(std::string(mlkit::kMemberNames[k]));
      r.member_val_rmse[k] = v.is_null() ? -1.0 : v.get<double>();
    }
    r.warnings = d.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("bad report json: ") + e.what(), 1, 1);
  }
  return r;
}

inline std::string emit_ad_histogram(const std::vector<std::tuple<int, std::string, double>>& rows) {
  std::string out = "path_id,group,value_ps\n";
  for (const auto& [id, group, v] : rows) out += std::to_string(id) + "," + group + "," + fmt_double(v) + "\n";
  return out;
}

inline std::vector<std::tuple<int, std::string, double>> parse_ad_histogram(std::string_view text) {
  std::vector<std::tuple<int, std::string, double>> rows;
  bool header = true;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nlpos = text.find('\n', pos);
    std::string_view line = text.substr(pos, (nlpos == std::string_view::npos ? text.size() : nlpos) - pos);
    ++lineno;
    line = trim(line);
    if (!line.empty()) {
      auto f = split_char(line, ',');
      if (f.size() != 3) throw parse_error("expected 3 columns", lineno, 1);
      if (header) {
        if (line != "path_id,group,value_ps") throw parse_error("bad histogram header", lineno, 1);
        header = false;
      } else {
        if (f[1] != "MAP" && f[1] != "LAP") throw parse_error("group must be MAP or LAP", lineno, 1);
        rows.emplace_back(static_cast<int>(parse_int(f[0], lineno, 1)), std::string(f[1]),
                          parse_double(f[2], lineno, 1));
      }
    }
    if (nlpos == std::string_view::npos) break;
    pos = nlpos + 1;
  }
  if (header) throw parse_error("empty histogram", lineno, 1);
  return rows;
}

}  // namespace agewise
