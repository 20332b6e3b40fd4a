#pragma once

#include <array>
#include <cmath>
#include <map>

#include "agewise/activity.hpp"
#include "agewise/mlkit/forest.hpp"
#include "agewise/sta.hpp"

namespace agewise {

struct AgingConditions {
  double months = 0.0;
  double temp_c = 125.0;
  double vdd = 0.85;
};

struct AgingParams {
  double a_nbti_v = 0.030;   // NBTI prefactor at t_ref, theta=1
  double a_hci_v = 0.020;    // HCI prefactor
  double t_ref_months = 12.0;
  double nbti_exp = 0.16;
  double hci_exp = 0.5;
  double kappa = 1.0;        // delay sensitivity scale
  double theta_k = 4500.0;   // temperature acceleration constant (Kelvin)
  double t_nominal_c = 125.0;
};

inline double theta_temp(double temp_c, const AgingParams& p = {}) {
  double t0 = p.t_nominal_c + 273.15, t = temp_c + 273.15;
  return std::exp(p.theta_k * (1.0 / t0 - 1.0 / t));
}

// NBTI stresses the pull-up while the output sits at '1' (fraction 1-DC under
// the '0'-fraction convention); HCI tracks switching activity.
inline double oracle_delta_vth(GateType, double dc, double tc_rate, const AgingConditions& cond,
                               const AgingParams& p = {}) {
  if (dc < 0.0 || dc > 1.0) throw model_error("oracle_delta_vth: DC out of [0,1]");
  if (tc_rate < 0.0 || tc_rate > 1.0) throw model_error("oracle_delta_vth: tc_rate out of [0,1]");
  if (cond.months < 0.0) throw model_error("oracle_delta_vth: negative age");
  if (cond.months == 0.0) return 0.0;
  double th = theta_temp(cond.temp_c, p);
  double tn = cond.months / p.t_ref_months;
  double nbti = p.a_nbti_v * std::sqrt(1.0 - dc) * std::pow(tn, p.nbti_exp) * th;
  double hci = p.a_hci_v * std::sqrt(tc_rate) * std::pow(tn, p.hci_exp) * th;
  return nbti + hci;
}

inline double oracle_delta_delay(GateType t, Drive d, double dc, double tc, double cycles,
                                 const AgingConditions& cond, const CellLibrary& lib, const AgingParams& p = {}) {
  if (cycles < 1.0) throw model_error("oracle_delta_delay: cycles must be >= 1");
  if (tc < 0.0 || tc > cycles) throw model_error("oracle_delta_delay: TC must lie in [0, cycles]");
  if (!(cond.vdd > lib.vth0)) throw model_error("oracle_delta_delay: vdd must exceed vth0");
  double dvth = oracle_delta_vth(t, dc, tc / cycles, cond, p);
  return lib.base_delay(t, d) * p.kappa * dvth / (cond.vdd - lib.vth0);
}

struct AgingRecord {
  double dc;
  double tc;
  int months;
  double delta_ps;
};

struct GateAgingDB {
  double tc_min = 0.0, tc_max = 0.0;
  double dc_step = 0.05;
  double tc_step = 0.0;
  double cycles = 0.0;
  AgingConditions cond;
  AgingParams params;
  std::array<std::array<std::vector<AgingRecord>, kNumDrives>, kNumGateTypes> records{};

  const std::vector<AgingRecord>& of(GateType t, Drive d) const {
    return records[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)];
  }
};

// Full sweep grid: 21 DC values (step 0.05), 51 TC values spanning [TC_min, TC_max]
// (collapsed to one when the range is empty), months 1..12.
inline GateAgingDB build_gate_aging_db(const CellLibrary& lib, double tc_min, double tc_max, double cycles,
                                       const AgingConditions& cond, const AgingParams& params = {}) {
  if (tc_min > tc_max) throw model_error("build_gate_aging_db: TC_min > TC_max");
  if (tc_max > cycles) throw model_error("build_gate_aging_db: TC_max exceeds cycles");
  GateAgingDB db;
  db.tc_min = tc_min;
  db.tc_max = tc_max;
  db.cycles = cycles;
  db.cond = cond;
  db.params = params;
  db.tc_step = (tc_max - tc_min) / 50.0;
  std::vector<double> tcs;
  if (tc_max == tc_min) {
    tcs.push_back(tc_min);
  } else {
    for (int j = 0; j <= 50; ++j) tcs.push_back(tc_min + static_cast<double>(j) * (tc_max - tc_min) / 50.0);
  }
  for (int t = 0; t < kNumGateTypes; ++t) {
    for (int d = 0; d < kNumDrives; ++d) {
      auto& out = db.records[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)];
      out.reserve(21 * tcs.size() * 12);
      for (int i = 0; i <= 20; ++i) {
        double dc = static_cast<double>(i) / 20.0;
        for (double tc : tcs) {
          for (int mo = 1; mo <= 12; ++mo) {
            AgingConditions c = cond;
            c.months = mo;
            out.push_back({dc, tc, mo,
                           oracle_delta_delay(static_cast<GateType>(t), static_cast<Drive>(d), dc, tc, cycles, c,
                                              lib, params)});
          }
        }
      }
    }
  }
  return db;
}

inline std::string emit_aging_db_csv(const GateAgingDB& db) {
  std::string out = "gate,drive,dc,tc,months,delta_ps\n";
  for (int t = 0; t < kNumGateTypes; ++t)
    for (int d = 0; d < kNumDrives; ++d)
      for (const auto& r : db.records[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)])
        out += std::string(to_string(static_cast<GateType>(t))) + "," + std::string(to_string(static_cast<Drive>(d))) +
               "," + fmt_double(r.dc) + "," + fmt_double(r.tc) + "," + std::to_string(r.months) + "," +
               fmt_double(r.delta_ps) + "\n";
  return out;
}

// Parses only the record rows (sweep metadata is not part of the CSV interface).
inline GateAgingDB parse_aging_db_csv(std::string_view text) {
  GateAgingDB db;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  bool header = true;
  while (pos <= text.size()) {
    auto nlpos = text.find('\n', pos);
    std::string_view line = text.substr(pos, (nlpos == std::string_view::npos ? text.size() : nlpos) - pos);
    ++lineno;
    line = trim(line);
    if (!line.empty()) {
      if (header) {
        if (line != "gate,drive,dc,tc,months,delta_ps") throw parse_error("bad aging DB header", lineno, 1);
        header = false;
      } else {
        auto f = split_char(line, ',');
        if (f.size() != 6) throw parse_error("expected 6 fields", lineno, 1);
        GateType t;
        Drive d;
        if (!gate_type_from_string(f[0], t)) throw parse_error("unknown gate type", lineno, 1);
        if (!drive_from_string(f[1], d)) throw parse_error("unknown drive", lineno, 1);
        AgingRecord r;
        r.dc = parse_double(f[2], lineno, 1);
        r.tc = parse_double(f[3], lineno, 1);
        r.months = static_cast<int>(parse_int(f[4], lineno, 1));
        r.delta_ps = parse_double(f[5], lineno, 1);
        db.records[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)].push_back(r);
      }
    }
    if (nlpos == std::string_view::npos) break;
    pos = nlpos + 1;
  }
  if (header) throw parse_error("empty aging DB", lineno, 1);
  return db;
}

struct GateAgeModel {
  std::array<std::array<mlkit::GradientBoosting, kNumDrives>, kNumGateTypes> model{};
  std::array<std::array<double, kNumDrives>, kNumGateTypes> holdout_r2{};

  // Below one month the surface is linearly ramped from the month-1 prediction so
  // age-0 queries return 0 and stay under the month-1 grid values.
  double predict(GateType t, Drive d, double dc, double tc, double months) const {
    const auto& g = model[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)];
    double x[3];
    x[0] = dc;
    x[1] = tc;
    double scale = 1.0;
    if (months < 1.0) {
      scale = months;
      months = 1.0;
    }
    x[2] = months;
    return std::max(0.0, scale * g.predict(x));
  }
};

inline GateAgeModel fit_gate_age_model(const GateAgingDB& db, std::uint64_t seed = 0) {
  GateAgeModel out;
  double worst_r2 = 1.0;
  std::string worst_cell;
  for (int t = 0; t < kNumGateTypes; ++t) {
    for (int d = 0; d < kNumDrives; ++d) {
      const auto& recs = db.of(static_cast<GateType>(t), static_cast<Drive>(d));
      if (recs.empty()) throw model_error("fit_gate_age_model: empty grid");
      std::vector<int> idx(recs.size());
      for (std::size_t i = 0; i < recs.size(); ++i) idx[i] = static_cast<int>(i);
      rng_t rng = make_rng(seed, derive_seed(0x616765ull, static_cast<std::uint64_t>(t * kNumDrives + d)));
      shuffle_vec(idx, rng);
      std::size_t ntr = recs.size() * 4 / 5;
      mlkit::Matrix Xtr(ntr, 3), Xte(recs.size() - ntr, 3);
      std::vector<double> ytr(ntr), yte(recs.size() - ntr);
      for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[static_cast<std::size_t>(idx[i])];
        if (i < ntr) {
          Xtr.at(i, 0) = r.dc; Xtr.at(i, 1) = r.tc; Xtr.at(i, 2) = r.months;
          ytr[i] = r.delta_ps;
        } else {
          Xte.at(i - ntr, 0) = r.dc; Xte.at(i - ntr, 1) = r.tc; Xte.at(i - ntr, 2) = r.months;
          yte[i - ntr] = r.delta_ps;
        }
      }
      mlkit::GbtParams gp;
      gp.n_estimators = 300;
      gp.learning_rate = 0.1;
      gp.max_depth = 6;
      auto mdl = mlkit::fit_gbt(Xtr, ytr, gp);
      double r2 = mlkit::r_squared(yte, mdl.predict(Xte));
      out.model[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)] = std::move(mdl);
      out.holdout_r2[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)] = r2;
      if (r2 < worst_r2) {
        worst_r2 = r2;
        worst_cell = std::string(to_string(static_cast<GateType>(t))) + " " +
                     std::string(to_string(static_cast<Drive>(d)));
      }
    }
  }
  if (worst_r2 < 0.99)
    throw model_error("fit_gate_age_model: held-out R2 " + fmt_double(worst_r2) + " below 0.99 (worst cell: " +
                      worst_cell + ")");
  return out;
}

// Per-instance predicted aging increments. Gates stress by their output net's
// activity; FFs by their Q net through the BUF x1 surface rescaled to clk->q;
// clock buffers see DC=0.5 and a toggle every cycle.
inline std::map<std::string, double> predict_instance_aging(const TimingGraph& g, const GateAgeModel& model,
                                                            const ActivityProfile& activity, double months) {
  std::map<std::string, double> inc;
  const double cycles = static_cast<double>(activity.cycles);
  for (std::size_t i = 0; i < g.instances.size(); ++i) {
    const auto& inst = g.instances[i];
    double dc, tc, scale = 1.0;
    if (inst.kind == Instance::Clkbuf) {
      dc = 0.5;
      tc = cycles;
    } else {
      const auto& a = activity.at(g.net_names[static_cast<std::size_t>(g.net_of_instance(static_cast<int>(i)))]);
      dc = a.dc;
      tc = static_cast<double>(a.tc);
      if (inst.kind == Instance::Ff) scale = g.lib.clk_to_q_ps / g.lib.base_delay(GateType::BUF, Drive::x1);
    }
    inc[inst.id] = scale * model.predict(inst.type, inst.drive, dc, tc, months);
  }
  return inc;
}

inline std::vector<double> predict_path_aging(const TimingGraph& g, const std::vector<TimingPath>& paths,
                                              const GateAgeModel& model, const ActivityProfile& activity,
                                              double months) {
  if (months == 0.0) return std::vector<double>(paths.size(), 0.0);
  auto inc = predict_instance_aging(g, model, activity, months);
  return retime_increments(g, paths, inc);
}

}  // namespace agewise
