#pragma once

#include <array>
#include <set>

#include "agewise/mlkit/matrix.hpp"
#include "agewise/sta.hpp"

namespace agewise {

inline constexpr int kNumFeatures = 38;

// Fixed column order: 13 wire lengths (um) by layer and path segment, 3 cell
// counts, 16 drive counts, 5 timing values (ps), 1 total fanout.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "wire_m1_lp_um", "wire_m1_dp_um", "wire_m1_cp_um", "wire_m2_lp_um", "wire_m2_dp_um", "wire_m2_cp_um",
    "wire_m3_lp_um", "wire_m3_dp_um", "wire_m3_cp_um", "wire_m4_lp_um", "wire_m4_dp_um", "wire_m4_cp_um",
    "wire_m5_dp_um",
    "cells_lp", "cells_dp", "cells_cp",
    "drive_x0_lp", "drive_x0_dp", "drive_x0_cp", "drive_x1_lp", "drive_x1_dp", "drive_x1_cp",
    "drive_x2_lp", "drive_x2_dp", "drive_x2_cp", "drive_x4_lp", "drive_x4_dp", "drive_x4_cp",
    "drive_x8_lp", "drive_x8_dp", "drive_x8_cp", "drive_x16_dp",
    "setup_ps", "delay_lp_ps", "delay_dp_ps", "delay_cp_ps", "delay_sta_ps",
    "total_fanout"};

using FeatureVector = std::array<double, kNumFeatures>;

inline FeatureVector extract_features(const TimingGraph& g, const TimingPath& p) {
  FeatureVector f{};
  enum Seg { LP = 0, DP = 1, CP = 2 };
  std::set<int> cells;  // distinct cell instances on the path, for fanout

  auto tally = [&](int arc_id, Seg seg) {
    const Arc& a = g.arcs[static_cast<std::size_t>(arc_id)];
    if (a.kind == ArcKind::Wire) {
      for (const auto& s : g.net_routes[static_cast<std::size_t>(a.net)]) {
        int layer = static_cast<int>(s.layer);
        if (layer < 4) {
          f[static_cast<std::size_t>(layer * 3 + seg)] += s.length_um;
        } else {
          if (seg != DP) throw model_error("extract_features: M5 wire outside the data portion");
          f[12] += s.length_um;
        }
      }
    } else if (a.kind == ArcKind::Cell) {
      f[static_cast<std::size_t>(13 + seg)] += 1.0;
      const Instance& inst = g.instances[static_cast<std::size_t>(a.inst)];
      int drv = static_cast<int>(inst.drive);
      if (drv < 5) {
        f[static_cast<std::size_t>(16 + drv * 3 + seg)] += 1.0;
      } else {
        if (seg != DP) throw model_error("extract_features: x16 cell outside the data portion");
        f[31] += 1.0;
      }
      cells.insert(a.inst);
    }
    // clk->q arcs contribute timing only; the launch FF is not a cell.
  };

  for (int a : p.lp_arcs) tally(a, LP);
  for (int a : p.dp_arcs) tally(a, DP);
  for (int a : p.cp_arcs) tally(a, CP);

  f[32] = p.setup_ps;
  f[33] = p.lp_ps;
  f[34] = p.dp_ps;
  f[35] = p.cp_ps;
  f[36] = p.delay_sta_ps;
  double fan = 0.0;
  for (int inst : cells) fan += static_cast<double>(g.fanout(inst));
  f[37] = fan;
  return f;
}

struct PathDataset {
  std::vector<int> path_ids;
  mlkit::Matrix X{0, kNumFeatures};
  std::vector<double> label_ps;  // empty when unlabeled

  bool labeled() const { return !label_ps.empty(); }
};

inline PathDataset build_dataset(const TimingGraph& g, const std::vector<TimingPath>& paths) {
  PathDataset ds;
  ds.path_ids.reserve(paths.size());
  ds.X = mlkit::Matrix(paths.size(), kNumFeatures);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    ds.path_ids.push_back(paths[i].id);
    auto f = extract_features(g, paths[i]);
    for (int j = 0; j < kNumFeatures; ++j) ds.X.at(i, static_cast<std::size_t>(j)) = f[static_cast<std::size_t>(j)];
  }
  return ds;
}

inline std::string emit_dataset_csv(const PathDataset& ds) {
  if (ds.labeled() && ds.label_ps.size() != ds.path_ids.size())
    throw model_error("emit_dataset_csv: label count mismatch");
  std::string out = "path_id";
  for (auto n : kFeatureNames) out += "," + std::string(n);
  out += ",label_ps\n";
  for (std::size_t i = 0; i < ds.path_ids.size(); ++i) {
    out += std::to_string(ds.path_ids[i]);
    for (std::size_t j = 0; j < kNumFeatures; ++j) out += "," + fmt_double(ds.X.at(i, j));
    out += ",";
    if (ds.labeled()) out += fmt_double(ds.label_ps[i]);
    out += "\n";
  }
  return out;
}

inline PathDataset parse_dataset_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::vector<int> ids;
  std::vector<double> labels;
  bool any_label = false;
  bool header = true;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nlpos = text.find('\n', pos);
    std::string_view line = text.substr(pos, (nlpos == std::string_view::npos ? text.size() : nlpos) - pos);
    ++lineno;
    line = trim(line);
    if (!line.empty()) {
      auto fields = split_char(line, ',');
      if (fields.size() != kNumFeatures + 2) throw parse_error("expected 40 columns", lineno, 1);
      if (header) {
        if (fields[0] != "path_id" || fields[kNumFeatures + 1] != "label_ps")
          throw parse_error("bad dataset header", lineno, 1);
        for (int j = 0; j < kNumFeatures; ++j)
          if (fields[static_cast<std::size_t>(j + 1)] != kFeatureNames[static_cast<std::size_t>(j)])
            throw parse_error("bad dataset header at column " + std::to_string(j + 1), lineno, 1);
        header = false;
      } else {
        ids.push_back(static_cast<int>(parse_int(fields[0], lineno, 1)));
        std::vector<double> row(kNumFeatures);
        for (int j = 0; j < kNumFeatures; ++j)
          row[static_cast<std::size_t>(j)] = parse_double(fields[static_cast<std::size_t>(j + 1)], lineno, 1);
        rows.push_back(std::move(row));
        auto lab = fields[kNumFeatures + 1];
        if (lab.empty()) {
          labels.push_back(0.0);
        } else {
          labels.push_back(parse_double(lab, lineno, 1));
          any_label = true;
        }
      }
    }
    if (nlpos == std::string_view::npos) break;
    pos = nlpos + 1;
  }
  if (header) throw parse_error("empty dataset", lineno, 1);
  PathDataset ds;
  ds.path_ids = std::move(ids);
  ds.X = mlkit::Matrix(rows.size(), kNumFeatures);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < kNumFeatures; ++j) ds.X.at(i, j) = rows[i][j];
  if (any_label) ds.label_ps = std::move(labels);
  return ds;
}

}  // namespace agewise
