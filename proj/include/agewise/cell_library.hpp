#pragma once

#include <array>
#include <string>
#include <string_view>

#include "agewise/common.hpp"

namespace agewise {

enum class GateType : int { INV, BUF, NAND2, NOR2, AND2, OR2, XOR2 };
enum class Drive : int { x0, x1, x2, x4, x8, x16 };
enum class Layer : int { M1, M2, M3, M4, M5 };

inline constexpr int kNumGateTypes = 7;
inline constexpr int kNumDrives = 6;
inline constexpr int kNumLayers = 5;

inline constexpr std::array<std::string_view, kNumGateTypes> kGateTypeNames = {
    "INV", "BUF", "NAND2", "NOR2", "AND2", "OR2", "XOR2"};
inline constexpr std::array<std::string_view, kNumDrives> kDriveNames = {"x0", "x1", "x2", "x4", "x8", "x16"};
inline constexpr std::array<std::string_view, kNumLayers> kLayerNames = {"M1", "M2", "M3", "M4", "M5"};

inline std::string_view to_string(GateType t) { return kGateTypeNames[static_cast<int>(t)]; }
inline std::string_view to_string(Drive d) { return kDriveNames[static_cast<int>(d)]; }
inline std::string_view to_string(Layer l) { return kLayerNames[static_cast<int>(l)]; }

inline int num_inputs(GateType t) { return (t == GateType::INV || t == GateType::BUF) ? 1 : 2; }

inline bool gate_type_from_string(std::string_view s, GateType& out) {
  for (int i = 0; i < kNumGateTypes; ++i)
    if (s == kGateTypeNames[i]) { out = static_cast<GateType>(i); return true; }
  return false;
}

inline bool drive_from_string(std::string_view s, Drive& out) {
  for (int i = 0; i < kNumDrives; ++i)
    if (s == kDriveNames[i]) { out = static_cast<Drive>(i); return true; }
  return false;
}

inline bool layer_from_string(std::string_view s, Layer& out) {
  for (int i = 0; i < kNumLayers; ++i)
    if (s == kLayerNames[i]) { out = static_cast<Layer>(i); return true; }
  return false;
}

struct CellLibrary {
  // [type][drive]
  std::array<std::array<double, kNumDrives>, kNumGateTypes> base_delay_ps{};
  std::array<std::array<double, kNumDrives>, kNumGateTypes> input_cap{};
  double clk_to_q_ps = 0.0;
  double setup_ps = 0.0;
  std::array<double, kNumLayers> wire_ps_per_um{};
  double vdd = 0.0;
  double vth0 = 0.0;

  double base_delay(GateType t, Drive d) const { return base_delay_ps[static_cast<int>(t)][static_cast<int>(d)]; }
  double cap(GateType t, Drive d) const { return input_cap[static_cast<int>(t)][static_cast<int>(d)]; }
  double wire_unit(Layer l) const { return wire_ps_per_um[static_cast<int>(l)]; }

  void validate() const {
    for (int t = 0; t < kNumGateTypes; ++t) {
      for (int d = 0; d < kNumDrives; ++d) {
        if (!(base_delay_ps[t][d] > 0.0)) throw model_error("cell library: non-positive base delay");
        if (!(input_cap[t][d] > 0.0)) throw model_error("cell library: non-positive input cap");
        if (d > 0 && base_delay_ps[t][d] > base_delay_ps[t][d - 1])
          throw model_error("cell library: delay must be non-increasing in drive strength");
      }
    }
    if (!(clk_to_q_ps > 0.0) || !(setup_ps > 0.0)) throw model_error("cell library: FF parameters must be positive");
    for (double w : wire_ps_per_um)
      if (!(w > 0.0)) throw model_error("cell library: non-positive wire unit delay");
    if (!(vdd > vth0)) throw model_error("cell library: vdd must exceed vth0");
  }
};

inline CellLibrary default_library() {
  CellLibrary lib;
  // Per-type x1 delay, scaled per drive: stronger cells are faster.
  constexpr std::array<double, kNumGateTypes> type_base = {12.0, 16.0, 20.0, 22.0, 24.0, 26.0, 30.0};
  constexpr std::array<double, kNumDrives> drive_scale = {1.45, 1.0, 0.82, 0.7, 0.62, 0.57};
  constexpr std::array<double, kNumGateTypes> type_cap = {1.0, 1.1, 1.3, 1.3, 1.5, 1.5, 1.8};
  constexpr std::array<double, kNumDrives> cap_scale = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  for (int t = 0; t < kNumGateTypes; ++t) {
    for (int d = 0; d < kNumDrives; ++d) {
      lib.base_delay_ps[t][d] = type_base[t] * drive_scale[d];
      lib.input_cap[t][d] = type_cap[t] * cap_scale[d];
    }
  }
  lib.clk_to_q_ps = 40.0;
  lib.setup_ps = 30.0;
  lib.wire_ps_per_um = {1.0, 0.8, 0.6, 0.45, 0.3};
  lib.vdd = 0.85;
  lib.vth0 = 0.30;
  lib.validate();
  return lib;
}

}  // namespace agewise
