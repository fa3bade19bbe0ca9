#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>

#include "hoturbo/scenario.hpp"

namespace hoturbo {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Linear power gains G_{b,k} per tick (rows) and cell (columns, scenario order).
struct GainTrace {
  RowMatrix gains_linear;
  std::uint64_t seed = 0;
  double tick_s = 0.04;

  std::size_t ticks() const { return static_cast<std::size_t>(gains_linear.rows()); }
  std::size_t cells() const { return static_cast<std::size_t>(gains_linear.cols()); }
  std::span<const double> tick(std::size_t t) const {
    return {gains_linear.data() + t * cells(), cells()};
  }
  /// Throws ValidationError unless every entry is finite and > 0.
  void validate() const;
};

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

/// Thermal noise power over a bandwidth: psd + 10 log10(bandwidth).
double noise_power_dbm(double noise_psd_dbm_hz, double bandwidth_hz);

/// Downlink SINR (dB) of the serving cell against all other cells plus noise.
double sinr_db(std::size_t serving, std::span<const double> tick_gains, std::span<const double> tx_powers_mw,
               double noise_mw);

inline constexpr int kDefaultReCount = 600;  // 50 PRB x 12 subcarriers

/// Per-resource-element received power.
double rsrp_dbm(double tx_power_dbm, double gain_linear, int n_re = kDefaultReCount);

/// Synthetic channel realization along a trajectory. Deterministic in
/// (scenario, trajectory, seed).
GainTrace compute_gain_trace(const DeploymentScenario& scenario, const UeTrajectory& traj, std::uint64_t seed);

/// Text format: header line "ticks cells tick_s", then one row of linear gains per tick.
void save_gain_trace(const std::filesystem::path& path, const GainTrace& trace);
GainTrace load_gain_trace(const std::filesystem::path& path);

}  // namespace hoturbo
