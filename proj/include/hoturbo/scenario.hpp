#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hoturbo/channel_params.hpp"

namespace hoturbo {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

struct Cell {
  int id = 0;
  /// Site ground position; the antenna sits antenna_height_m above position.z().
  Vec3 position = Vec3::Zero();
  double antenna_height_m = 30.0;
  double azimuth_deg = 0.0;
  double tx_power_dbm = 46.0;

  Vec3 antenna_position() const { return position + Vec3(0.0, 0.0, antenna_height_m); }
};

struct Route {
  int id = 0;
  std::vector<Vec2> waypoints;
  double ue_height_m = 1.5;

  double length_m() const;
};

struct DeploymentScenario {
  std::vector<Cell> cells;
  std::vector<Route> routes;
  double carrier_hz = 2.0e9;
  double bandwidth_hz = 10.0e6;
  int n_prb = 50;
  double prb_bw_hz = 180.0e3;
  double noise_psd_dbm_hz = -174.0;
  ChannelParams channel_params{};
  /// Optional deployment extent [0, w] x [0, h]; route waypoints must lie inside.
  std::optional<Vec2> area_m{};

  /// Resource elements of the reference signal used for RSRP normalization.
  int n_re() const { return n_prb * 12; }
  std::size_t cell_count() const { return cells.size(); }
  const Route& route(int route_id) const;
  /// Checks every documented invariant; throws ValidationError naming the first violation.
  void validate() const;
};

/// Parses a scenario from TOML text and validates it.
DeploymentScenario parse_scenario(std::string_view toml_text, std::string_view source_name = "<string>");
DeploymentScenario load_scenario(const std::filesystem::path& path);

/// Time-sampled UE positions along a route at constant speed.
struct UeTrajectory {
  int route_id = 0;
  double speed_mps = 0.0;
  double tick_s = 0.04;
  std::vector<Vec3> positions;
  /// Arc-length coordinate of each position along the route polyline.
  std::vector<double> arc_m;

  std::size_t ticks() const { return positions.size(); }
  double path_length_m() const { return arc_m.empty() ? 0.0 : arc_m.back(); }
};

UeTrajectory sample_trajectory(const DeploymentScenario& scenario, int route_id, double speed_mps, double tick_s);
/// Same as above for a route that need not belong to a scenario.
UeTrajectory sample_trajectory(const Route& route, double speed_mps, double tick_s);

inline constexpr double kmh_to_mps(double kmh) { return kmh / 3.6; }

}  // namespace hoturbo
