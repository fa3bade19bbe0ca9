#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "hoturbo/scenario.hpp"

namespace testing {

inline hoturbo::Cell make_cell(int id, double x, double y, double height, double azimuth_deg) {
  hoturbo::Cell c;
  c.id = id;
  c.position = hoturbo::Vec3(x, y, 0.0);
  c.antenna_height_m = height;
  c.azimuth_deg = azimuth_deg;
  return c;
}

inline hoturbo::Route make_route(int id, std::vector<hoturbo::Vec2> waypoints) {
  hoturbo::Route r;
  r.id = id;
  r.waypoints = std::move(waypoints);
  return r;
}

// Two sites facing each other across a 400 m corridor; the route runs between them.
inline hoturbo::DeploymentScenario corridor(double shadow_sigma = 0.0, double fast_sigma = 0.0) {
  hoturbo::DeploymentScenario s;
  s.cells = {make_cell(1, 0.0, 0.0, 30.0, 0.0), make_cell(2, 400.0, 0.0, 30.0, 180.0)};
  s.routes = {make_route(1, {{20.0, 10.0}, {380.0, 10.0}})};
  s.channel_params.shadow_sigma_db = shadow_sigma;
  s.channel_params.fast_fade_sigma_db = fast_sigma;
  s.validate();
  return s;
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(HOTURBO_SOURCE_DIR) / "scenarios" / name;
}

inline std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "hoturbo_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace testing
