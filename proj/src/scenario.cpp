#include "hoturbo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "hoturbo/error.hpp"

namespace hoturbo {

namespace {

const toml::node* find(const toml::table& t, std::string_view key) { return t.get(key); }

double number(const toml::table& t, std::string_view key, std::string_view ctx) {
  const toml::node* n = find(t, key);
  if (!n) throw ParseError(std::string(ctx) + ": missing key '" + std::string(key) + "'");
  if (auto v = n->value<double>()) return *v;
  throw ParseError(std::string(ctx) + ": key '" + std::string(key) + "' is not a number");
}

double number_or(const toml::table& t, std::string_view key, double fallback, std::string_view ctx) {
  return find(t, key) ? number(t, key, ctx) : fallback;
}

std::int64_t integer(const toml::table& t, std::string_view key, std::string_view ctx) {
  const toml::node* n = find(t, key);
  if (!n) throw ParseError(std::string(ctx) + ": missing key '" + std::string(key) + "'");
  if (!n->is_integer()) throw ParseError(std::string(ctx) + ": key '" + std::string(key) + "' is not an integer");
  return n->as_integer()->get();
}

const toml::table* subtable(const toml::table& t, std::string_view key, std::string_view ctx) {
  const toml::node* n = find(t, key);
  if (!n) return nullptr;
  if (!n->is_table()) throw ParseError(std::string(ctx) + ": '" + std::string(key) + "' must be a table");
  return n->as_table();
}

template <int N>
Eigen::Matrix<double, N, 1> point(const toml::node& n, std::string_view ctx) {
  const toml::array* a = n.as_array();
  if (!a || a->size() != static_cast<std::size_t>(N))
    throw ParseError(std::string(ctx) + ": expected an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> p;
  for (int i = 0; i < N; ++i) {
    auto v = (*a)[static_cast<std::size_t>(i)].value<double>();
    if (!v) throw ParseError(std::string(ctx) + ": non-numeric coordinate");
    p[i] = *v;
  }
  return p;
}

const toml::array* array_of_tables(const toml::table& t, std::string_view key) {
  const toml::node* n = find(t, key);
  if (!n) return nullptr;
  const toml::array* a = n->as_array();
  if (!a || !a->is_array_of_tables()) throw ParseError("'" + std::string(key) + "' must be an array of tables");
  return a;
}

void fail(const std::string& msg) { throw ValidationError(msg); }

}  // namespace

double SectorPattern::gain_dbi(double off_boresight_deg) const {
  double theta = std::remainder(off_boresight_deg, 360.0);
  double atten = std::min(12.0 * (theta / hpbw_deg) * (theta / hpbw_deg), front_back_db);
  return max_gain_dbi - atten;
}

void SectorPattern::validate() const {
  if (!(hpbw_deg > 0.0 && hpbw_deg < 360.0)) fail("antenna: hpbw_deg must lie in (0, 360)");
  if (!(front_back_db > 0.0)) fail("antenna: front_back_db must be > 0");
  if (!std::isfinite(max_gain_dbi)) fail("antenna: max_gain_dbi must be finite");
}

void ChannelParams::validate() const {
  if (!(exponent >= 2.0)) fail("channel: exponent must be >= 2");
  if (!(shadow_sigma_db >= 0.0) || !(fast_fade_sigma_db >= 0.0)) fail("channel: sigmas must be >= 0");
  if (!(shadow_corr_m > 0.0)) fail("channel: shadow_corr_m must be > 0");
  if (!(d0_m > 0.0)) fail("channel: d0_m must be > 0");
  if (!std::isfinite(pl0_db)) fail("channel: pl0_db must be finite");
  antenna.validate();
}

double Route::length_m() const {
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) len += (waypoints[i] - waypoints[i - 1]).norm();
  return len;
}

const Route& DeploymentScenario::route(int route_id) const {
  for (const auto& r : routes)
    if (r.id == route_id) return r;
  throw ValidationError("unknown route id " + std::to_string(route_id));
}

void DeploymentScenario::validate() const {
  if (cells.size() < 2) fail("scenario must contain at least 2 cells");
  std::set<int> ids;
  for (const auto& c : cells) {
    if (!ids.insert(c.id).second) fail("duplicate cell id " + std::to_string(c.id));
    if (!(c.antenna_height_m > 0.0)) fail("cell " + std::to_string(c.id) + ": antenna_height_m must be > 0");
    if (!std::isfinite(c.tx_power_dbm)) fail("cell " + std::to_string(c.id) + ": tx_power_dbm must be finite");
    if (!c.position.allFinite()) fail("cell " + std::to_string(c.id) + ": position must be finite");
  }
  std::set<int> route_ids;
  for (const auto& r : routes) {
    std::string tag = "route " + std::to_string(r.id);
    if (!route_ids.insert(r.id).second) fail("duplicate route id " + std::to_string(r.id));
    if (r.waypoints.size() < 2) fail(tag + ": needs at least 2 waypoints");
    for (std::size_t i = 1; i < r.waypoints.size(); ++i)
      if ((r.waypoints[i] - r.waypoints[i - 1]).norm() <= 0.0) fail(tag + ": consecutive waypoints must be distinct");
    if (!(r.ue_height_m >= 0.0)) fail(tag + ": ue_height_m must be >= 0");
    if (area_m) {
      for (const auto& w : r.waypoints)
        if (w.x() < 0.0 || w.y() < 0.0 || w.x() > area_m->x() || w.y() > area_m->y())
          fail(tag + ": waypoint outside the deployment area");
    }
  }
  if (!(bandwidth_hz > 0.0)) fail("bandwidth_hz must be > 0");
  if (n_prb < 1 || !(prb_bw_hz > 0.0)) fail("n_prb and prb_bw_hz must be positive");
  if (n_prb * prb_bw_hz > bandwidth_hz) fail("n_prb * prb_bw_hz must not exceed bandwidth_hz");
  if (!std::isfinite(noise_psd_dbm_hz)) fail("noise_psd_dbm_hz must be finite");
  channel_params.validate();
}

DeploymentScenario parse_scenario(std::string_view toml_text, std::string_view source_name) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source_name << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ParseError(msg.str());
  }

  DeploymentScenario s;
  if (const auto* radio = subtable(root, "radio", "scenario")) {
    s.carrier_hz = number_or(*radio, "carrier_hz", s.carrier_hz, "radio");
    s.bandwidth_hz = number_or(*radio, "bandwidth_hz", s.bandwidth_hz, "radio");
    if (find(*radio, "n_prb")) s.n_prb = static_cast<int>(integer(*radio, "n_prb", "radio"));
    s.prb_bw_hz = number_or(*radio, "prb_bw_hz", s.prb_bw_hz, "radio");
    s.noise_psd_dbm_hz = number_or(*radio, "noise_psd_dbm_hz", s.noise_psd_dbm_hz, "radio");
  }
  if (const auto* ch = subtable(root, "channel", "scenario")) {
    auto& p = s.channel_params;
    p.pl0_db = number_or(*ch, "pl0_db", p.pl0_db, "channel");
    p.d0_m = number_or(*ch, "d0_m", p.d0_m, "channel");
    p.exponent = number_or(*ch, "exponent", p.exponent, "channel");
    p.shadow_sigma_db = number_or(*ch, "shadow_sigma_db", p.shadow_sigma_db, "channel");
    p.shadow_corr_m = number_or(*ch, "shadow_corr_m", p.shadow_corr_m, "channel");
    p.fast_fade_sigma_db = number_or(*ch, "fast_fade_sigma_db", p.fast_fade_sigma_db, "channel");
    if (find(*ch, "shadow_seed")) {
      auto v = integer(*ch, "shadow_seed", "channel");
      if (v < 0) throw ParseError("channel: shadow_seed must be non-negative");
      p.shadow_seed = static_cast<std::uint64_t>(v);
    }
    if (const auto* ant = subtable(*ch, "antenna", "channel")) {
      p.antenna.max_gain_dbi = number_or(*ant, "max_gain_dbi", p.antenna.max_gain_dbi, "channel.antenna");
      p.antenna.hpbw_deg = number_or(*ant, "hpbw_deg", p.antenna.hpbw_deg, "channel.antenna");
      p.antenna.front_back_db = number_or(*ant, "front_back_db", p.antenna.front_back_db, "channel.antenna");
    }
  }
  if (const auto* area = subtable(root, "area", "scenario"))
    s.area_m = Vec2(number(*area, "width_m", "area"), number(*area, "height_m", "area"));

  if (const auto* cells = array_of_tables(root, "cells")) {
    for (const auto& node : *cells) {
      const auto& t = *node.as_table();
      Cell c;
      c.id = static_cast<int>(integer(t, "id", "cell"));
      std::string ctx = "cell " + std::to_string(c.id);
      const toml::node* pos = find(t, "position");
      if (!pos) throw ParseError(ctx + ": missing key 'position'");
      c.position = point<3>(*pos, ctx + ".position");
      c.antenna_height_m = number(t, "antenna_height_m", ctx);
      c.azimuth_deg = number_or(t, "azimuth_deg", c.azimuth_deg, ctx);
      c.tx_power_dbm = number_or(t, "tx_power_dbm", c.tx_power_dbm, ctx);
      s.cells.push_back(c);
    }
  }
  if (const auto* routes = array_of_tables(root, "routes")) {
    for (const auto& node : *routes) {
      const auto& t = *node.as_table();
      Route r;
      r.id = static_cast<int>(integer(t, "id", "route"));
      std::string ctx = "route " + std::to_string(r.id);
      const toml::node* wps = find(t, "waypoints");
      if (!wps || !wps->is_array()) throw ParseError(ctx + ": missing array 'waypoints'");
      for (const auto& w : *wps->as_array()) r.waypoints.push_back(point<2>(w, ctx + ".waypoints"));
      r.ue_height_m = number_or(t, "ue_height_m", r.ue_height_m, ctx);
      s.routes.push_back(std::move(r));
    }
  }
  s.validate();
  return s;
}

DeploymentScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

UeTrajectory sample_trajectory(const Route& route, double speed_mps, double tick_s) {
  if (!(speed_mps > 0.0) || !std::isfinite(speed_mps)) throw ValidationError("speed_mps must be > 0");
  if (!(tick_s > 0.0) || !std::isfinite(tick_s)) throw ValidationError("tick_s must be > 0");
  if (route.waypoints.size() < 2) throw ValidationError("route needs at least 2 waypoints");

  const double step = speed_mps * tick_s;
  const double total = route.length_m();
  // Tolerance keeps e.g. 100 m / 0.4 m from losing its last full step to rounding.
  const auto full_steps = static_cast<std::size_t>(std::floor(total / step + 1e-9));

  UeTrajectory traj;
  traj.route_id = route.id;
  traj.speed_mps = speed_mps;
  traj.tick_s = tick_s;
  traj.positions.reserve(full_steps + 2);
  traj.arc_m.reserve(full_steps + 2);

  std::size_t seg = 0;
  double seg_start = 0.0;
  auto emit = [&](double s) {
    s = std::min(s, total);
    while (seg + 2 < route.waypoints.size() &&
           seg_start + (route.waypoints[seg + 1] - route.waypoints[seg]).norm() < s) {
      seg_start += (route.waypoints[seg + 1] - route.waypoints[seg]).norm();
      ++seg;
    }
    const Vec2& a = route.waypoints[seg];
    const Vec2& b = route.waypoints[seg + 1];
    double seg_len = (b - a).norm();
    double t = std::clamp((s - seg_start) / seg_len, 0.0, 1.0);
    Vec2 p = a + t * (b - a);
    traj.positions.emplace_back(p.x(), p.y(), route.ue_height_m);
    traj.arc_m.push_back(s);
  };
  for (std::size_t i = 0; i <= full_steps; ++i) emit(static_cast<double>(i) * step);
  if (total - static_cast<double>(full_steps) * step > 1e-9) emit(total);
  traj.arc_m.back() = std::min(traj.arc_m.back(), total);
  return traj;
}

UeTrajectory sample_trajectory(const DeploymentScenario& scenario, int route_id, double speed_mps, double tick_s) {
  return sample_trajectory(scenario.route(route_id), speed_mps, tick_s);
}

}  // namespace hoturbo
