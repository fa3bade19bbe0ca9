#include "hoturbo/channel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hoturbo/error.hpp"
#include "hoturbo/rng.hpp"

namespace hoturbo {

void GainTrace::validate() const {
  for (Eigen::Index i = 0; i < gains_linear.size(); ++i) {
    double g = gains_linear.data()[i];
    if (!(g > 0.0) || !std::isfinite(g)) throw ValidationError("gain trace entries must be finite and > 0");
  }
}

double noise_power_dbm(double noise_psd_dbm_hz, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) throw ValidationError("bandwidth must be > 0");
  return noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz);
}

double sinr_db(std::size_t serving, std::span<const double> tick_gains, std::span<const double> tx_powers_mw,
               double noise_mw) {
  if (tick_gains.size() != tx_powers_mw.size()) throw ValidationError("gain and power vectors differ in length");
  if (serving >= tick_gains.size()) throw ValidationError("serving cell index out of range");
  if (!(noise_mw > 0.0)) throw ValidationError("noise power must be > 0");
  double interference = 0.0;
  for (std::size_t b = 0; b < tick_gains.size(); ++b)
    if (b != serving) interference += tx_powers_mw[b] * tick_gains[b];
  return 10.0 * std::log10(tx_powers_mw[serving] * tick_gains[serving] / (interference + noise_mw));
}

double rsrp_dbm(double tx_power_dbm, double gain_linear, int n_re) {
  if (!(gain_linear > 0.0)) throw ValidationError("gain must be > 0");
  if (n_re < 1) throw ValidationError("n_re must be >= 1");
  return tx_power_dbm + 10.0 * std::log10(gain_linear) - 10.0 * std::log10(static_cast<double>(n_re));
}

namespace {

// Exponentially correlated Gaussian field along arc length, sampled on a
// regular grid and linearly interpolated: Gudmundson's model.
class ShadowProfile {
 public:
  ShadowProfile(double length_m, double sigma_db, double corr_m, std::uint64_t seed)
      : spacing_(std::min(1.0, corr_m / 10.0)) {
    auto n = static_cast<std::size_t>(std::ceil(length_m / spacing_)) + 2;
    values_.resize(n, 0.0);
    if (sigma_db <= 0.0) return;
    Rng rng(seed);
    std::normal_distribution<double> normal;
    const double rho = std::exp(-spacing_ / corr_m);
    const double innovation = sigma_db * std::sqrt(1.0 - rho * rho);
    values_[0] = sigma_db * normal(rng);
    for (std::size_t i = 1; i < n; ++i) values_[i] = rho * values_[i - 1] + innovation * normal(rng);
  }

  double at(double s) const {
    double u = std::max(0.0, s) / spacing_;
    auto i = std::min(static_cast<std::size_t>(u), values_.size() - 2);
    double f = u - static_cast<double>(i);
    return (1.0 - f) * values_[i] + f * values_[i + 1];
  }

 private:
  double spacing_;
  std::vector<double> values_;
};

}  // namespace

GainTrace compute_gain_trace(const DeploymentScenario& scenario, const UeTrajectory& traj, std::uint64_t seed) {
  const auto& p = scenario.channel_params;
  const std::size_t n_cells = scenario.cells.size();
  const std::size_t n_ticks = traj.ticks();
  const std::uint64_t shadow_root = p.shadow_seed.value_or(seed);
  const auto route_tag = static_cast<std::uint64_t>(static_cast<std::int64_t>(traj.route_id));

  GainTrace trace;
  trace.seed = seed;
  trace.tick_s = traj.tick_s;
  trace.gains_linear.resize(static_cast<Eigen::Index>(n_ticks), static_cast<Eigen::Index>(n_cells));

  for (std::size_t b = 0; b < n_cells; ++b) {
    const Cell& cell = scenario.cells[b];
    const auto cell_tag = static_cast<std::uint64_t>(static_cast<std::int64_t>(cell.id));
    ShadowProfile shadow(traj.path_length_m(), p.shadow_sigma_db, p.shadow_corr_m,
                         derive_seed(shadow_root, {stream::kShadow, route_tag, cell_tag}));
    Rng fade_rng(derive_seed(seed, {stream::kFastFade, route_tag, cell_tag}));
    std::normal_distribution<double> normal;
    const Vec3 ant = cell.antenna_position();

    for (std::size_t t = 0; t < n_ticks; ++t) {
      const Vec3& ue = traj.positions[t];
      const Vec3 delta = ue - ant;
      const double d = delta.norm();
      if (d < 0.1)
        throw ValidationError("UE colocated with cell " + std::to_string(cell.id) + " at tick " + std::to_string(t));
      const double pl = p.pl0_db + 10.0 * p.exponent * std::log10(std::max(d, p.d0_m) / p.d0_m);
      const double bearing = std::atan2(delta.y(), delta.x()) * 180.0 / std::numbers::pi;
      const double ant_gain = p.antenna.gain_dbi(bearing - cell.azimuth_deg);
      double gain_db = -pl + ant_gain + shadow.at(traj.arc_m[t]);
      if (p.fast_fade_sigma_db > 0.0) gain_db += p.fast_fade_sigma_db * normal(fade_rng);
      trace.gains_linear(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b)) = std::pow(10.0, gain_db / 10.0);
    }
  }
  return trace;
}

void save_gain_trace(const std::filesystem::path& path, const GainTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write gain trace " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << trace.ticks() << ' ' << trace.cells() << ' ' << trace.tick_s << '\n';
  for (std::size_t t = 0; t < trace.ticks(); ++t) {
    auto row = trace.tick(t);
    for (std::size_t b = 0; b < row.size(); ++b) out << (b ? " " : "") << row[b];
    out << '\n';
  }
}

GainTrace load_gain_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open gain trace " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("gain trace: missing header");
  std::istringstream header(line);
  long long ticks = -1, cells = -1;
  double tick_s = 0.0;
  if (!(header >> ticks >> cells >> tick_s) || ticks < 0 || cells < 1 || !(tick_s > 0.0))
    throw ParseError("gain trace: header must be 'ticks cells tick_s'");

  GainTrace trace;
  trace.tick_s = tick_s;
  trace.gains_linear.resize(ticks, cells);
  long long row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (row >= ticks) throw ValidationError("gain trace: more rows than the header declares");
    std::istringstream fields(line);
    long long col = 0;
    double v = 0.0;
    while (fields >> v) {
      if (col >= cells) throw ValidationError("gain trace: row " + std::to_string(row) + " has too many columns");
      if (!(v > 0.0) || !std::isfinite(v))
        throw ValidationError("gain trace: non-positive gain at row " + std::to_string(row));
      trace.gains_linear(row, col++) = v;
    }
    if (!fields.eof()) throw ParseError("gain trace: non-numeric entry at row " + std::to_string(row));
    if (col != cells) throw ValidationError("gain trace: row " + std::to_string(row) + " has too few columns");
    ++row;
  }
  if (row != ticks) throw ValidationError("gain trace: fewer rows than the header declares");
  return trace;
}

}  // namespace hoturbo
