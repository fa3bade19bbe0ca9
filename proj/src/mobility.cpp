#include "hoturbo/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hoturbo/error.hpp"
#include "hoturbo/parallel.hpp"

namespace hoturbo {

namespace {
constexpr double kTimeEps = 1e-9;
}

std::string_view to_string(HoMode mode) { return mode == HoMode::shared ? "shared" : "per-cell"; }

HoMode parse_ho_mode(std::string_view text) {
  if (text == "shared") return HoMode::shared;
  if (text == "per-cell") return HoMode::per_cell;
  throw ValidationError("unknown mode '" + std::string(text) + "' (expected shared or per-cell)");
}

HoConfig HoConfig::shared(std::size_t n_cells, double a3_offset_db, double ttt_ms) {
  return {std::vector<double>(n_cells, a3_offset_db), std::vector<double>(n_cells, ttt_ms), HoMode::shared};
}

HoConfig HoConfig::per_cell(std::vector<double> a3_offset_db, std::vector<double> ttt_ms) {
  return {std::move(a3_offset_db), std::move(ttt_ms), HoMode::per_cell};
}

void HoConfig::validate(std::size_t n_cells) const {
  if (a3_offset_db.size() != n_cells || ttt_ms.size() != n_cells)
    throw ValidationError("HoConfig has " + std::to_string(a3_offset_db.size()) + "/" +
                          std::to_string(ttt_ms.size()) + " entries for " + std::to_string(n_cells) + " cells");
  for (std::size_t i = 0; i < n_cells; ++i) {
    if (!(a3_offset_db[i] >= kA3MinDb && a3_offset_db[i] <= kA3MaxDb))
      throw ValidationError("A3 offset of cell index " + std::to_string(i) + " outside [-1, 3] dB");
    if (!(ttt_ms[i] >= kTttMinMs && ttt_ms[i] <= kTttMaxMs))
      throw ValidationError("TTT of cell index " + std::to_string(i) + " outside [40, 480] ms");
    if (mode == HoMode::shared && (a3_offset_db[i] != a3_offset_db[0] || ttt_ms[i] != ttt_ms[0]))
      throw ValidationError("shared-mode HoConfig must have equal entries for all cells");
  }
}

std::vector<double> HoConfig::to_unit() const {
  auto a3u = [](double v) { return (v - kA3MinDb) / (kA3MaxDb - kA3MinDb); };
  auto tttu = [](double v) { return (v - kTttMinMs) / (kTttMaxMs - kTttMinMs); };
  if (mode == HoMode::shared) return {a3u(a3_offset_db.at(0)), tttu(ttt_ms.at(0))};
  std::vector<double> x;
  x.reserve(dimension());
  for (double v : a3_offset_db) x.push_back(a3u(v));
  for (double v : ttt_ms) x.push_back(tttu(v));
  return x;
}

HoConfig HoConfig::from_unit(std::span<const double> x, std::size_t n_cells, HoMode mode) {
  std::size_t d = mode == HoMode::shared ? 2 : 2 * n_cells;
  if (x.size() != d) throw ValidationError("normalized point has dimension " + std::to_string(x.size()) +
                                           ", expected " + std::to_string(d));
  auto a3 = [](double u) { return kA3MinDb + std::clamp(u, 0.0, 1.0) * (kA3MaxDb - kA3MinDb); };
  auto ttt = [](double u) { return kTttMinMs + std::clamp(u, 0.0, 1.0) * (kTttMaxMs - kTttMinMs); };
  if (mode == HoMode::shared) return shared(n_cells, a3(x[0]), ttt(x[1]));
  HoConfig c;
  c.mode = HoMode::per_cell;
  for (std::size_t i = 0; i < n_cells; ++i) {
    c.a3_offset_db.push_back(a3(x[i]));
    c.ttt_ms.push_back(ttt(x[n_cells + i]));
  }
  return c;
}

BenchmarkSet benchmark_set(std::string_view name) {
  if (name == kSet1.name) return kSet1;
  if (name == kSet5.name) return kSet5;
  throw ValidationError("unknown benchmark set '" + std::string(name) + "' (expected set-1 or set-5)");
}

void MobilityTimers::validate() const {
  if (!(q_in_db > q_out_db)) throw ValidationError("timers: q_in_db must exceed q_out_db");
  if (!(t310_s > 0.0 && t_p_s > 0.0 && l1_period_s > 0.0 && l3_period_s > 0.0))
    throw ValidationError("timers: durations must be > 0");
  if (!(ho_delay_s >= 0.0)) throw ValidationError("timers: ho_delay_s must be >= 0");
  if (!(l3_alpha > 0.0 && l3_alpha <= 1.0)) throw ValidationError("timers: l3_alpha must lie in (0, 1]");
  if (l1_window < 1) throw ValidationError("timers: l1_window must be >= 1");
  double ratio = l3_period_s / l1_period_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 || std::round(ratio) < 1)
    throw ValidationError("timers: l3_period_s must be a positive multiple of l1_period_s");
}

int MobilityTimers::l3_every_ticks() const { return static_cast<int>(std::lround(l3_period_s / l1_period_s)); }

LinkBudget LinkBudget::from(const DeploymentScenario& scenario) {
  LinkBudget link;
  for (const auto& c : scenario.cells) {
    link.cell_ids.push_back(c.id);
    link.tx_dbm.push_back(c.tx_power_dbm);
    link.tx_mw.push_back(dbm_to_mw(c.tx_power_dbm));
  }
  link.noise_mw = dbm_to_mw(noise_power_dbm(scenario.noise_psd_dbm_hz, scenario.bandwidth_hz));
  link.n_re = scenario.n_re();
  return link;
}

std::string_view to_string(EventType type) {
  switch (type) {
    case EventType::HO: return "HO";
    case EventType::HOF: return "HOF";
    case EventType::RLF: return "RLF";
    case EventType::PP: return "PP";
  }
  return "?";
}

UeConnectionState UeConnectionState::attach(std::size_t n_cells, std::size_t serving, const MobilityTimers& timers) {
  if (serving >= n_cells) throw ValidationError("serving index out of range");
  UeConnectionState s;
  s.serving = serving;
  s.l1_buffer.assign(n_cells * static_cast<std::size_t>(timers.l1_window), 0.0);
  s.l3_value.assign(n_cells, 0.0);
  s.ttt_elapsed_s.assign(n_cells, std::nullopt);
  return s;
}

void UeConnectionState::validate(std::size_t n_cells, const MobilityTimers& timers) const {
  if (serving >= n_cells) throw ValidationError("state: serving index out of range");
  if (prev_cell && *prev_cell >= n_cells) throw ValidationError("state: previous cell index out of range");
  if (l1_buffer.size() != n_cells * static_cast<std::size_t>(timers.l1_window) || l3_value.size() != n_cells ||
      ttt_elapsed_s.size() != n_cells)
    throw ValidationError("state: buffers do not match the cell count");
  for (const auto& t : ttt_elapsed_s)
    if (t && *t < 0.0) throw ValidationError("state: negative TTT timer");
  if (ttt_elapsed_s[serving]) throw ValidationError("state: TTT timer running for the serving cell");
  if (t310_elapsed_s && *t310_elapsed_s < 0.0) throw ValidationError("state: negative T310 timer");
  if (pending_target && *pending_target >= n_cells) throw ValidationError("state: pending target out of range");
}

KpiCounters& KpiCounters::operator+=(const KpiCounters& o) {
  ho += o.ho;
  hof += o.hof;
  pp += o.pp;
  rlf += o.rlf;
  ticks += o.ticks;
  return *this;
}

void KpiCounters::record(EventType type) {
  switch (type) {
    case EventType::HO: ++ho; break;
    case EventType::HOF: ++hof; break;
    case EventType::RLF: ++rlf; break;
    case EventType::PP: ++pp; break;
  }
}

void ObjectiveWeights::validate() const {
  if (!(w_pp >= 0.0 && w_rlf >= 0.0)) throw ValidationError("objective weights must be >= 0");
  if (w_pp == 0.0 && w_rlf == 0.0) throw ValidationError("objective weights must not both be 0");
}

double pp_rate(const KpiCounters& c) {
  return static_cast<double>(c.pp) / static_cast<double>(std::max<std::int64_t>(1, c.ho - c.hof));
}

double rlf_rate(const KpiCounters& c) {
  return static_cast<double>(c.rlf) / static_cast<double>(std::max<std::int64_t>(1, c.ho));
}

// Over a common denominator so that integer counters and integer weights give
// a correctly rounded result.
double objective(const KpiCounters& c, const ObjectiveWeights& w) {
  const auto d_pp = static_cast<double>(std::max<std::int64_t>(1, c.ho - c.hof));
  const auto d_rlf = static_cast<double>(std::max<std::int64_t>(1, c.ho));
  const double num = w.w_pp * static_cast<double>(c.pp) * d_rlf + w.w_rlf * static_cast<double>(c.rlf) * d_pp;
  return num / (d_pp * d_rlf);
}

double l1_filter(std::span<const double> samples, int window) {
  if (samples.size() != static_cast<std::size_t>(window))
    throw ValidationError("L1 filter expects exactly " + std::to_string(window) + " samples");
  double sum = 0.0;
  for (double v : samples) {
    if (!std::isfinite(v)) throw ValidationError("L1 filter: non-finite sample");
    sum += v;
  }
  return sum / static_cast<double>(window);
}

double l3_filter(double prev, double meas, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("L3 filter coefficient must lie in (0, 1]");
  return (1.0 - alpha) * prev + alpha * meas;
}

bool check_event_a3(double l3_serving, double l3_target, double offset_db) {
  return l3_target > l3_serving + offset_db;
}

bool detect_ping_pong(std::optional<std::size_t> prev_source, std::size_t new_target, double time_of_stay_s,
                      double t_p_s) {
  return prev_source && *prev_source == new_target && time_of_stay_s < t_p_s;
}

namespace {

std::size_t strongest(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

bool any_ttt_running(const UeConnectionState& s) {
  return std::any_of(s.ttt_elapsed_s.begin(), s.ttt_elapsed_s.end(), [](const auto& t) { return t.has_value(); });
}

void clear_ttt(UeConnectionState& s) { std::fill(s.ttt_elapsed_s.begin(), s.ttt_elapsed_s.end(), std::nullopt); }

void complete_handover(UeConnectionState& s, std::size_t target, const LinkBudget& link, const MobilityTimers& timers,
                       std::vector<Event>& events) {
  const std::size_t source = s.serving;
  events.push_back({s.tick, 0, EventType::HO, link.cell_ids[source], link.cell_ids[target]});
  if (detect_ping_pong(s.prev_cell, target, s.time_of_stay_s, timers.t_p_s))
    events.push_back({s.tick, 0, EventType::PP, link.cell_ids[source], link.cell_ids[target]});
  s.prev_cell = source;
  s.serving = target;
  s.time_of_stay_s = 0.0;
  s.t310_elapsed_s.reset();
  s.pending_target.reset();
  clear_ttt(s);
}

}  // namespace

TickOutcome step_measured(UeConnectionState& s, std::span<const double> rsrp, double total_rx_mw,
                          const LinkBudget& link, const MobilityTimers& timers, const HoConfig& cfg, double tick_s) {
  const std::size_t n = link.cells();
  if (rsrp.size() != n) throw ValidationError("step: measurement vector does not match cell count");
  if (s.serving >= n || s.l3_value.size() != n || s.ttt_elapsed_s.size() != n)
    throw ValidationError("step: state does not match cell count");
  if (std::abs(tick_s - timers.l1_period_s) > kTimeEps) throw ValidationError("step: tick_s must equal l1_period_s");

  TickOutcome out;
  const auto window = static_cast<std::size_t>(timers.l1_window);
  if (s.tick > 0) s.time_of_stay_s += tick_s;

  // Measurements: L1 ring, then L3 on its period once the window is full.
  const std::size_t slot = s.l1_fill % window;
  for (std::size_t b = 0; b < n; ++b) s.l1_buffer[b * window + slot] = rsrp[b];
  ++s.l1_fill;
  const bool l3_update =
      s.l1_fill >= window && s.l1_fill % static_cast<std::size_t>(timers.l3_every_ticks()) == 0;
  if (l3_update) {
    for (std::size_t b = 0; b < n; ++b) {
      double l1 = l1_filter({s.l1_buffer.data() + b * window, window}, timers.l1_window);
      s.l3_value[b] = s.l3_ready ? l3_filter(s.l3_value[b], l1, timers.l3_alpha) : l1;
    }
    s.l3_ready = true;
  }

  // Radio link monitoring on the serving cell's per-tick SINR.
  const double serving_rx = dbm_to_mw(rsrp[s.serving] + 10.0 * std::log10(static_cast<double>(link.n_re)));
  const double interference = std::max(0.0, total_rx_mw - serving_rx);
  out.sinr_db = 10.0 * std::log10(serving_rx / (interference + link.noise_mw));

  bool rlf = false;
  if (s.t310_elapsed_s) {
    if (out.sinr_db > timers.q_in_db) {
      s.t310_elapsed_s.reset();
    } else {
      *s.t310_elapsed_s += tick_s;
      rlf = *s.t310_elapsed_s >= timers.t310_s - kTimeEps;
    }
  } else if (out.sinr_db <= timers.q_out_db) {
    s.t310_elapsed_s = 0.0;
  }

  if (rlf) {
    const bool during_ho = s.pending_target.has_value() || any_ttt_running(s);
    const std::size_t target = s.l3_ready ? strongest(s.l3_value) : strongest(rsrp);
    out.events.push_back({s.tick, 0, EventType::RLF, link.cell_ids[s.serving], link.cell_ids[target]});
    if (during_ho) out.events.push_back({s.tick, 0, EventType::HOF, link.cell_ids[s.serving], link.cell_ids[target]});
    s.serving = target;
    s.prev_cell.reset();
    s.time_of_stay_s = 0.0;
    s.t310_elapsed_s.reset();
    s.pending_target.reset();
    clear_ttt(s);
    ++s.tick;
    return out;
  }

  if (s.pending_target) {
    s.pending_elapsed_s += tick_s;
    if (s.pending_elapsed_s >= timers.ho_delay_s - kTimeEps) complete_handover(s, *s.pending_target, link, timers, out.events);
    ++s.tick;
    return out;
  }

  // Event A3 with the serving cell's offset and TTT.
  for (auto& t : s.ttt_elapsed_s)
    if (t) *t += tick_s;
  if (l3_update) {
    const double offset = cfg.a3_offset_db[s.serving];
    for (std::size_t b = 0; b < n; ++b) {
      if (b == s.serving) continue;
      if (check_event_a3(s.l3_value[s.serving], s.l3_value[b], offset)) {
        if (!s.ttt_elapsed_s[b]) s.ttt_elapsed_s[b] = 0.0;
      } else {
        s.ttt_elapsed_s[b].reset();
      }
    }
  }
  const double ttt_s = cfg.ttt_ms[s.serving] / 1000.0;
  std::optional<std::size_t> target;
  for (std::size_t b = 0; b < n; ++b) {
    if (s.ttt_elapsed_s[b] && *s.ttt_elapsed_s[b] >= ttt_s - kTimeEps &&
        (!target || s.l3_value[b] > s.l3_value[*target]))
      target = b;
  }
  if (target) {
    if (timers.ho_delay_s > kTimeEps) {
      s.pending_target = *target;
      s.pending_elapsed_s = 0.0;
      clear_ttt(s);
    } else {
      complete_handover(s, *target, link, timers, out.events);
    }
  }
  ++s.tick;
  return out;
}

TickOutcome step(UeConnectionState& state, std::span<const double> tick_gains, const LinkBudget& link,
                 const MobilityTimers& timers, const HoConfig& cfg, double tick_s) {
  const std::size_t n = link.cells();
  if (tick_gains.size() != n) throw ValidationError("step: gain vector does not match cell count");
  state.validate(n, timers);
  std::vector<double> rsrp(n);
  double total = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    rsrp[b] = rsrp_dbm(link.tx_dbm[b], tick_gains[b], link.n_re);
    total += link.tx_mw[b] * tick_gains[b];
  }
  return step_measured(state, rsrp, total, link, timers, cfg, tick_s);
}

namespace {

// Drives the state machine over precomputed measurements; shared by the
// public entry points and the caching evaluator.
KpiCounters drive(const RowMatrix& rsrp, std::span<const double> total_rx, double tick_s, const LinkBudget& link,
                  const HoConfig& cfg, const MobilityTimers& timers, int ue_id, EpisodeRecord* record) {
  KpiCounters counters;
  const auto ticks = static_cast<std::size_t>(rsrp.rows());
  if (ticks == 0) return counters;
  const std::size_t n = link.cells();
  auto row = [&](std::size_t t) { return std::span<const double>(rsrp.data() + t * n, n); };
  UeConnectionState state = UeConnectionState::attach(n, strongest(row(0)), timers);
  if (record) record->sinr_db.reserve(record->sinr_db.size() + ticks);
  for (std::size_t t = 0; t < ticks; ++t) {
    TickOutcome o = step_measured(state, row(t), total_rx[t], link, timers, cfg, tick_s);
    for (auto& e : o.events) {
      e.ue = ue_id;
      counters.record(e.type);
      if (record) record->events.push_back(e);
    }
    if (record) record->sinr_db.push_back(o.sinr_db);
  }
  counters.ticks = static_cast<std::int64_t>(ticks);
  return counters;
}

void measure(const GainTrace& trace, const LinkBudget& link, RowMatrix& rsrp, std::vector<double>& total) {
  const std::size_t n = link.cells();
  if (trace.cells() != n) throw ValidationError("gain trace has " + std::to_string(trace.cells()) +
                                                " cells, deployment has " + std::to_string(n));
  rsrp.resize(trace.gains_linear.rows(), trace.gains_linear.cols());
  total.assign(trace.ticks(), 0.0);
  const double re_db = 10.0 * std::log10(static_cast<double>(link.n_re));
  for (std::size_t t = 0; t < trace.ticks(); ++t) {
    auto g = trace.tick(t);
    for (std::size_t b = 0; b < n; ++b) {
      if (!(g[b] > 0.0)) throw ValidationError("gain trace: non-positive gain");
      rsrp(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b)) = link.tx_dbm[b] + 10.0 * std::log10(g[b]) - re_db;
      total[t] += link.tx_mw[b] * g[b];
    }
  }
}

}  // namespace

KpiCounters run_trace(const GainTrace& trace, const LinkBudget& link, const HoConfig& cfg,
                      const MobilityTimers& timers, int ue_id, EpisodeRecord* record) {
  timers.validate();
  if (cfg.cell_count() != link.cells())
    throw ValidationError("HoConfig dimensionality does not match the deployment's cell count");
  cfg.validate(link.cells());
  RowMatrix rsrp;
  std::vector<double> total;
  measure(trace, link, rsrp, total);
  return drive(rsrp, total, timers.l1_period_s, link, cfg, timers, ue_id, record);
}

KpiCounters run_episode(const DeploymentScenario& scenario, const UeTrajectory& traj, const HoConfig& cfg,
                        const MobilityTimers& timers, std::uint64_t seed, EpisodeRecord* record) {
  if (std::abs(traj.tick_s - timers.l1_period_s) > kTimeEps)
    throw ValidationError("trajectory tick must equal the L1 sampling period");
  GainTrace trace = compute_gain_trace(scenario, traj, seed);
  return run_trace(trace, LinkBudget::from(scenario), cfg, timers, traj.route_id, record);
}

EvalResult evaluate_config(const DeploymentScenario& scenario, std::span<const int> route_ids,
                           std::span<const double> speeds_mps, const HoConfig& cfg, const ObjectiveWeights& w,
                           std::span<const std::uint64_t> seeds, const MobilityTimers& timers) {
  if (seeds.empty()) throw ValidationError("evaluate_config needs at least one seed");
  w.validate();
  const std::size_t n_eps = route_ids.size() * speeds_mps.size() * seeds.size();
  std::vector<KpiCounters> per(n_eps);
  parallel_for(n_eps, [&](std::size_t i) {
    std::size_t k = i % seeds.size();
    std::size_t j = (i / seeds.size()) % speeds_mps.size();
    std::size_t r = i / (seeds.size() * speeds_mps.size());
    UeTrajectory traj = sample_trajectory(scenario, route_ids[r], speeds_mps[j], timers.l1_period_s);
    per[i] = run_episode(scenario, traj, cfg, timers, seeds[k]);
  });
  EvalResult res;
  for (const auto& c : per) res.counters += c;
  res.objective = objective(res.counters, w);
  res.pp_rate = pp_rate(res.counters);
  res.rlf_rate = rlf_rate(res.counters);
  res.seed = seeds.front();
  res.config = cfg;
  res.weights = w;
  return res;
}

MobilityEvaluator::MobilityEvaluator(DeploymentScenario scenario, std::vector<int> route_ids,
                                     std::vector<double> speeds_mps, std::vector<std::uint64_t> seeds,
                                     ObjectiveWeights weights, MobilityTimers timers)
    : scenario_(std::move(scenario)),
      route_ids_(std::move(route_ids)),
      speeds_mps_(std::move(speeds_mps)),
      seeds_(std::move(seeds)),
      weights_(weights),
      timers_(timers),
      link_(LinkBudget::from(scenario_)) {
  if (seeds_.empty()) throw ValidationError("evaluator needs at least one seed");
  weights_.validate();
  timers_.validate();
  const std::size_t n_eps = route_ids_.size() * speeds_mps_.size() * seeds_.size();
  prepared_.resize(n_eps);
  parallel_for(n_eps, [&](std::size_t i) {
    std::size_t k = i % seeds_.size();
    std::size_t j = (i / seeds_.size()) % speeds_mps_.size();
    std::size_t r = i / (seeds_.size() * speeds_mps_.size());
    UeTrajectory traj = sample_trajectory(scenario_, route_ids_[r], speeds_mps_[j], timers_.l1_period_s);
    GainTrace trace = compute_gain_trace(scenario_, traj, seeds_[k]);
    Prepared& p = prepared_[i];
    p.tick_s = traj.tick_s;
    measure(trace, link_, p.rsrp_dbm, p.total_rx_mw);
  });
}

KpiCounters MobilityEvaluator::run_prepared(const Prepared& p, const HoConfig& cfg) const {
  return drive(p.rsrp_dbm, p.total_rx_mw, p.tick_s, link_, cfg, timers_, 0, nullptr);
}

std::vector<KpiCounters> MobilityEvaluator::episodes(const HoConfig& cfg) const {
  cfg.validate(link_.cells());
  std::vector<KpiCounters> per(prepared_.size());
  parallel_for(prepared_.size(), [&](std::size_t i) { per[i] = run_prepared(prepared_[i], cfg); });
  return per;
}

EvalResult MobilityEvaluator::evaluate(const HoConfig& cfg) const {
  EvalResult res;
  for (const auto& c : episodes(cfg)) res.counters += c;
  res.objective = objective(res.counters, weights_);
  res.pp_rate = pp_rate(res.counters);
  res.rlf_rate = rlf_rate(res.counters);
  res.seed = seeds_.front();
  res.config = cfg;
  res.weights = weights_;
  return res;
}

double MobilityEvaluator::evaluate_unit(std::span<const double> x, HoMode mode) const {
  return evaluate(HoConfig::from_unit(x, cell_count(), mode)).objective;
}

}  // namespace hoturbo
