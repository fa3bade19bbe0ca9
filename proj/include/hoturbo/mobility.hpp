#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hoturbo/channel.hpp"
#include "hoturbo/scenario.hpp"

namespace hoturbo {

// Decision-space bounds for A3 offset (dB) and time-to-trigger (ms).
inline constexpr double kA3MinDb = -1.0;
inline constexpr double kA3MaxDb = 3.0;
inline constexpr double kTttMinMs = 40.0;
inline constexpr double kTttMaxMs = 480.0;

enum class HoMode { shared, per_cell };

std::string_view to_string(HoMode mode);
HoMode parse_ho_mode(std::string_view text);

/// Per-cell A3 offset and TTT. Vectors always hold one entry per cell; in
/// shared mode all entries are equal.
struct HoConfig {
  std::vector<double> a3_offset_db;
  std::vector<double> ttt_ms;
  HoMode mode = HoMode::per_cell;

  static HoConfig shared(std::size_t n_cells, double a3_offset_db, double ttt_ms);
  static HoConfig per_cell(std::vector<double> a3_offset_db, std::vector<double> ttt_ms);

  std::size_t cell_count() const { return a3_offset_db.size(); }
  /// Optimizer dimension: 2 in shared mode, 2 * cells otherwise.
  std::size_t dimension() const { return mode == HoMode::shared ? 2 : 2 * cell_count(); }
  void validate(std::size_t n_cells) const;

  /// Min-max normalization onto [0,1]^d, layout [A3..., TTT...].
  std::vector<double> to_unit() const;
  static HoConfig from_unit(std::span<const double> x, std::size_t n_cells, HoMode mode);
};

/// 3GPP reference parameter sets at the two ends of the trade-off.
struct BenchmarkSet {
  std::string name;
  double a3_offset_db = 0.0;
  double ttt_ms = 0.0;

  HoConfig config(std::size_t n_cells) const { return HoConfig::shared(n_cells, a3_offset_db, ttt_ms); }
};

BenchmarkSet benchmark_set(std::string_view name);  // "set-1" or "set-5"
inline const BenchmarkSet kSet1{"set-1", 3.0, 480.0};
inline const BenchmarkSet kSet5{"set-5", -1.0, 40.0};

struct MobilityTimers {
  double q_out_db = -8.0;
  double q_in_db = -6.0;
  double t310_s = 1.0;
  double t_p_s = 1.0;
  double l1_period_s = 0.04;
  int l1_window = 5;
  double l3_period_s = 0.2;
  double l3_alpha = 0.5;
  /// Delay between TTT expiry and handover completion.
  double ho_delay_s = 0.0;

  void validate() const;
  int l3_every_ticks() const;
};

/// Transmit powers and noise for one deployment; shared by all episodes.
struct LinkBudget {
  std::vector<int> cell_ids;
  std::vector<double> tx_dbm;
  std::vector<double> tx_mw;
  double noise_mw = 0.0;
  int n_re = kDefaultReCount;

  static LinkBudget from(const DeploymentScenario& scenario);
  std::size_t cells() const { return tx_dbm.size(); }
};

enum class EventType { HO, HOF, RLF, PP };
std::string_view to_string(EventType type);

struct Event {
  std::size_t tick = 0;
  int ue = 0;
  EventType type = EventType::HO;
  int source = 0;  // cell id
  int target = 0;  // cell id
};

struct UeConnectionState {
  std::size_t serving = 0;  // cell index
  std::optional<std::size_t> prev_cell;
  std::vector<double> l1_buffer;  // cells x l1_window ring
  std::size_t l1_fill = 0;        // samples pushed since start (ring cursor)
  std::vector<double> l3_value;
  bool l3_ready = false;
  std::vector<std::optional<double>> ttt_elapsed_s;  // per cell; nullopt when idle
  std::optional<double> t310_elapsed_s;
  std::optional<std::size_t> pending_target;
  double pending_elapsed_s = 0.0;
  double time_of_stay_s = 0.0;
  std::size_t tick = 0;

  static UeConnectionState attach(std::size_t n_cells, std::size_t serving, const MobilityTimers& timers);
  void validate(std::size_t n_cells, const MobilityTimers& timers) const;
};

struct KpiCounters {
  std::int64_t ho = 0;
  std::int64_t hof = 0;
  std::int64_t pp = 0;
  std::int64_t rlf = 0;
  std::int64_t ticks = 0;

  KpiCounters& operator+=(const KpiCounters& o);
  friend KpiCounters operator+(KpiCounters a, const KpiCounters& b) { return a += b; }
  bool operator==(const KpiCounters&) const = default;
  void record(EventType type);
};

struct ObjectiveWeights {
  double w_pp = 9.0;
  double w_rlf = 1.0;
  void validate() const;
};

double pp_rate(const KpiCounters& c);   // pp / max(1, ho - hof)
double rlf_rate(const KpiCounters& c);  // rlf / max(1, ho)
double objective(const KpiCounters& c, const ObjectiveWeights& w);

struct EvalResult {
  double objective = 0.0;
  KpiCounters counters{};
  double pp_rate = 0.0;
  double rlf_rate = 0.0;
  std::uint64_t seed = 0;
  HoConfig config{};
  ObjectiveWeights weights{};
};

double l1_filter(std::span<const double> samples, int window = 5);
double l3_filter(double prev, double meas, double alpha);
bool check_event_a3(double l3_serving, double l3_target, double offset_db);
bool detect_ping_pong(std::optional<std::size_t> prev_source, std::size_t new_target, double time_of_stay_s,
                      double t_p_s);

struct TickOutcome {
  std::vector<Event> events;
  double sinr_db = 0.0;  // serving-cell SINR at the start of the tick
};

/// Advances the connection by one tick given that tick's linear gains.
TickOutcome step(UeConnectionState& state, std::span<const double> tick_gains, const LinkBudget& link,
                 const MobilityTimers& timers, const HoConfig& cfg, double tick_s);

/// Same, from precomputed per-cell RSRP (dBm) and the total received power
/// over all cells (mW).
TickOutcome step_measured(UeConnectionState& state, std::span<const double> rsrp, double total_rx_mw,
                          const LinkBudget& link, const MobilityTimers& timers, const HoConfig& cfg, double tick_s);

/// Optional per-episode detail for logs and reports.
struct EpisodeRecord {
  std::vector<Event> events;
  std::vector<double> sinr_db;
};

/// Runs the state machine over a whole trace; initial serving cell is the
/// strongest first-tick RSRP.
KpiCounters run_trace(const GainTrace& trace, const LinkBudget& link, const HoConfig& cfg,
                      const MobilityTimers& timers, int ue_id = 0, EpisodeRecord* record = nullptr);

KpiCounters run_episode(const DeploymentScenario& scenario, const UeTrajectory& traj, const HoConfig& cfg,
                        const MobilityTimers& timers, std::uint64_t seed, EpisodeRecord* record = nullptr);

/// Aggregates counters over every (route, speed, seed) episode, then applies
/// the objective. Speeds are in m/s.
EvalResult evaluate_config(const DeploymentScenario& scenario, std::span<const int> route_ids,
                           std::span<const double> speeds_mps, const HoConfig& cfg, const ObjectiveWeights& w,
                           std::span<const std::uint64_t> seeds, const MobilityTimers& timers = {});

/// Evaluator with the channel realizations of a fixed episode set computed
/// once. Thread-safe for concurrent evaluate() calls.
class MobilityEvaluator {
 public:
  MobilityEvaluator(DeploymentScenario scenario, std::vector<int> route_ids, std::vector<double> speeds_mps,
                    std::vector<std::uint64_t> seeds, ObjectiveWeights weights, MobilityTimers timers = {});

  EvalResult evaluate(const HoConfig& cfg) const;
  /// Objective at a normalized point of the decision space for the given mode.
  double evaluate_unit(std::span<const double> x, HoMode mode) const;
  /// Counters per episode in (route, speed, seed) order.
  std::vector<KpiCounters> episodes(const HoConfig& cfg) const;

  const DeploymentScenario& scenario() const { return scenario_; }
  const std::vector<std::uint64_t>& seeds() const { return seeds_; }
  const ObjectiveWeights& weights() const { return weights_; }
  std::size_t cell_count() const { return scenario_.cells.size(); }

 private:
  struct Prepared {
    RowMatrix rsrp_dbm;
    std::vector<double> total_rx_mw;
    double tick_s;
  };
  KpiCounters run_prepared(const Prepared& p, const HoConfig& cfg) const;

  DeploymentScenario scenario_;
  std::vector<int> route_ids_;
  std::vector<double> speeds_mps_;
  std::vector<std::uint64_t> seeds_;
  ObjectiveWeights weights_;
  MobilityTimers timers_;
  LinkBudget link_;
  std::vector<Prepared> prepared_;
};

}  // namespace hoturbo
