#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "hoturbo/gp.hpp"
#include "hoturbo/mobility.hpp"
#include "hoturbo/turbo.hpp"

namespace hoturbo {

struct TransferSpec {
  Dataset source_dataset;  // D_sr
  Dataset target_dataset;  // D_tg
  double target_fraction = 1.0;
  std::size_t n_init = 60;

  void validate() const;
};

/// Rows drawn from the target set: round-half-up of fraction * n_init.
std::size_t target_row_count(double fraction, std::size_t n_init);

struct MixedDataset {
  Dataset data;
  std::vector<bool> from_target;  // per row
  std::vector<std::size_t> origin_row;  // row index in its source dataset
};

MixedDataset build_mixed_dataset(const TransferSpec& spec, std::uint64_t seed);
Dataset build_initial_dataset(const TransferSpec& spec, std::uint64_t seed);

struct NormalizedKpi {
  double raw = 0.0;
  double baseline = 0.0;
  double upper = 0.0;
  double normalized = 0.0;
};

/// 0 at the baseline, 1 at the upper reference; not clamped.
NormalizedKpi normalize_kpi(double raw, double baseline, double upper);

struct TransferSettings {
  double source_speed_mps = 60.0 / 3.6;
  double target_speed_mps = 30.0 / 3.6;
  std::vector<double> fractions{1.0, 0.5, 0.0};
  TurboConfig turbo{};  // d is set from the mode
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};  // one optimization per seed and fraction
  HoMode mode = HoMode::per_cell;
  std::vector<int> route_ids;                 // empty: every route
  std::vector<std::uint64_t> episode_seeds;  // channel realizations of both evaluators
  ObjectiveWeights weights{};
  MobilityTimers timers{};
  std::uint64_t data_seed = 0;  // draws the D_sr / D_tg configurations
  // Previously evaluated datasets; sampled afresh when absent.
  std::optional<Dataset> source_dataset;
  std::optional<Dataset> target_dataset;

  void validate() const;
};

struct TransferCurve {
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> best_objective;  // after BO iterations 1..K
  std::vector<double> normalized;
  EvalResult final;  // best configuration re-evaluated on the target
};

struct TransferReport {
  double baseline = 0.0;  // better of set-1 / set-5 on the target
  double upper = 0.0;     // best final objective of the target-only runs
  Dataset source_dataset;
  Dataset target_dataset;
  std::vector<TransferCurve> curves;  // ordered by fraction, then seed

  /// Median final normalized KPI over seeds for one fraction.
  double median_final_normalized(double fraction) const;
};

/// Random configurations evaluated on one evaluator (unit-cube inputs).
Dataset sample_dataset(const MobilityEvaluator& evaluator, HoMode mode, std::size_t n, std::uint64_t seed);

TransferReport run_transfer_experiment(const DeploymentScenario& scenario, const TransferSettings& settings);

/// {fraction, seed, iteration, best_objective, normalized_kpi}
void save_convergence_csv(const std::filesystem::path& path, const TransferReport& report,
                          std::string_view preamble = {});
/// {fraction, pp_rate, rlf_rate}; counters of the per-seed best configs are pooled.
void save_transfer_summary_csv(const std::filesystem::path& path, const TransferReport& report,
                               std::string_view preamble = {});

}  // namespace hoturbo
