#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hoturbo/gp.hpp"

namespace hoturbo {

struct TurboConfig {
  std::size_t m = 1;        // trust regions
  std::size_t q = 5;        // batch size
  std::size_t n_init = 60;  // initial design per trust region
  int tau_succ = 3;
  int tau_fail = 15;
  double l_init = 0.8;
  double l_min = 1.0 / 128.0;
  double l_max = 1.6;
  std::size_t budget = 160;  // total evaluations, initial designs included
  std::size_t d = 2;
  std::size_t n_candidates = 0;         // per TR per iteration; 0 -> min(100 d, 5000)
  std::size_t max_local_points = 1000;  // GP training window per TR
  /// Perturb each coordinate of a candidate with probability min(1, 20/d)
  /// instead of all of them; the rest stay at the TR center.
  bool sparse_perturbation = true;
  FitOptions fit{};

  void validate() const;
  std::size_t candidate_count() const;
  double perturb_probability() const;
};

struct TrustRegion {
  std::size_t id = 0;
  Eigen::VectorXd center;  // best point of local_data
  double center_value = 0.0;
  double base_length = 0.8;
  int succ_count = 0;
  int fail_count = 0;
  Dataset local_data;
  std::optional<GpModel> model;  // fitted on local_data

  /// Per-dimension side lengths: model length scales when fitted, else uniform.
  Eigen::VectorXd side_lengths() const;
  void recenter();
};

/// Side lengths proportional to the ARD length scales, with geometric mean L.
Eigen::VectorXd tr_side_lengths(const Eigen::VectorXd& length_scales, double base_length);

/// Low-discrepancy candidates in the TR box (center +- L_i/2) clipped to the unit cube.
/// With perturb_prob < 1 each coordinate moves with that probability (at least
/// one per point); the others are pinned to the center.
Eigen::MatrixXd generate_candidates(const TrustRegion& tr, std::size_t count, std::uint64_t seed,
                                    double perturb_prob = 1.0);

struct Selection {
  std::size_t tr_index = 0;  // index into the TR list passed in
  Eigen::VectorXd x;
  double sampled = 0.0;
};

/// Thompson selection of q distinct points from the union of the TRs'
/// candidate sets; each batch slot uses its own joint posterior draw per TR.
std::vector<Selection> select_batch(const std::vector<const TrustRegion*>& trs,
                                    const std::vector<Eigen::MatrixXd>& candidates, std::size_t q,
                                    std::uint64_t seed);
std::vector<Selection> select_batch(const std::vector<const TrustRegion*>& trs, std::size_t q, std::size_t n_cand,
                                    std::uint64_t seed, double perturb_prob = 1.0);

enum class TrStatus { kept, expanded, shrunk, restart };

/// Applies one batch outcome to a TR (appends data, moves the center on
/// success, adjusts counters and side length).
TrStatus update_tr(TrustRegion& tr, std::span<const std::pair<Eigen::VectorXd, double>> batch,
                   const TurboConfig& cfg);

/// Objective on the unit cube (minimized).
using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Fresh TR at l_init seeded with an n_init-point scrambled Sobol design.
TrustRegion restart_tr(const TurboConfig& cfg, std::uint64_t seed, const Objective& evaluator,
                       std::size_t remaining_budget, std::size_t id = 0);

struct TraceRow {
  std::size_t iteration = 0;  // 0 = initial design
  std::size_t tr_id = 0;
  Eigen::VectorXd x;
  double y = 0.0;
  double best_so_far = 0.0;
};

struct OptimizationTrace {
  std::vector<TraceRow> history;

  std::vector<double> best_so_far() const;
  /// Best value after each BO iteration (index 0 = after the initial design).
  std::vector<double> best_per_iteration() const;
  std::size_t iterations() const { return history.empty() ? 0 : history.back().iteration; }
};

/// CSV: iteration,tr_id,x0..x{d-1},y,best_so_far
void save_trace_csv(const std::filesystem::path& path, const OptimizationTrace& trace,
                    std::string_view preamble = {});
OptimizationTrace load_trace_csv(const std::filesystem::path& path);

struct RunResult {
  Eigen::VectorXd best_x;
  double best_y = 0.0;
  OptimizationTrace trace;
};

struct RunOptions {
  std::optional<Dataset> initial_data;  // seeds the first TR; counts against the budget
  const OptimizationTrace* resume = nullptr;
  bool parallel_batch = false;  // evaluate a batch concurrently (evaluator must be thread-safe)
};

/// Trust-region BO on [0,1]^d. Deterministic given seed and a deterministic evaluator.
RunResult run(const TurboConfig& cfg, const Objective& evaluator, std::uint64_t seed, const RunOptions& options = {});

}  // namespace hoturbo
