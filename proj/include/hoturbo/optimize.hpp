#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "hoturbo/mobility.hpp"
#include "hoturbo/turbo.hpp"

namespace hoturbo {

struct HoOptimization {
  HoConfig best;
  EvalResult best_eval;
  RunResult run;
};

/// Optimizes A3/TTT on the evaluator's episode set. cfg.d is overwritten with
/// the dimension implied by the mode.
HoOptimization optimize_ho(const MobilityEvaluator& evaluator, HoMode mode, TurboConfig cfg, std::uint64_t seed,
                           const RunOptions& options = {});

/// Uniform random search with the same budget and trace layout as run(): the
/// first n_init rows are iteration 0, then q points per iteration.
RunResult random_search(const TurboConfig& cfg, const Objective& evaluator, std::uint64_t seed);

std::size_t ho_dimension(HoMode mode, std::size_t n_cells);

/// HO parameter file: mode = "shared" | "per-cell"; a3_offset_db and ttt_ms
/// are arrays with one entry per cell (a single entry in shared mode).
void save_ho_config(const std::filesystem::path& path, const HoConfig& cfg, std::string_view preamble = {});
HoConfig load_ho_config(const std::filesystem::path& path, std::size_t n_cells);

}  // namespace hoturbo
