#include "hoturbo/optimize.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "hoturbo/error.hpp"
#include "hoturbo/rng.hpp"

namespace hoturbo {

std::size_t ho_dimension(HoMode mode, std::size_t n_cells) { return mode == HoMode::shared ? 2 : 2 * n_cells; }

HoOptimization optimize_ho(const MobilityEvaluator& evaluator, HoMode mode, TurboConfig cfg, std::uint64_t seed,
                           const RunOptions& options) {
  cfg.d = ho_dimension(mode, evaluator.cell_count());
  Objective f = [&](const Eigen::VectorXd& x) {
    return evaluator.evaluate_unit(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), mode);
  };
  HoOptimization out;
  out.run = run(cfg, f, seed, options);
  const Eigen::VectorXd& x = out.run.best_x;
  out.best = HoConfig::from_unit(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                 evaluator.cell_count(), mode);
  out.best_eval = evaluator.evaluate(out.best);
  return out;
}

RunResult random_search(const TurboConfig& cfg, const Objective& evaluator, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, {stream::kRandomSearch}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RunResult out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg.budget; ++i) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(cfg.d));
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = u(rng);
    double y = evaluator(x);
    if (y < best) {
      best = y;
      out.best_x = x;
    }
    std::size_t iteration = i < cfg.n_init ? 0 : 1 + (i - cfg.n_init) / cfg.q;
    out.trace.history.push_back({iteration, 0, x, y, best});
  }
  out.best_y = best;
  return out;
}

void save_ho_config(const std::filesystem::path& path, const HoConfig& cfg, std::string_view preamble) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  if (!preamble.empty()) out << "# " << preamble << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  const std::size_t n = cfg.mode == HoMode::shared ? std::min<std::size_t>(1, cfg.cell_count()) : cfg.cell_count();
  auto write = [&](const char* key, const std::vector<double>& v) {
    out << key << " = [";
    for (std::size_t i = 0; i < n; ++i) out << (i ? ", " : "") << v[i];
    out << "]\n";
  };
  out << "mode = \"" << to_string(cfg.mode) << "\"\n";
  write("a3_offset_db", cfg.a3_offset_db);
  write("ttt_ms", cfg.ttt_ms);
}

HoConfig load_ho_config(const std::filesystem::path& path, std::size_t n_cells) {
  toml::table root;
  try {
    root = toml::parse_file(path.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "HO config " << path.string() << ": " << e.description() << " at line " << e.source().begin.line;
    throw ParseError(msg.str());
  }
  auto mode_text = root["mode"].value<std::string>();
  if (!mode_text) throw ParseError("HO config: missing string key 'mode'");
  HoMode mode = parse_ho_mode(*mode_text);
  auto read = [&](const char* key) {
    const toml::array* a = root[key].as_array();
    if (!a) throw ParseError(std::string("HO config: missing array '") + key + "'");
    std::vector<double> v;
    for (const auto& node : *a) {
      auto x = node.value<double>();
      if (!x) throw ParseError(std::string("HO config: non-numeric entry in '") + key + "'");
      v.push_back(*x);
    }
    return v;
  };
  std::vector<double> a3 = read("a3_offset_db");
  std::vector<double> ttt = read("ttt_ms");
  HoConfig cfg;
  if (mode == HoMode::shared) {
    if (a3.size() != 1 || ttt.size() != 1) throw ValidationError("HO config: shared mode takes one A3 and one TTT value");
    cfg = HoConfig::shared(n_cells, a3[0], ttt[0]);
  } else {
    if (a3.size() != n_cells || ttt.size() != n_cells)
      throw ValidationError("HO config: per-cell mode needs " + std::to_string(n_cells) + " entries per array");
    cfg = HoConfig::per_cell(std::move(a3), std::move(ttt));
  }
  cfg.validate(n_cells);
  return cfg;
}

}  // namespace hoturbo
