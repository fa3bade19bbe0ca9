#include "hoturbo/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>

#include "hoturbo/error.hpp"
#include "hoturbo/optimize.hpp"
#include "hoturbo/rng.hpp"

namespace hoturbo {

std::size_t target_row_count(double fraction, std::size_t n_init) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n_init) + 0.5));
}

void TransferSpec::validate() const {
  if (!(target_fraction >= 0.0 && target_fraction <= 1.0))
    throw ValidationError("transfer: target fraction must lie in [0, 1]");
  if (n_init < 1) throw ValidationError("transfer: n_init must be >= 1");
  source_dataset.validate();
  target_dataset.validate();
  const std::size_t n_tg = target_row_count(target_fraction, n_init);
  const std::size_t n_sr = n_init - n_tg;
  if (n_tg > 0 && n_sr > 0 && source_dataset.dim() != target_dataset.dim())
    throw ValidationError("transfer: source and target datasets differ in dimension");
  if (n_tg > target_dataset.size())
    throw ValidationError("transfer: need " + std::to_string(n_tg) + " target rows, have " +
                          std::to_string(target_dataset.size()));
  if (n_sr > source_dataset.size())
    throw ValidationError("transfer: need " + std::to_string(n_sr) + " source rows, have " +
                          std::to_string(source_dataset.size()));
}

MixedDataset build_mixed_dataset(const TransferSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t n_tg = target_row_count(spec.target_fraction, spec.n_init);
  const std::size_t n_sr = spec.n_init - n_tg;
  Rng rng(derive_seed(seed, {stream::kTransferMix}));

  auto pick = [&](std::size_t available, std::size_t k) {
    std::vector<std::size_t> idx(available);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(k);
    return idx;
  };
  std::vector<std::pair<bool, std::size_t>> rows;
  for (std::size_t i : pick(spec.target_dataset.size(), n_tg)) rows.emplace_back(true, i);
  for (std::size_t i : pick(spec.source_dataset.size(), n_sr)) rows.emplace_back(false, i);
  std::shuffle(rows.begin(), rows.end(), rng);

  const std::size_t d = n_tg > 0 ? spec.target_dataset.dim() : spec.source_dataset.dim();
  MixedDataset out;
  out.data = Dataset(d);
  for (const auto& [target, i] : rows) {
    const Dataset& src = target ? spec.target_dataset : spec.source_dataset;
    out.data.append(src.x.row(static_cast<Eigen::Index>(i)).transpose(), src.y(static_cast<Eigen::Index>(i)));
    out.from_target.push_back(target);
    out.origin_row.push_back(i);
  }
  return out;
}

Dataset build_initial_dataset(const TransferSpec& spec, std::uint64_t seed) {
  return build_mixed_dataset(spec, seed).data;
}

NormalizedKpi normalize_kpi(double raw, double baseline, double upper) {
  if (!std::isfinite(raw) || !std::isfinite(baseline) || !std::isfinite(upper))
    throw ValidationError("normalize_kpi: inputs must be finite");
  if (baseline == upper) throw ValidationError("normalize_kpi: baseline equals upper reference");
  return {raw, baseline, upper, (baseline - raw) / (baseline - upper)};
}

void TransferSettings::validate() const {
  if (!(source_speed_mps > 0.0) || !(target_speed_mps > 0.0)) throw ValidationError("transfer: speeds must be > 0");
  if (fractions.empty()) throw ValidationError("transfer: no mix fractions");
  for (double f : fractions)
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("transfer: mix fraction outside [0, 1]");
  if (seeds.empty()) throw ValidationError("transfer: no optimization seeds");
  if (episode_seeds.empty()) throw ValidationError("transfer: no episode seeds");
  if (turbo.m != 1) throw ValidationError("transfer: the mixed dataset seeds a single trust region (m = 1)");
  weights.validate();
  timers.validate();
}

double TransferReport::median_final_normalized(double fraction) const {
  std::vector<double> v;
  for (const auto& c : curves)
    if (c.fraction == fraction && !c.normalized.empty()) v.push_back(c.normalized.back());
  if (v.empty()) throw ValidationError("transfer report: no curve for that fraction");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Dataset sample_dataset(const MobilityEvaluator& evaluator, HoMode mode, std::size_t n, std::uint64_t seed) {
  const std::size_t d = ho_dimension(mode, evaluator.cell_count());
  Rng rng(derive_seed(seed, {stream::kDesign}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset data(d);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : x) v = u(rng);
    data.append(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(d)),
                evaluator.evaluate_unit(x, mode));
  }
  return data;
}

TransferReport run_transfer_experiment(const DeploymentScenario& scenario, const TransferSettings& settings) {
  settings.validate();
  std::vector<int> routes = settings.route_ids;
  if (routes.empty())
    for (const auto& r : scenario.routes) routes.push_back(r.id);
  MobilityEvaluator source(scenario, routes, {settings.source_speed_mps}, settings.episode_seeds, settings.weights,
                           settings.timers);
  MobilityEvaluator target(scenario, routes, {settings.target_speed_mps}, settings.episode_seeds, settings.weights,
                           settings.timers);

  TurboConfig cfg = settings.turbo;
  cfg.d = ho_dimension(settings.mode, scenario.cells.size());
  cfg.validate();

  TransferReport report;
  auto dataset = [&](const std::optional<Dataset>& given, const MobilityEvaluator& ev, std::uint64_t tag) {
    if (!given) return sample_dataset(ev, settings.mode, cfg.n_init, derive_seed(settings.data_seed, {tag}));
    given->validate();
    if (given->dim() != cfg.d) throw ValidationError("transfer: supplied dataset has the wrong dimension");
    return *given;
  };
  report.source_dataset = dataset(settings.source_dataset, source, 1);
  report.target_dataset = dataset(settings.target_dataset, target, 2);
  const std::size_t n_cells = scenario.cells.size();
  report.baseline = std::min(target.evaluate(kSet1.config(n_cells)).objective,
                             target.evaluate(kSet5.config(n_cells)).objective);

  auto optimize = [&](double fraction, std::uint64_t seed) {
    TransferSpec spec{report.source_dataset, report.target_dataset, fraction, cfg.n_init};
    RunOptions options;
    options.initial_data = build_initial_dataset(spec, seed);
    HoOptimization opt = optimize_ho(target, settings.mode, cfg, seed, options);
    TransferCurve curve;
    curve.fraction = fraction;
    curve.seed = seed;
    std::vector<double> per_iter = opt.run.trace.best_per_iteration();
    curve.best_objective.assign(per_iter.begin() + 1, per_iter.end());
    curve.final = opt.best_eval;
    return curve;
  };

  std::vector<double> order = settings.fractions;
  std::vector<TransferCurve> curves;
  std::vector<TransferCurve> target_only;
  for (double f : order)
    for (std::uint64_t s : settings.seeds) {
      curves.push_back(optimize(f, s));
      if (f == 1.0) target_only.push_back(curves.back());
    }
  if (target_only.empty())
    for (std::uint64_t s : settings.seeds) target_only.push_back(optimize(1.0, s));

  report.upper = std::numeric_limits<double>::infinity();
  for (const auto& c : target_only)
    if (!c.best_objective.empty()) report.upper = std::min(report.upper, c.best_objective.back());
  if (!std::isfinite(report.upper)) throw BudgetError("transfer: budget leaves no BO iterations");
  if (report.upper == report.baseline)
    throw NumericalError("transfer: the target-only runs did not move away from the baseline");

  for (auto& c : curves) {
    c.normalized.clear();
    for (double v : c.best_objective) c.normalized.push_back(normalize_kpi(v, report.baseline, report.upper).normalized);
  }
  report.curves = std::move(curves);
  return report;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path, std::string_view preamble) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  if (!preamble.empty()) out << "# " << preamble << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

}  // namespace

void save_convergence_csv(const std::filesystem::path& path, const TransferReport& report,
                          std::string_view preamble) {
  auto out = open_csv(path, preamble);
  out << "fraction,seed,iteration,best_objective,normalized_kpi\n";
  for (const auto& c : report.curves)
    for (std::size_t i = 0; i < c.best_objective.size(); ++i)
      out << c.fraction << ',' << c.seed << ',' << i + 1 << ',' << c.best_objective[i] << ',' << c.normalized[i]
          << '\n';
}

void save_transfer_summary_csv(const std::filesystem::path& path, const TransferReport& report,
                               std::string_view preamble) {
  auto out = open_csv(path, preamble);
  out << "fraction,pp_rate,rlf_rate\n";
  std::vector<double> seen;
  for (const auto& c : report.curves) {
    if (std::find(seen.begin(), seen.end(), c.fraction) != seen.end()) continue;
    seen.push_back(c.fraction);
    KpiCounters pooled;
    for (const auto& o : report.curves)
      if (o.fraction == c.fraction) pooled += o.final.counters;
    out << c.fraction << ',' << pp_rate(pooled) << ',' << rlf_rate(pooled) << '\n';
  }
}

}  // namespace hoturbo
