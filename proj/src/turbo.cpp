#include "hoturbo/turbo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hoturbo/error.hpp"
#include "hoturbo/parallel.hpp"
#include "hoturbo/qmc.hpp"
#include "hoturbo/rng.hpp"

namespace hoturbo {

void TurboConfig::validate() const {
  if (!(l_min > 0.0 && l_min < l_init && l_init <= l_max)) throw ValidationError("turbo: need 0 < l_min < l_init <= l_max");
  if (tau_succ < 1 || tau_fail < 1) throw ValidationError("turbo: tau_succ and tau_fail must be >= 1");
  if (q < 1) throw ValidationError("turbo: q must be >= 1");
  if (m < 1) throw ValidationError("turbo: m must be >= 1");
  if (d < 1) throw ValidationError("turbo: d must be >= 1");
  if (n_init < 2) throw ValidationError("turbo: n_init must be >= 2");
  if (max_local_points < 2) throw ValidationError("turbo: max_local_points must be >= 2");
}

double TurboConfig::perturb_probability() const {
  if (!sparse_perturbation) return 1.0;
  return std::min(1.0, 20.0 / static_cast<double>(d));
}

std::size_t TurboConfig::candidate_count() const {
  return n_candidates > 0 ? n_candidates : std::min<std::size_t>(100 * d, 5000);
}

Eigen::VectorXd tr_side_lengths(const Eigen::VectorXd& length_scales, double base_length) {
  if (length_scales.size() == 0) throw ValidationError("tr_side_lengths: empty length-scale vector");
  if (!(base_length > 0.0) || length_scales.minCoeff() <= 0.0)
    throw ValidationError("tr_side_lengths: length scales and base length must be > 0");
  const double d = static_cast<double>(length_scales.size());
  double prod = length_scales.prod();
  double geo = std::isnormal(prod) ? std::pow(prod, 1.0 / d) : std::exp(length_scales.array().log().mean());
  return (length_scales * base_length) / geo;
}

Eigen::VectorXd TrustRegion::side_lengths() const {
  if (model) return tr_side_lengths(model->hyper().length_scales, base_length);
  return Eigen::VectorXd::Constant(center.size(), base_length);
}

void TrustRegion::recenter() {
  if (local_data.size() == 0) return;
  Eigen::Index best = 0;
  local_data.y.minCoeff(&best);
  center = local_data.x.row(best).transpose();
  center_value = local_data.y(best);
}

Eigen::MatrixXd generate_candidates(const TrustRegion& tr, std::size_t count, std::uint64_t seed,
                                    double perturb_prob) {
  if (count < 1) throw ValidationError("generate_candidates: count must be >= 1");
  if (!(perturb_prob > 0.0 && perturb_prob <= 1.0))
    throw ValidationError("generate_candidates: perturbation probability must lie in (0, 1]");
  const auto d = static_cast<std::size_t>(tr.center.size());
  Eigen::VectorXd half = tr.side_lengths() / 2.0;
  Eigen::VectorXd lo = (tr.center - half).cwiseMax(0.0);
  Eigen::VectorXd hi = (tr.center + half).cwiseMin(1.0);
  Eigen::MatrixXd u = sobol_points(count, d, seed);
  Eigen::MatrixXd pts = (u * (hi - lo).asDiagonal()).rowwise() + lo.transpose();
  if (perturb_prob < 1.0) {
    // Sparse moves: untouched coordinates stay at the center, at least one moves.
    Rng rng(derive_seed(seed, {stream::kCandidates}));
    std::bernoulli_distribution keep_move(perturb_prob);
    std::uniform_int_distribution<std::size_t> any_dim(0, d - 1);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      bool moved = false;
      for (std::size_t j = 0; j < d; ++j) {
        if (keep_move(rng)) {
          moved = true;
        } else {
          pts(i, static_cast<Eigen::Index>(j)) = tr.center(static_cast<Eigen::Index>(j));
        }
      }
      if (!moved) {
        std::size_t j = any_dim(rng);
        pts(i, static_cast<Eigen::Index>(j)) = lo(static_cast<Eigen::Index>(j)) + u(i, static_cast<Eigen::Index>(j)) * (hi(static_cast<Eigen::Index>(j)) - lo(static_cast<Eigen::Index>(j)));
      }
    }
  }
  return pts.cwiseMax(0.0).cwiseMin(1.0);
}

std::vector<Selection> select_batch(const std::vector<const TrustRegion*>& trs,
                                    const std::vector<Eigen::MatrixXd>& candidates, std::size_t q,
                                    std::uint64_t seed) {
  if (trs.empty()) throw ValidationError("select_batch: no active trust regions");
  if (candidates.size() != trs.size()) throw ValidationError("select_batch: one candidate set per TR required");
  std::size_t pool = 0;
  for (const auto& c : candidates) pool += static_cast<std::size_t>(c.rows());
  if (q > pool) throw ValidationError("select_batch: batch larger than the candidate pool");

  std::vector<Eigen::MatrixXd> draws(trs.size());
  for (std::size_t t = 0; t < trs.size(); ++t) {
    if (!trs[t]->model) throw ValidationError("select_batch: trust region without a fitted model");
    draws[t] = trs[t]->model->sample_joint(candidates[t], derive_seed(seed, {stream::kThompson, t}),
                                           static_cast<int>(q));
  }
  std::vector<std::vector<bool>> taken(trs.size());
  for (std::size_t t = 0; t < trs.size(); ++t) taken[t].assign(static_cast<std::size_t>(candidates[t].rows()), false);

  std::vector<Selection> out;
  out.reserve(q);
  for (std::size_t slot = 0; slot < q; ++slot) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_t = 0;
    Eigen::Index best_i = -1;
    for (std::size_t t = 0; t < trs.size(); ++t) {
      for (Eigen::Index i = 0; i < draws[t].rows(); ++i) {
        if (taken[t][static_cast<std::size_t>(i)]) continue;
        double v = draws[t](i, static_cast<Eigen::Index>(slot));
        if (v < best || best_i < 0) {
          best = v;
          best_t = t;
          best_i = i;
        }
      }
    }
    taken[best_t][static_cast<std::size_t>(best_i)] = true;
    out.push_back({best_t, candidates[best_t].row(best_i).transpose(), best});
  }
  return out;
}

std::vector<Selection> select_batch(const std::vector<const TrustRegion*>& trs, std::size_t q, std::size_t n_cand,
                                    std::uint64_t seed, double perturb_prob) {
  std::vector<Eigen::MatrixXd> candidates;
  candidates.reserve(trs.size());
  for (std::size_t t = 0; t < trs.size(); ++t)
    candidates.push_back(
        generate_candidates(*trs[t], n_cand, derive_seed(seed, {stream::kCandidates, t}), perturb_prob));
  return select_batch(trs, candidates, q, seed);
}

TrStatus update_tr(TrustRegion& tr, std::span<const std::pair<Eigen::VectorXd, double>> batch,
                   const TurboConfig& cfg) {
  if (batch.empty()) return TrStatus::kept;
  auto best = std::min_element(batch.begin(), batch.end(),
                               [](const auto& a, const auto& b) { return a.second < b.second; });
  const bool success = tr.local_data.size() == 0 || best->second < tr.center_value;
  for (const auto& [x, y] : batch) tr.local_data.append(x, y);
  if (success) {
    tr.center = best->first;
    tr.center_value = best->second;
    ++tr.succ_count;
    tr.fail_count = 0;
  } else {
    ++tr.fail_count;
    tr.succ_count = 0;
  }
  TrStatus status = TrStatus::kept;
  if (tr.succ_count >= cfg.tau_succ) {
    tr.base_length = std::min(cfg.l_max, 2.0 * tr.base_length);
    tr.succ_count = 0;
    tr.fail_count = 0;
    status = TrStatus::expanded;
  } else if (tr.fail_count >= cfg.tau_fail) {
    tr.base_length /= 2.0;
    tr.succ_count = 0;
    tr.fail_count = 0;
    status = TrStatus::shrunk;
  }
  if (tr.base_length < cfg.l_min) return TrStatus::restart;
  return status;
}

TrustRegion restart_tr(const TurboConfig& cfg, std::uint64_t seed, const Objective& evaluator,
                       std::size_t remaining_budget, std::size_t id) {
  if (remaining_budget < cfg.n_init)
    throw BudgetError("restart needs " + std::to_string(cfg.n_init) + " evaluations, " +
                      std::to_string(remaining_budget) + " remain");
  TrustRegion tr;
  tr.id = id;
  tr.base_length = cfg.l_init;
  tr.local_data = Dataset(cfg.d);
  Eigen::MatrixXd design = sobol_points(cfg.n_init, cfg.d, derive_seed(seed, {stream::kDesign}));
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    Eigen::VectorXd x = design.row(i).transpose();
    tr.local_data.append(x, evaluator(x));
  }
  tr.recenter();
  return tr;
}

std::vector<double> OptimizationTrace::best_so_far() const {
  std::vector<double> out;
  out.reserve(history.size());
  for (const auto& r : history) out.push_back(r.best_so_far);
  return out;
}

std::vector<double> OptimizationTrace::best_per_iteration() const {
  std::vector<double> out;
  for (const auto& r : history) {
    if (out.size() <= r.iteration) out.resize(r.iteration + 1, out.empty() ? r.best_so_far : out.back());
    out[r.iteration] = r.best_so_far;
  }
  return out;
}

void save_trace_csv(const std::filesystem::path& path, const OptimizationTrace& trace, std::string_view preamble) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace " + path.string());
  if (!preamble.empty()) out << "# " << preamble << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  const Eigen::Index d = trace.history.empty() ? 0 : trace.history.front().x.size();
  out << "iteration,tr_id";
  for (Eigen::Index j = 0; j < d; ++j) out << ",x" << j;
  out << ",y,best_so_far\n";
  for (const auto& r : trace.history) {
    out << r.iteration << ',' << r.tr_id;
    for (Eigen::Index j = 0; j < r.x.size(); ++j) out << ',' << r.x(j);
    out << ',' << r.y << ',' << r.best_so_far << '\n';
  }
}

OptimizationTrace load_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace " + path.string());
  std::string line;
  while (std::getline(in, line) && line.rfind('#', 0) == 0) {
  }
  if (line.rfind("iteration,tr_id", 0) != 0) throw ParseError("trace: unexpected header");
  std::size_t cols = 1;
  for (char c : line) cols += c == ',';
  if (cols < 5) throw ParseError("trace: header has no x columns");
  const std::size_t d = cols - 4;
  OptimizationTrace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<double> v;
    try {
      while (std::getline(fields, cell, ',')) v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ParseError("trace: bad number on line " + std::to_string(lineno));
    }
    if (v.size() != cols) throw ParseError("trace: wrong column count on line " + std::to_string(lineno));
    TraceRow r;
    r.iteration = static_cast<std::size_t>(v[0]);
    r.tr_id = static_cast<std::size_t>(v[1]);
    r.x = Eigen::Map<Eigen::VectorXd>(v.data() + 2, static_cast<Eigen::Index>(d));
    r.y = v[2 + d];
    r.best_so_far = v[3 + d];
    trace.history.push_back(std::move(r));
  }
  return trace;
}

namespace {

// Geometric-mean identity of the side-length rule; violated only by a bug.
void check_side_lengths(const TrustRegion& tr) {
  if (!tr.model) return;
  Eigen::VectorXd s = tr.side_lengths();
  double geo = std::exp(s.array().log().mean());
  if (std::abs(geo - tr.base_length) > 1e-12)
    throw std::logic_error("trust-region side lengths lost their geometric mean");
}

}  // namespace

RunResult run(const TurboConfig& cfg, const Objective& evaluator, std::uint64_t seed, const RunOptions& options) {
  cfg.validate();
  const std::size_t initial_rows = options.initial_data ? options.initial_data->size() : 0;
  if (options.initial_data) {
    options.initial_data->validate();
    if (options.initial_data->dim() != cfg.d) throw ValidationError("initial data dimension does not match d");
    if (initial_rows < 2) throw ValidationError("initial data needs at least 2 rows");
  }
  const std::size_t fresh_trs = options.initial_data ? cfg.m - 1 : cfg.m;
  if (cfg.budget < initial_rows + fresh_trs * cfg.n_init)
    throw BudgetError("budget " + std::to_string(cfg.budget) + " cannot cover the initial designs");

  RunResult result;
  auto& history = result.trace.history;
  double best = std::numeric_limits<double>::infinity();
  std::size_t used = initial_rows;
  std::size_t evaluated = 0;
  std::size_t iteration = 0;

  auto record = [&](std::size_t tr_id, const Eigen::VectorXd& x, double y) {
    if (y < best || history.empty()) {
      best = y;
      result.best_x = x;
    }
    result.best_y = best;
    history.push_back({iteration, tr_id, x, y, best});
  };

  std::size_t current_tr = 0;
  // Replays recorded values while resuming; the tracked TR only labels rows.
  auto evaluate = [&](const Eigen::VectorXd& x) -> double {
    const std::size_t k = initial_rows + evaluated;
    double y;
    if (options.resume && k < options.resume->history.size()) {
      const TraceRow& r = options.resume->history[k];
      if (r.x.size() != x.size() || (r.x - x).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError("resume trace does not match this configuration and seed at row " + std::to_string(k));
      y = r.y;
    } else {
      try {
        y = evaluator(x);
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "evaluator failed at x = [" << x.transpose() << "]: " << e.what();
        throw Error(msg.str());
      }
    }
    ++evaluated;
    return y;
  };
  auto recording_evaluator = [&](const Eigen::VectorXd& x) {
    double y = evaluate(x);
    record(current_tr, x, y);
    return y;
  };

  std::vector<TrustRegion> trs;
  std::size_t next_id = 0;
  if (options.initial_data) {
    TrustRegion tr;
    tr.id = next_id++;
    tr.base_length = cfg.l_init;
    tr.local_data = *options.initial_data;
    tr.recenter();
    for (std::size_t i = 0; i < initial_rows; ++i)
      record(tr.id, options.initial_data->x.row(static_cast<Eigen::Index>(i)).transpose(),
             options.initial_data->y(static_cast<Eigen::Index>(i)));
    trs.push_back(std::move(tr));
  }
  while (trs.size() < cfg.m) {
    current_tr = next_id;
    trs.push_back(restart_tr(cfg, derive_seed(seed, {stream::kRestart, next_id}), recording_evaluator,
                             cfg.budget - used, next_id));
    ++next_id;
    used += cfg.n_init;
  }

  while (used < cfg.budget && !trs.empty()) {
    ++iteration;
    const std::uint64_t iter_seed = derive_seed(seed, {stream::kCandidates, iteration});
    for (auto& tr : trs) {
      tr.model = GpModel::fit(tr.local_data.tail(cfg.max_local_points),
                              derive_seed(seed, {stream::kGpFit, iteration, tr.id}), cfg.fit);
      check_side_lengths(tr);
    }
    std::vector<const TrustRegion*> active;
    for (const auto& tr : trs) active.push_back(&tr);
    const std::size_t q = std::min(cfg.q, cfg.budget - used);
    std::vector<Selection> batch = select_batch(active, q, cfg.candidate_count(), iter_seed, cfg.perturb_probability());

    std::vector<double> values(batch.size());
    if (options.parallel_batch && !options.resume) {
      parallel_for(batch.size(), [&](std::size_t i) { values[i] = evaluator(batch[i].x); });
      evaluated += batch.size();
    } else {
      for (std::size_t i = 0; i < batch.size(); ++i) values[i] = evaluate(batch[i].x);
    }
    used += batch.size();

    std::vector<std::vector<std::pair<Eigen::VectorXd, double>>> per_tr(trs.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      record(trs[batch[i].tr_index].id, batch[i].x, values[i]);
      per_tr[batch[i].tr_index].emplace_back(batch[i].x, values[i]);
    }

    std::vector<TrustRegion> next;
    for (std::size_t t = 0; t < trs.size(); ++t) {
      if (per_tr[t].empty() || update_tr(trs[t], per_tr[t], cfg) != TrStatus::restart) {
        next.push_back(std::move(trs[t]));
        continue;
      }
      if (cfg.budget - used >= cfg.n_init) {
        current_tr = next_id;
        next.push_back(restart_tr(cfg, derive_seed(seed, {stream::kRestart, next_id}), recording_evaluator,
                                  cfg.budget - used, next_id));
        ++next_id;
        used += cfg.n_init;
      }
    }
    trs = std::move(next);
  }
  return result;
}

}  // namespace hoturbo
