// hoturbo: simulate, optimize, transfer and report subcommands.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hoturbo/error.hpp"
#include "hoturbo/mobility.hpp"
#include "hoturbo/optimize.hpp"
#include "hoturbo/parallel.hpp"
#include "hoturbo/rng.hpp"
#include "hoturbo/scenario.hpp"
#include "hoturbo/transfer.hpp"

namespace fs = std::filesystem;
using namespace hoturbo;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Output {
  fs::path dir;
  std::string command;
  bool timestamp = true;

  std::string preamble() const {
    if (!timestamp) return {};
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return "hoturbo " + command + " " + buf;
  }

  fs::path prepare(const std::string& name) const {
    fs::create_directories(dir);
    return dir / name;
  }

  std::ofstream csv(const std::string& name) const {
    fs::path p = prepare(name);
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    if (timestamp) out << "# " << preamble() << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    return out;
  }
};

std::vector<std::uint64_t> episode_seeds(std::uint64_t seed, std::size_t n) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(derive_seed(seed, {stream::kEvalSeeds, i}));
  return out;
}

std::vector<int> select_routes(const DeploymentScenario& sc, const std::vector<int>& requested) {
  if (requested.empty()) {
    std::vector<int> all;
    for (const auto& r : sc.routes) all.push_back(r.id);
    return all;
  }
  for (int id : requested) sc.route(id);
  return requested;
}

void require_positive(const std::vector<double>& speeds) {
  if (speeds.empty()) throw UsageError("at least one speed is required");
  for (double v : speeds)
    if (!(v > 0.0)) throw UsageError("speeds must be > 0 km/h");
}

ObjectiveWeights weights_from(double wpp, double wrlf) {
  ObjectiveWeights w{wpp, wrlf};
  try {
    w.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  return w;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string set;
  std::string config;
  std::vector<double> speeds{3.0, 30.0, 60.0};
  std::size_t seeds = 20;
  std::uint64_t seed = 0;
  std::vector<int> routes;
  double wpp = 9.0;
  double wrlf = 1.0;
  bool record_sinr = false;
};

int cmd_simulate(const SimulateArgs& a, const Output& out) {
  if (a.set.empty() == a.config.empty()) throw UsageError("give exactly one of --set or --config");
  if (a.seeds < 1) throw UsageError("--seeds must be >= 1");
  require_positive(a.speeds);
  ObjectiveWeights w = weights_from(a.wpp, a.wrlf);
  std::optional<BenchmarkSet> bench;
  if (!a.set.empty()) {
    try {
      bench = benchmark_set(a.set);
    } catch (const ValidationError& e) {
      throw UsageError(e.what());
    }
  }

  DeploymentScenario sc = load_scenario(a.scenario);
  const std::size_t n_cells = sc.cells.size();
  HoConfig cfg = bench ? bench->config(n_cells) : load_ho_config(a.config, n_cells);
  const std::string config_id = bench ? bench->name : fs::path(a.config).stem().string();
  std::vector<int> routes = select_routes(sc, a.routes);
  std::vector<std::uint64_t> seeds = episode_seeds(a.seed, a.seeds);
  MobilityTimers timers;

  struct Episode {
    std::size_t speed = 0, seed = 0;
    int route = 0;
    KpiCounters counters;
    EpisodeRecord record;
  };
  std::vector<Episode> eps;
  for (std::size_t v = 0; v < a.speeds.size(); ++v)
    for (std::size_t s = 0; s < seeds.size(); ++s)
      for (int r : routes) eps.push_back({v, s, r, {}, {}});
  parallel_for(eps.size(), [&](std::size_t i) {
    Episode& e = eps[i];
    UeTrajectory traj = sample_trajectory(sc, e.route, kmh_to_mps(a.speeds[e.speed]), timers.l1_period_s);
    e.counters = run_episode(sc, traj, cfg, timers, seeds[e.seed], &e.record);
    if (!a.record_sinr) e.record.sinr_db.clear();
  });

  {
    auto kpi = out.csv("kpi.csv");
    kpi << "config_id,speed,seed,ho,hof,rlf,pp,objective\n";
    for (std::size_t v = 0; v < a.speeds.size(); ++v)
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        KpiCounters c;
        for (const auto& e : eps)
          if (e.speed == v && e.seed == s) c += e.counters;
        kpi << config_id << ',' << a.speeds[v] << ',' << seeds[s] << ',' << c.ho << ',' << c.hof << ',' << c.rlf
            << ',' << c.pp << ',' << objective(c, w) << '\n';
      }
  }
  {
    std::ofstream log(out.prepare("events.jsonl"));
    if (!log) throw Error("cannot write events.jsonl");
    for (const auto& e : eps)
      for (const auto& ev : e.record.events) {
        nlohmann::ordered_json j;
        j["tick"] = ev.tick;
        j["ue"] = ev.ue;
        j["type"] = std::string(to_string(ev.type));
        j["source"] = ev.source;
        j["target"] = ev.target;
        j["speed"] = a.speeds[e.speed];
        j["seed"] = seeds[e.seed];
        log << j.dump() << '\n';
      }
  }
  if (a.record_sinr) {
    auto sinr = out.csv("sinr.csv");
    sinr << "config_id,speed,seed,route,tick,sinr_db\n";
    for (const auto& e : eps)
      for (std::size_t t = 0; t < e.record.sinr_db.size(); ++t)
        sinr << config_id << ',' << a.speeds[e.speed] << ',' << seeds[e.seed] << ',' << e.route << ',' << t << ','
             << e.record.sinr_db[t] << '\n';
  }

  std::cout << "config " << config_id << ", " << seeds.size() << " seeds x " << routes.size() << " routes\n";
  std::cout << std::left << std::setw(10) << "speed" << std::setw(8) << "HO" << std::setw(8) << "HOF" << std::setw(8)
            << "RLF" << std::setw(8) << "PP" << std::setw(10) << "PP rate" << std::setw(10) << "RLF rate"
            << "objective\n";
  for (std::size_t v = 0; v < a.speeds.size(); ++v) {
    KpiCounters c;
    for (const auto& e : eps)
      if (e.speed == v) c += e.counters;
    std::cout << std::setw(10) << a.speeds[v] << std::setw(8) << c.ho << std::setw(8) << c.hof << std::setw(8)
              << c.rlf << std::setw(8) << c.pp << std::setw(10) << fmt(pp_rate(c)) << std::setw(10)
              << fmt(rlf_rate(c)) << fmt(objective(c, w)) << '\n';
  }
  return 0;
}

// ---- optimize ---------------------------------------------------------------

struct TurboArgs {
  std::size_t budget = 160;
  std::size_t q = 5;
  std::size_t n_init = 60;
  std::size_t m = 1;
  std::size_t candidates = 0;
  bool dense_candidates = false;

  TurboConfig config() const {
    TurboConfig cfg;
    cfg.budget = budget;
    cfg.q = q;
    cfg.n_init = n_init;
    cfg.m = m;
    cfg.n_candidates = candidates;
    cfg.sparse_perturbation = !dense_candidates;
    return cfg;
  }

  void add_to(CLI::App* app) {
    app->add_option("--budget", budget, "total evaluations including the initial design")->capture_default_str();
    app->add_option("--q", q, "batch size")->capture_default_str();
    app->add_option("--n-init", n_init, "initial design size per trust region")->capture_default_str();
    app->add_option("--trust-regions", m, "number of trust regions")->capture_default_str();
    app->add_option("--candidates", candidates, "candidates per TR per iteration (0: min(100d, 5000))");
    app->add_flag("--dense-candidates", dense_candidates, "perturb every coordinate of each candidate");
  }
};

struct OptimizeArgs {
  std::string scenario;
  std::string mode = "per-cell";
  double wpp = 9.0;
  double wrlf = 1.0;
  std::vector<double> speeds{30.0};
  std::size_t eval_seeds = 5;
  std::uint64_t seed = 0;
  std::vector<int> routes;
  std::string initial;
  std::string resume;
  TurboArgs turbo;
};

HoMode mode_from(const std::string& text) {
  try {
    return parse_ho_mode(text);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
}

TurboConfig checked(TurboConfig cfg, std::size_t d) {
  cfg.d = d;
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

void write_eval_row(std::ofstream& out, const std::string& label, const EvalResult& r) {
  const KpiCounters& c = r.counters;
  out << label << ',' << r.weights.w_pp << ',' << r.weights.w_rlf << ',' << c.ho << ',' << c.hof << ',' << c.rlf << ','
      << c.pp << ',' << r.pp_rate << ',' << r.rlf_rate << ',' << r.objective << '\n';
}

int cmd_optimize(const OptimizeArgs& a, const Output& out) {
  HoMode mode = mode_from(a.mode);
  ObjectiveWeights w = weights_from(a.wpp, a.wrlf);
  require_positive(a.speeds);
  if (a.eval_seeds < 1) throw UsageError("--eval-seeds must be >= 1");
  DeploymentScenario sc = load_scenario(a.scenario);
  const std::size_t n_cells = sc.cells.size();
  TurboConfig cfg = checked(a.turbo.config(), ho_dimension(mode, n_cells));

  std::vector<double> speeds_mps;
  for (double v : a.speeds) speeds_mps.push_back(kmh_to_mps(v));
  MobilityEvaluator ev(sc, select_routes(sc, a.routes), speeds_mps, episode_seeds(a.seed, a.eval_seeds), w);

  RunOptions options;
  options.parallel_batch = true;
  if (!a.initial.empty()) options.initial_data = load_dataset_csv(a.initial);
  OptimizationTrace resume;
  if (!a.resume.empty()) {
    resume = load_trace_csv(a.resume);
    options.resume = &resume;
  }
  HoOptimization res = optimize_ho(ev, mode, cfg, a.seed, options);

  save_trace_csv(out.prepare("trace.csv"), res.run.trace, out.preamble());
  save_ho_config(out.prepare("best_config.toml"), res.best, out.preamble());
  {
    auto evals = out.csv("evaluation.csv");
    evals << "config_id,w_pp,w_rlf,ho,hof,rlf,pp,pp_rate,rlf_rate,objective\n";
    write_eval_row(evals, "best", res.best_eval);
    write_eval_row(evals, "set-1", ev.evaluate(kSet1.config(n_cells)));
    write_eval_row(evals, "set-5", ev.evaluate(kSet5.config(n_cells)));
  }
  std::cout << "mode " << to_string(mode) << ", d = " << cfg.d << ", " << res.run.trace.history.size()
            << " evaluations, " << res.run.trace.iterations() << " BO iterations\n";
  std::cout << "best objective " << fmt(res.best_eval.objective, 6) << " (PP rate " << fmt(res.best_eval.pp_rate)
            << ", RLF rate " << fmt(res.best_eval.rlf_rate) << ")\n";
  return 0;
}

// ---- transfer ---------------------------------------------------------------

struct TransferArgs {
  std::string scenario;
  double source_speed = 60.0;
  double target_speed = 30.0;
  std::vector<double> mix{1.0, 0.5, 0.0};
  std::size_t seeds = 5;
  std::uint64_t seed = 0;
  std::size_t eval_seeds = 5;
  std::string mode = "per-cell";
  double wpp = 9.0;
  double wrlf = 1.0;
  std::vector<int> routes;
  std::string source_data;
  std::string target_data;
  TurboArgs turbo;
};

int cmd_transfer(const TransferArgs& a, const Output& out) {
  for (double f : a.mix)
    if (!(f >= 0.0 && f <= 1.0)) throw UsageError("--mix fractions must lie in [0, 1]");
  if (a.mix.empty()) throw UsageError("--mix needs at least one fraction");
  require_positive({a.source_speed, a.target_speed});
  if (a.seeds < 1 || a.eval_seeds < 1) throw UsageError("--seeds and --eval-seeds must be >= 1");
  HoMode mode = mode_from(a.mode);
  DeploymentScenario sc = load_scenario(a.scenario);

  TransferSettings s;
  s.source_speed_mps = kmh_to_mps(a.source_speed);
  s.target_speed_mps = kmh_to_mps(a.target_speed);
  s.fractions = a.mix;
  s.turbo = checked(a.turbo.config(), ho_dimension(mode, sc.cells.size()));
  s.seeds.clear();
  for (std::size_t i = 0; i < a.seeds; ++i) s.seeds.push_back(derive_seed(a.seed, {stream::kTransferMix, i}));
  s.mode = mode;
  s.route_ids = select_routes(sc, a.routes);
  s.episode_seeds = episode_seeds(a.seed, a.eval_seeds);
  s.weights = weights_from(a.wpp, a.wrlf);
  s.data_seed = derive_seed(a.seed, {stream::kDesign});
  if (!a.source_data.empty()) s.source_dataset = load_dataset_csv(a.source_data);
  if (!a.target_data.empty()) s.target_dataset = load_dataset_csv(a.target_data);

  TransferReport rep = run_transfer_experiment(sc, s);
  save_convergence_csv(out.prepare("convergence.csv"), rep, out.preamble());
  save_transfer_summary_csv(out.prepare("summary.csv"), rep, out.preamble());
  save_dataset_csv(out.prepare("source_dataset.csv"), rep.source_dataset, out.preamble());
  save_dataset_csv(out.prepare("target_dataset.csv"), rep.target_dataset, out.preamble());
  {
    auto refs = out.csv("references.csv");
    refs << "baseline,upper\n" << rep.baseline << ',' << rep.upper << '\n';
  }
  std::cout << "baseline " << fmt(rep.baseline, 6) << ", upper " << fmt(rep.upper, 6) << '\n';
  for (double f : a.mix)
    std::cout << "target fraction " << f << ": median final normalized KPI " << fmt(rep.median_final_normalized(f), 3)
              << '\n';
  return 0;
}

// ---- report -----------------------------------------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name, const std::string& file) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(file + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    auto row = split(line);
    if (row.size() != t.header.size())
      throw ParseError(path + ": row with " + std::to_string(row.size()) + " fields, header has " +
                       std::to_string(t.header.size()));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError(path + ": no header line");
  return t;
}

double num(const std::string& s, const std::string& file) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(file + ": bad number '" + s + "'");
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ReportArgs {
  std::vector<std::string> kpi;
  std::vector<std::string> sinr;
  std::vector<std::string> traces;
  std::vector<std::string> convergence;
  std::size_t cdf_points = 200;
  double wpp = 9.0;
  double wrlf = 1.0;
};

int cmd_report(const ReportArgs& a, const Output& out) {
  if (a.kpi.empty() && a.sinr.empty() && a.traces.empty() && a.convergence.empty())
    throw UsageError("no input files; give --kpi, --sinr, --trace or --convergence");
  if (a.cdf_points < 2) throw UsageError("--cdf-points must be >= 2");
  ObjectiveWeights w = weights_from(a.wpp, a.wrlf);

  if (!a.kpi.empty()) {
    std::map<std::pair<std::string, double>, std::pair<std::size_t, KpiCounters>> agg;
    for (const auto& f : a.kpi) {
      Table t = read_table(f);
      auto ci = t.col("config_id", f), sp = t.col("speed", f), ho = t.col("ho", f), hof = t.col("hof", f),
           rlf = t.col("rlf", f), pp = t.col("pp", f);
      for (const auto& r : t.rows) {
        auto& [rows, c] = agg[{r[ci], num(r[sp], f)}];
        ++rows;
        c.ho += static_cast<std::int64_t>(num(r[ho], f));
        c.hof += static_cast<std::int64_t>(num(r[hof], f));
        c.rlf += static_cast<std::int64_t>(num(r[rlf], f));
        c.pp += static_cast<std::int64_t>(num(r[pp], f));
      }
    }
    auto o = out.csv("kpi_bars.csv");
    o << "config_id,speed,rows,ho,hof,rlf,pp,pp_rate,rlf_rate,objective\n";
    for (const auto& [key, v] : agg) {
      const KpiCounters& c = v.second;
      o << key.first << ',' << key.second << ',' << v.first << ',' << c.ho << ',' << c.hof << ',' << c.rlf << ','
        << c.pp << ',' << pp_rate(c) << ',' << rlf_rate(c) << ',' << objective(c, w) << '\n';
    }
  }

  if (!a.sinr.empty()) {
    std::map<std::pair<std::string, double>, std::vector<double>> samples;
    for (const auto& f : a.sinr) {
      Table t = read_table(f);
      auto ci = t.col("config_id", f), sp = t.col("speed", f), s = t.col("sinr_db", f);
      for (const auto& r : t.rows) samples[{r[ci], num(r[sp], f)}].push_back(num(r[s], f));
    }
    auto o = out.csv("sinr_cdf.csv");
    o << "config_id,speed,sinr_db,probability\n";
    for (auto& [key, v] : samples) {
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      const std::size_t points = std::min(a.cdf_points, n);
      for (std::size_t k = 1; k <= points; ++k) {
        std::size_t idx = (k * n + points - 1) / points - 1;
        o << key.first << ',' << key.second << ',' << v[idx] << ',' << static_cast<double>(idx + 1) / n << '\n';
      }
    }
  }

  if (!a.traces.empty() || !a.convergence.empty()) {
    auto o = out.csv("convergence_curves.csv");
    o << "source,fraction,iteration,median_best_objective,median_normalized_kpi,runs\n";
    for (const auto& f : a.traces) {
      OptimizationTrace tr = load_trace_csv(f);
      std::vector<double> best = tr.best_per_iteration();
      for (std::size_t i = 0; i < best.size(); ++i) o << fs::path(f).stem().string() << ",," << i << ',' << best[i] << ",,1\n";
    }
    for (const auto& f : a.convergence) {
      Table t = read_table(f);
      auto fr = t.col("fraction", f), it = t.col("iteration", f), bo = t.col("best_objective", f),
           nk = t.col("normalized_kpi", f);
      std::map<std::pair<double, double>, std::pair<std::vector<double>, std::vector<double>>> groups;
      for (const auto& r : t.rows) {
        auto& g = groups[{num(r[fr], f), num(r[it], f)}];
        g.first.push_back(num(r[bo], f));
        g.second.push_back(num(r[nk], f));
      }
      for (const auto& [key, g] : groups)
        o << fs::path(f).stem().string() << ',' << key.first << ',' << key.second << ',' << median(g.first) << ','
          << median(g.second) << ',' << g.first.size() << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Handover parameter simulation and trust-region Bayesian optimization"};
  app.require_subcommand(1);
  Output out;
  bool no_timestamp = false;
  std::string out_dir;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_flag("--no-timestamp", no_timestamp, "omit the '#' timestamp line from CSV outputs");
  };

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "run benchmark or stored HO configurations");
  s->add_option("--scenario", sim.scenario, "scenario TOML file")->required()->check(CLI::ExistingFile);
  s->add_option("--set", sim.set, "benchmark set: set-1 or set-5");
  s->add_option("--config", sim.config, "HO configuration file")->check(CLI::ExistingFile);
  s->add_option("--speeds", sim.speeds, "UE speeds in km/h")->delimiter(',')->capture_default_str();
  s->add_option("--seeds", sim.seeds, "number of channel seeds")->capture_default_str();
  s->add_option("--seed", sim.seed, "base seed")->capture_default_str();
  s->add_option("--routes", sim.routes, "route ids (default: all)")->delimiter(',');
  s->add_option("--wpp", sim.wpp, "ping-pong weight")->capture_default_str();
  s->add_option("--wrlf", sim.wrlf, "RLF weight")->capture_default_str();
  s->add_flag("--record-sinr", sim.record_sinr, "write per-tick serving SINR to sinr.csv");
  common(s);

  OptimizeArgs opt;
  auto* o = app.add_subcommand("optimize", "optimize A3 offset and TTT with trust-region BO");
  o->add_option("--scenario", opt.scenario, "scenario TOML file")->required()->check(CLI::ExistingFile);
  o->add_option("--mode", opt.mode, "shared or per-cell")->capture_default_str();
  o->add_option("--wpp", opt.wpp, "ping-pong weight")->capture_default_str();
  o->add_option("--wrlf", opt.wrlf, "RLF weight")->capture_default_str();
  o->add_option("--speeds", opt.speeds, "UE speeds in km/h")->delimiter(',')->capture_default_str();
  o->add_option("--eval-seeds", opt.eval_seeds, "channel seeds per evaluation")->capture_default_str();
  o->add_option("--seed", opt.seed, "base seed")->capture_default_str();
  o->add_option("--routes", opt.routes, "route ids (default: all)")->delimiter(',');
  o->add_option("--initial", opt.initial, "initial dataset CSV for the first trust region")->check(CLI::ExistingFile);
  o->add_option("--resume", opt.resume, "trace CSV of an interrupted run with the same flags")
      ->check(CLI::ExistingFile);
  opt.turbo.add_to(o);
  common(o);

  TransferArgs tr;
  auto* t = app.add_subcommand("transfer", "mixed source/target initial data experiment");
  t->add_option("--scenario", tr.scenario, "scenario TOML file")->required()->check(CLI::ExistingFile);
  t->add_option("--source-speed", tr.source_speed, "source UE speed in km/h")->capture_default_str();
  t->add_option("--target-speed", tr.target_speed, "target UE speed in km/h")->capture_default_str();
  t->add_option("--mix", tr.mix, "target-data fractions")->delimiter(',')->capture_default_str();
  t->add_option("--seeds", tr.seeds, "optimization runs per fraction")->capture_default_str();
  t->add_option("--seed", tr.seed, "base seed")->capture_default_str();
  t->add_option("--eval-seeds", tr.eval_seeds, "channel seeds per evaluation")->capture_default_str();
  t->add_option("--mode", tr.mode, "shared or per-cell")->capture_default_str();
  t->add_option("--wpp", tr.wpp, "ping-pong weight")->capture_default_str();
  t->add_option("--wrlf", tr.wrlf, "RLF weight")->capture_default_str();
  t->add_option("--routes", tr.routes, "route ids (default: all)")->delimiter(',');
  t->add_option("--source-data", tr.source_data, "reuse a source dataset CSV")->check(CLI::ExistingFile);
  t->add_option("--target-data", tr.target_data, "reuse a target dataset CSV")->check(CLI::ExistingFile);
  tr.turbo.add_to(t);
  common(t);

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "plot-ready aggregates of earlier outputs");
  r->add_option("--kpi", rep.kpi, "KPI CSVs from simulate");
  r->add_option("--sinr", rep.sinr, "SINR CSVs from simulate --record-sinr");
  r->add_option("--trace", rep.traces, "trace CSVs from optimize");
  r->add_option("--convergence", rep.convergence, "convergence CSVs from transfer");
  r->add_option("--cdf-points", rep.cdf_points, "points per SINR CDF")->capture_default_str();
  r->add_option("--wpp", rep.wpp, "ping-pong weight")->capture_default_str();
  r->add_option("--wrlf", rep.wrlf, "RLF weight")->capture_default_str();
  common(r);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  out.dir = out_dir;
  out.timestamp = !no_timestamp;
  try {
    if (s->parsed()) {
      out.command = "simulate";
      return cmd_simulate(sim, out);
    }
    if (o->parsed()) {
      out.command = "optimize";
      return cmd_optimize(opt, out);
    }
    if (t->parsed()) {
      out.command = "transfer";
      return cmd_transfer(tr, out);
    }
    out.command = "report";
    return cmd_report(rep, out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
