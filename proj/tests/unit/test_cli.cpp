#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = HOTURBO_CLI_PATH;
const std::string kGrid = (fs::path(HOTURBO_SOURCE_DIR) / "scenarios" / "grid10.toml").string();

int cli(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = testing::temp_path("cli") / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Rows of a CSV without comment lines, split on commas; the header comes first.
std::vector<std::vector<std::string>> rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    out.push_back(cells);
  }
  return out;
}

std::size_t column(const std::vector<std::vector<std::string>>& t, const std::string& name) {
  for (std::size_t i = 0; i < t.at(0).size(); ++i)
    if (t[0][i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

}  // namespace

TEST_CASE("simulate writes one row per speed and seed") {
  fs::path out = fresh_dir("sim");
  REQUIRE(cli("simulate --scenario " + kGrid + " --set set-1 --speeds 3,30,60 --seeds 20 --out " + out.string()) == 0);
  auto kpi = rows(out / "kpi.csv");
  CHECK(kpi.size() == 1 + 60);
  CHECK(fs::exists(out / "events.jsonl"));
  std::set<std::string> speeds;
  for (std::size_t i = 1; i < kpi.size(); ++i) speeds.insert(kpi[i][column(kpi, "speed")]);
  CHECK(speeds.size() == 3);
}

TEST_CASE("usage and runtime errors") {
  fs::path out = fresh_dir("errors");
  CHECK(cli("simulate --scenario " + kGrid + " --set set-9 --out " + out.string()) == 2);
  CHECK(cli("simulate --scenario " + kGrid + " --out " + out.string()) == 2);
  CHECK(cli("simulate --scenario missing.toml --set set-1 --out " + out.string()) == 2);
  CHECK(cli("simulate --scenario " + kGrid + " --set set-1 --seeds 1 --routes 99 --out " + out.string()) == 1);
  CHECK(cli("optimize --scenario " + kGrid + " --mode diagonal --out " + out.string()) == 2);
  CHECK(cli("transfer --scenario " + kGrid + " --mix 1.5 --out " + out.string()) == 2);
  CHECK(cli("report --out " + out.string()) == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("") == 2);
}

TEST_CASE("set-5 hands over more eagerly than set-1 at 60 km/h") {
  auto totals = [](const fs::path& p) {
    auto t = rows(p);
    long pp = 0, rlf = 0;
    for (std::size_t i = 1; i < t.size(); ++i) {
      pp += std::stol(t[i][column(t, "pp")]);
      rlf += std::stol(t[i][column(t, "rlf")]);
    }
    return std::pair{pp, rlf};
  };
  fs::path a = fresh_dir("set1"), b = fresh_dir("set5");
  REQUIRE(cli("simulate --scenario " + kGrid + " --set set-1 --speeds 60 --seeds 20 --out " + a.string()) == 0);
  REQUIRE(cli("simulate --scenario " + kGrid + " --set set-5 --speeds 60 --seeds 20 --out " + b.string()) == 0);
  auto [pp1, rlf1] = totals(a / "kpi.csv");
  auto [pp5, rlf5] = totals(b / "kpi.csv");
  CHECK(pp5 >= pp1);
  CHECK(rlf5 <= rlf1);
}

TEST_CASE("optimize dimensions and weight plumbing") {
  fs::path s = fresh_dir("opt_shared"), p = fresh_dir("opt_cell");
  const std::string common = " --scenario " + kGrid + " --eval-seeds 1 --routes 1 2 --wpp 4 --wrlf 2";
  REQUIRE(cli("optimize --mode shared --budget 12 --n-init 7" + common + " --out " + s.string()) == 0);
  REQUIRE(cli("optimize --mode per-cell --budget 12 --n-init 7" + common + " --out " + p.string()) == 0);
  auto ts = rows(s / "trace.csv"), tp = rows(p / "trace.csv");
  CHECK(ts[0].size() == 2 + 2 + 2);
  CHECK(tp[0].size() == 2 + 60 + 2);
  CHECK(ts.size() == 1 + 12);
  CHECK(fs::exists(p / "best_config.toml"));
  auto ev = rows(p / "evaluation.csv");
  REQUIRE(ev.size() == 1 + 3);
  for (std::size_t i = 1; i < ev.size(); ++i) {
    CHECK(std::stod(ev[i][column(ev, "w_pp")]) == 4.0);
    CHECK(std::stod(ev[i][column(ev, "w_rlf")]) == 2.0);
  }
  fs::path sim = fresh_dir("sim_best");
  CHECK(cli("simulate --scenario " + kGrid + " --config " + (p / "best_config.toml").string() +
            " --speeds 30 --seeds 1 --out " + sim.string()) == 0);
}

TEST_CASE("outputs are byte-identical across repeats") {
  const std::string sim = "simulate --scenario " + kGrid + " --set set-5 --speeds 30 --seeds 2 --record-sinr --no-timestamp";
  const std::string opt = "optimize --scenario " + kGrid + " --mode shared --budget 14 --n-init 8 --q 3 --eval-seeds 1 --no-timestamp";
  for (const std::string& cmd : {sim, opt}) {
    fs::path a = fresh_dir("rep_a"), b = fresh_dir("rep_b");
    REQUIRE(cli(cmd + " --out " + a.string()) == 0);
    REQUIRE(cli(cmd + " --out " + b.string()) == 0);
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
      ++compared;
    }
    CHECK(compared >= 2);
  }
}

TEST_CASE("transfer writes one curve per mix") {
  fs::path out = fresh_dir("transfer");
  REQUIRE(cli("transfer --scenario " + kGrid +
              " --mode shared --mix 1.0,0.5,0.0 --seeds 1 --eval-seeds 1 --budget 16 --n-init 6 --out " +
              out.string()) == 0);
  auto conv = rows(out / "convergence.csv");
  std::set<std::string> fractions;
  for (std::size_t i = 1; i < conv.size(); ++i) fractions.insert(conv[i][column(conv, "fraction")]);
  CHECK(fractions.size() == 3);
  CHECK(conv.size() == 1 + 3 * 2);
  CHECK(rows(out / "summary.csv").size() == 1 + 3);
  CHECK(rows(out / "source_dataset.csv").size() == 1 + 6);
  CHECK(fs::exists(out / "target_dataset.csv"));

  fs::path again = fresh_dir("transfer_reuse");
  CHECK(cli("transfer --scenario " + kGrid + " --mode shared --mix 0 --seeds 1 --eval-seeds 1 --budget 16 --n-init 6" +
            " --source-data " + (out / "source_dataset.csv").string() + " --target-data " +
            (out / "target_dataset.csv").string() + " --out " + again.string()) == 0);
  CHECK(rows(again / "convergence.csv").size() == 1 + 2);
}

TEST_CASE("report aggregates") {
  fs::path a = fresh_dir("rep_kpi_a"), b = fresh_dir("rep_kpi_b");
  const std::string base = "simulate --scenario " + kGrid + " --set set-5 --speeds 30,60 --seeds 2 --record-sinr";
  REQUIRE(cli(base + " --seed 1 --out " + a.string()) == 0);
  REQUIRE(cli(base + " --seed 2 --out " + b.string()) == 0);

  // Concatenation of the two KPI files.
  fs::path cat = testing::temp_path("cli") / "kpi_cat.csv";
  {
    auto ra = rows(a / "kpi.csv"), rb = rows(b / "kpi.csv");
    std::ofstream o(cat);
    auto emit = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << r[i];
      o << '\n';
    };
    emit(ra[0]);
    for (std::size_t i = 1; i < ra.size(); ++i) emit(ra[i]);
    for (std::size_t i = 1; i < rb.size(); ++i) emit(rb[i]);
  }
  fs::path two = fresh_dir("report_two"), one = fresh_dir("report_one");
  REQUIRE(cli("report --no-timestamp --kpi " + (a / "kpi.csv").string() + " " + (b / "kpi.csv").string() +
              " --sinr " + (a / "sinr.csv").string() + " --cdf-points 50 --out " + two.string()) == 0);
  REQUIRE(cli("report --no-timestamp --kpi " + cat.string() + " --out " + one.string()) == 0);
  CHECK(slurp(two / "kpi_bars.csv") == slurp(one / "kpi_bars.csv"));
  CHECK(rows(two / "kpi_bars.csv").size() == 1 + 2);

  auto cdf = rows(two / "sinr_cdf.csv");
  REQUIRE(cdf.size() > 2);
  const std::size_t pc = column(cdf, "probability"), gc = column(cdf, "speed");
  for (std::size_t i = 2; i < cdf.size(); ++i) {
    if (cdf[i][gc] != cdf[i - 1][gc]) continue;
    CHECK(std::stod(cdf[i][pc]) >= std::stod(cdf[i - 1][pc]));
  }
  CHECK(cli("report --kpi " + (a / "missing.csv").string() + " --out " + one.string()) != 0);
}

TEST_CASE("the timestamp line is the only difference") {
  const std::string sim = "simulate --scenario " + kGrid + " --set set-1 --speeds 30 --seeds 1";
  fs::path a = fresh_dir("stamp_a"), b = fresh_dir("stamp_b");
  REQUIRE(cli(sim + " --out " + a.string()) == 0);
  REQUIRE(cli(sim + " --no-timestamp --out " + b.string()) == 0);
  std::string stamped = slurp(a / "kpi.csv");
  CHECK(stamped.rfind("# hoturbo simulate ", 0) == 0);
  CHECK(stamped.substr(stamped.find('\n') + 1) == slurp(b / "kpi.csv"));
}
