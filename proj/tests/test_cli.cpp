#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using barrierflow::cli::cli_main;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("barrierflow-test-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json slurp_json(const fs::path& file) { return json::parse(slurp(file)); }

}  // namespace

TEST_CASE("run command writes trace, summary, manifest and converges") {
  const fs::path out = fresh_dir("run") / "o";
  const int rc = cli_main({"run", "--problem", "lin-simplex", "--scheme", "rhb",
                           "--eta0", "0.05", "--iters", "500", "--seed", "1",
                           "--out", out.string()});
  REQUIRE(rc == 0);
  REQUIRE(fs::exists(out / "trace.csv"));
  REQUIRE(fs::exists(out / "summary.json"));
  REQUIRE(fs::exists(out / "manifest.json"));

  const json summary = slurp_json(out / "summary.json");
  CHECK(summary["classification"] == "boundary-stationary");
  CHECK(summary["config"]["schedule"]["eta0"] == 0.05);

  const json manifest = slurp_json(out / "manifest.json");
  CHECK(manifest["problem_hash"].get<std::string>().rfind("fnv1a64:", 0) == 0);

  // schema comment line and column header
  std::istringstream trace(slurp(out / "trace.csv"));
  std::string line;
  std::getline(trace, line);
  CHECK(line == "# schema=barrierflow.trace.v1");
  std::getline(trace, line);
  CHECK(line == "k,x0,x1,f,eta,stable_res,kkt_res,gauge");
}

TEST_CASE("unknown problem and bad flags exit with the config code") {
  const fs::path out = fresh_dir("err");
  CHECK(cli_main({"run", "--problem", "no-such", "--out", (out / "a").string()}) == 3);
  CHECK(cli_main({"run", "--bogus-flag", "1"}) == 3);
  CHECK(cli_main({"escape", "--problem", "lin-simplex", "--xbar", "0,1", "--deltas",
                  "", "--out", (out / "b").string()}) == 3);
}

TEST_CASE("identical config and seed give byte-identical traces") {
  const fs::path root = fresh_dir("determinism");
  const std::vector<std::string> base = {
      "run",    "--problem", "lin-simplex", "--scheme", "mirror", "--eta0",
      "0.03",   "--iters",   "300",         "--noise",  "0.5",    "--seed",
      "7"};
  auto with_out = [&](const std::string& out) {
    auto args = base;
    args.push_back("--out");
    args.push_back(out);
    return args;
  };
  REQUIRE(cli_main(with_out((root / "a").string())) == 0);
  REQUIRE(cli_main(with_out((root / "b").string())) == 0);
  CHECK(slurp(root / "a" / "trace.csv") == slurp(root / "b" / "trace.csv"));
}

TEST_CASE("diagnose reports the spurious vertex") {
  const fs::path out = fresh_dir("diag") / "o";
  const int rc = cli_main(
      {"diagnose", "--problem", "lin-simplex", "--x", "0,1", "--out", out.string()});
  REQUIRE(rc == 0);
  const json report = slurp_json(out / "report.json");
  CHECK(report["classification"] == "spurious");
  CHECK(report["complementarity"] == "strictly_violated");
  CHECK(report["stable_residual"].get<double>() <= 1e-12);
  CHECK(report["certificates"]["s"][0].get<double>() == doctest::Approx(-1.0));
}

TEST_CASE("diagnose with perturbation includes the perturbed system") {
  const fs::path out = fresh_dir("diagp") / "o";
  const int rc =
      cli_main({"diagnose", "--problem", "lin-simplex", "--x", "0.5,0.5",
                "--perturb", "0.001", "--seed", "3", "--out", out.string()});
  REQUIRE(rc == 0);
  const json report = slurp_json(out / "report.json");
  REQUIRE(report.contains("perturbed"));
  CHECK(report["perturbed"]["u"].size() == 1);
  CHECK(report["perturbed"]["v"].size() == 2);
  CHECK(report["perturbed"].contains("r1"));
}

TEST_CASE("flow and escape commands write their csv artifacts") {
  const fs::path root = fresh_dir("flowcli");
  REQUIRE(cli_main({"flow", "--problem", "lin-simplex", "--x0", "0.1,0.9", "--h",
                    "1e-3", "--tmax", "2", "--record-dt", "0.1", "--out",
                    (root / "f").string()}) == 0);
  const std::string flow_csv = slurp(root / "f" / "flow.csv");
  CHECK(flow_csv.rfind("# schema=barrierflow.flow.v1", 0) == 0);

  REQUIRE(cli_main({"escape", "--problem", "lin-simplex", "--xbar", "0,1", "--eps",
                    "0.5", "--deltas", "0.01,0.001", "--h", "1e-3", "--tmax", "12",
                    "--out", (root / "e").string()}) == 0);
  std::istringstream exits(slurp(root / "e" / "exits.csv"));
  std::string line;
  std::getline(exits, line);
  CHECK(line == "# schema=barrierflow.exits.v1");
  std::getline(exits, line);  // header
  std::getline(exits, line);  // delta = 0.01 row
  // t_exit within 1% of log 99
  std::stringstream row(line);
  std::string cell;
  std::getline(row, cell, ',');
  CHECK(std::stod(cell) == doctest::Approx(0.01));
  std::getline(row, cell, ',');
  CHECK(std::stod(cell) == doctest::Approx(std::log(99.0)).epsilon(0.01));
}

TEST_CASE("sweep grid: empty grid is a config error, cells are deterministic") {
  const fs::path root = fresh_dir("sweep");
  CHECK(cli_main({"sweep", "--problem", "lin-simplex", "--eta0", "", "--out",
                  (root / "none").string()}) == 3);

  auto sweep_args = [&](const std::string& out) {
    return std::vector<std::string>{
        "sweep",   "--problem", "lin-simplex", "--scheme", "rhb",
        "--eta0",  "0.03,0.06", "--noise",     "0.2",      "--seeds",
        "1,2",     "--iters",   "200",         "--jobs",   "4",
        "--out",   out};
  };
  REQUIRE(cli_main(sweep_args((root / "a").string())) == 0);
  REQUIRE(cli_main(sweep_args((root / "b").string())) == 0);

  int cells = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    if (!entry.is_directory()) continue;
    ++cells;
    const auto rel = entry.path().filename();
    CHECK(slurp(entry.path() / "trace.csv") ==
          slurp(root / "b" / rel / "trace.csv"));
  }
  CHECK(cells == 4);
  CHECK(fs::exists(root / "a" / "index.csv"));

  // manifests are unique per cell
  std::set<std::string> hashes;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    if (!entry.is_directory()) continue;
    const json manifest = slurp_json(entry.path() / "manifest.json");
    hashes.insert(manifest["config"].dump());
  }
  CHECK(hashes.size() == 4);
}

TEST_CASE("config file fills defaults but explicit flags win") {
  const fs::path root = fresh_dir("config");
  const fs::path cfg = root / "defaults.json";
  {
    std::ofstream out(cfg);
    out << R"({"eta0": 0.07, "iters": 123})";
  }
  REQUIRE(cli_main({"--config", cfg.string(), "run", "--problem", "lin-simplex",
                    "--iters", "50", "--out", (root / "o").string()}) == 0);
  const json summary = slurp_json(root / "o" / "summary.json");
  CHECK(summary["config"]["schedule"]["eta0"] == 0.07);  // from the config file
  CHECK(summary["config"]["iters"] == 50);     // explicit flag wins
}

TEST_CASE("BARRIERFLOW_OUT provides the default output root") {
  const fs::path root = fresh_dir("envout");
  setenv("BARRIERFLOW_OUT", root.c_str(), 1);
  REQUIRE(cli_main({"run", "--problem", "lin-simplex", "--iters", "50", "--seed",
                    "9"}) == 0);
  unsetenv("BARRIERFLOW_OUT");
  CHECK(fs::exists(root / "run-lin-simplex-seed9" / "trace.csv"));
}

TEST_CASE("custom problem JSON file through the CLI") {
  const fs::path root = fresh_dir("custom");
  const fs::path problem = root / "problem.json";
  {
    std::ofstream out(problem);
    out << R"({"objective": "linear:-1,0,0", "A": [[1,1,1]], "b": [1]})";
  }
  REQUIRE(cli_main({"run", "--problem", problem.string(), "--iters", "400",
                    "--eta0", "0.05", "--out", (root / "o").string()}) == 0);
  const json summary = slurp_json(root / "o" / "summary.json");
  CHECK(summary["classification"] == "boundary-stationary");
  CHECK(summary["f"].get<double>() <= -0.99);
}
