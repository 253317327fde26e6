#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "barrierflow/flow.hpp"
#include "barrierflow/io.hpp"
#include "barrierflow/solvers.hpp"

namespace barrierflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Vector parse_vector(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    vals.push_back(std::stod(tok));
  }
  if (vals.empty()) throw ConfigError("empty vector argument '" + csv + "'");
  return Eigen::Map<Vector>(vals.data(), vals.size());
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) vals.push_back(std::stod(tok));
  }
  return vals;
}

std::vector<uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<uint64_t> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) vals.push_back(std::stoull(tok));
  }
  return vals;
}

Problem load_problem(const std::string& arg) {
  if (arg.size() > 5 && arg.substr(arg.size() - 5) == ".json") {
    std::ifstream in(arg);
    if (!in) throw ConfigError("cannot read problem file '" + arg + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return problem_from_json_text(buf.str());
  }
  return registry_get(arg);
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path default_out_root() {
  if (const char* env = std::getenv("BARRIERFLOW_OUT")) return fs::path(env);
  return fs::path("out");
}

fs::path resolve_out(const std::string& out_flag, const std::string& command,
                     const std::string& problem, uint64_t seed) {
  if (!out_flag.empty()) return fs::path(out_flag);
  return default_out_root() /
         (command + "-" + problem + "-seed" + std::to_string(seed));
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  return j;
}

// Config-file values fill in only the options the user did not set explicitly.
template <typename T>
void merge_option(const CLI::App& cmd, const json& cfg, const std::string& name, T& var) {
  if (cfg.contains(name) && cmd.count("--" + name) == 0) {
    var = cfg[name].get<T>();
  }
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + file.string() + "'");
  out << text;
}

int map_error(const std::exception& e) {
  const bool config = dynamic_cast<const ConfigError*>(&e) != nullptr ||
                      dynamic_cast<const UnknownProblem*>(&e) != nullptr;
  json err;
  err["error"] = config ? "config" : "solver";
  err["message"] = e.what();
  std::cerr << err.dump() << std::endl;
  return config ? 3 : 2;
}

// -------------------------------------------------------------------------
// run (also the worker for sweep cells)
// -------------------------------------------------------------------------

struct RunOptions {
  std::string problem = "lin-simplex";
  std::string kernel;  // empty: problem default
  std::string scheme = "rhb";
  double eta0 = 0.05;
  double alpha = 0.0;  // 0: constant schedule
  long iters = 1000;
  double noise = 0.0;
  uint64_t seed = 0;
  double stop_tol = 1e-8;
  long record_every = 1;
  double tau_stable = 1e-7;
  double tau_kkt = 1e-5;
  std::string out;
};

json schedule_json(const RunOptions& o) {
  json j;
  j["eta0"] = o.eta0;
  j["kind"] = o.alpha > 0 ? "polynomial" : "constant";
  if (o.alpha > 0) j["alpha"] = o.alpha;
  return j;
}

json config_echo(const RunOptions& o, const std::string& kernel_id) {
  json j;
  j["problem"] = o.problem;
  j["kernel"] = kernel_id;
  j["scheme"] = o.scheme;
  j["schedule"] = schedule_json(o);
  j["iters"] = o.iters;
  j["noise"] = o.noise;
  j["seed"] = o.seed;
  j["stop_tol"] = o.stop_tol;
  j["record_every"] = o.record_every;
  j["tau_stable"] = o.tau_stable;
  j["tau_kkt"] = o.tau_kkt;
  return j;
}

int run_once(const RunOptions& o) {
  const std::string started = timestamp_utc();
  const Problem problem = load_problem(o.problem);
  const std::string kernel_id = o.kernel.empty() ? problem.default_kernel : o.kernel;
  const KernelPtr kernel = make_kernel(kernel_id);

  SolverConfig cfg;
  cfg.schedule = o.alpha > 0 ? StepSchedule::polynomial(o.eta0, o.alpha)
                             : StepSchedule::constant(o.eta0);
  cfg.max_iters = o.iters;
  cfg.scheme = scheme_from_string(o.scheme);
  cfg.noise_bound = o.noise;
  cfg.seed = o.seed;
  cfg.stop_tol = o.stop_tol;
  cfg.record_every = o.record_every;
  cfg.tau_stable = o.tau_stable;
  cfg.tau_kkt = o.tau_kkt;
  cfg.validate();

  const fs::path out = resolve_out(o.out, "run", problem.name, o.seed);
  const Trace trace = run(problem, *kernel, cfg);

  write_trace_csv(out / "trace.csv", trace);

  json summary;
  summary["config"] = config_echo(o, kernel_id);
  summary["problem"] = problem.name;
  summary["iters"] = trace.iters;
  summary["wall_seconds"] = trace.wall_seconds;
  summary["halvings_total"] = trace.halvings_total;
  summary["f"] = trace.rows.back().f;
  summary["terminal"] = json::parse(report_to_json_text(trace.terminal));
  summary["classification"] = to_string(trace.terminal.classification);
  write_text(out / "summary.json", summary.dump(2) + "\n");

  json manifest;
  manifest["command"] = "run";
  manifest["config"] = config_echo(o, kernel_id);
  manifest["problem_hash"] = problem_content_hash(problem);
  manifest["seed"] = o.seed;
  manifest["started_at"] = started;
  manifest["finished_at"] = timestamp_utc();
  manifest["artifacts"] = {"trace.csv", "summary.json", "manifest.json"};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

// -------------------------------------------------------------------------
// sweep
// -------------------------------------------------------------------------

struct SweepOptions {
  RunOptions base;
  std::string eta0_list = "0.05";
  std::string alpha_list = "0";
  std::string noise_list = "0";
  std::string seed_list = "1";
  unsigned jobs = 0;
};

struct SweepCell {
  int index;
  RunOptions opts;
  std::string key;
};

int run_sweep(const SweepOptions& so) {
  const auto etas = parse_list(so.eta0_list);
  const auto alphas = parse_list(so.alpha_list);
  const auto noises = parse_list(so.noise_list);
  const auto seeds = parse_seed_list(so.seed_list);
  if (etas.empty() || alphas.empty() || noises.empty() || seeds.empty()) {
    throw ConfigError("sweep grid is empty");
  }

  const fs::path out = resolve_out(so.base.out, "sweep", so.base.problem, seeds[0]);
  std::vector<SweepCell> cells;
  int idx = 0;
  for (double eta : etas) {
    for (double alpha : alphas) {
      for (double noise : noises) {
        for (uint64_t seed : seeds) {
          SweepCell cell;
          cell.index = idx;
          cell.opts = so.base;
          cell.opts.eta0 = eta;
          cell.opts.alpha = alpha;
          cell.opts.noise = noise;
          std::ostringstream key;
          key << "cell-" << std::setw(3) << std::setfill('0') << idx << "-eta"
              << eta << "-alpha" << alpha << "-noise" << noise << "-seed" << seed;
          cell.key = key.str();
          // independent per-cell noise stream, reproducible across runs
          cell.opts.seed = seed ^ fnv1a64(cell.key);
          cell.opts.out = (out / cell.key).string();
          cells.push_back(std::move(cell));
          ++idx;
        }
      }
    }
  }

  unsigned jobs = so.jobs > 0 ? so.jobs : std::thread::hardware_concurrency();
  if (jobs == 0) jobs = 1;
  jobs = std::min<unsigned>(jobs, cells.size());

  std::atomic<size_t> next{0};
  std::atomic<int> failures{0};
  std::vector<std::string> errors(cells.size());
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        run_once(cells[i].opts);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        failures.fetch_add(1);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // aggregate index, in cell order
  std::ostringstream index_csv;
  index_csv << "# schema=barrierflow.sweep-index.v1\n";
  index_csv << "cell,eta0,alpha,noise,seed,classification,stable_res,kkt_res,f,iters\n";
  for (const auto& cell : cells) {
    index_csv << cell.key << ',' << format_double(cell.opts.eta0) << ','
              << format_double(cell.opts.alpha) << ','
              << format_double(cell.opts.noise) << ',' << cell.opts.seed;
    if (errors[cell.index].empty()) {
      std::ifstream in(fs::path(cell.opts.out) / "summary.json");
      json s;
      in >> s;
      index_csv << ',' << s["classification"].get<std::string>() << ','
                << format_double(s["terminal"]["stable_residual"].get<double>()) << ','
                << format_double(s["terminal"]["kkt_residual"].get<double>()) << ','
                << format_double(s["f"].get<double>()) << ',' << s["iters"].get<long>();
    } else {
      index_csv << ",error,,,,";
    }
    index_csv << '\n';
  }
  write_text(out / "index.csv", index_csv.str());

  if (failures.load() > 0) {
    for (const auto& cell : cells) {
      if (!errors[cell.index].empty()) {
        std::cerr << json{{"error", "solver"},
                          {"cell", cell.key},
                          {"message", errors[cell.index]}}
                         .dump()
                  << std::endl;
      }
    }
    return 2;
  }
  return 0;
}

// -------------------------------------------------------------------------
// flow / escape / diagnose
// -------------------------------------------------------------------------

struct FlowOptions {
  std::string problem;
  std::string kernel;
  std::string x0;
  double h = 1e-4;
  double tmax = 10.0;
  double safety = 0.5;
  double record_dt = 0.0;
  std::string out;
};

int run_flow(const FlowOptions& o) {
  const Problem problem = load_problem(o.problem);
  const KernelPtr kernel =
      make_kernel(o.kernel.empty() ? problem.default_kernel : o.kernel);
  const Vector x0 = o.x0.empty() ? problem.start : parse_vector(o.x0);

  FlowConfig cfg;
  cfg.h = o.h;
  cfg.t_max = o.tmax;
  cfg.interior_safety = o.safety;
  cfg.record_dt = o.record_dt;
  cfg.validate();

  const fs::path out = resolve_out(o.out, "flow", problem.name, 0);
  const FlowTrace trace = integrate(problem, *kernel, x0, cfg);
  write_flow_csv(out / "flow.csv", trace);

  json summary;
  summary["problem"] = problem.name;
  summary["t_max"] = o.tmax;
  summary["h"] = o.h;
  summary["terminal_stable_residual"] = trace.terminal_stable_residual;
  summary["samples"] = trace.samples.size();
  write_text(out / "summary.json", summary.dump(2) + "\n");
  return 0;
}

struct EscapeOptions {
  std::string problem;
  std::string kernel;
  std::string xbar;
  double eps = 0.5;
  std::string deltas = "0.01,0.001";
  double h = 1e-4;
  double tmax = 15.0;
  std::string out;
};

int run_escape(const EscapeOptions& o) {
  const Problem problem = load_problem(o.problem);
  const KernelPtr kernel =
      make_kernel(o.kernel.empty() ? problem.default_kernel : o.kernel);
  const Vector xbar = parse_vector(o.xbar);
  const auto deltas = parse_list(o.deltas);
  if (deltas.empty()) throw ConfigError("escape needs a nonempty delta list");

  FlowConfig cfg;
  cfg.h = o.h;
  cfg.t_max = o.tmax;
  cfg.validate();

  const fs::path out = resolve_out(o.out, "escape", problem.name, 0);
  const auto exits = escape_experiment(problem, *kernel, xbar, o.eps, deltas, cfg);
  write_exits_csv(out / "exits.csv", exits);

  bool all_exited = true;
  for (const auto& e : exits) all_exited = all_exited && e.exited;
  json summary;
  summary["problem"] = problem.name;
  summary["eps"] = o.eps;
  summary["all_exited"] = all_exited;
  write_text(out / "summary.json", summary.dump(2) + "\n");
  return 0;
}

struct DiagnoseOptions {
  std::string problem;
  std::string kernel;
  std::string x;
  double perturb_eps = -1.0;
  uint64_t seed = 0;
  double tau_stable = 1e-7;
  double tau_kkt = 1e-5;
  std::string out;
};

int run_diagnose(const DiagnoseOptions& o) {
  const Problem problem = load_problem(o.problem);
  const KernelPtr kernel =
      make_kernel(o.kernel.empty() ? problem.default_kernel : o.kernel);
  const Vector x = parse_vector(o.x);

  const auto report = classify(problem, *kernel, x, o.tau_stable, o.tau_kkt);
  json j = json::parse(report_to_json_text(report));

  if (problem.region.kind() == OpenRegion::Kind::orthant) {
    j["complementarity"] =
        to_string(complementarity_check(problem, report, 1e-9));
  }

  if (o.perturb_eps >= 0.0) {
    const auto pp = perturb(problem, kernel, o.perturb_eps, o.seed);
    json p;
    auto vec = [](const Vector& v) {
      return std::vector<double>(v.data(), v.data() + v.size());
    };
    p["eps"] = o.perturb_eps;
    p["seed"] = o.seed;
    p["u"] = vec(pp.u);
    p["v"] = vec(pp.v);
    if (kernel->interior(x)) {
      const auto [r1, r2] = perturbed_residual_system(pp, *kernel, x, report.y);
      p["r1"] = vec(r1);
      p["r2"] = vec(r2);
    }
    j["perturbed"] = p;
  }

  const fs::path out = resolve_out(o.out, "diagnose", problem.name, o.seed);
  write_text(out / "report.json", j.dump(2) + "\n");
  std::cout << to_string(report.classification) << "\n";
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"interior Riemannian barrier-flow toolkit"};
  app.name("barrierflow");
  app.require_subcommand(1);
  // keep the short -h free for the step-size flags of flow/escape
  app.set_help_flag("--help", "print help");

  std::string config_path;
  app.add_option("--config", config_path, "JSON file with default option values")
      ->expected(1);

  RunOptions ro;
  auto* run_cmd = app.add_subcommand("run", "iterate a discrete scheme");
  run_cmd->set_help_flag("--help", "print help");
  run_cmd->add_option("--problem", ro.problem, "registry name or problem JSON file");
  run_cmd->add_option("--kernel", ro.kernel, "barrier kernel id");
  run_cmd->add_option("--scheme", ro.scheme, "rhb | mirror");
  run_cmd->add_option("--eta0", ro.eta0, "base step size");
  run_cmd->add_option("--alpha", ro.alpha, "polynomial decay in (0.5,1]; 0 = constant");
  run_cmd->add_option("--iters", ro.iters, "iteration cap");
  run_cmd->add_option("--noise", ro.noise, "noise bound M_xi");
  run_cmd->add_option("--seed", ro.seed, "rng seed");
  run_cmd->add_option("--stop-tol", ro.stop_tol, "stable-residual stop tolerance");
  run_cmd->add_option("--record-every", ro.record_every, "trace recording stride");
  run_cmd->add_option("--tau-s", ro.tau_stable, "stable-set tolerance");
  run_cmd->add_option("--tau-k", ro.tau_kkt, "KKT tolerance");
  run_cmd->add_option("--out", ro.out, "output directory");

  FlowOptions fo;
  auto* flow_cmd = app.add_subcommand("flow", "integrate the continuous flow");
  flow_cmd->set_help_flag("--help", "print help");
  flow_cmd->add_option("--problem", fo.problem)->required();
  flow_cmd->add_option("--kernel", fo.kernel);
  flow_cmd->add_option("--x0", fo.x0, "start point CSV (default: problem start)");
  flow_cmd->add_option("--h", fo.h, "Euler step");
  flow_cmd->add_option("--tmax", fo.tmax, "horizon");
  flow_cmd->add_option("--safety", fo.safety, "interior safety fraction");
  flow_cmd->add_option("--record-dt", fo.record_dt, "sampling interval");
  flow_cmd->add_option("--out", fo.out);

  EscapeOptions eo;
  auto* escape_cmd = app.add_subcommand("escape", "measure neighborhood exit times");
  escape_cmd->set_help_flag("--help", "print help");
  escape_cmd->add_option("--problem", eo.problem)->required();
  escape_cmd->add_option("--kernel", eo.kernel);
  escape_cmd->add_option("--xbar", eo.xbar, "spurious point CSV")->required();
  escape_cmd->add_option("--eps", eo.eps, "neighborhood sup-norm radius");
  escape_cmd->add_option("--deltas", eo.deltas, "start distances CSV");
  escape_cmd->add_option("--h", eo.h);
  escape_cmd->add_option("--tmax", eo.tmax);
  escape_cmd->add_option("--out", eo.out);

  DiagnoseOptions dopt;
  auto* diag_cmd = app.add_subcommand("diagnose", "classify a point");
  diag_cmd->set_help_flag("--help", "print help");
  diag_cmd->add_option("--problem", dopt.problem)->required();
  diag_cmd->add_option("--kernel", dopt.kernel);
  diag_cmd->add_option("--x", dopt.x, "point CSV")->required();
  diag_cmd->add_option("--perturb", dopt.perturb_eps, "perturbation radius");
  diag_cmd->add_option("--seed", dopt.seed);
  diag_cmd->add_option("--tau-s", dopt.tau_stable);
  diag_cmd->add_option("--tau-k", dopt.tau_kkt);
  diag_cmd->add_option("--out", dopt.out);

  SweepOptions so;
  auto* sweep_cmd = app.add_subcommand("sweep", "grid of runs");
  sweep_cmd->set_help_flag("--help", "print help");
  sweep_cmd->add_option("--problem", so.base.problem);
  sweep_cmd->add_option("--kernel", so.base.kernel);
  sweep_cmd->add_option("--scheme", so.base.scheme);
  sweep_cmd->add_option("--eta0", so.eta0_list, "CSV grid");
  sweep_cmd->add_option("--alpha", so.alpha_list, "CSV grid (0 = constant)");
  sweep_cmd->add_option("--noise", so.noise_list, "CSV grid");
  sweep_cmd->add_option("--seeds", so.seed_list, "CSV grid");
  sweep_cmd->add_option("--iters", so.base.iters);
  sweep_cmd->add_option("--stop-tol", so.base.stop_tol);
  sweep_cmd->add_option("--record-every", so.base.record_every);
  sweep_cmd->add_option("--jobs", so.jobs, "parallel cells (default: cores)");
  sweep_cmd->add_option("--out", so.base.out);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help() << std::endl;
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << std::endl;
    return 3;
  }

  try {
    const json cfg = load_config_file(config_path);
    if (run_cmd->parsed()) {
      merge_option(*run_cmd, cfg, "problem", ro.problem);
      merge_option(*run_cmd, cfg, "kernel", ro.kernel);
      merge_option(*run_cmd, cfg, "scheme", ro.scheme);
      merge_option(*run_cmd, cfg, "eta0", ro.eta0);
      merge_option(*run_cmd, cfg, "alpha", ro.alpha);
      merge_option(*run_cmd, cfg, "iters", ro.iters);
      merge_option(*run_cmd, cfg, "noise", ro.noise);
      merge_option(*run_cmd, cfg, "seed", ro.seed);
      merge_option(*run_cmd, cfg, "stop-tol", ro.stop_tol);
      merge_option(*run_cmd, cfg, "record-every", ro.record_every);
      merge_option(*run_cmd, cfg, "out", ro.out);
      return run_once(ro);
    }
    if (flow_cmd->parsed()) {
      merge_option(*flow_cmd, cfg, "h", fo.h);
      merge_option(*flow_cmd, cfg, "tmax", fo.tmax);
      merge_option(*flow_cmd, cfg, "out", fo.out);
      return run_flow(fo);
    }
    if (escape_cmd->parsed()) {
      merge_option(*escape_cmd, cfg, "h", eo.h);
      merge_option(*escape_cmd, cfg, "tmax", eo.tmax);
      merge_option(*escape_cmd, cfg, "out", eo.out);
      return run_escape(eo);
    }
    if (diag_cmd->parsed()) {
      return run_diagnose(dopt);
    }
    if (sweep_cmd->parsed()) {
      merge_option(*sweep_cmd, cfg, "eta0", so.eta0_list);
      merge_option(*sweep_cmd, cfg, "alpha", so.alpha_list);
      merge_option(*sweep_cmd, cfg, "noise", so.noise_list);
      merge_option(*sweep_cmd, cfg, "seeds", so.seed_list);
      merge_option(*sweep_cmd, cfg, "out", so.base.out);
      return run_sweep(so);
    }
  } catch (const std::exception& e) {
    return map_error(e);
  }
  return 3;
}

}  // namespace barrierflow::cli
