#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mfg/adjoint.hpp"
#include "mfg/assumptions.hpp"
#include "mfg/config.hpp"
#include "mfg/diagnostics.hpp"
#include "mfg/solver.hpp"

namespace fs = std::filesystem;
using namespace mfg;

namespace {

void print_usage(std::ostream& os) {
  os << "usage: mfg <verb> [flags]\n"
        "\n"
        "verbs:\n"
        "  solve              run the continuation path and write trace, checkpoint,\n"
        "                     and the final diagnostics row\n"
        "  diagnose           load a checkpoint and emit the full diagnostics panel\n"
        "  adjoint            evolve the adjoint density from a grid node and verify\n"
        "                     the representation formula\n"
        "  check-assumptions  sample a hypothesis suite and print the margin table\n"
        "  sweep              run solve over a list of parameter values in parallel\n"
        "\n"
        "common flags:\n"
        "  --config FILE      run configuration (required)\n"
        "  --out-dir DIR      output directory (default: output.dir from the config)\n"
        "\n"
        "diagnose/adjoint flags:\n"
        "  --state FILE       state checkpoint to load (required)\n"
        "\n"
        "adjoint flags (defaults from the config adjoint section):\n"
        "  --x0 NODE          source node index (default 0)\n"
        "  --T VALUE          horizon (default 1.0)\n"
        "  --steps K          implicit Euler steps (default 200)\n"
        "  --dump-every K     write density slices every K steps (default off)\n"
        "\n"
        "check-assumptions flags:\n"
        "  --suite A|D|H|C    hypothesis suite (default A)\n"
        "  --samples N        pointwise samples (default 10000)\n"
        "  --p-radius R       momentum ball radius (default 5)\n"
        "  --seed S           sampler seed (default 20240915)\n"
        "  --C --c --delta --delta0 --kappa --sigma --growth-beta --epsilon\n"
        "  --alpha0 --theta   candidate constants (defaults 2, 0.5, 0, 1, 1, 1, 1, 0,\n"
        "                     0.1, 0.5)\n"
        "\n"
        "sweep flags:\n"
        "  --param NAME       alpha, gamma, or n\n"
        "  --values LIST      comma separated values\n"
        "  environment        MFG_THREADS caps the worker count\n";
}

struct Flags {
  std::map<std::string, std::string> kv;

  bool has(const std::string& k) const { return kv.count(k) > 0; }
  std::string get(const std::string& k, const std::string& fallback = "") const {
    auto it = kv.find(k);
    return it == kv.end() ? fallback : it->second;
  }
  double num(const std::string& k, double fallback) const {
    auto it = kv.find(k);
    return it == kv.end() ? fallback : std::stod(it->second);
  }
};

Flags parse_flags(int argc, char** argv, int first) {
  Flags f;
  for (int i = first; i < argc; ++i) {
    std::string a = argv[i];
    if (a.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + a + "'");
    if (i + 1 >= argc) throw ConfigError("flag '" + a + "' needs a value");
    f.kv[a.substr(2)] = argv[++i];
  }
  return f;
}

RunConfig load_config(const Flags& flags) {
  if (!flags.has("config")) throw ConfigError("--config is required");
  return parse_config_file(flags.get("config"));
}

fs::path out_dir(const Flags& flags, const RunConfig& cfg) {
  fs::path dir = flags.get("out-dir", cfg.output.dir);
  fs::create_directories(dir);
  return dir;
}

void write_trace_csv(const fs::path& path, const ContinuationTrace& trace) {
  std::ofstream os(path);
  if (trace.entries.empty()) {
    os << "lambda,newton_iters,residual\n";
    return;
  }
  write_csv_header(os, trace.entries.front().diagnostics,
                   {"lambda", "newton_iters", "residual", "monotonicity_negative"});
  for (const auto& e : trace.entries)
    write_csv_row(os, e.diagnostics,
                  {e.lambda, static_cast<double>(e.newton_iters), e.residual,
                   e.monotonicity_negative ? 1.0 : 0.0});
}

int run_solve_once(const RunConfig& cfg, const fs::path& dir, bool quiet) {
  TorusGrid grid = build_grid(cfg);
  HamiltonianModel model = build_model(cfg);
  ContinuationConfig cc = build_continuation(cfg);

  ContinuationResult result = continuation_run(model, grid, cc);
  write_trace_csv(dir / "trace.csv", result.trace);
  {
    std::ofstream os(dir / "state.mfgstate");
    write_checkpoint(os, result.state);
  }
  if (result.trace.success) {
    DiagnosticsOptions dopts = cc.diagnostics;
    DiagnosticsReport report = full_report(model.blend(1.0), result.state, dopts);
    std::ofstream os(dir / "diagnostics.csv");
    write_csv_header(os, report);
    write_csv_row(os, report);
    if (!quiet)
      std::cout << "solve: reached lambda=1 in " << result.trace.entries.size()
                << " accepted steps, final residual "
                << format_double(result.trace.entries.back().residual) << "\n";
    return 0;
  }
  if (!quiet) std::cerr << "solve: " << result.trace.failure << "\n";
  return 2;
}

int cmd_solve(const Flags& flags) {
  RunConfig cfg = load_config(flags);
  return run_solve_once(cfg, out_dir(flags, cfg), false);
}

int cmd_diagnose(const Flags& flags) {
  RunConfig cfg = load_config(flags);
  if (!flags.has("state")) throw ConfigError("--state is required");
  std::ifstream is(flags.get("state"));
  if (!is) throw ConfigError("cannot open state '" + flags.get("state") + "'");
  MFGState state = read_checkpoint(is);
  HamiltonianModel model = build_model(cfg);

  ContinuationConfig cc = build_continuation(cfg);
  DiagnosticsReport report = full_report(model.blend(1.0), state, cc.diagnostics);
  fs::path dir = out_dir(flags, cfg);
  std::ofstream os(dir / "diagnostics.csv");
  write_csv_header(os, report);
  write_csv_row(os, report);
  std::cout << "diagnose: wrote " << (dir / "diagnostics.csv").string() << "\n";
  return 0;
}

int cmd_adjoint(const Flags& flags) {
  RunConfig cfg = load_config(flags);
  if (!flags.has("state")) throw ConfigError("--state is required");
  std::ifstream is(flags.get("state"));
  if (!is) throw ConfigError("cannot open state '" + flags.get("state") + "'");
  MFGState state = read_checkpoint(is);
  HamiltonianModel model = build_model(cfg);

  AdjointOptions opts;
  opts.T = flags.num("T", cfg.adjoint.T);
  opts.steps = static_cast<int>(flags.num("steps", cfg.adjoint.steps));
  opts.r = cfg.adjoint.r;
  Index x0 = static_cast<Index>(flags.num("x0", static_cast<double>(cfg.adjoint.x0)));
  int dump_every = static_cast<int>(flags.num("dump-every", cfg.adjoint.dump_every));

  DriftModel fmodel = stationary_problem(model.blend(1.0), state);
  AdjointRun run = evolve_adjoint(fmodel, state.u, x0, opts);
  const double gap = representation_check(fmodel, state.u, run);

  fs::path dir = out_dir(flags, cfg);
  {
    std::ofstream os(dir / "adjoint.csv");
    os << "t,mass,rho_lq,dw2_rho\n";
    for (const auto& row : run.rows)
      os << format_double(row.t) << ',' << format_double(row.mass) << ','
         << format_double(row.rho_lq) << ',' << format_double(row.dw2_rho) << '\n';
    os << "gap," << format_double(gap) << ",,\n";
  }
  if (dump_every > 0) {
    for (int k = 0; k <= run.K; k += dump_every) {
      std::ofstream os(dir / ("rho_" + std::to_string(k) + ".mfgfield"));
      write_field(os, ScalarField(run.grid, run.slices[k]));
    }
  }
  std::cout << "adjoint: gap " << format_double(gap) << ", mass drift "
            << format_double(std::abs(run.rows.back().mass - 1.0)) << "\n";
  return 0;
}

int cmd_check_assumptions(const Flags& flags) {
  RunConfig cfg = load_config(flags);
  HamiltonianModel model = build_model(cfg);

  SamplerConfig sc;
  sc.dim = cfg.grid.dim;
  sc.n = std::min(cfg.grid.n, 32);
  sc.samples = static_cast<int>(flags.num("samples", 10000));
  sc.p_radius = flags.num("p-radius", 5.0);
  sc.seed = static_cast<std::uint64_t>(flags.num("seed", 20240915));

  CandidateConstants cc;
  cc.C = flags.num("C", cc.C);
  cc.c = flags.num("c", cc.c);
  cc.delta = flags.num("delta", cc.delta);
  cc.delta0 = flags.num("delta0", cc.delta0);
  cc.kappa = flags.num("kappa", cfg.model.kappa);
  cc.sigma = flags.num("sigma", cfg.model.sigma);
  cc.growth_beta = flags.num("growth-beta", cc.growth_beta);
  cc.epsilon = flags.num("epsilon", cc.epsilon);
  cc.alpha0 = flags.num("alpha0", cc.alpha0);
  cc.theta = flags.num("theta", cc.theta);

  Suite suite = suite_from_string(flags.get("suite", "A"));
  AssumptionReport report = check_assumptions(model, suite, sc, cc);
  print_report(std::cout, report);
  return report.all_passed() ? 0 : 2;
}

int cmd_sweep(const Flags& flags) {
  RunConfig base = load_config(flags);
  const std::string param = flags.get("param");
  if (param != "alpha" && param != "gamma" && param != "n")
    throw ConfigError("--param must be alpha, gamma or n");
  if (!flags.has("values")) throw ConfigError("--values is required");
  std::vector<double> values;
  {
    std::istringstream vs(flags.get("values"));
    std::string tok;
    while (std::getline(vs, tok, ',')) values.push_back(std::stod(tok));
  }
  if (values.empty()) throw ConfigError("--values is empty");

  fs::path dir = out_dir(flags, base);
  int max_threads = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MFG_THREADS")) max_threads = std::max(1, std::atoi(env));

  std::vector<int> codes(values.size(), 0);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= values.size()) return;
      RunConfig cfg = base;
      if (param == "alpha") cfg.model.alpha = values[i];
      else if (param == "gamma") cfg.model.gamma = values[i];
      else cfg.grid.n = static_cast<int>(values[i]);
      std::ostringstream name;
      name << "sweep_" << param << "_" << values[i];
      fs::path sub = dir / name.str();
      fs::create_directories(sub);
      try {
        codes[i] = run_solve_once(cfg, sub, true);
      } catch (const std::exception& e) {
        std::ofstream(sub / "error.txt") << e.what() << "\n";
        codes[i] = 2;
      }
    }
  };
  {
    std::vector<std::thread> pool;
    int nthreads = std::min<int>(max_threads, static_cast<int>(values.size()));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Concatenate traces in value order with the parameter as leading column.
  std::ofstream os(dir / "sweep.csv");
  bool wrote_header = false;
  for (size_t i = 0; i < values.size(); ++i) {
    std::ostringstream name;
    name << "sweep_" << param << "_" << values[i];
    std::ifstream ts(dir / name.str() / "trace.csv");
    std::string line;
    bool first = true;
    while (std::getline(ts, line)) {
      if (first) {
        if (!wrote_header) {
          os << param << ',' << line << '\n';
          wrote_header = true;
        }
        first = false;
        continue;
      }
      os << format_double(values[i]) << ',' << line << '\n';
    }
  }
  for (int code : codes)
    if (code != 0) return 2;
  std::cout << "sweep: completed " << values.size() << " runs\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    print_usage(std::cerr);
    return 1;
  }
  std::string verb = argv[1];
  if (verb == "--help" || verb == "-h" || verb == "help") {
    print_usage(std::cout);
    return 0;
  }
  try {
    Flags flags = parse_flags(argc, argv, 2);
    if (verb == "solve") return cmd_solve(flags);
    if (verb == "diagnose") return cmd_diagnose(flags);
    if (verb == "adjoint") return cmd_adjoint(flags);
    if (verb == "check-assumptions") return cmd_check_assumptions(flags);
    if (verb == "sweep") return cmd_sweep(flags);
    std::cerr << "unknown verb '" << verb << "'\n";
    print_usage(std::cerr);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const SolveError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
