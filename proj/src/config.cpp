#include "mfg/config.hpp"

#include <fstream>
#include <sstream>

#include "mfg/errors.hpp"

namespace mfg {

namespace {

struct Line {
  int number = 0;
  std::vector<std::string> tokens;
};

std::vector<Line> tokenize(std::istream& is) {
  std::vector<Line> lines;
  std::string raw;
  int number = 0;
  while (std::getline(is, raw)) {
    ++number;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    Line line;
    line.number = number;
    std::string tok;
    while (ls >> tok) line.tokens.push_back(tok);
    if (!line.tokens.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

[[noreturn]] void fail(const Line& line, const std::string& what) {
  throw ConfigError(what + " at line " + std::to_string(line.number));
}

double parse_number(const Line& line, const std::string& tok) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(line, "bad number '" + tok + "'");
  }
}

int parse_int(const Line& line, const std::string& tok) {
  double v = parse_number(line, tok);
  int i = static_cast<int>(v);
  if (i != v) fail(line, "expected integer, got '" + tok + "'");
  return i;
}

std::array<int, 3> parse_wavevector(const Line& line, const std::string& tok) {
  std::array<int, 3> k{0, 0, 0};
  std::istringstream ks(tok);
  std::string part;
  int idx = 0;
  while (std::getline(ks, part, ',')) {
    if (idx >= 3) fail(line, "wave vector has more than 3 components");
    k[idx++] = parse_int(line, part);
  }
  if (idx == 0) fail(line, "empty wave vector");
  return k;
}

void expect_args(const Line& line, size_t count) {
  if (line.tokens.size() != count + 1)
    fail(line, "key '" + line.tokens[0] + "' expects " + std::to_string(count) + " value(s)");
}

}  // namespace

RunConfig parse_config(std::istream& is) {
  RunConfig cfg;
  auto lines = tokenize(is);
  std::vector<std::string> stack;

  auto in = [&](std::initializer_list<const char*> path) {
    if (stack.size() != path.size()) return false;
    size_t i = 0;
    for (const char* p : path)
      if (stack[i++] != p) return false;
    return true;
  };

  for (const auto& line : lines) {
    const std::string& key = line.tokens[0];
    if (key == "}") {
      if (line.tokens.size() != 1) fail(line, "unexpected tokens after '}'");
      if (stack.empty()) fail(line, "unmatched '}'");
      stack.pop_back();
      continue;
    }
    if (line.tokens.size() == 2 && line.tokens[1] == "{") {
      if (stack.empty()) {
        if (key != "grid" && key != "model" && key != "continuation" && key != "diagnostics" &&
            key != "adjoint" && key != "output")
          fail(line, "unknown section '" + key + "'");
      } else if (stack.size() == 1 && stack[0] == "model") {
        if (key != "potential" && key != "aniso" && key != "drift")
          fail(line, "unknown model subsection '" + key + "'");
      } else {
        fail(line, "section '" + key + "' not allowed here");
      }
      stack.push_back(key);
      continue;
    }

    if (in({"grid"})) {
      expect_args(line, 1);
      if (key == "dim") cfg.grid.dim = parse_int(line, line.tokens[1]);
      else if (key == "n") cfg.grid.n = parse_int(line, line.tokens[1]);
      else fail(line, "unknown grid key '" + key + "'");
    } else if (in({"model"})) {
      expect_args(line, 1);
      if (key == "family") cfg.model.family = line.tokens[1];
      else if (key == "coupling") cfg.model.coupling = line.tokens[1];
      else if (key == "gamma") cfg.model.gamma = parse_number(line, line.tokens[1]);
      else if (key == "alpha") cfg.model.alpha = parse_number(line, line.tokens[1]);
      else if (key == "kappa") cfg.model.kappa = parse_number(line, line.tokens[1]);
      else if (key == "sigma") cfg.model.sigma = parse_number(line, line.tokens[1]);
      else fail(line, "unknown model key '" + key + "'");
    } else if (in({"model", "potential"})) {
      if (key == "cos") {
        expect_args(line, 2);
        cfg.model.potential.add(parse_wavevector(line, line.tokens[1]),
                                parse_number(line, line.tokens[2]));
      } else if (key == "field") {
        expect_args(line, 1);
        cfg.model.potential_field = line.tokens[1];
      } else {
        fail(line, "unknown potential key '" + key + "'");
      }
    } else if (in({"model", "aniso"})) {
      if (key != "cos") fail(line, "unknown aniso key '" + key + "'");
      expect_args(line, 2);
      cfg.model.aniso.add(parse_wavevector(line, line.tokens[1]),
                          parse_number(line, line.tokens[2]));
    } else if (in({"model", "drift"})) {
      if (key != "cos") fail(line, "unknown drift key '" + key + "'");
      expect_args(line, 3);
      int axis = parse_int(line, line.tokens[1]);
      if (axis < 0 || axis > 2) fail(line, "drift axis must be 0..2");
      cfg.model.drift[axis].add(parse_wavevector(line, line.tokens[2]),
                                parse_number(line, line.tokens[3]));
    } else if (in({"continuation"})) {
      expect_args(line, 1);
      const std::string& v = line.tokens[1];
      if (key == "lambda_step0") cfg.continuation.lambda_step0 = parse_number(line, v);
      else if (key == "step_growth") cfg.continuation.step_growth = parse_number(line, v);
      else if (key == "step_cap") cfg.continuation.step_cap = parse_number(line, v);
      else if (key == "max_halvings") cfg.continuation.max_halvings = parse_int(line, v);
      else if (key == "newton_tol") cfg.continuation.newton_tol = parse_number(line, v);
      else if (key == "max_newton_iters") cfg.continuation.max_newton_iters = parse_int(line, v);
      else if (key == "tau") cfg.continuation.tau = parse_number(line, v);
      else if (key == "linear_solver") {
        if (v == "sparse-direct") cfg.continuation.linear_solver = LinearSolverKind::SparseDirect;
        else if (v == "iterative-with-restart")
          cfg.continuation.linear_solver = LinearSolverKind::IterativeRestart;
        else if (v == "auto") cfg.continuation.linear_solver = LinearSolverKind::Auto;
        else fail(line, "unknown linear_solver '" + v + "'");
      } else fail(line, "unknown continuation key '" + key + "'");
    } else if (in({"diagnostics"})) {
      if (key == "r_list") {
        if (line.tokens.size() < 2) fail(line, "r_list needs at least one exponent");
        cfg.diagnostics.r_list.clear();
        for (size_t i = 1; i < line.tokens.size(); ++i)
          cfg.diagnostics.r_list.push_back(parse_number(line, line.tokens[i]));
      } else if (key == "monotonicity_samples") {
        expect_args(line, 1);
        cfg.diagnostics.monotonicity_samples = parse_int(line, line.tokens[1]);
      } else if (key == "seed") {
        expect_args(line, 1);
        cfg.diagnostics.seed = static_cast<std::uint64_t>(parse_number(line, line.tokens[1]));
      } else if (key == "theta") {
        expect_args(line, 1);
        cfg.diagnostics.theta = parse_number(line, line.tokens[1]);
      } else if (key == "c_r") {
        expect_args(line, 1);
        cfg.diagnostics.c_r = parse_number(line, line.tokens[1]);
      } else {
        fail(line, "unknown diagnostics key '" + key + "'");
      }
    } else if (in({"adjoint"})) {
      expect_args(line, 1);
      const std::string& v = line.tokens[1];
      if (key == "T") cfg.adjoint.T = parse_number(line, v);
      else if (key == "steps") cfg.adjoint.steps = parse_int(line, v);
      else if (key == "r") cfg.adjoint.r = parse_number(line, v);
      else if (key == "x0") cfg.adjoint.x0 = parse_int(line, v);
      else if (key == "dump_every") cfg.adjoint.dump_every = parse_int(line, v);
      else fail(line, "unknown adjoint key '" + key + "'");
    } else if (in({"output"})) {
      expect_args(line, 1);
      if (key == "dir") cfg.output.dir = line.tokens[1];
      else fail(line, "unknown output key '" + key + "'");
    } else {
      fail(line, "key '" + key + "' outside any section");
    }
  }
  if (!stack.empty()) throw ConfigError("unclosed section '" + stack.back() + "'");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(is);
}

TorusGrid build_grid(const RunConfig& cfg) { return TorusGrid(cfg.grid.dim, cfg.grid.n); }

HamiltonianModel build_model(const RunConfig& cfg) {
  const auto& mc = cfg.model;
  CouplingKind coupling = CouplingKind::Log;
  if (!mc.coupling.empty()) {
    if (mc.coupling == "log") coupling = CouplingKind::Log;
    else if (mc.coupling == "power") coupling = CouplingKind::Power;
    else throw ConfigError("unknown coupling '" + mc.coupling + "'");
  }

  HamiltonianModel model = [&] {
    if (mc.family == "quadratic_log") return HamiltonianModel::quadratic_log(mc.potential);
    if (mc.family == "quadratic_power")
      return HamiltonianModel::quadratic_power(mc.gamma, mc.potential);
    if (mc.family == "velocity_coupled") {
      CouplingKind k = mc.coupling.empty() ? CouplingKind::Log : coupling;
      return HamiltonianModel::velocity_coupled(mc.alpha, k, mc.gamma, mc.potential);
    }
    if (mc.family == "special_aniso") {
      CouplingKind k = mc.coupling.empty() ? CouplingKind::Log : coupling;
      return HamiltonianModel::special_aniso(mc.aniso, mc.drift, mc.alpha, k, mc.gamma,
                                             mc.potential);
    }
    throw ConfigError("unknown model family '" + mc.family + "'");
  }();
  model.set_convexity_constants(mc.kappa, mc.sigma);

  if (!mc.potential_field.empty()) {
    std::ifstream is(mc.potential_field);
    if (!is) throw ConfigError("cannot open potential field '" + mc.potential_field + "'");
    model.set_tabulated_potential(read_field(is));
  }
  return model;
}

ContinuationConfig build_continuation(const RunConfig& cfg) {
  ContinuationConfig cc = cfg.continuation;
  if (cfg.diagnostics.r_list.empty()) {
    cc.diagnostics.r_list = {0.5, 1.0, 2.0};
    const bool power = cfg.model.family == "quadratic_power" ||
                       ((cfg.model.family == "velocity_coupled" ||
                         cfg.model.family == "special_aniso") &&
                        cfg.model.coupling == "power");
    if (power && cfg.model.gamma != 1.0) cc.diagnostics.r_list.push_back(2.0 * cfg.model.gamma - 1.0);
    cc.diagnostics.r_list.push_back(-0.1);
  } else {
    cc.diagnostics.r_list = cfg.diagnostics.r_list;
  }
  cc.diagnostics.monotonicity_samples = cfg.diagnostics.monotonicity_samples;
  cc.diagnostics.seed = cfg.diagnostics.seed;
  cc.diagnostics.monotonicity.theta = cfg.diagnostics.theta;
  cc.diagnostics.monotonicity.c_r = cfg.diagnostics.c_r;
  return cc;
}

}  // namespace mfg
