#include "degen/lab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "degen/cases.hpp"
#include "degen/curved.hpp"
#include "degen/frequency.hpp"
#include "degen/regularity.hpp"

namespace degen {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>)
      s += fmt(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

double parse_double(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + s + "'");
  }
  if (pos != s.size() || !std::isfinite(v)) throw ConfigError(key + ": expected a number, got '" + s + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError(key + ": expected an integer, got '" + s + "'");
  return v;
}

bool is_odd_nodes(long long v) { return v >= 5 && v % 2 == 1; }

const std::vector<std::string>& fault_names() {
  static const std::vector<std::string> names{"none", "wrong_forcing", "indefinite_matrix", "noise"};
  return names;
}

/// Reads keys from the config while recording the resolved value of every
/// schema key, in schema order, for the manifest echo.
class Reader {
 public:
  explicit Reader(const Config& c) : c_(c) {}

  std::string str(const std::string& sec, const std::string& key, const std::string& def) {
    const std::string* v = c_.find(sec, key);
    const std::string out = v ? *v : def;
    record(sec, key, out);
    return out;
  }
  double num(const std::string& sec, const std::string& key, double def) {
    const std::string* v = c_.find(sec, key);
    const double out = v ? parse_double(sec + "." + key, *v) : def;
    record(sec, key, fmt(out));
    return out;
  }
  long long integer(const std::string& sec, const std::string& key, long long def) {
    const std::string* v = c_.find(sec, key);
    const long long out = v ? parse_int(sec + "." + key, *v) : def;
    record(sec, key, std::to_string(out));
    return out;
  }
  std::vector<double> nums(const std::string& sec, const std::string& key, std::vector<double> def) {
    const std::string* v = c_.find(sec, key);
    if (v) {
      def.clear();
      if (!trim(*v).empty())
        for (const auto& item : split(*v, ',')) def.push_back(parse_double(sec + "." + key, item));
    }
    record(sec, key, join(def));
    return def;
  }
  std::vector<int> ints(const std::string& sec, const std::string& key, std::vector<int> def) {
    const std::string* v = c_.find(sec, key);
    if (v) {
      def.clear();
      for (const auto& item : split(*v, ','))
        def.push_back(static_cast<int>(parse_int(sec + "." + key, item)));
    }
    record(sec, key, join(def));
    return def;
  }
  Matrix matrix(const std::string& sec, const std::string& key) {
    const std::string* v = c_.find(sec, key);
    Matrix M;
    std::string echo = "identity";
    if (v) {
      const auto rows = split(*v, ';');
      const auto n = static_cast<Eigen::Index>(rows.size());
      M.resize(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto cols = split(rows[i], ',');
        if (static_cast<Eigen::Index>(cols.size()) != n)
          throw ConfigError(sec + "." + key + ": matrix must be square (rows separated by ';')");
        for (Eigen::Index j = 0; j < n; ++j) M(i, j) = parse_double(sec + "." + key, cols[j]);
      }
      echo.clear();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i) echo += ";";
        for (Eigen::Index j = 0; j < n; ++j) echo += (j ? "," : "") + fmt(M(i, j));
      }
    }
    record(sec, key, echo);
    return M;
  }

  std::vector<std::pair<std::string, std::string>> echo() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [sec, keys] : Config::schema())
      for (const auto& k : keys) {
        const auto it = seen_.find(sec + "." + k);
        if (it != seen_.end()) out.emplace_back(it->first, it->second);
      }
    return out;
  }
  void overwrite(const std::string& full, const std::string& value) { seen_[full] = value; }

 private:
  void record(const std::string& sec, const std::string& key, const std::string& v) { seen_[sec + "." + key] = v; }
  const Config& c_;
  std::map<std::string, std::string> seen_;
};

}  // namespace

// ---------------------------------------------------------------- config

const std::map<std::string, std::vector<std::string>>& Config::schema() {
  static const std::map<std::string, std::vector<std::string>> s{
      {"run", {"subcommand", "seed"}},
      {"problem", {"case", "d", "n", "a", "eps", "shape", "radius", "A", "slope"}},
      {"grid", {"nodes", "half_width"}},
      {"quadrature", {"gauss_order", "grading_depth"}},
      {"solver", {"tol", "maxit"}},
      {"rates", {"nodes", "min_order", "holder_tol", "bands", "bc_min_ratio"}},
      {"eps", {"schedule", "final_fraction", "bound", "min_rate"}},
      {"frequency", {"radii", "tol", "fields", "family", "r0", "growth_tol"}},
      {"inequalities", {"fields", "radius", "stability_tol"}},
      {"curved", {"graph", "params", "eval_nodes", "eval_half_width", "bands", "tol", "min_ratio"}},
      {"fault", {"inject"}},
  };
  return s;
}

Config Config::parse(std::istream& in, const std::string& origin) {
  Config cfg;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().contains(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& allowed = schema().at(section);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    if (cfg.has(section, key)) throw ConfigError(where + "duplicate key '" + section + "." + key + "'");
    if (value.empty()) throw ConfigError(where + "empty value for '" + section + "." + key + "'");
    cfg.values_[section][key] = value;
  }
  return cfg;
}

Config Config::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.string());
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const std::string* Config::find(const std::string& section, const std::string& key) const {
  const auto s = values_.find(section);
  if (s == values_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  const auto s = schema().find(section);
  if (s == schema().end()) throw ConfigError("unknown section [" + section + "]");
  if (std::find(s->second.begin(), s->second.end(), key) == s->second.end())
    throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  values_[section][key] = value;
}

std::string to_string(Subcommand s) {
  switch (s) {
    case Subcommand::solve: return "solve";
    case Subcommand::rates: return "rates";
    case Subcommand::sweep_eps: return "sweep-eps";
    case Subcommand::conormal: return "conormal";
    case Subcommand::frequency: return "frequency";
    case Subcommand::liouville: return "liouville";
    case Subcommand::inequalities: return "inequalities";
    case Subcommand::curved: return "curved";
    case Subcommand::list_cases: return "list-cases";
  }
  return "unknown";
}

Subcommand subcommand_from(const std::string& name) {
  for (auto s : {Subcommand::solve, Subcommand::rates, Subcommand::sweep_eps, Subcommand::conormal,
                 Subcommand::frequency, Subcommand::liouville, Subcommand::inequalities, Subcommand::curved,
                 Subcommand::list_cases})
    if (to_string(s) == name) return s;
  throw ConfigError("unknown subcommand '" + name + "'");
}

ExperimentConfig resolve(const Config& cfg, const Overrides& ov) {
  Reader r(cfg);
  ExperimentConfig e;
  e.subcommand = subcommand_from(r.str("run", "subcommand", "solve"));
  if (ov.subcommand) {
    e.subcommand = subcommand_from(*ov.subcommand);
    r.overwrite("run.subcommand", *ov.subcommand);
  }
  const long long seed = r.integer("run", "seed", 7);
  if (seed < 0) throw ConfigError("run.seed must be non-negative");
  e.seed = static_cast<std::uint64_t>(seed);
  if (ov.seed) {
    e.seed = *ov.seed;
    r.overwrite("run.seed", std::to_string(*ov.seed));
  }

  e.case_name = r.str("problem", "case", e.case_name);
  if (std::none_of(catalog().begin(), catalog().end(), [&](const CatalogEntry& c) { return c.name == e.case_name; }))
    throw ConfigError("problem.case: unknown case '" + e.case_name + "' (see list-cases)");
  e.d = static_cast<int>(r.integer("problem", "d", e.d));
  e.n = static_cast<int>(r.integer("problem", "n", e.n));
  e.a = r.num("problem", "a", e.a);
  if (e.d < 2 || e.d > 3) throw ConfigError("problem.d must be 2 or 3");
  if (e.n < 2 || e.n > e.d) throw ConfigError("problem.n must satisfy 2 <= n <= d");
  if (!(e.a + e.n > 0.0 && e.a + e.n < 2.0))
    throw ConfigError("a+n must lie in (0,2): a=" + fmt_short(e.a) + ", n=" + std::to_string(e.n));
  e.eps = r.num("problem", "eps", e.eps);
  if (e.eps < 0.0) throw ConfigError("problem.eps must be non-negative");
  const std::string shape = r.str("problem", "shape", "box");
  if (shape == "box")
    e.shape = DomainShape::box;
  else if (shape == "ball")
    e.shape = DomainShape::ball;
  else
    throw ConfigError("problem.shape must be box or ball");
  e.radius = r.num("problem", "radius", e.radius);
  e.A = r.matrix("problem", "A");
  if (e.A.size() > 0 && e.A.rows() != e.d) throw ConfigError("problem.A must be d x d");
  e.slope = r.nums("problem", "slope", {});

  long long nodes = r.integer("grid", "nodes", e.nodes);
  if (ov.grid_nodes) {
    nodes = *ov.grid_nodes;
    r.overwrite("grid.nodes", std::to_string(nodes));
  }
  if (!is_odd_nodes(nodes)) throw ConfigError("grid.nodes must be an odd integer >= 5");
  e.nodes = static_cast<int>(nodes);
  e.half_width = r.num("grid", "half_width", e.half_width);
  if (!(e.half_width > 0.0)) throw ConfigError("grid.half_width must be positive");
  if (e.radius <= 0.0 || e.radius > e.half_width) throw ConfigError("problem.radius must lie in (0, half_width]");
  if (e.eps >= e.half_width) throw ConfigError("problem.eps must be smaller than grid.half_width");

  e.quad.gauss_order = static_cast<int>(r.integer("quadrature", "gauss_order", e.quad.gauss_order));
  e.quad.grading_depth = static_cast<int>(r.integer("quadrature", "grading_depth", e.quad.grading_depth));
  if (e.quad.gauss_order < 1 || e.quad.gauss_order > 20) throw ConfigError("quadrature.gauss_order must be in [1,20]");
  if (e.quad.grading_depth < 0 || e.quad.grading_depth > 30)
    throw ConfigError("quadrature.grading_depth must be in [0,30]");
  e.solver.tol = r.num("solver", "tol", e.solver.tol);
  e.solver.maxit = static_cast<int>(r.integer("solver", "maxit", e.solver.maxit));
  if (!(e.solver.tol > 0.0 && e.solver.tol < 1.0)) throw ConfigError("solver.tol must lie in (0,1)");
  if (e.solver.maxit < 1) throw ConfigError("solver.maxit must be positive");

  e.rate_nodes = r.ints("rates", "nodes", e.rate_nodes);
  if (e.rate_nodes.size() < 2) throw ConfigError("rates.nodes needs at least two grids");
  for (std::size_t i = 0; i < e.rate_nodes.size(); ++i) {
    if (!is_odd_nodes(e.rate_nodes[i])) throw ConfigError("rates.nodes entries must be odd integers >= 5");
    if (i && e.rate_nodes[i] <= e.rate_nodes[i - 1]) throw ConfigError("rates.nodes must be increasing");
  }
  e.min_order = r.num("rates", "min_order", e.min_order);
  e.holder_tol = r.num("rates", "holder_tol", e.holder_tol);
  e.bc_bands = r.nums("rates", "bands", e.bc_bands);
  e.bc_min_ratio = r.num("rates", "bc_min_ratio", e.bc_min_ratio);
  if (e.bc_bands.size() < 2) throw ConfigError("rates.bands needs at least two bands");

  e.schedule = r.nums("eps", "schedule", e.schedule);
  if (e.schedule.empty()) throw ConfigError("eps.schedule must not be empty");
  for (std::size_t i = 0; i < e.schedule.size(); ++i)
    if (!(e.schedule[i] > 0.0) || (i && e.schedule[i] >= e.schedule[i - 1]))
      throw ConfigError("eps.schedule must be positive and strictly decreasing");
  e.sweep_final_fraction = r.num("eps", "final_fraction", e.sweep_final_fraction);
  e.sweep_bound = r.num("eps", "bound", e.sweep_bound);
  e.conormal_min_rate = r.num("eps", "min_rate", e.conormal_min_rate);

  e.radii = r.nums("frequency", "radii", {});
  for (std::size_t i = 1; i < e.radii.size(); ++i)
    if (e.radii[i] <= e.radii[i - 1]) throw ConfigError("frequency.radii must be increasing");
  e.frequency_tol = r.num("frequency", "tol", e.frequency_tol);
  const long long sf = r.integer("frequency", "fields", e.spectral_fields);
  if (sf < 0 || sf > 100000) throw ConfigError("frequency.fields out of range");
  e.spectral_fields = static_cast<int>(sf);
  e.family = r.str("frequency", "family", e.family);
  try {
    growth_family_from(e.family);
  } catch (const std::exception&) {
    throw ConfigError("frequency.family must be homogeneous, subcritical or zero");
  }
  e.r0 = r.num("frequency", "r0", e.r0);
  e.growth_tol = r.num("frequency", "growth_tol", e.growth_tol);

  const long long bf = r.integer("inequalities", "fields", e.battery_fields);
  if (bf < 1 || bf > 100000) throw ConfigError("inequalities.fields out of range");
  e.battery_fields = static_cast<int>(bf);
  e.battery_radius = r.num("inequalities", "radius", e.battery_radius);
  e.stability_tol = r.num("inequalities", "stability_tol", e.stability_tol);
  if (!(e.battery_radius > 0.0 && e.battery_radius <= e.half_width))
    throw ConfigError("inequalities.radius must lie in (0, half_width]");

  e.graph = r.str("curved", "graph", e.graph);
  const auto& reg = Parametrization::registry();
  if (std::find(reg.begin(), reg.end(), e.graph) == reg.end())
    throw ConfigError("curved.graph: unknown parametrization '" + e.graph + "'");
  e.graph_params = r.nums("curved", "params", {});
  const long long en = r.integer("curved", "eval_nodes", e.eval_nodes);
  if (!is_odd_nodes(en)) throw ConfigError("curved.eval_nodes must be an odd integer >= 5");
  e.eval_nodes = static_cast<int>(en);
  e.eval_half_width = r.num("curved", "eval_half_width", e.eval_half_width);
  e.curved_bands = r.nums("curved", "bands", e.curved_bands);
  if (e.curved_bands.size() < 2) throw ConfigError("curved.bands needs at least two bands");
  e.curved_tol = r.num("curved", "tol", e.curved_tol);
  e.curved_min_ratio = r.num("curved", "min_ratio", e.curved_min_ratio);

  e.fault = r.str("fault", "inject", "none");
  const auto& faults = fault_names();
  if (std::find(faults.begin(), faults.end(), e.fault) == faults.end())
    throw ConfigError("fault.inject must be one of none, wrong_forcing, indefinite_matrix, noise");
  const bool case_based = e.subcommand != Subcommand::list_cases && e.subcommand != Subcommand::curved &&
                          e.subcommand != Subcommand::liouville;
  if (e.fault == "wrong_forcing" && !case_based)
    throw ConfigError("fault wrong_forcing needs a subcommand that solves a catalog case");
  if (e.fault == "indefinite_matrix" && e.subcommand != Subcommand::solve)
    throw ConfigError("fault indefinite_matrix is only available for solve");
  if (e.fault == "noise" && e.subcommand != Subcommand::frequency)
    throw ConfigError("fault noise is only available for frequency");

  e.echo = r.echo();
  return e;
}

// ---------------------------------------------------------------- runner

namespace {

class Csv {
 public:
  Csv(const fs::path& path, const std::string& header) : os_(path) {
    if (!os_) throw std::runtime_error("cannot write " + path.string());
    os_ << "tag," << header << '\n';
  }
  void row(const std::string& tag, std::initializer_list<double> values) {
    os_ << tag;
    for (double v : values) os_ << ',' << fmt(v);
    os_ << '\n';
  }
  std::ostream& raw() { return os_; }

 private:
  std::ofstream os_;
};

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, fs::path out, std::ostream& log)
      : cfg_(cfg), out_(std::move(out)), log_(log) {}

  RunOutcome run();

 private:
  using Clock = std::chrono::steady_clock;

  void check(const std::string& name, const std::string& tag, bool passed, const std::string& detail) {
    res_.checks.push_back({name, tag, passed, detail});
    log_ << (passed ? "  PASS " : "  FAIL ") << name << " [" << tag << "] " << detail << '\n';
  }
  void fail(int code, const std::string& message) {
    res_.exit_code = code;
    res_.message = message;
  }
  void metric(const std::string& name, double v) { res_.metrics.emplace_back(name, v); }
  Csv csv(const std::string& name, const std::string& header) {
    res_.files.push_back(name);
    return Csv(out_ / name, header);
  }
  void lap(const std::string& phase, Clock::time_point t0) {
    timing_.emplace_back(phase, std::chrono::duration<double>(Clock::now() - t0).count());
  }

  ManufacturedCase build_case();
  ProblemSpec spec_for(const ManufacturedCase& c, int nodes) const;
  Matrix coefficient() const {
    return cfg_.A.size() > 0 ? cfg_.A : Matrix(Matrix::Identity(cfg_.d, cfg_.d));
  }

  void run_solve();
  void run_rates();
  void run_sweep();
  void run_conormal();
  void run_frequency();
  void run_liouville();
  void run_inequalities();
  void run_curved();
  void run_list();

  void write_manifest() const;
  void write_timing() const;

  const ExperimentConfig& cfg_;
  fs::path out_;
  std::ostream& log_;
  RunOutcome res_;
  std::vector<std::pair<std::string, double>> timing_;
};

ManufacturedCase Runner::build_case() {
  CaseParams p;
  p.d = cfg_.d;
  p.n = cfg_.n;
  p.a = cfg_.a;
  p.A = cfg_.A;
  p.c = cfg_.slope;
  ManufacturedCase c = make_case(cfg_.case_name, p);
  if (cfg_.fault == "wrong_forcing") {
    ScalarFn f = c.f;
    c.f = [f](const Point& z) { return eval_or_zero(f, z) + 2.0; };
  }
  const ConsistencyReport rep = forcing_consistency(c, 200, cfg_.seed);
  metric("consistency.max_residual", rep.max_residual);
  metric("consistency.scale", rep.scale);
  check("forcing_consistency", "weak_form_consistency", rep.passed,
        "residual " + fmt_short(rep.max_residual) + " vs scale " + fmt_short(rep.scale));
  return c;
}

ProblemSpec Runner::spec_for(const ManufacturedCase& c, int nodes) const {
  ProblemSpec spec = c.problem(GridSpec::cube(cfg_.d, cfg_.n, nodes, cfg_.half_width), cfg_.eps, cfg_.quad, cfg_.solver);
  spec.shape = cfg_.shape;
  spec.radius = cfg_.radius;
  return spec;
}

void Runner::run_solve() {
  const ManufacturedCase c = build_case();
  const ProblemSpec spec = spec_for(c, cfg_.nodes);
  spec.validate();
  auto t0 = Clock::now();
  const Grid grid(spec.grid);
  const DomainMask mask = classify_nodes(grid, spec.shape, spec.eps, spec.radius);
  const CellIntegrator integ(grid, spec.weight, spec.quad);
  const LinearSystem sys = assemble(integ, mask, spec.A, spec.f, spec.F);
  ReducedSystem red = apply_dirichlet(sys, grid, mask, spec.psi, spec.g);
  lap("assemble", t0);
  if (cfg_.fault == "indefinite_matrix" && red.K.rows > 0) {
    std::size_t worst = 0;
    for (std::size_t i = 0; i < red.K.rows; ++i)
      if (red.K.at(i, i) > red.K.at(worst, worst)) worst = i;
    red.K.val[red.K.find(worst, worst)] *= -1.0;
  }
  t0 = Clock::now();
  CgResult cg = solve_cg(red.K, red.rhs, spec.solver.tol, spec.solver.maxit);
  lap("solve", t0);
  metric("solve.iterations", cg.iterations);
  metric("solve.relative_residual", cg.relative_residual);
  if (!cg.converged()) {
    check("solver_converged", "weak_form_consistency", false, "CG " + to_string(cg.status));
    throw SolverError("CG " + to_string(cg.status) + " after " + std::to_string(cg.iterations) + " iterations",
                      std::move(cg));
  }
  check("solver_converged", "weak_form_consistency", true,
        std::to_string(cg.iterations) + " iterations, residual " + fmt_short(cg.relative_residual));
  const Field u = red.expand(cg.x);
  metric("solve.free_dofs", static_cast<double>(red.free_to_global.size()));
  metric("solve.galerkin_residual", galerkin_residual(sys, mask, u));
  metric("solve.energy", energy(integ, mask, spec.A, spec.f, spec.F, u));
  metric("error.linf_half_ball", exact_error(grid, u, c, ErrorNorm::linf_half_ball, cfg_.quad));
  metric("error.l2a", exact_error(grid, u, c, ErrorNorm::l2a, cfg_.quad));
  metric("error.h1a", exact_error(grid, u, c, ErrorNorm::h1a, cfg_.quad));

  std::string header = "node";
  for (int k = 0; k < grid.dim(); ++k) header += ",x" + std::to_string(k);
  header += ",value";
  Csv out = csv("solution.csv", header);
  for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
    const Point z = grid.node(i);
    out.raw() << "weak_form_consistency," << i;
    for (int k = 0; k < grid.dim(); ++k) out.raw() << ',' << fmt(z[k]);
    out.raw() << ',' << fmt(u[i]) << '\n';
  }
}

void Runner::run_rates() {
  const ManufacturedCase c = build_case();
  std::vector<double> hs, errs;
  Csv table = csv("rates.csv", "nodes,h,linf_half_ball,l2a,order");
  std::optional<SolveResult> at_cfg;
  for (int N : cfg_.rate_nodes) {
    auto t0 = Clock::now();
    SolveResult r = solve(spec_for(c, N));
    lap("solve_" + std::to_string(N), t0);
    const double e = exact_error(r.grid, r.u, c, ErrorNorm::linf_half_ball, cfg_.quad);
    const double l2 = exact_error(r.grid, r.u, c, ErrorNorm::l2a, cfg_.quad);
    const double order = errs.empty() ? 0.0 : std::log(errs.back() / e) / std::log(hs.back() / r.grid.h());
    hs.push_back(r.grid.h());
    errs.push_back(e);
    table.row("manufactured_convergence", {double(N), r.grid.h(), e, l2, order});
    metric("rates.linf.N" + std::to_string(N), e);
    if (N == cfg_.nodes) at_cfg = std::move(r);
  }
  const double fitted = loglog_slope(hs, errs);
  bool monotone = true;
  for (std::size_t i = 1; i < errs.size(); ++i) monotone = monotone && errs[i] < errs[i - 1];
  metric("rates.order", fitted);
  check("refinement_order", "manufactured_convergence", monotone && fitted >= cfg_.min_order,
        std::string(monotone ? "monotone" : "not monotone") + ", fitted order " + fmt_short(fitted) +
            " (min " + fmt_short(cfg_.min_order) + ")");

  if (!at_cfg) {
    auto t0 = Clock::now();
    at_cfg = solve(spec_for(c, cfg_.nodes));
    lap("solve_" + std::to_string(cfg_.nodes), t0);
  }
  const SolveResult& r = *at_cfg;
  const RateReport hold = holder_exponent_fit(r.grid, r.u);
  const double expected = std::min(1.0, c.expected_exponent);
  metric("holder.exponent", hold.exponent);
  metric("holder.raw_slope", hold.raw_slope);
  // Only the homogeneous cases attain their exponent at the origin.
  if (cfg_.case_name == "radial_homogeneous" || cfg_.case_name == "anisotropic")
    check("holder_exponent", "holder_sharpness", std::abs(hold.exponent - expected) <= cfg_.holder_tol,
          "fitted " + fmt_short(hold.exponent) + " vs " + fmt_short(expected) + " +- " + fmt_short(cfg_.holder_tol));
  Csv prof = csv("holder_profile.csv", "kind,scale,oscillation");
  for (std::size_t i = 0; i < hold.profile.scales.size(); ++i)
    prof.row("holder_sharpness", {0.0, hold.profile.scales[i], hold.profile.oscillation[i]});

  if (c.regime == Regime::c1alpha) {
    const RateReport grad = gradient_holder_fit(r.grid, r.u);
    for (std::size_t i = 0; i < grad.profile.scales.size(); ++i)
      prof.row("gradient_holder", {1.0, grad.profile.scales[i], grad.profile.oscillation[i]});
    metric("gradient.exponent", grad.exponent);
    metric("gradient.raw_slope", grad.raw_slope);
    if (c.expected_exponent > 1.0) {
      const double ge = std::min(1.0, c.expected_exponent - 1.0);
      check("gradient_exponent", "gradient_holder", !grad.non_c1 && std::abs(grad.exponent - ge) <= cfg_.holder_tol,
            "fitted " + fmt_short(grad.exponent) + " vs " + fmt_short(ge) + " +- " + fmt_short(cfg_.holder_tol));
    }
    const auto rows = limiting_bc_residual(r.grid, r.u, spec_for(c, cfg_.nodes), cfg_.bc_bands);
    Csv bc = csv("bc_residual.csv", "band,x_residual,normal_residual,samples");
    for (const auto& row : rows)
      bc.row("limiting_bc", {row.band, row.x_residual, row.normal_residual, double(row.samples)});
    const double ratio = rows.front().normal_residual / std::max(rows.back().normal_residual, 1e-300);
    metric("bc.normal_ratio", ratio);
    if (cfg_.bc_min_ratio > 0.0)
      check("normal_flux_decay", "limiting_bc", ratio >= cfg_.bc_min_ratio,
            "ratio " + fmt_short(ratio) + " (min " + fmt_short(cfg_.bc_min_ratio) + ")");
  }
}

void Runner::run_sweep() {
  const ManufacturedCase c = build_case();
  auto t0 = Clock::now();
  const EpsilonSweep sw = epsilon_sweep(spec_for(c, cfg_.nodes), cfg_.schedule);
  lap("sweep", t0);
  Csv out = csv("sweep.csv", "eps,norm_h1a,diff_h1a,relative_residual,iterations");
  for (const auto& row : sw.rows)
    out.row("epsilon_approximation", {row.eps, row.norm_h1, row.diff_h1, row.relative_residual, double(row.iterations)});
  bool decreasing = true;
  for (std::size_t i = 1; i < sw.rows.size(); ++i) decreasing = decreasing && sw.rows[i].diff_h1 < sw.rows[i - 1].diff_h1;
  const double frac = sw.rows.back().diff_h1 / std::max(sw.rows.front().diff_h1, 1e-300);
  metric("sweep.u0_norm", sw.u0_norm);
  metric("sweep.data_norm", sw.data_norm);
  metric("sweep.final_fraction", frac);
  metric("sweep.bound_ratio", sw.bound_ratio);
  check("difference_decay", "epsilon_approximation", decreasing && frac <= cfg_.sweep_final_fraction,
        std::string(decreasing ? "decreasing" : "not decreasing") + ", final/first " + fmt_short(frac));
  check("uniform_bound", "epsilon_approximation", sw.bound_ratio <= cfg_.sweep_bound,
        "max norm / data norm " + fmt_short(sw.bound_ratio) + " (max " + fmt_short(cfg_.sweep_bound) + ")");
}

void Runner::run_conormal() {
  const ManufacturedCase c = build_case();
  auto t0 = Clock::now();
  const ConormalTrace tr = conormal_decay(spec_for(c, cfg_.nodes), cfg_.schedule);
  lap("conormal", t0);
  const bool counter = cfg_.case_name == "counterexample_F";
  const std::string tag = counter ? "conormal_counterexample" : "conormal_decay";
  Csv out = csv("conormal.csv", "eps,max_grad,max_flux,nodes");
  double min_grad = std::numeric_limits<double>::infinity();
  for (const auto& row : tr.rows) {
    out.row(tag, {row.eps, row.max_grad, row.max_flux, double(row.nodes)});
    min_grad = std::min(min_grad, row.max_grad);
  }
  metric("conormal.rate", tr.rate);
  metric("conormal.flux_rate", tr.flux_rate);
  metric("conormal.min_grad", min_grad);
  if (counter)
    check("gradient_persists", tag, min_grad >= 0.5, "min max|grad u| " + fmt_short(min_grad) + " (min 0.5)");
  else
    check("gradient_decay", tag, tr.rate >= cfg_.conormal_min_rate,
          "rate " + fmt_short(tr.rate) + " (min " + fmt_short(cfg_.conormal_min_rate) + ")");
}

void Runner::run_frequency() {
  if (cfg_.d != cfg_.n) throw PreconditionError("frequency: requires n = d");
  const ManufacturedCase c = build_case();
  auto t0 = Clock::now();
  SolveResult r = solve(spec_for(c, cfg_.nodes));
  lap("solve", t0);
  const Matrix A = coefficient();
  const double h = r.grid.h();
  std::vector<double> radii = cfg_.radii;
  if (radii.empty())
    for (int i = 0;; ++i) {
      const double x = 0.3 + i * h;
      if (x > 0.6 + 1e-9) break;
      radii.push_back(x);
    }
  Field u = r.u;
  if (cfg_.fault == "noise") {
    std::mt19937_64 rng(cfg_.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (double& v : u) v += U(rng);
  }
  const CellIntegrator integ(r.grid, c.weight(), cfg_.quad);
  t0 = Clock::now();
  const FrequencyProfile prof = frequency_profile(integ, u, A, radii);
  const IdentityCheck id = check_derivative_identity(prof, cfg_.frequency_tol);
  lap("profile", t0);
  Csv out = csv("frequency.csv", "r,E,H,N");
  for (std::size_t i = 0; i < prof.radii.size(); ++i) out.row("frequency_value", {prof.radii[i], prof.E[i], prof.H[i], prof.N[i]});
  Csv idc = csv("identity.csv", "r,dH,two_E_over_r");
  for (std::size_t i = 0; i < id.radii.size(); ++i) idc.row("almgren_identity", {id.radii[i], id.dH[i], id.two_E_over_r[i]});
  metric("identity.max_relative_error", id.max_relative_error);
  check("derivative_identity", "almgren_identity", id.passed,
        "max relative error " + fmt_short(id.max_relative_error) + " (tol " + fmt_short(cfg_.frequency_tol) + ")");

  const double gamma = 2.0 - cfg_.a - cfg_.n;
  double dev = 0.0;
  for (double N : prof.N) dev = std::isfinite(N) ? std::max(dev, std::abs(N - gamma) / gamma) : 1e300;
  metric("frequency.max_deviation", dev);
  if (cfg_.case_name == "radial_homogeneous" || cfg_.case_name == "anisotropic")
    check("frequency_constant", "frequency_value", dev <= cfg_.frequency_tol,
          "max |N - " + fmt_short(gamma) + "|/" + fmt_short(gamma) + " = " + fmt_short(dev));

  if (cfg_.spectral_fields > 0) {
    t0 = Clock::now();
    const DomainMask mask = classify_nodes(r.grid, DomainShape::box, h);
    const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(A).eigenvalues().maxCoeff();
    const double rs = std::min(0.5, 0.8 * cfg_.half_width / std::sqrt(lmax));
    Csv sp = csv("spectral.csv", "field,E_raw,H_raw,margin,scale,relative");
    const Field ext = extremal_field(r.grid, A, cfg_.a, h);
    const SpectralMargin em = spectral_trace_check(integ, mask, ext, A, rs);
    sp.row("spectral_trace_inequality", {-1.0, em.E_raw, em.H_raw, em.margin, em.scale, em.relative});
    metric("spectral.extremal_relative", em.relative);
    check("extremal_near_equality", "spectral_trace_inequality", em.passed && std::abs(em.relative) <= 0.05,
          "relative margin " + fmt_short(em.relative));
    const auto fields = random_admissible_fields(r.grid, cfg_.spectral_fields, cfg_.seed, h);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const SpectralMargin m = spectral_trace_check(integ, mask, fields[i], A, rs);
      sp.row("spectral_trace_inequality", {double(i), m.E_raw, m.H_raw, m.margin, m.scale, m.relative});
      worst = std::min(worst, m.scale > 0.0 ? m.margin / m.scale : 0.0);
    }
    lap("spectral", t0);
    metric("spectral.worst_margin_over_scale", worst);
    check("random_margins", "spectral_trace_inequality", worst >= -1e-8,
          std::to_string(fields.size()) + " fields, worst margin/scale " + fmt_short(worst));
  }
}

void Runner::run_liouville() {
  GrowthConfig g;
  g.grid = GridSpec::cube(cfg_.d, cfg_.n, cfg_.nodes, cfg_.half_width);
  g.a = cfg_.a;
  g.A = cfg_.A;
  g.family = growth_family_from(cfg_.family);
  g.r0 = cfg_.r0;
  g.radii = cfg_.radii;
  g.tol = cfg_.growth_tol;
  g.quad = cfg_.quad;
  g.solver = cfg_.solver;
  auto t0 = Clock::now();
  const GrowthRecord rec = growth_validator(g);
  lap("growth", t0);
  Csv out = csv("growth.csv", "r,H,bound");
  for (std::size_t i = 0; i < rec.radii.size(); ++i) out.row("liouville_growth", {rec.radii[i], rec.H[i], rec.bound[i]});
  metric("growth.degenerate", rec.degenerate ? 1.0 : 0.0);
  check("growth_bound", "liouville_growth", rec.passed,
        rec.degenerate ? std::string("degenerate zero record") : "family " + cfg_.family);
}

void Runner::run_inequalities() {
  const ManufacturedCase c = build_case();
  const Grid grid(GridSpec::cube(cfg_.d, cfg_.n, cfg_.nodes, cfg_.half_width));
  const DomainMask mask = classify_nodes(grid, DomainShape::box, 0.0);
  const CellIntegrator integ(grid, c.weight(), cfg_.quad);
  auto t0 = Clock::now();
  const auto fields = battery_fields(grid, cfg_.battery_fields, cfg_.seed);
  const auto records = inequality_battery(integ, mask, fields, cfg_.battery_radius);
  Csv out = csv("inequalities.csv", "inequality,field,ratio");
  for (const auto& rec : records)
    out.row("functional_inequality", {double(static_cast<int>(rec.id)), double(rec.field), rec.ratio});
  bool finite = true;
  for (const auto& s : summarize(records)) {
    metric("battery." + to_string(s.id), s.max_ratio);
    finite = finite && s.finite;
  }
  lap("battery", t0);
  check("ratios_finite", "functional_inequality", finite, std::to_string(fields.size()) + " fields");

  t0 = Clock::now();
  const auto stab = inequality_refinement(cfg_.d, cfg_.n, cfg_.a, cfg_.nodes, cfg_.battery_fields, cfg_.seed,
                                          cfg_.battery_radius, cfg_.quad);
  lap("stability", t0);
  Csv st = csv("stability.csv", "inequality,coarse,fine,relative_change");
  double worst = 0.0;
  for (const auto& row : stab) {
    st.row("functional_inequality", {double(static_cast<int>(row.id)), row.coarse, row.fine, row.relative_change});
    worst = std::max(worst, row.relative_change);
  }
  metric("stability.max_change", worst);
  check("refinement_stability", "functional_inequality", worst <= cfg_.stability_tol,
        "max relative change " + fmt_short(worst) + " (tol " + fmt_short(cfg_.stability_tol) + ")");

  t0 = Clock::now();
  const SolveResult r = solve(spec_for(c, cfg_.nodes));
  lap("solve", t0);
  const CellIntegrator sinteg(r.grid, c.weight(), cfg_.quad);
  const double cacc = caccioppoli_ratio(sinteg, r.u, c.f, c.F, 0.25, 0.5);
  const double moser = moser_ratio(sinteg, r.u, c.f, c.F, 0.25, 0.5);
  metric("caccioppoli.ratio", cacc);
  metric("moser.ratio", moser);
  check("energy_estimates_finite", "functional_inequality", std::isfinite(cacc) && std::isfinite(moser),
        "caccioppoli " + fmt_short(cacc) + ", moser " + fmt_short(moser));

  if (cfg_.d == cfg_.n && cfg_.half_width >= 1.0) {
    const double sphere = cfg_.n == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
    const double exact = sphere / (cfg_.n + cfg_.a);
    const double got = weighted_function_lp(integ, Region::ball(1.0), 1.0, [](const Point&) { return 1.0; });
    const double rel = std::abs(got - exact) / exact;
    metric("quadrature.ball_integral", got);
    metric("quadrature.relative_error", rel);
    check("ball_weight_integral", "weighted_quadrature", rel <= 0.01,
          "integral " + fmt_short(got) + " vs " + fmt_short(exact));
  }
}

void Runner::run_curved() {
  const Parametrization p = Parametrization::by_name(cfg_.graph, cfg_.d, cfg_.n, cfg_.graph_params);
  const GridSpec straight = GridSpec::cube(cfg_.d, cfg_.n, cfg_.nodes, cfg_.half_width);

  auto t0 = Clock::now();
  {
    const GridSpec small = GridSpec::cube(cfg_.d, cfg_.n, 17, cfg_.half_width);
    const CurvedModel m0 = curved_radial_model(Parametrization::zero(cfg_.d, cfg_.n), cfg_.a, small);
    ProblemSpec direct = m0.problem.spec;
    direct.solver = cfg_.solver;
    PushedProblem pushed0 = push_problem(m0.problem);
    pushed0.spec.solver = cfg_.solver;
    const SolveResult a = solve(direct);
    const SolveResult b = solve(pushed0.spec);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.u.size(); ++i) {
      diff = std::max(diff, std::abs(a.u[i] - b.u[i]));
      scale = std::max(scale, std::abs(a.u[i]));
    }
    const double rel = diff / std::max(scale, 1e-300);
    metric("roundtrip.max_relative_difference", rel);
    check("flat_roundtrip", "curved_equivalence", rel <= 1e-8, "max relative difference " + fmt_short(rel));
  }
  lap("roundtrip", t0);

  CurvedModel m = curved_radial_model(p, cfg_.a, straight);
  m.problem.spec.quad = cfg_.quad;
  m.problem.spec.solver = cfg_.solver;
  const AdmissibilityReport adm = admissibility_check(m.problem.delta, p, 400, cfg_.seed);
  metric("admissibility.c0", adm.c0);
  metric("admissibility.c1", adm.c1);
  metric("admissibility.holder_quotient", adm.holder_quotient);
  PushedProblem pushed = push_problem(m.problem);
  metric("pushed.lambda", pushed.lambda_tilde);
  metric("pushed.Lambda", pushed.Lambda_tilde);
  t0 = Clock::now();
  const SolveResult r = solve(pushed.spec);
  lap("solve", t0);

  const Grid curved(GridSpec::cube(cfg_.d, cfg_.n, cfg_.eval_nodes, cfg_.eval_half_width));
  const Straightening S(p);
  const Field uc = pullback_field(r.grid, r.u, S, curved);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < curved.num_nodes(); ++i) {
    const double e = m.exact(curved.node(i));
    num += (uc[i] - e) * (uc[i] - e);
    den += e * e;
  }
  const double rel = std::sqrt(num / std::max(den, 1e-300));
  metric("curved.relative_l2", rel);
  check("pullback_agreement", "curved_equivalence", rel <= cfg_.curved_tol,
        "relative L2 " + fmt_short(rel) + " (tol " + fmt_short(cfg_.curved_tol) + ")");

  const auto rows = curved_bc_residual(curved, uc, m.problem.spec.A, m.problem.spec.F, m.problem.spec.psi, p,
                                       cfg_.curved_bands);
  Csv out = csv("curved_residual.csv", "band,normal,tangential,samples");
  for (const auto& row : rows) out.row("curved_conormal", {row.band, row.normal, row.tangential, double(row.samples)});
  const double ratio = rows.front().normal / std::max(rows.back().normal, 1e-300);
  metric("curved.normal_ratio", ratio);
  check("normal_residual_decay", "curved_conormal", ratio >= cfg_.curved_min_ratio,
        "ratio " + fmt_short(ratio) + " (min " + fmt_short(cfg_.curved_min_ratio) + ")");
}

void Runner::run_list() {
  print_catalog(log_);
  Csv out = csv("cases.csv", "name,validity,role");
  for (const auto& e : catalog()) out.raw() << "catalog," << e.name << ",\"" << e.validity << "\",\"" << e.role << "\"\n";
}

RunOutcome Runner::run() {
  const auto t0 = Clock::now();
  fs::create_directories(out_);
  log_ << kToolName << ' ' << to_string(cfg_.subcommand) << " -> " << out_.string() << '\n';
  try {
    switch (cfg_.subcommand) {
      case Subcommand::solve: run_solve(); break;
      case Subcommand::rates: run_rates(); break;
      case Subcommand::sweep_eps: run_sweep(); break;
      case Subcommand::conormal: run_conormal(); break;
      case Subcommand::frequency: run_frequency(); break;
      case Subcommand::liouville: run_liouville(); break;
      case Subcommand::inequalities: run_inequalities(); break;
      case Subcommand::curved: run_curved(); break;
      case Subcommand::list_cases: run_list(); break;
    }
    std::string failed;
    for (const auto& c : res_.checks)
      if (!c.passed) failed += (failed.empty() ? "" : "; ") + c.name + " [" + c.tag + "]";
    if (!failed.empty()) {
      res_.exit_code = 1;
      res_.message = "check failed: " + failed;
    }
  } catch (const ConfigError& e) {
    fail(2, std::string("configuration error: ") + e.what());
  } catch (const PreconditionError& e) {
    fail(2, std::string("configuration error: ") + e.what());
  } catch (const EllipticityError& e) {
    fail(2, std::string("configuration error: ") + e.what());
  } catch (const SolverError& e) {
    fail(3, std::string("solver failure [solver_converged]: ") + e.what());
  } catch (const std::exception& e) {
    fail(3, std::string("runtime failure: ") + e.what());
  }
  timing_.emplace_back("total", std::chrono::duration<double>(Clock::now() - t0).count());
  res_.files.push_back("manifest.json");
  res_.files.push_back("timing.json");
  write_manifest();
  write_timing();
  log_ << (res_.exit_code == 0 ? "ok" : res_.message) << '\n';
  return res_;
}

void Runner::write_manifest() const {
  ojson j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["subcommand"] = to_string(cfg_.subcommand);
  ojson echo = ojson::object();
  for (const auto& [k, v] : cfg_.echo) echo[k] = v;
  j["config"] = echo;
  const GridSpec g = cfg_.grid();
  j["grid"] = {{"d", g.d}, {"n", g.n}, {"nodes_per_axis", g.nodes_per_axis}, {"h", g.h()},
               {"lo", -cfg_.half_width}, {"hi", cfg_.half_width}};
  j["quadrature"] = {{"gauss_order", cfg_.quad.gauss_order}, {"grading_depth", cfg_.quad.grading_depth}};
  j["solver"] = {{"method", "jacobi_pcg"}, {"tol", cfg_.solver.tol}, {"maxit", cfg_.solver.maxit}};
  j["timing_file"] = "timing.json";
  j["status"] = {{"exit_code", res_.exit_code}, {"message", res_.message}};
  ojson checks = ojson::array();
  for (const auto& c : res_.checks)
    checks.push_back({{"name", c.name}, {"tag", c.tag}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks;
  ojson metrics = ojson::object();
  for (const auto& [k, v] : res_.metrics) metrics[k] = v;
  j["metrics"] = metrics;
  j["files"] = res_.files;
  std::ofstream os(out_ / "manifest.json");
  os << j.dump(2) << '\n';
}

void Runner::write_timing() const {
  ojson j = ojson::object();
  for (const auto& [k, v] : timing_) j[k + "_seconds"] = v;
  std::ofstream os(out_ / "timing.json");
  os << j.dump(2) << '\n';
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  return Runner(cfg, out_dir, log).run();
}

RunOutcome run_config_file(const fs::path& config, const Overrides& ov, const fs::path& out_dir, std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = resolve(Config::load(config), ov);
  } catch (const ConfigError& e) {
    RunOutcome res{2, std::string("configuration error: ") + e.what(), {}, {}, {"manifest.json"}};
    fs::create_directories(out_dir);
    ojson j;
    j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    j["subcommand"] = ov.subcommand ? *ov.subcommand : "unresolved";
    j["config_file"] = config.string();
    j["status"] = {{"exit_code", res.exit_code}, {"message", res.message}};
    j["checks"] = ojson::array();
    j["metrics"] = ojson::object();
    j["files"] = res.files;
    std::ofstream os(out_dir / "manifest.json");
    os << j.dump(2) << '\n';
    log << res.message << '\n';
    return res;
  }
  return run_experiment(cfg, out_dir, log);
}

// ---------------------------------------------------------------- compare

CompareReport compare_runs(const fs::path& manifest_a, const fs::path& manifest_b, double tol) {
  auto load = [](const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open manifest " + p.string());
    try {
      return ojson::parse(in);
    } catch (const std::exception& e) {
      throw ConfigError("malformed manifest " + p.string() + ": " + e.what());
    }
  };
  const ojson A = load(manifest_a);
  const ojson B = load(manifest_b);
  const std::string sa = A.value("subcommand", "");
  const std::string sb = B.value("subcommand", "");
  if (sa != sb) throw ConfigError("cannot compare runs of different subcommands: " + sa + " vs " + sb);

  CompareReport rep;
  rep.subcommand = sa;
  const ojson ma = A.value("metrics", ojson::object());
  const ojson mb = B.value("metrics", ojson::object());
  auto number = [](const ojson& v) {
    return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
  };
  for (const auto& [key, va] : ma.items()) {
    MetricDelta d{key, number(va), std::numeric_limits<double>::quiet_NaN(), 0.0, true};
    if (mb.contains(key)) {
      d.b = number(mb.at(key));
      d.delta = d.b - d.a;
      const bool both_nan = std::isnan(d.a) && std::isnan(d.b);
      d.regression = !both_nan && !(std::abs(d.delta) <= tol * std::max(1.0, std::abs(d.a)));
      if (both_nan || d.delta == 0.0) continue;
    }
    rep.regression = rep.regression || d.regression;
    rep.rows.push_back(d);
  }
  for (const auto& [key, vb] : mb.items())
    if (!ma.contains(key)) {
      rep.rows.push_back({key, std::numeric_limits<double>::quiet_NaN(), number(vb),
                          std::numeric_limits<double>::quiet_NaN(), true});
      rep.regression = true;
    }

  std::map<std::string, bool> ca;
  for (const auto& c : A.value("checks", ojson::array())) ca[c.value("name", "")] = c.value("passed", false);
  for (const auto& c : B.value("checks", ojson::array())) {
    const std::string name = c.value("name", "");
    const bool pb = c.value("passed", false);
    const auto it = ca.find(name);
    if (it == ca.end()) {
      rep.check_changes.push_back(name + ": only in second run");
    } else {
      if (it->second != pb) {
        rep.check_changes.push_back(name + ": " + (it->second ? "pass" : "fail") + " -> " + (pb ? "pass" : "fail"));
        if (!pb) rep.regression = true;
      }
      ca.erase(it);
    }
  }
  for (const auto& [name, p] : ca) {
    rep.check_changes.push_back(name + ": only in first run");
    rep.regression = true;
  }
  return rep;
}

void print_catalog(std::ostream& os) {
  std::size_t w0 = 4, w1 = 8;
  for (const auto& e : catalog()) {
    w0 = std::max(w0, e.name.size());
    w1 = std::max(w1, e.validity.size());
  }
  os << std::left << std::setw(int(w0) + 2) << "case" << std::setw(int(w1) + 2) << "validity" << "role\n";
  for (const auto& e : catalog())
    os << std::left << std::setw(int(w0) + 2) << e.name << std::setw(int(w1) + 2) << e.validity << e.role << '\n';
}

}  // namespace degen
