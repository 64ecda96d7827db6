#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "degen/fem.hpp"
#include "degen/grid.hpp"
#include "degen/problem.hpp"
#include "degen/weight.hpp"

namespace degen {

inline constexpr const char* kToolName = "degenlab";
inline constexpr const char* kToolVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plain-text configuration:
///
///   # comment
///   [section]
///   key = value
///
/// Lists are comma separated; matrices use ';' between rows. Every section
/// and key is checked against a fixed schema.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  const std::string* find(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  /// section -> allowed keys
  static const std::map<std::string, std::vector<std::string>>& schema();

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
};

enum class Subcommand { solve, rates, sweep_eps, conormal, frequency, liouville, inequalities, curved, list_cases };
std::string to_string(Subcommand s);
Subcommand subcommand_from(const std::string& name);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> grid_nodes;
  std::optional<std::string> subcommand;
};

/// Fully resolved experiment; every field has a default.
struct ExperimentConfig {
  Subcommand subcommand = Subcommand::solve;
  std::string case_name = "radial_homogeneous";
  std::uint64_t seed = 7;
  std::string fault = "none";

  int d = 2;
  int n = 2;
  double a = -1.5;
  int nodes = 65;
  double half_width = 1.0;
  double eps = 0.0;
  Matrix A;
  std::vector<double> slope;
  DomainShape shape = DomainShape::box;
  double radius = 1.0;

  QuadratureRule quad;
  SolverOptions solver;

  std::vector<int> rate_nodes{33, 65, 129};
  double min_order = 0.8;
  double holder_tol = 0.1;
  std::vector<double> bc_bands{0.25, 0.125, 0.0625};
  double bc_min_ratio = 0.0;

  std::vector<double> schedule{0.25, 0.125, 0.0625, 0.03125};
  double sweep_final_fraction = 0.25;
  double sweep_bound = 2.0;
  double conormal_min_rate = 0.25;

  std::vector<double> radii;
  double frequency_tol = 0.05;
  int spectral_fields = 100;
  std::string family = "homogeneous";
  double r0 = 0.25;
  double growth_tol = 0.05;

  int battery_fields = 50;
  double battery_radius = 0.9;
  double stability_tol = 0.1;

  std::string graph = "sine-graph";
  std::vector<double> graph_params;
  int eval_nodes = 49;
  double eval_half_width = 0.75;
  std::vector<double> curved_bands{0.5, 0.25, 0.125, 0.0625, 0.03125};
  double curved_tol = 0.05;
  double curved_min_ratio = 3.0;

  /// Resolved key/value pairs in schema order, echoed into the manifest.
  std::vector<std::pair<std::string, std::string>> echo;

  GridSpec grid() const { return GridSpec::cube(d, n, nodes, half_width); }
};

/// Validates types, ranges and the standing assumption a+n in (0,2).
/// Throws ConfigError.
ExperimentConfig resolve(const Config& cfg, const Overrides& ov = {});

struct CheckResult {
  std::string name;
  std::string tag;
  bool passed = false;
  std::string detail;
};

struct RunOutcome {
  int exit_code = 0;
  std::string message;
  std::vector<CheckResult> checks;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> files;
};

/// Runs the configured subcommand, writes CSV reports, manifest.json and
/// timing.json into out_dir. Exit codes: 0 pass, 1 check failure,
/// 2 configuration error, 3 solver failure. The manifest is written in every
/// case; wall times go only to timing.json so reruns are byte-identical.
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                          std::ostream& log);

/// Loads, resolves and runs; configuration errors map to exit code 2.
RunOutcome run_config_file(const std::filesystem::path& config, const Overrides& ov,
                           const std::filesystem::path& out_dir, std::ostream& log);

struct MetricDelta {
  std::string metric;
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;
  bool regression = false;
};

struct CompareReport {
  std::string subcommand;
  std::vector<MetricDelta> rows;  ///< only metrics that differ or are missing
  std::vector<std::string> check_changes;
  bool regression = false;
};

/// Per-metric deltas between two manifests; a metric differing by more than
/// tol * max(1, |a|), a missing metric or a check that flipped is a regression.
/// Throws ConfigError when the subcommands differ.
CompareReport compare_runs(const std::filesystem::path& manifest_a,
                           const std::filesystem::path& manifest_b, double tol = 1e-9);

void print_catalog(std::ostream& os);

}  // namespace degen
