#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "degen/lab.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Weighted degenerate elliptic PDE laboratory"};
  app.set_version_flag("--version", std::string(degen::kToolVersion));
  app.require_subcommand(1);

  std::string config;
  std::string out = "degenlab_out";
  std::optional<std::uint64_t> seed;
  std::optional<int> nodes;

  const char* names[] = {"solve", "rates", "sweep-eps", "conormal", "frequency",
                         "liouville", "inequalities", "curved", "list-cases"};
  for (const char* name : names) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config, "experiment config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "random seed override");
    sub->add_option("--grid-nodes", nodes, "odd nodes per axis override");
    if (std::string(name) != "list-cases") sub->get_option("--config")->required();
  }

  std::string manifest_a, manifest_b;
  double tol = 1e-9;
  CLI::App* cmp = app.add_subcommand("compare", "compare two run manifests");
  cmp->add_option("manifest_a", manifest_a)->required()->check(CLI::ExistingFile);
  cmp->add_option("manifest_b", manifest_b)->required()->check(CLI::ExistingFile);
  cmp->add_option("--tol", tol, "relative tolerance per metric");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (cmp->parsed()) {
    try {
      const degen::CompareReport rep = degen::compare_runs(manifest_a, manifest_b, tol);
      std::cout << "subcommand " << rep.subcommand << ": " << rep.rows.size() << " metric deltas\n";
      for (const auto& r : rep.rows)
        std::cout << (r.regression ? "  REGRESSION " : "  delta ") << r.metric << ": " << r.a << " -> " << r.b
                  << " (" << r.delta << ")\n";
      for (const auto& c : rep.check_changes) std::cout << "  check " << c << '\n';
      std::cout << (rep.regression ? "regression flagged\n" : "no regression\n");
      return rep.regression ? 1 : 0;
    } catch (const degen::ConfigError& e) {
      std::cerr << e.what() << '\n';
      return 2;
    }
  }

  degen::Overrides ov;
  ov.seed = seed;
  ov.grid_nodes = nodes;
  for (CLI::App* sub : app.get_subcommands()) ov.subcommand = sub->get_name();

  degen::RunOutcome res;
  if (config.empty()) {
    degen::ExperimentConfig cfg = degen::resolve(degen::Config{}, ov);
    res = degen::run_experiment(cfg, out, std::cout);
  } else {
    res = degen::run_config_file(config, ov, out, std::cout);
  }
  return res.exit_code;
}
