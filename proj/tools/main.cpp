#include "csmspec/workbench.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using csmspec::workbench::Command;
  CLI::App app{"Spectral analysis workbench for continuous state machines"};
  app.require_subcommand(1);

  csmspec::workbench::Invocation inv;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int workers = 1;
  bool drop_trivial = false;

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Roll out a CSM spec and write trajectory CSVs"},
      {"pipeline", "Kernel, spectrum, basins, skeleton and metrics end to end"},
      {"adiabatic", "Product-versus-power sweep over slowly drifting kernels"},
      {"skeleton", "Basin skeleton graph only"},
      {"metrics", "Bootstrap ARI and classifier accuracies only"},
  };
  std::vector<CLI::Option*> seed_opts;
  std::vector<CLI::Option*> worker_opts;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "RunConfig JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory (overrides config \"out\")");
    seed_opts.push_back(sub->add_option("--seed", seed, "Master seed (overrides config \"seed\")"));
    worker_opts.push_back(sub->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber));
    sub->add_flag("--drop-trivial", drop_trivial, "Exclude the constant mode from basin assignment (eigen basis)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  inv.command = name == "simulate"    ? Command::Simulate
                : name == "adiabatic" ? Command::Adiabatic
                : name == "skeleton"  ? Command::Skeleton
                : name == "metrics"   ? Command::Metrics
                                      : Command::Pipeline;
  inv.config = config;
  inv.out = out;
  inv.drop_trivial = drop_trivial;
  for (auto* o : seed_opts)
    if (o->count() > 0) inv.seed = seed;
  for (auto* o : worker_opts)
    if (o->count() > 0) inv.workers = workers;
  return csmspec::workbench::run(inv, std::cerr);
}
