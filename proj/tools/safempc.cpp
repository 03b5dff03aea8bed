// Command-line front end: synthesize | run | emit-milp.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "safempc/error.hpp"
#include "safempc/pipeline.hpp"
#include "safempc/scenario.hpp"

namespace {

enum Exit : int {
  kOk = 0,
  kGeneric = 1,
  kValidation = 2,
  kEmptyWinningSet = 3,
  kInfeasibleRun = 4,
  kUnrecoverable = 5,
};

int exit_code(safempc::ErrorKind kind) {
  using safempc::ErrorKind;
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::assumption: return kValidation;
    case ErrorKind::empty_winning_set: return kEmptyWinningSet;
    case ErrorKind::infeasible: return kInfeasibleRun;
    case ErrorKind::unrecoverable: return kUnrecoverable;
    default: return kGeneric;
  }
}

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<std::string> out;
  std::optional<std::size_t> horizon;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--scenario", o.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "demand seed (overrides run.seed)");
  cmd->add_option("--steps", o.steps, "closed-loop length (overrides run.steps)");
  cmd->add_option("--out", o.out, "output directory (overrides output)");
  cmd->add_option("--horizon", o.horizon, "prediction horizon (overrides mpc.horizon)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"safety-guaranteed MPC for traffic signal networks"};
  app.require_subcommand(1);
  Options opt;
  auto* synth = app.add_subcommand("synthesize", "grid, abstraction and safety game; writes the terminal set");
  auto* run = app.add_subcommand("run", "closed-loop simulation; writes a CSV trace and a summary");
  auto* milp = app.add_subcommand("emit-milp", "writes the mixed-integer model as an LP file");
  for (auto* c : {synth, run, milp}) add_common(c, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    safempc::Scenario sc = safempc::load_scenario(opt.scenario);
    if (opt.seed) sc.seed = *opt.seed;
    if (opt.steps) sc.steps = *opt.steps;
    if (opt.horizon) {
      if (*opt.horizon == 0 && !milp->parsed())
        throw safempc::Error(safempc::ErrorKind::validation, "--horizon must be at least 1");
      sc.mpc.horizon = *opt.horizon;
    }
    const std::filesystem::path out = opt.out ? *opt.out : sc.output_dir;

    if (synth->parsed()) {
      safempc::cmd_synthesize(sc, out, std::cout);
    } else if (run->parsed()) {
      safempc::cmd_run(sc, out, std::cout);
    } else {
      safempc::cmd_emit_milp(sc, opt.horizon ? *opt.horizon : sc.mpc.horizon, out, std::cout);
    }
    return kOk;
  } catch (const safempc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kGeneric;
  }
}
