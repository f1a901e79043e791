// catcollapse: batch front end for the wavepacket, detector, EPR and
// spin-boson engines.
//
// Exit codes: 0 success, 1 unexpected error, 2 bad config or arguments,
// 3 scenario rejected, 4 numerical budget exceeded.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "catcollapse/commands.hpp"

namespace {

struct Args {
  std::string config;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string mode;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Args& a, bool with_mode) {
  auto* sub = app.add_subcommand(name, help);
  sub->add_option("-c,--config", a.config, "scenario JSON file")->required()->check(CLI::ExistingFile);
  sub->add_option("-n,--n", a.n, "ensemble size / number of runs");
  sub->add_option("-s,--seed", a.seed, "base seed (overrides the config)");
  sub->add_option("-o,--out", a.out, "output directory")->capture_default_str();
  if (with_mode) {
    sub->add_option("-m,--mode", a.mode, "rabi | dephasing | evolve | scan | collapse")
        ->check(CLI::IsMember({"rabi", "dephasing", "evolve", "scan", "collapse"}));
  }
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cat-state collapse simulator"};
  app.require_subcommand(1);
  Args a;
  add_command(app, "wavepacket", "Gaussian pulse envelope and normalization report", a, false);
  add_command(app, "detect", "Single-photon detection statistics for a detector set", a, false);
  add_command(app, "epr", "Entangled photon pair ensemble with causal collapse", a, false);
  add_command(app, "spinboson", "Spin-boson dynamics, localization scan and collapse verdicts", a, true);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const auto* sub = app.get_subcommands().front();
  catcollapse::commands::Options opt;
  opt.config_path = a.config;
  if (sub->count("--n") > 0) opt.n = a.n;
  if (sub->count("--seed") > 0) opt.seed = a.seed;
  opt.out_dir = a.out;
  opt.mode = a.mode;
  try {
    const auto r = catcollapse::commands::run(sub->get_name(), opt);
    std::cout << r.summary.dump(2) << '\n';
    for (const auto& f : r.files) std::cerr << "wrote " << (opt.out_dir / f).string() << '\n';
    return 0;
  } catch (const catcollapse::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const catcollapse::ScenarioRejected& e) {
    std::cerr << "scenario rejected: " << e.what() << '\n';
    return 3;
  } catch (const catcollapse::NumericalBudgetError& e) {
    std::cerr << "numerical budget exceeded: " << e.what() << '\n';
    return 4;
  } catch (const catcollapse::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
