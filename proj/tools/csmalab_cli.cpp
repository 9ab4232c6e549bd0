#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csmalab/experiments.hpp"

namespace {

// overrides shared by every subcommand
struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::uint64_t> seeds;
  double duration_s = -1.0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "experiment config JSON")
      ->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", args.out_dir, "output directory");
  cmd->add_option("-s,--seeds", args.seeds, "seed list override")
      ->delimiter(',');
  cmd->add_option("-d,--duration", args.duration_s,
                  "simulated seconds override");
}

csmalab::exp::ExperimentConfig resolve(const CommonArgs& args) {
  auto cfg = args.config_path.empty()
                 ? csmalab::exp::parse_config("{}")
                 : csmalab::exp::load_config(args.config_path);
  if (!args.seeds.empty()) cfg.seeds = args.seeds;
  if (args.duration_s > 0) cfg.duration_s = args.duration_s;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CSMA/CA throughput-optimization laboratory"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* analytic = app.add_subcommand("analytic", "model curves and fixed points");
  auto* sweep = app.add_subcommand("sweep", "simulated throughput vs control grid");
  auto* compare = app.add_subcommand("compare", "protocol comparison table");
  auto* dynamic = app.add_subcommand("dynamic", "population-schedule time series");
  for (auto* cmd : {analytic, sweep, compare, dynamic}) add_common(cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(args);
    std::vector<std::string> written;
    if (analytic->parsed()) written = csmalab::exp::cmd_analytic(cfg, args.out_dir);
    if (sweep->parsed()) written = csmalab::exp::cmd_sweep(cfg, args.out_dir);
    if (compare->parsed()) written = csmalab::exp::cmd_compare(cfg, args.out_dir);
    if (dynamic->parsed()) written = csmalab::exp::cmd_dynamic(cfg, args.out_dir);
    for (const auto& path : written) std::printf("%s\n", path.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "{\"error\": \"%s\"}\n", e.what());
    return 1;
  }
  return 0;
}
