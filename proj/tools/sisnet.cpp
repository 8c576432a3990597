#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sisnet/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SIS epidemics on kernel-sampled random graphs"};
  app.set_version_flag("--version", sisnet::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  sisnet::CommandOptions opt;
  std::string out_dir;
  for (const char* name : {"simulate", "meanfield", "couple", "sweep"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.master_seed, "master seed")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    if (std::string(name) == "couple") sub->add_flag("--oracle", opt.oracle, "n = 8 brute-force cross-check");
  }
  CLI11_PARSE(app, argc, argv);
  opt.out_dir = out_dir;

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = sisnet::load_config(config_path);
    if (command == "simulate") return sisnet::cmd_simulate(cfg, opt);
    if (command == "meanfield") return sisnet::cmd_meanfield(cfg, opt);
    if (command == "couple") return sisnet::cmd_couple(cfg, opt);
    return sisnet::cmd_sweep(cfg, opt);
  } catch (const sisnet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
