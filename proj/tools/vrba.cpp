#include <fstream>
#include <sstream>
#include <iostream>

#include <CLI11.hpp>

#include "vrba/cli/config.hpp"
#include "vrba/cli/report.hpp"
#include "vrba/cli/run.hpp"

namespace {

struct TrainArgs {
  std::string config;
  vrba::cli::Overrides ov;
};

CLI::App* add_train(CLI::App& app, const std::string& name, const std::string& help, TrainArgs& a) {
  auto* sub = app.add_subcommand(name, help);
  sub->add_option("--config", a.config, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--mode", a.ov.mode, "baseline | vrba_weighting | vrba_sampling | vrba_hybrid");
  sub->add_option("--potential", a.ov.potential, "exponential | quadratic");
  sub->add_option("--seed", a.ov.seed, "run seed");
  sub->add_option("--iters", a.ov.iters, "training iterations");
  sub->add_option("--out", a.ov.out, "output directory");
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace vrba;
  CLI::App app{"variance-reduced residual-based adaptive training"};
  app.require_subcommand(1);

  TrainArgs pinn_args, op_args;
  auto* pinn_cmd = add_train(app, "train-pinn", "train a physics-informed network", pinn_args);
  auto* op_cmd = add_train(app, "train-op", "train a DeepONet on the oscillator dataset", op_args);

  std::uint64_t verify_seed = 2024;
  std::string verify_out;
  auto* verify_cmd = app.add_subcommand("verify", "run the variational identity checks");
  verify_cmd->add_option("--seed", verify_seed, "check seed");
  verify_cmd->add_option("--out", verify_out, "also write the CSV table here");

  std::vector<std::string> report_dirs;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "aggregate run directories into a median/IQR table");
  report_cmd->add_option("dirs", report_dirs, "run directories")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--out", report_out, "also write the table here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pinn_cmd || *op_cmd) {
      const bool is_pinn = static_cast<bool>(*pinn_cmd);
      const auto& a = is_pinn ? pinn_args : op_args;
      const auto rc = cli::parse_config_file(is_pinn ? cli::Command::TrainPinn : cli::Command::TrainOp, a.config, a.ov);
      const int code = cli::run(rc, std::cerr);
      if (code == cli::kExitOk) std::cout << "wrote " << rc.out << "/summary.json\n";
      return code;
    }
    if (*verify_cmd) {
      std::ostringstream table;
      const int code = cli::run_verify(verify_seed, table);
      std::cout << table.str();
      if (!verify_out.empty()) std::ofstream(verify_out) << table.str();
      return code;
    }
    const auto table = cli::format_report(cli::collect_runs(report_dirs));
    std::cout << table;
    if (!report_out.empty()) std::ofstream(report_out) << table;
    return cli::kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kExitUsage;
  } catch (const RangeError& e) {
    std::cerr << "range error: " << e.what() << '\n';
    return cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitCheckFailed;
  }
}
