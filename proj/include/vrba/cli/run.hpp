#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "vrba/cli/config.hpp"
#include "vrba/diag/record.hpp"
#include "vrba/nn/checkpoint.hpp"
#include "vrba/varlab/verify.hpp"

#ifndef VRBA_CODE_HASH
#define VRBA_CODE_HASH "unknown"
#endif

namespace vrba::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAborted = 3;

inline std::string code_hash() { return VRBA_CODE_HASH; }

namespace detail {

inline void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

inline json record_json(const diag::RunRecord& r) {
  return {{"iter", r.iter},       {"loss_E", r.loss_E},     {"loss_B", r.loss_B}, {"loss_D", r.loss_D},
          {"rel_l2", r.rel_l2},   {"l_inf", r.l_inf},       {"variance", r.variance},
          {"snr", r.snr},         {"epsilon", r.epsilon}};
}

/// Shared scaffolding: output directory, config snapshot, CSV log, abort handling.
template <class Train, class Finish>
int run_training(const RunConfig& rc, std::uint64_t seed, bool record_wall, Train&& train, Finish&& finish,
                 std::ostream& msg) {
  namespace fs = std::filesystem;
  const fs::path dir(rc.out);
  fs::create_directories(dir);
  const json snap = snapshot(rc);
  write_json(dir / "config.json", snap);

  json summary;
  summary["command"] = to_string(rc.command);
  summary["seed"] = seed;
  summary["code_hash"] = code_hash();
  summary["config"] = snap;

  diag::CsvLog log((dir / "log.csv").string());
  std::optional<diag::RunRecord> last;
  auto on_record = [&](const diag::RunRecord& r) {
    log.write(r);
    last = r;
  };
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto result = train(on_record);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summary["status"] = "ok";
    if (last) summary["final"] = record_json(*last);
    finish(result, dir, summary);
    // wall time stays out of the summary unless asked for, so repeated runs compare equal
    if (record_wall) summary["wall_seconds"] = secs;
    write_json(dir / "summary.json", summary);
    write_json(dir / "timing.json", {{"wall_seconds", secs}});
    return kExitOk;
  } catch (const TrainingAborted& e) {
    summary["status"] = "aborted";
    summary["error"] = e.what();
    if (last) summary["final"] = record_json(*last);
    write_json(dir / "summary.json", summary);
    msg << "run aborted: " << e.what() << '\n';
    if (last) msg << diag::kCsvHeader << '\n' << diag::csv_row(*last) << '\n';
    return kExitAborted;
  }
}

}  // namespace detail

inline int run_train_pinn(const RunConfig& rc, std::ostream& msg = std::cerr) {
  const auto& c = rc.pinn;
  const auto problem = pinn::make_problem(c.problem);
  return detail::run_training(
      rc, c.seed, c.record_wall_time,
      [&](const auto& on_record) { return pinn::train_pinn(problem, c, on_record); },
      [&](const pinn::PinnResult& res, const std::filesystem::path& dir, json& s) {
        nn::save_checkpoint((dir / "checkpoint.txt").string(), res.params,
                            {{"model", "mlp"}, {"config", nn::to_json(res.net)}, {"seed", c.seed}});
        s["problem"] = c.problem;
        s["mode"] = adapt::to_string(c.mode);
        s["potential"] = c.potential.name();
        s["rel_l2"] = res.rel_l2;
        s["l_inf"] = res.l_inf;
        s["variance"] = res.variance;
        s["global_weights"] = {{"E", res.global_weights[0]}, {"B", res.global_weights[1]}, {"D", res.global_weights[2]}};
      },
      msg);
}

inline int run_train_op(const RunConfig& rc, std::ostream& msg = std::cerr) {
  const auto& c = rc.op;
  const op::Dataset data = rc.data_path.empty() ? op::generate_dataset(rc.dataset) : op::load_dataset(rc.data_path);
  return detail::run_training(
      rc, c.seed, c.record_wall_time,
      [&](const auto& on_record) { return op::train_operator(data, c, on_record); },
      [&](const op::OpResult& res, const std::filesystem::path& dir, json& s) {
        nn::save_checkpoint((dir / "checkpoint.txt").string(), res.params,
                            {{"model", "deeponet"},
                             {"branch", nn::to_json(c.net.branch())},
                             {"trunk", nn::to_json(c.net.trunk())},
                             {"seed", c.seed}});
        s["problem"] = "operator";
        s["mode"] = adapt::to_string(c.mode);
        s["potential"] = c.potential.name();
        s["rel_l2"] = res.test_rel_l2;
        s["val_rel_l2"] = res.val_rel_l2;
        s["max_pmf_deviation"] = res.max_pmf_deviation;
        s["pmf_checks"] = res.pmf_checks;
        s["max_bound_ratio"] = res.max_bound_ratio;
      },
      msg);
}

inline int run(const RunConfig& rc, std::ostream& msg = std::cerr) {
  return rc.command == Command::TrainPinn ? run_train_pinn(rc, msg) : run_train_op(rc, msg);
}

/// Runs the appendix checks and prints them as CSV; exit code reflects the verdict.
inline int run_verify(std::uint64_t seed, std::ostream& out) {
  const auto rows = varlab::run_verification(seed);
  out << "check,measured,tolerance,pass\n";
  for (const auto& r : rows) {
    out << r.name << ',' << diag::format_double(r.measured) << ',' << diag::format_double(r.tolerance) << ','
        << (r.pass ? "pass" : "FAIL") << '\n';
  }
  return varlab::all_pass(rows) ? kExitOk : kExitCheckFailed;
}

}  // namespace vrba::cli
