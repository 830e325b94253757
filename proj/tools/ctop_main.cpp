#include "ctop/io.hpp"
#include "ctop/ocp.hpp"
#include "ctop/scp.hpp"
#include "ctop/subproblem.hpp"
#include "ctop/validate.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitMaxIters = 2;
constexpr int kExitStalled = 3;
constexpr int kExitAuditFailure = 4;
constexpr int kExitUsage = 64;

struct SolveFlags {
  int max_iters = -1;
  double tol = -1.0;
  double lambda = -1.0;
  double trust_init = -1.0;
  bool serial = false;
};

void apply_flags(ctop::ScenarioBundle& bundle, const SolveFlags& flags) {
  if (flags.max_iters > 0) ctop::override_scp(bundle, "iter_max", flags.max_iters);
  if (flags.tol > 0.0) ctop::override_scp(bundle, "eps", flags.tol);
  if (flags.lambda > 0.0) ctop::override_scp(bundle, "lambda", flags.lambda);
  if (flags.trust_init > 0.0) ctop::override_scp(bundle, "trust_init", flags.trust_init);
}

int exit_code(ctop::SolveStatus status, bool audit_passed) {
  switch (status) {
    case ctop::SolveStatus::converged:
      return audit_passed ? kExitConverged : kExitAuditFailure;
    case ctop::SolveStatus::max_iters:
      return kExitMaxIters;
    case ctop::SolveStatus::stalled:
      return kExitStalled;
  }
  return kExitUsage;
}

int run_one(ctop::ScenarioBundle bundle, const std::string& outdir, bool serial,
            const std::string& dump_qp, std::ostream& os) {
  const auto policy = serial ? ctop::ExecPolicy::serial : ctop::ExecPolicy::parallel;

  if (!dump_qp.empty()) {
    const ctop::Trajectory guess = ctop::initial_guess(bundle.scenario);
    const auto disc = ctop::discretize_trajectory(guess, bundle.scenario.quad, policy);
    const auto lin = ctop::linearize_nonconvex(guess, bundle.scenario);
    const auto spec =
        ctop::assemble(guess, disc, lin, bundle.scenario, bundle.config,
                       bundle.config.trust_init, ctop::Scaling::from_scenario(bundle.scenario));
    ctop::write_qp(spec.qp, dump_qp);
    os << "wrote canonical subproblem to " << dump_qp << "\n";
  }

  const ctop::SolveResult result = ctop::run_scp(bundle.scenario, bundle.config, policy);
  const ctop::AuditReport report = ctop::audit(result, bundle.scenario);
  ctop::emit_outputs(result, report, bundle, outdir);

  os << bundle.scenario.name << ": status=" << ctop::to_string(result.status)
     << " T=" << result.traj.T << "s energy=" << result.energy
     << " throughput=" << result.throughput_bits << " bits (required "
     << bundle.scenario.channel.q_min_bits << "), audit "
     << (report.passed ? "passed" : "FAILED") << ", " << result.log.size() << " iterations -> "
     << outdir << "\n";
  return exit_code(result.status, report.passed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Communication-constrained energy-optimal quadrotor trajectory optimization"};
  app.require_subcommand(1);

  std::string scenario_path, outdir = "out", dump_qp;
  SolveFlags flags;

  CLI::App* solve = app.add_subcommand("solve", "Solve one scenario and audit the result");
  solve->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  solve->add_option("--out", outdir, "Output directory");
  solve->add_option("--max-iters", flags.max_iters, "Override scp.iter_max");
  solve->add_option("--tol", flags.tol, "Override scp.eps");
  solve->add_option("--lambda", flags.lambda, "Override scp.lambda");
  solve->add_option("--trust-init", flags.trust_init, "Override scp.trust_init");
  solve->add_flag("--serial", flags.serial, "Disable OpenMP parallel kernels");
  solve->add_option("--dump-qp", dump_qp, "Dump the first convex subproblem in canonical form");

  std::string traj_path;
  CLI::App* validate = app.add_subcommand("validate", "Re-simulate and audit a trajectory file");
  validate->add_option("trajectory", traj_path, "trajectory.csv from a solve run")->required();
  validate->add_option("scenario", scenario_path, "Scenario JSON file")->required();

  std::string qmin_list;
  int jobs = 2;
  CLI::App* sweep = app.add_subcommand("sweep", "Solve a family of throughput requirements");
  sweep->add_option("--qmin", qmin_list, "Comma-separated Q_min values in megabytes")->required();
  sweep->add_option("--scenario", scenario_path, "Base scenario JSON file")->required();
  sweep->add_option("--out", outdir, "Output directory (one subdirectory per value)");
  sweep->add_option("--jobs", jobs, "Parallel worker slots");
  sweep->add_option("--max-iters", flags.max_iters, "Override scp.iter_max");
  sweep->add_option("--tol", flags.tol, "Override scp.eps");
  sweep->add_option("--lambda", flags.lambda, "Override scp.lambda");
  sweep->add_option("--trust-init", flags.trust_init, "Override scp.trust_init");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (solve->parsed()) {
      ctop::ScenarioBundle bundle = ctop::load_scenario(scenario_path);
      apply_flags(bundle, flags);
      return run_one(std::move(bundle), outdir, flags.serial, dump_qp, std::cout);
    }

    if (validate->parsed()) {
      const ctop::ScenarioBundle bundle = ctop::load_scenario(scenario_path);
      const ctop::LoadedTrajectory traj = ctop::load_trajectory_csv(traj_path);
      const ctop::AuditReport report =
          ctop::audit_controls(traj.u, traj.T, bundle.scenario);
      std::cout << ctop::audit_to_json(report).dump(2) << "\n";
      return report.passed ? kExitConverged : kExitAuditFailure;
    }

    if (sweep->parsed()) {
      std::vector<double> qmins;
      std::stringstream ss(qmin_list);
      std::string item;
      while (std::getline(ss, item, ',')) qmins.push_back(std::stod(item));
      if (qmins.empty()) {
        std::cerr << "sweep: --qmin needs at least one value\n";
        return kExitUsage;
      }

      const ctop::ScenarioBundle base = ctop::load_scenario(scenario_path);
      std::vector<int> codes(qmins.size(), kExitUsage);
      std::mutex io_mutex;
      std::vector<std::thread> workers;
      std::atomic<size_t> next{0};
      const int slot_count = std::max(1, std::min<int>(jobs, static_cast<int>(qmins.size())));

      for (int w = 0; w < slot_count; ++w) {
        workers.emplace_back([&]() {
          for (size_t i = next.fetch_add(1); i < qmins.size(); i = next.fetch_add(1)) {
            ctop::ScenarioBundle bundle = base;
            const double mb = qmins[i];
            bundle.scenario.channel.q_min_bits = mb * 8.0e6;
            bundle.effective["mission"]["q_min_megabytes"] = mb;
            std::ostringstream tag;
            tag << bundle.scenario.name << "_q" << mb << "mb";
            bundle.scenario.name = tag.str();
            bundle.effective["name"] = tag.str();
            apply_flags(bundle, flags);
            std::ostringstream log;
            int code = kExitUsage;
            try {
              code = run_one(std::move(bundle), outdir + "/" + tag.str(), false, "", log);
            } catch (const std::exception& e) {
              log << tag.str() << ": error: " << e.what() << "\n";
            }
            std::lock_guard<std::mutex> lock(io_mutex);
            std::cout << log.str();
            codes[i] = code;
          }
        });
      }
      for (auto& t : workers) t.join();
      return *std::max_element(codes.begin(), codes.end());
    }
  } catch (const ctop::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ctop::ErrorCode::io_error || e.code() == ctop::ErrorCode::parse_error ||
                   e.code() == ctop::ErrorCode::invalid_scenario
               ? kExitUsage
               : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
