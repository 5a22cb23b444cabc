// Command line front end: run a problem file, run a built-in benchmark, or
// integrate a single flow line.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "morseflow/experiment.h"
#include "morseflow/flow.h"
#include "morseflow/problem.h"
#include "morseflow/report.h"

using namespace morseflow;

namespace {

constexpr int kRuntimeError = 3;

struct RunArgs {
  std::string stages = "critical,loja,cond1,cond2,cond4";
  std::string out;
  std::string format = "json";
  std::int64_t seed = -1;  // negative keeps the seed from the problem
};

void add_run_options(CLI::App *cmd, RunArgs &args) {
  cmd->add_option("--stages", args.stages, "comma separated stage list")
      ->capture_default_str();
  cmd->add_option("--out", args.out, "output directory (stdout JSON if omitted)");
  cmd->add_option("--format", args.format, "json or csv-bundle")
      ->check(CLI::IsMember({"json", "csv-bundle"}))
      ->capture_default_str();
  cmd->add_option("--seed", args.seed, "override the problem seed");
}

int run_spec(ProblemSpec spec, const RunArgs &args) {
  if (args.seed >= 0) spec.seed = static_cast<std::uint64_t>(args.seed);
  const ExperimentReport report = run_experiment(spec, parse_stages(args.stages));
  if (args.out.empty()) {
    std::cout << report_to_json(report);
  } else {
    for (const auto &p : emit_report(report, report_format_from_string(args.format), args.out)) {
      std::cout << p.string() << "\n";
    }
    for (const ConditionReport &c : report.conditions) {
      std::cerr << "condition " << c.condition << ": " << to_string(c.verdict);
      if (!c.message.empty()) std::cerr << " (" << c.message << ")";
      std::cerr << "\n";
    }
    std::cerr << "corollary: " << to_string(report.corollary_verdict) << "\n";
  }
  for (const auto &[stage, msg] : report.stage_errors) {
    std::cerr << "stage " << stage << " error: " << msg << "\n";
  }
  return exit_code(report);
}

Vector parse_point(const std::string &text) {
  std::vector<double> xs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad coordinate '" + item + "'");
    xs.push_back(v);
  }
  return Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Gradient flows on singular polynomial sets"};
  app.require_subcommand(1);

  RunArgs run_args;
  std::string problem_path;
  auto *run = app.add_subcommand("run", "run stages on a problem file");
  run->add_option("--problem", problem_path, "problem JSON file")->required();
  add_run_options(run, run_args);

  RunArgs bench_args;
  std::string bench_name;
  bool print_problem = false;
  auto *bench = app.add_subcommand("bench", "run a built-in benchmark");
  bench->add_option("name", bench_name, "benchmark name")
      ->required()
      ->check(CLI::IsMember(benchmark_names()));
  bench->add_flag("--print-problem", print_problem, "print the problem file and exit");
  add_run_options(bench, bench_args);

  std::string flow_problem, from, direction = "down", csv_out;
  double stop_level = 0.0;
  auto *flow = app.add_subcommand("flow", "integrate one flow line to a level");
  flow->add_option("--problem", flow_problem, "problem JSON file")->required();
  flow->add_option("--from", from, "start point, comma separated")->required();
  flow->add_option("--direction", direction, "down or up")
      ->check(CLI::IsMember({"down", "up"}));
  flow->add_option("--stop-level", stop_level, "target level")->required();
  flow->add_option("--out", csv_out, "CSV file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kRuntimeError;
  }

  try {
    if (*run) return run_spec(load_problem(problem_path), run_args);
    if (*bench) {
      const ProblemSpec spec = benchmark(bench_name);
      if (print_problem) {
        std::cout << problem_to_json(spec);
        return 0;
      }
      return run_spec(spec, bench_args);
    }
    if (*flow) {
      const ProblemSpec spec = load_problem(flow_problem);
      const Objective f = make_objective(spec);
      const SingularSpace space = make_space(spec);
      LevelFlowOptions opt;
      opt.grad_tol = spec.tolerances.grad_tol;
      const Vector x0 = space.retract(parse_point(from));
      const FlowTrajectory traj =
          direction == "down" ? descend_to_level(f, space, x0, stop_level, opt)
                              : ascend_to_level(f, space, x0, stop_level, opt);
      if (csv_out.empty()) {
        write_trajectory_csv(std::cout, traj);
      } else {
        std::ofstream os(csv_out);
        if (!os) throw std::runtime_error("cannot write " + csv_out);
        write_trajectory_csv(os, traj);
      }
      std::cerr << "termination: " << to_string(traj.termination) << "\n";
      return traj.termination == Termination::reach_level ? 0 : 2;
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kRuntimeError;
}
