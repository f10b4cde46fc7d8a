// Command-line front end: declarative experiments from flat key=value
// config files, plus direct access to the simulator and the PDE solvers.
// Exit code 0 iff every criterion in the config passes.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "pinning/config.hpp"
#include "pinning/dynamics.hpp"
#include "pinning/equilibrium.hpp"
#include "pinning/experiments.hpp"
#include "pinning/harness.hpp"
#include "pinning/shapes.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::string out_dir;
  long long seed = -1;
  int threads = 0;
};

pinning::ConfigMap load_config(const CommonOpts& o) {
  pinning::ConfigMap c = pinning::ConfigMap::parse_file(o.config);
  if (o.seed >= 0) c.set("seed", std::to_string(o.seed));
  if (!o.out_dir.empty()) c.set("out_dir", o.out_dir);
  if (o.threads > 0) c.set("threads", std::to_string(o.threads));
  return c;
}

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required = true) {
  cmd->add_option("--config", o.config, "key = value config file")->required(config_required);
  cmd->add_option("--seed", o.seed, "override the base seed");
  cmd->add_option("--out-dir", o.out_dir, "override the output directory");
  cmd->add_option("--threads", o.threads, "worker threads for seed ensembles");
}

int run_table_experiment(const pinning::ConfigMap& cfg) {
  const pinning::ExperimentSpec spec = pinning::ExperimentSpec::from_config(cfg);
  const pinning::ResultTable table = pinning::run_experiment(spec);
  pinning::emit(table, spec.out_dir);
  std::ostringstream os;
  pinning::write_summary_text(table, os);
  std::cout << os.str();
  return table.all_pass() ? 0 : 1;
}

int cmd_simulate(const CommonOpts& o) {
  const pinning::ConfigMap cfg = load_config(o);
  pinning::DynamicsConfig dc;
  dc.L = static_cast<int>(cfg.integer("L"));
  dc.lambda = pinning::PinningParameter::parse(cfg.str_or("lambda", "1"));
  dc.walled = cfg.flag_or("walled", true);
  dc.horizon = cfg.number("T");
  if (cfg.has("snapshots")) dc.snapshot_times = cfg.numbers("snapshots");
  if (cfg.has("obs_times")) dc.observable_times = cfg.numbers("obs_times");
  dc.seed = static_cast<std::uint64_t>(cfg.integer_or("seed", 1));
  if (cfg.str_or("scheduler", "uniformized") == "plain-rate1")
    dc.scheduler = pinning::Scheduler::plain_rate1;

  pinning::LatticePath eta0 =
      cfg.has("profile")
          ? pinning::discretize(pinning::make_profile(cfg.str("profile"),
                                                      static_cast<int>(cfg.integer_or("profile_cells", 2048))),
                                dc.L, dc.walled)
          : pinning::eta_min(dc.L);
  eta0.walled = dc.walled;
  const pinning::TrajectoryRecord rec = pinning::simulate(dc, eta0);

  const std::filesystem::path dir = cfg.str_or("out_dir", "out");
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "observables.csv", std::ios::binary);
    pinning::write_observables_csv(rec, os);
  }
  {
    std::ofstream os(dir / "snapshots.txt", std::ios::binary);
    for (const auto& [t, path] : rec.snapshots) {
      os << "# t=" << pinning::detail::format_double(t) << '\n';
      pinning::write_path(path, os);
    }
  }
  if (rec.termination_time)
    std::cout << "termination_time_micro=" << pinning::detail::format_double(*rec.termination_time)
              << " rescaled="
              << pinning::detail::format_double(*rec.termination_time / (double(dc.L) * dc.L))
              << '\n';
  std::cout << "wrote " << (dir / "observables.csv").string() << " and snapshots.txt\n";
  return 0;
}

int cmd_equilibrium(const CommonOpts& o, int L, const std::string& lambda_s, int samples,
                    bool dump_table) {
  double lambda = 1.0;
  pinning::ConfigMap cfg;
  std::filesystem::path dir = "out";
  std::uint64_t seed = 1;
  if (!o.config.empty()) {
    cfg = load_config(o);
    L = static_cast<int>(cfg.integer_or("L", L));
    lambda = cfg.number_or("lambda", 1.0);
    samples = static_cast<int>(cfg.integer_or("samples", samples));
    dir = cfg.str_or("out_dir", "out");
    seed = static_cast<std::uint64_t>(cfg.integer_or("seed", 1));
  }
  if (!lambda_s.empty()) lambda = pinning::PinningParameter::parse(lambda_s).value();
  if (o.seed >= 0) seed = static_cast<std::uint64_t>(o.seed);
  if (!o.out_dir.empty()) dir = o.out_dir;

  const pinning::PartitionTable table(L, lambda);
  std::cout << "L=" << L << " lambda=" << pinning::detail::format_double(lambda) << '\n'
            << "log_Z=" << pinning::detail::format_double(table.log_partition()) << '\n'
            << "Z=" << pinning::detail::format_double(table.partition()) << '\n'
            << "expected_contacts=" << pinning::detail::format_double(table.expected_contacts())
            << '\n';
  if (L % 2 == 0)
    std::cout << "midpoint_pin_probability="
              << pinning::detail::format_double(table.midpoint_pin_probability()) << '\n';

  std::filesystem::create_directories(dir);
  if (dump_table) {
    std::ofstream os(dir / "partition_table.csv", std::ios::binary);
    table.write_csv(os);
  }
  if (samples > 0) {
    std::ofstream os(dir / "equilibrium_samples.txt", std::ios::binary);
    for (int i = 0; i < samples; ++i) pinning::write_path(table.sample(seed + i), os);
  }
  return 0;
}

int cmd_sweep(const CommonOpts& o) {
  const pinning::ConfigMap cfg = load_config(o);
  int failures = 0;
  for (const std::string& sub : cfg.strings("configs")) {
    std::filesystem::path p(sub);
    if (p.is_relative()) p = std::filesystem::path(o.config).parent_path() / p;
    std::cout << "== " << p.string() << '\n';
    pinning::ConfigMap c = pinning::ConfigMap::parse_file(p.string());
    if (o.threads > 0) c.set("threads", std::to_string(o.threads));
    if (!o.out_dir.empty())
      c.set("out_dir", (std::filesystem::path(o.out_dir) / p.stem()).string());
    failures += run_table_experiment(c) != 0;
  }
  std::cout << (failures ? "sweep: FAIL" : "sweep: PASS") << '\n';
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polymer pinning dynamics, scaling limits and Stefan solvers"};
  app.require_subcommand(1);

  CommonOpts sim_o, heat_o, stefan_o, compare_o, eq_o, sweep_o;

  CLI::App* sim = app.add_subcommand("simulate", "run one heat-bath trajectory");
  add_common(sim, sim_o);

  CLI::App* heat = app.add_subcommand("heat", "Dirichlet heat solvers and checks");
  add_common(heat, heat_o);

  CLI::App* stefan = app.add_subcommand("stefan", "front-tracking Stefan run and diagnostics");
  add_common(stefan, stefan_o);

  CLI::App* compare = app.add_subcommand("compare", "scaling-limit and oracle experiments");
  add_common(compare, compare_o);

  CLI::App* eq = app.add_subcommand("equilibrium", "partition function, sampling, pin probability");
  add_common(eq, eq_o, false);
  int eq_L = 8, eq_samples = 0;
  bool eq_table = false;
  std::string eq_lambda;
  eq->add_option("--L", eq_L, "half length");
  eq->add_option("--lambda", eq_lambda, "pinning parameter");
  eq->add_option("--samples", eq_samples, "number of exact samples to emit");
  eq->add_flag("--table", eq_table, "dump the DP table as CSV");

  CLI::App* sweep = app.add_subcommand("sweep", "run a list of experiment configs");
  add_common(sweep, sweep_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_o);
    if (heat->parsed()) {
      pinning::ConfigMap c = load_config(heat_o);
      if (!c.has("kind")) c.set("kind", "heat-study");
      return run_table_experiment(c);
    }
    if (stefan->parsed()) {
      pinning::ConfigMap c = load_config(stefan_o);
      if (!c.has("kind")) c.set("kind", "stefan-study");
      return run_table_experiment(c);
    }
    if (compare->parsed()) return run_table_experiment(load_config(compare_o));
    if (eq->parsed()) return cmd_equilibrium(eq_o, eq_L, eq_lambda, eq_samples, eq_table);
    if (sweep->parsed()) return cmd_sweep(sweep_o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
