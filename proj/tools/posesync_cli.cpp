// posesync: distributed hybrid SE(3) pose-synchronization simulator.
//
// Subcommands:
//   check-params  validate the weighting matrix and report the switching
//                 parameter synthesis and the synergy gap
//   run           simulate one scenario; writes trace.csv, events.csv,
//                 summary.txt
//   montecarlo    batch of runs from seeded random initial conditions
//   oracle        on-demand numerical verification (gradcheck|rank|gap|exp)
//
// Exit codes: 0 success, 1 validation error or goal not met,
// 2 certificate violation, 3 numerical divergence, 4 oracle failure.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "posesync/posesync.hpp"

namespace {

using namespace posesync;

struct CommonOptions {
  std::string config_path;
  std::string preset;
};

SimConfig resolve_config(const CommonOptions& opt) {
  if (!opt.config_path.empty() && !opt.preset.empty()) {
    throw ConfigError("give either --config or --preset, not both");
  }
  if (!opt.config_path.empty()) {
    return load_config(opt.config_path);
  }
  const std::string name = opt.preset.empty() ? "fig2" : opt.preset;
  if (name != "fig2") {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return fig2_preset();
}

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) {
    throw ConfigError("cannot write " + (dir / name).string());
  }
  return out;
}

int cmd_check_params(const CommonOptions& opt) {
  const SimConfig cfg = resolve_config(opt);
  const Scenario sc = build_scenario(cfg);
  const WeightMatrix& w = sc.weight;
  const SynergyParams& p = sc.params;

  std::cout << "W eigenvalues: " << fmt_double(w.eigenvalues(0)) << " "
            << fmt_double(w.eigenvalues(1)) << " " << fmt_double(w.eigenvalues(2)) << "\n";
  if (p.synthesis_case > 0) {
    std::cout << "synthesis case: " << p.synthesis_case << "\n";
  } else {
    std::cout << "synthesis case: overridden u_c1\n";
  }
  std::cout << "Delta_W*: " << fmt_double(p.delta_star) << "\n"
            << "u_c1: " << p.u_c1.transpose() << "\n"
            << "u_c2: " << p.u_c2.transpose() << "\n"
            << "gamma: " << fmt_double(p.gamma) << " (bound "
            << fmt_double(4.0 * p.delta_star / (std::numbers::pi * std::numbers::pi)) << ")\n"
            << "delta: " << fmt_double(p.delta) << " (bound "
            << fmt_double((4.0 * p.delta_star / (std::numbers::pi * std::numbers::pi) - p.gamma) *
                          p.theta_max * p.theta_max / 2.0)
            << ")\n"
            << "theta_set:";
  for (double th : p.theta_set) {
    std::cout << " " << fmt_double(th);
  }
  std::cout << "\n";

  const CriticalSet crit = enumerate_critical(w);
  if (crit.degenerate) {
    std::cout << "note: repeated eigenvalues; the undesired critical set is a continuum,"
                 " listing a computed basis\n";
  }
  for (std::size_t c = 1; c < crit.poses.size(); ++c) {
    const double mu = mu_U(crit.poses[c], 0.0, w, p);
    std::cout << "critical point " << c << ": mu_U = " << fmt_double(mu)
              << (mu > p.delta ? "  > delta" : "  <= delta (GAP VIOLATED)") << "\n";
  }
  for (const std::string& msg : sc.warnings) {
    std::cout << "warning: " << msg << "\n";
  }

  bool ok = sc.warnings.empty();
  for (std::size_t c = 1; c < crit.poses.size(); ++c) {
    ok = ok && mu_U(crit.poses[c], 0.0, w, p) > p.delta;
  }
  std::cout << (ok ? "all strict inequalities hold" : "strict inequality violations reported")
            << "\n";
  return ok ? 0 : 1;
}

int cmd_run(const CommonOptions& opt, const std::string& out_dir, bool disable_jumps,
            double h_override, double t_end_override) {
  SimConfig cfg = resolve_config(opt);
  if (disable_jumps) {
    cfg.settings.disable_jumps = true;
  }
  if (h_override > 0.0) {
    cfg.settings.h = h_override;
  }
  if (t_end_override > 0.0) {
    cfg.settings.t_end = t_end_override;
  }
  const Scenario sc = build_scenario(cfg);
  for (const std::string& msg : sc.warnings) {
    std::cerr << "warning: " << msg << "\n";
  }
  const RunResult r = run(sc.initial, sc.topo, sc.weight, sc.params, sc.gains, sc.settings);

  const std::filesystem::path dir(out_dir);
  {
    auto out = open_out(dir, "trace.csv");
    write_trace_csv(out, r.trace, sc.topo.n_agents, sc.topo.n_edges());
  }
  {
    auto out = open_out(dir, "events.csv");
    write_events_csv(out, r.events);
  }
  {
    auto out = open_out(dir, "summary.txt");
    write_summary(out, r);
  }
  std::cout << "wrote " << (dir / "trace.csv").string() << ", events.csv, summary.txt\n"
            << "converged " << (r.converged ? 1 : 0) << ", jump events " << r.jump_events
            << " (budget " << r.jump_budget << "), edge jumps " << r.edge_jumps
            << ", certificates " << (r.certificates_ok ? "ok" : "VIOLATED") << "\n";
  return (r.converged && r.certificates_ok) ? 0 : 1;
}

int cmd_montecarlo(const CommonOptions& opt, const std::string& out_dir, int runs,
                   uint64_t seed, double box, double h_override, double t_end_override) {
  SimConfig cfg = resolve_config(opt);
  if (h_override > 0.0) {
    cfg.settings.h = h_override;
  }
  if (t_end_override > 0.0) {
    cfg.settings.t_end = t_end_override;
  }
  MonteCarloSettings mc;
  mc.runs = runs;
  mc.seed = seed;
  mc.box = box;
  const MonteCarloResult res = monte_carlo(cfg, mc);

  const std::filesystem::path dir(out_dir);
  {
    auto out = open_out(dir, "montecarlo.csv");
    write_montecarlo_csv(out, res);
  }
  {
    auto out = open_out(dir, "montecarlo_summary.txt");
    write_montecarlo_summary(out, res);
  }
  write_montecarlo_summary(std::cout, res);
  const bool ok = res.converged_count == static_cast<int>(res.runs.size()) &&
                  res.all_within_budget && res.all_certificates_ok;
  return ok ? 0 : 1;
}

int cmd_oracle(const CommonOptions& opt, const std::string& which) {
  const SimConfig cfg = resolve_config(opt);
  const Scenario sc = build_scenario(cfg);
  if (which == "gradcheck") {
    const auto rep = oracle::gradcheck(sc.weight, sc.params, 500);
    std::cout << "gradcheck: max rel error pose " << fmt_double(rep.max_rel_pose) << ", theta "
              << fmt_double(rep.max_rel_theta) << " on " << rep.samples << " states\n";
    if (!rep.pass) {
      throw OracleFailure("gradient mismatch beyond 1e-5");
    }
  } else if (which == "rank") {
    const auto rep = oracle::rank_probe();
    std::cout << "rank: worst sigma_min/sigma_max " << fmt_double(rep.worst_ratio) << " over "
              << rep.assignments << " pose assignments\n";
    if (!rep.pass) {
      throw OracleFailure("Bbar rank deficiency detected");
    }
  } else if (which == "gap") {
    const auto rep = oracle::gap_probe(sc.weight, sc.params);
    std::cout << "gap: min mu_U " << fmt_double(rep.min_mu) << " vs delta "
              << fmt_double(rep.delta) << ", chain residual "
              << fmt_double(rep.max_chain_residual) << "\n";
    if (!rep.pass) {
      throw OracleFailure("synergy gap or algebraic chain violated");
    }
  } else if (which == "exp") {
    const auto rep = oracle::exp_probe(sc.params);
    std::cout << "exp: max |screw_exp - series| " << fmt_double(rep.max_residual) << " over "
              << rep.samples << " samples\n";
    if (!rep.pass) {
      throw OracleFailure("screw exponential mismatch beyond 1e-9");
    }
  } else {
    throw ConfigError("oracle --which must be gradcheck|rank|gap|exp");
  }
  std::cout << "oracle ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed hybrid feedback for global pose synchronization on SE(3)"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string out_dir = "out";
  std::string which = "gradcheck";
  bool disable_jumps = false;
  int runs = 50;
  uint64_t seed = 1;
  double box = 5.0;
  double h_override = 0.0;
  double t_end_override = 0.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opt.config_path, "JSON config file");
    cmd->add_option("--preset", opt.preset, "named preset (fig2)");
  };
  auto add_integrator = [&](CLI::App* cmd) {
    cmd->add_option("--step", h_override, "integrator step override (s)");
    cmd->add_option("--t-end", t_end_override, "simulation horizon override (s)");
  };

  CLI::App* check = app.add_subcommand("check-params", "report parameter synthesis and gaps");
  add_common(check);

  CLI::App* runcmd = app.add_subcommand("run", "simulate one scenario");
  add_common(runcmd);
  add_integrator(runcmd);
  runcmd->add_option("--out", out_dir, "output directory");
  runcmd->add_flag("--disable-jumps", disable_jumps, "diagnostic: suppress all jumps");

  CLI::App* mccmd = app.add_subcommand("montecarlo", "batch of seeded random runs");
  add_common(mccmd);
  add_integrator(mccmd);
  mccmd->add_option("--out", out_dir, "output directory");
  mccmd->add_option("--runs", runs, "number of runs");
  mccmd->add_option("--seed", seed, "master RNG seed");
  mccmd->add_option("--box", box, "translation box half-width (m)");

  CLI::App* oracle_cmd = app.add_subcommand("oracle", "run a numerical verification");
  add_common(oracle_cmd);
  oracle_cmd->add_option("--which", which, "gradcheck|rank|gap|exp")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) {
      return cmd_check_params(opt);
    }
    if (runcmd->parsed()) {
      return cmd_run(opt, out_dir, disable_jumps, h_override, t_end_override);
    }
    if (mccmd->parsed()) {
      return cmd_montecarlo(opt, out_dir, runs, seed, box, h_override, t_end_override);
    }
    if (oracle_cmd->parsed()) {
      return cmd_oracle(opt, which);
    }
  } catch (const CertificateViolation& e) {
    std::cerr << "certificate violation: " << e.what() << "\n";
    return 2;
  } catch (const NumericalDivergence& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return 3;
  } catch (const OracleFailure& e) {
    std::cerr << "oracle failure: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
