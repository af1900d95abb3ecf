#pragma once

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "posesync/hybrid.hpp"

namespace posesync {

/// Floating-point text form with 17 significant digits (round-trip exact).
inline std::string fmt_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

/// trace.csv: t, j, theta_k, muU_k, U_k, rotErr_k, posErr_k per edge,
/// omega/v per agent, then Vbar, Ubar, kinetic. Indices are 1-based in
/// the header.
inline void write_trace_csv(std::ostream& os, const Trace& trace, int n_agents, int n_edges) {
  os << "t,j";
  auto edge_group = [&](const std::string& name) {
    for (int k = 1; k <= n_edges; ++k) {
      os << "," << name << "_" << k;
    }
  };
  edge_group("theta");
  edge_group("muU");
  edge_group("U");
  edge_group("rotErr");
  edge_group("posErr");
  for (int i = 1; i <= n_agents; ++i) {
    for (const char* c : {"x", "y", "z"}) {
      os << ",omega_" << i << c;
    }
    for (const char* c : {"x", "y", "z"}) {
      os << ",v_" << i << c;
    }
  }
  os << ",Vbar,Ubar,kinetic\n";
  for (const TraceRecord& r : trace) {
    os << fmt_double(r.t) << "," << r.j;
    for (const auto* group : {&r.theta, &r.mu, &r.U, &r.rot_err, &r.pos_err, &r.twists}) {
      for (double x : *group) {
        os << "," << fmt_double(x);
      }
    }
    os << "," << fmt_double(r.Vbar) << "," << fmt_double(r.Ubar) << "," << fmt_double(r.kinetic)
       << "\n";
  }
}

/// events.csv: one row per (event, jumped edge); edge ids are 1-based.
inline void write_events_csv(std::ostream& os, const std::vector<HybridEvent>& events) {
  os << "t,j,edge,theta_before,theta_after,Vbar_before,Vbar_after\n";
  for (const HybridEvent& ev : events) {
    for (std::size_t m = 0; m < ev.edges_jumped.size(); ++m) {
      os << fmt_double(ev.time) << "," << ev.jump_index << "," << ev.edges_jumped[m] + 1 << ","
         << fmt_double(ev.theta_before[m]) << "," << fmt_double(ev.theta_after[m]) << ","
         << fmt_double(ev.Vbar_before) << "," << fmt_double(ev.Vbar_after) << "\n";
    }
  }
}

/// summary.txt: final errors, jump accounting, certificate status.
inline void write_summary(std::ostream& os, const RunResult& r) {
  const TraceRecord& last = r.trace.back();
  double max_rot = 0.0, max_pos = 0.0, max_theta = 0.0;
  for (std::size_t k = 0; k < last.rot_err.size(); ++k) {
    max_rot = std::max(max_rot, last.rot_err[k]);
    max_pos = std::max(max_pos, last.pos_err[k]);
    max_theta = std::max(max_theta, std::abs(last.theta[k]));
  }
  double max_twist = 0.0;
  for (std::size_t i = 0; i + 5 < last.twists.size(); i += 6) {
    double nsq = 0.0;
    for (std::size_t c = 0; c < 6; ++c) {
      nsq += last.twists[i + c] * last.twists[i + c];
    }
    max_twist = std::max(max_twist, std::sqrt(nsq));
  }
  os << "t_final " << fmt_double(last.t) << "\n"
     << "converged " << (r.converged ? 1 : 0) << "\n"
     << "jump_events " << r.jump_events << "\n"
     << "edge_jumps " << r.edge_jumps << "\n"
     << "jump_budget " << r.jump_budget << "\n"
     << "vbar_initial " << fmt_double(r.vbar_initial) << "\n"
     << "vbar_final " << fmt_double(last.Vbar) << "\n"
     << "max_rot_err " << fmt_double(max_rot) << "\n"
     << "max_pos_err " << fmt_double(max_pos) << "\n"
     << "max_abs_theta " << fmt_double(max_theta) << "\n"
     << "max_twist_norm " << fmt_double(max_twist) << "\n"
     << "min_jump_margin "
     << (r.events.empty() ? "nan" : fmt_double(r.min_jump_margin)) << "\n"
     << "max_consistency_drift " << fmt_double(r.max_consistency_drift) << "\n"
     << "certificates_ok " << (r.certificates_ok ? 1 : 0) << "\n"
     << "wall_seconds " << fmt_double(r.wall_seconds) << "\n";
  for (const std::string& note : r.certificate_notes) {
    os << "certificate_note " << note << "\n";
  }
}

}  // namespace posesync
