#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>

#include "lpvcert/lmi.hpp"

namespace lpvcert::sdp {

enum class SolveStatus { Feasible, Infeasible, Inaccurate, SolverError };

[[nodiscard]] std::string to_string(SolveStatus s);

struct SolverOptions {
  /// Accepted relative violation when re-checking a returned assignment.
  double feas_tol = 1e-8;
  /// Equality residual tolerance.
  double eq_tol = 1e-9;
  /// Relative duality-gap target for objective minimization.
  double gap_tol = 1e-6;
  /// Positive margin (relative to block scale) above which a feasibility
  /// problem is declared Feasible.
  double feas_margin = 1e-9;
  /// Relative eigenvalue tolerance for accepting boundary-supported points
  /// (structurally singular blocks make a zero margin the best achievable).
  /// Kept well below feas_tol so level-set bisection cannot dig into the
  /// infeasible side by a full constraint tolerance.
  double boundary_tol = 1e-10;
  /// Margin at which the search may stop early; the final assignment is
  /// always re-verified independently.
  double accept_margin = 1e-5;
  /// Bound on the decision coordinates in the bounded internal
  /// reformulation; enlarged automatically when it binds.
  double box_radius = 1e4;
  int max_iterations = 120;
  bool verbose = false;
};

struct SolverStats {
  int iterations = 0;
  int phases = 0;
  int box_retries = 0;
  double margin = 0.0;         // best certified feasibility margin (scaled)
  double gap = 0.0;            // final duality gap
  double mu = 0.0;             // final complementarity measure
  double cert_residual = -1.0; // infeasibility-certificate residual, when relevant
  std::string message;
};

struct SdpResult {
  SolveStatus status = SolveStatus::SolverError;
  /// Flat decision coordinates (meaningful for Feasible and Inaccurate).
  Eigen::VectorXd v;
  std::map<std::string, Eigen::MatrixXd> matrices;
  std::map<std::string, double> scalars;
  std::optional<double> objective_value;
  SolverStats stats;

  [[nodiscard]] bool has_assignment() const {
    return status == SolveStatus::Feasible || status == SolveStatus::Inaccurate;
  }
};

/// Decides feasibility of the constraint system by maximizing a uniform
/// margin over all blocks. Feasible and Infeasible are only reported with a
/// verified interior point / separating functional; everything else is
/// Inaccurate.
SdpResult solve_feasibility(const lmi::SdpProblem& problem, const SolverOptions& opts = {});

/// Minimizes the problem's linear objective over the constraint set.
SdpResult minimize(const lmi::SdpProblem& problem, const SolverOptions& opts = {});

/// Independent dense eigenvalue re-check of an assignment against every
/// constraint of the problem (never routed through the solver internals).
struct CheckReport {
  double worst_psd = 0.0;  // most negative eigenvalue, scaled by block size
  double worst_eq = 0.0;   // largest equality residual magnitude
  bool ok = false;
};
CheckReport verify_assignment(const lmi::SdpProblem& problem, const Eigen::VectorXd& v,
                              double feas_tol = 1e-8, double eq_tol = 1e-9);

}  // namespace lpvcert::sdp
