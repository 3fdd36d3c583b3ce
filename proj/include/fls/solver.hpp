#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fls/core.hpp"

namespace fls {

/// Dense nonlinear least squares: minimize sum_i r_i(x)^2.
///
/// The state may live on a manifold: `plus(x, delta)` moves the state by a
/// tangent step of length num_params, and jacobian_fn returns derivatives
/// with respect to that step at delta = 0. When `plus` is empty the state is
/// a plain vector of length num_params and plus is x + delta.
struct LeastSquaresProblem {
  int num_params = 0;
  int num_residuals = 0;
  std::function<Vector(const Vector& state)> residual_fn;
  std::function<Matrix(const Vector& state)> jacobian_fn;
  std::function<Vector(const Vector& state, const Vector& delta)> plus;

  Vector apply_step(const Vector& state, const Vector& delta) const {
    return plus ? plus(state, delta) : Vector(state + delta);
  }
};

struct SolverOptions {
  int max_iterations = 100;
  double initial_damping = 1e-4;
  double damping_increase = 10.0;
  double damping_decrease = 0.5;
  double cost_tolerance = 1e-10;
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-12;
  /// Run a finite-difference Jacobian audit at the initial state; a failed
  /// audit stops the solve with Termination::kFailure before any step.
  bool audit_jacobian = false;

  void validate() const;
};

struct SolverReport {
  int iterations = 0;
  Termination termination = Termination::kMaxIterations;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<double> cost_history;  // one entry per accepted state, starting with x0
  std::string message;

  bool converged() const {
    return termination != Termination::kMaxIterations && termination != Termination::kFailure;
  }
};

struct SolveResult {
  Vector state;
  SolverReport report;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling. Throws kNonFinite if
/// the residual or Jacobian is not finite at x0; a normal-equation failure at
/// maximum damping is reported as Termination::kFailure.
SolveResult solve(const LeastSquaresProblem& problem, const Vector& x0, const SolverOptions& options = {});

struct JacobianAudit {
  bool passed = true;
  double max_relative_error = 0.0;
  int worst_row = -1;
  int worst_col = -1;
};

/// Compares jacobian_fn against central differences of residual_fn taken
/// through `plus`. Entries whose magnitude (analytic and numeric) is at most
/// `magnitude_floor` are skipped.
JacobianAudit audit_jacobian(const LeastSquaresProblem& problem, const Vector& state, double step = 1e-6,
                             double relative_tolerance = 1e-4, double magnitude_floor = 1e-8);

}  // namespace fls
