#include "fls/solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace fls {

namespace {

constexpr double kMaxDamping = 1e32;
constexpr double kMinDamping = 1e-32;

double sum_sq(const Vector& r) { return r.squaredNorm(); }

}  // namespace

void SolverOptions::validate() const {
  if (max_iterations <= 0 || !(initial_damping > 0) || !(damping_increase > 1) || !(damping_decrease > 0) ||
      !(damping_decrease < 1) || !(cost_tolerance > 0) || !(gradient_tolerance > 0) || !(step_tolerance > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "solver options must be positive (increase > 1 > decrease)");
  }
}

SolveResult solve(const LeastSquaresProblem& problem, const Vector& x0, const SolverOptions& options) {
  options.validate();
  if (!problem.residual_fn || !problem.jacobian_fn || problem.num_params <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "solve: problem needs residual and Jacobian functions");
  }
  if (!problem.plus && x0.size() != problem.num_params) {
    throw Error(ErrorCode::kDimensionMismatch, "solve: x0 length differs from num_params");
  }

  SolveResult out{x0, {}};
  SolverReport& rep = out.report;
  Vector r = problem.residual_fn(x0);
  if (r.size() != problem.num_residuals) {
    throw Error(ErrorCode::kDimensionMismatch, "solve: residual length differs from num_residuals");
  }
  if (!r.allFinite()) throw Error(ErrorCode::kNonFinite, "solve: residual is not finite at x0");
  double cost = sum_sq(r);
  rep.initial_cost = cost;
  rep.cost_history.push_back(cost);

  if (options.audit_jacobian) {
    const JacobianAudit audit = audit_jacobian(problem, x0);
    if (!audit.passed) {
      rep.termination = Termination::kFailure;
      rep.final_cost = cost;
      rep.message = "Jacobian audit failed: relative error " + std::to_string(audit.max_relative_error) +
                    " at (" + std::to_string(audit.worst_row) + ", " + std::to_string(audit.worst_col) + ")";
      return out;
    }
  }

  if (cost == 0.0) {
    rep.termination = Termination::kZeroResidual;
    rep.final_cost = 0.0;
    return out;
  }

  Vector& x = out.state;
  double mu = options.initial_damping;
  bool done = false;
  for (int iter = 1; iter <= options.max_iterations && !done; ++iter) {
    rep.iterations = iter;
    const Matrix jac = problem.jacobian_fn(x);
    if (jac.rows() != problem.num_residuals || jac.cols() != problem.num_params) {
      throw Error(ErrorCode::kDimensionMismatch, "solve: Jacobian has the wrong shape");
    }
    if (!jac.allFinite()) {
      if (iter == 1) throw Error(ErrorCode::kNonFinite, "solve: Jacobian is not finite at x0");
      rep.termination = Termination::kFailure;
      rep.message = "Jacobian became non-finite";
      break;
    }
    const Vector grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      rep.termination = Termination::kGradientTolerance;
      break;
    }
    const Matrix jtj = jac.transpose() * jac;
    const double max_diag = std::max(jtj.diagonal().maxCoeff(), 1e-300);
    const Vector scaling = jtj.diagonal().cwiseMax(1e-12 * max_diag);

    while (true) {
      Matrix lhs = jtj;
      lhs.diagonal() += mu * scaling;
      Eigen::LLT<Matrix> llt(lhs);
      if (llt.info() != Eigen::Success) {
        mu *= options.damping_increase;
        if (mu > kMaxDamping) {
          rep.termination = Termination::kFailure;
          rep.message = "normal equations not positive definite at maximum damping";
          done = true;
          break;
        }
        continue;
      }
      const Vector delta = llt.solve(-grad);
      if (delta.norm() <= options.step_tolerance * (x.norm() + options.step_tolerance)) {
        rep.termination = Termination::kStepTolerance;
        done = true;
        break;
      }
      Vector x_new = problem.apply_step(x, delta);
      Vector r_new = problem.residual_fn(x_new);
      const double cost_new = r_new.allFinite() ? sum_sq(r_new) : INFINITY;
      if (cost_new < cost) {
        const double relative_decrease = (cost - cost_new) / cost;
        x = std::move(x_new);
        r = std::move(r_new);
        cost = cost_new;
        rep.cost_history.push_back(cost);
        mu = std::max(mu * options.damping_decrease, kMinDamping);
        if (cost == 0.0) {
          rep.termination = Termination::kZeroResidual;
          done = true;
        } else if (relative_decrease <= options.cost_tolerance) {
          rep.termination = Termination::kCostTolerance;
          done = true;
        }
        break;
      }
      mu *= options.damping_increase;
      if (mu > kMaxDamping) {
        // No descent left at any damping: x is stationary to working precision.
        rep.termination = Termination::kStepTolerance;
        done = true;
        break;
      }
    }
  }
  if (!done && rep.termination != Termination::kGradientTolerance && rep.termination != Termination::kFailure) {
    rep.termination = Termination::kMaxIterations;
  }
  rep.final_cost = cost;
  return out;
}

JacobianAudit audit_jacobian(const LeastSquaresProblem& problem, const Vector& state, double step,
                             double relative_tolerance, double magnitude_floor) {
  JacobianAudit audit;
  const Matrix analytic = problem.jacobian_fn(state);
  for (int j = 0; j < problem.num_params; ++j) {
    Vector e = Vector::Zero(problem.num_params);
    e[j] = step;
    const Vector rp = problem.residual_fn(problem.apply_step(state, e));
    const Vector rm = problem.residual_fn(problem.apply_step(state, -e));
    const Vector numeric = (rp - rm) / (2.0 * step);
    for (int i = 0; i < problem.num_residuals; ++i) {
      const double a = analytic(i, j);
      const double n = numeric[i];
      const double mag = std::max(std::abs(a), std::abs(n));
      if (mag <= magnitude_floor) continue;
      const double rel = std::abs(a - n) / mag;
      if (rel > audit.max_relative_error) {
        audit.max_relative_error = rel;
        audit.worst_row = i;
        audit.worst_col = j;
      }
    }
  }
  audit.passed = audit.max_relative_error <= relative_tolerance;
  return audit;
}

}  // namespace fls
