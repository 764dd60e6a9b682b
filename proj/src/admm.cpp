#include "rkbs/admm.hpp"

#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "rkbs/error.hpp"

namespace rkbs {

void SolverConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(lambda)) throw ConfigError("lambda must be > 0");
  if (!positive(beta)) throw ConfigError("beta must be > 0");
  if (m < 1) throw ConfigError("m must be >= 1");
  if (!positive(eps1) || !positive(eps2)) throw ConfigError("tolerances eps1 and eps2 must be > 0");
  if (max_outer < 1) throw ConfigError("max_outer must be >= 1");
  if (max_newton < 1) throw ConfigError("max_newton must be >= 1");
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  if (!(init_lo < init_hi)) throw ConfigError("init box needs lo < hi");
}

double newton_shift(const SolverConfig& config) {
  const double two_m = 2.0 * config.m;
  return two_m * config.lambda / ((two_m - 1.0) * config.beta);
}

double multiplier_factor(double lambda, int m) {
  const double two_m = 2.0 * m;
  return two_m * lambda / (two_m - 1.0);
}

Eigen::VectorXd alpha_step(const TensorHandle& t, const Eigen::VectorXd& c, const Eigen::VectorXd& gamma,
                           const LossSpec& loss, const Dataset& data, double beta) {
  if (data.size() != t.N() || static_cast<std::size_t>(gamma.size()) != t.N())
    throw DimensionError("alpha_step: dimension mismatch");
  const Eigen::VectorXd v = contract_2m_minus_1(t, c);
  const int N = static_cast<int>(t.N());
  Eigen::VectorXd alpha(N);
  for (int i = 0; i < N; ++i) alpha(i) = prox_step(loss, data.labels[static_cast<std::size_t>(i)], v(i) - gamma(i) / beta, beta, N);
  return alpha;
}

Eigen::VectorXd newton_gradient(const TensorHandle& t, const Eigen::VectorXd& c, const Eigen::VectorXd& r,
                                double shift) {
  return contract_2m_minus_1(t, c) + shift * c - r;
}

Eigen::VectorXd newton_direction_dense(const TensorHandle& t, const Eigen::VectorXd& c, double shift,
                                       const Eigen::VectorXd& rhs) {
  Eigen::MatrixXd hessian = static_cast<double>(2 * t.m() - 1) * contract_2m_minus_2(t, c);
  hessian.diagonal().array() += shift;
  Eigen::LLT<Eigen::MatrixXd> llt(hessian);
  if (llt.info() != Eigen::Success) throw SolverError("Newton step: Hessian is not numerically positive definite");
  return llt.solve(rhs);
}

Eigen::VectorXd newton_direction_low_rank(const TensorHandle& t, const Eigen::VectorXd& c, double shift,
                                          const Eigen::VectorXd& rhs) {
  // Hessian = shift I + W^T W with W = diag(s) B, s_n^2 = (2m-1) u_n^{2m-2}.
  // (shift I + W^T W)^{-1} = (I - W^T (shift I + W W^T)^{-1} W) / shift.
  const Eigen::VectorXd u = project(t, c);
  const double scale = std::sqrt(static_cast<double>(2 * t.m() - 1));
  Eigen::VectorXd s(u.size());
  for (Eigen::Index n = 0; n < u.size(); ++n) s(n) = scale * int_pow(std::abs(u(n)), t.m() - 1);
  Eigen::MatrixXd local_gram;
  if (!t.low_rank()) local_gram = t.B() * t.B().transpose();
  const Eigen::MatrixXd& gram = t.low_rank() ? t.row_gram() : local_gram;
  Eigen::MatrixXd capacitance = s.asDiagonal() * gram * s.asDiagonal();
  capacitance.diagonal().array() += shift;
  Eigen::LLT<Eigen::MatrixXd> llt(capacitance);
  if (llt.info() != Eigen::Success) throw SolverError("Newton step: capacitance matrix is not positive definite");
  const Eigen::VectorXd w_rhs = s.cwiseProduct(t.B() * rhs);
  const Eigen::VectorXd inner = s.cwiseProduct(llt.solve(w_rhs));
  return (rhs - t.B().transpose() * inner) / shift;
}

Eigen::VectorXd newton_direction(const TensorHandle& t, const Eigen::VectorXd& c, double shift,
                                 const Eigen::VectorXd& rhs) {
  return t.low_rank() ? newton_direction_low_rank(t, c, shift, rhs) : newton_direction_dense(t, c, shift, rhs);
}

NewtonResult newton_c_step(const TensorHandle& t, const Eigen::VectorXd& alpha, const Eigen::VectorXd& gamma,
                           const SolverConfig& config, const Eigen::VectorXd& c_start) {
  if (static_cast<std::size_t>(c_start.size()) != t.N() || static_cast<std::size_t>(alpha.size()) != t.N() ||
      static_cast<std::size_t>(gamma.size()) != t.N())
    throw DimensionError("newton_c_step: dimension mismatch");
  const double shift = newton_shift(config);
  const Eigen::VectorXd r = alpha + gamma / config.beta;

  NewtonResult result{c_start, 0, 0.0};
  Eigen::VectorXd grad = newton_gradient(t, result.c, r, shift);
  double grad_norm = grad.norm();

  for (int j = 0; j < config.max_newton && grad_norm > 0.0; ++j) {
    const Eigen::VectorXd d = newton_direction(t, result.c, shift, -grad);
    if (!d.allFinite()) throw SolverError("Newton step: non-finite direction");
    ++result.newton_iters;

    bool accepted = false;
    double step = 1.0;
    for (int halving = 0; halving <= 30; ++halving, step *= 0.5) {
      Eigen::VectorXd trial = result.c + step * d;
      Eigen::VectorXd trial_grad = newton_gradient(t, trial, r, shift);
      const double trial_norm = trial_grad.norm();
      if (trial_norm < grad_norm) {
        result.c = std::move(trial);
        grad = std::move(trial_grad);
        grad_norm = trial_norm;
        accepted = true;
        break;
      }
    }
    // No decrease along d: the gradient is at its rounding floor.
    if (!accepted) break;
    if (t.m() == 1) break;  // quadratic H: the full step is exact
    if (d.norm() < config.eps1) break;
  }
  result.grad_norm = grad_norm;
  return result;
}

Eigen::VectorXd gamma_step(const Eigen::VectorXd& c, double lambda, int m) {
  return multiplier_factor(lambda, m) * c;
}

double c_subproblem_value(const TensorHandle& t, const Eigen::VectorXd& alpha, const Eigen::VectorXd& gamma,
                          const Eigen::VectorXd& c, double beta, double lambda) {
  const Eigen::VectorXd shifted = alpha - contract_2m_minus_1(t, c) + gamma / beta;
  return lambda * contract_full(t, c) + 0.5 * beta * shifted.squaredNorm();
}

double psi_increment(const TensorHandle& t, const Eigen::VectorXd& c_prev, const Eigen::VectorXd& c_next) {
  const Eigen::VectorXd u = project(t, c_next - c_prev);
  const int p = 2 * t.m();
  double sum = 0.0;
  for (Eigen::Index n = 0; n < u.size(); ++n) sum += int_pow(std::abs(u(n)), p);
  return std::pow(sum, 1.0 / p);
}

SolveResult solve(const TensorHandle& t, const LossSpec& loss, const Dataset& data, const SolverConfig& config,
                  const Eigen::VectorXd& c0) {
  config.validate();
  if (config.m != t.m()) throw ConfigError("solver m differs from the tensor handle's m");
  if (static_cast<std::size_t>(c0.size()) != t.N() || data.size() != t.N())
    throw DimensionError("solve: initial point or dataset does not match the feature matrix");

  SolveResult result;
  Eigen::VectorXd c = c0;
  Eigen::VectorXd gamma = gamma_step(c, config.lambda, config.m);
  Eigen::VectorXd alpha = contract_2m_minus_1(t, c);
  result.trace.reserve(static_cast<std::size_t>(config.max_outer));

  for (int k = 0; k < config.max_outer; ++k) {
    alpha = alpha_step(t, c, gamma, loss, data, config.beta);
    NewtonResult newton = newton_c_step(t, alpha, gamma, config, c);
    const double psi = psi_increment(t, c, newton.c);
    c = std::move(newton.c);
    gamma = gamma_step(c, config.lambda, config.m);

    TraceRecord rec;
    rec.k = k;
    rec.primal_residual = (alpha - contract_2m_minus_1(t, c)).norm();
    rec.lagrangian = augmented_lagrangian(t, alpha, c, gamma, config.beta, loss, data, config.lambda);
    rec.psi_increment = psi;
    rec.newton_iters = newton.newton_iters;
    rec.objective = objective_value(t, c, loss, data, config.lambda);
    result.trace.push_back(rec);
    result.iterations = k + 1;

    if (!std::isfinite(rec.lagrangian) || !std::isfinite(rec.primal_residual) || !c.allFinite()) {
      std::ostringstream msg;
      msg << "solver produced a non-finite iterate at outer iteration " << k;
      throw SolverError(msg.str());
    }
    if (rec.primal_residual > 1e8) {
      std::ostringstream msg;
      msg << "solver diverged: primal residual " << rec.primal_residual << " at outer iteration " << k;
      throw SolverError(msg.str());
    }
    if (rec.primal_residual < config.eps2) {
      result.converged = true;
      break;
    }
  }
  result.c_star = c;
  result.objective = objective_value(t, c, loss, data, config.lambda);
  return result;
}

Eigen::VectorXd restart_initial_point(const SolverConfig& config, std::size_t N, int restart) {
  UniformSource source(config.seed ^ static_cast<std::uint64_t>(restart));
  Eigen::VectorXd c0(static_cast<Eigen::Index>(N));
  for (Eigen::Index i = 0; i < c0.size(); ++i) c0(i) = source.next(config.init_lo, config.init_hi);
  return c0;
}

SolveResult multi_start_solve(const TensorHandle& t, const LossSpec& loss, const Dataset& data,
                              const SolverConfig& config) {
  config.validate();
  const int restarts = config.restarts;
  std::vector<SolveResult> results(static_cast<std::size_t>(restarts));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(restarts));

#pragma omp parallel for schedule(dynamic, 1)
  for (int j = 0; j < restarts; ++j) {
    try {
      results[static_cast<std::size_t>(j)] = solve(t, loss, data, config, restart_initial_point(config, t.N(), j));
      results[static_cast<std::size_t>(j)].restart_index = j;
    } catch (...) {
      failures[static_cast<std::size_t>(j)] = std::current_exception();
    }
  }

  int best = -1;
  for (int j = 0; j < restarts; ++j) {
    const auto& failure = failures[static_cast<std::size_t>(j)];
    if (failure) {
      // Configuration and dimension problems are not restart-specific.
      try {
        std::rethrow_exception(failure);
      } catch (const SolverError&) {
        continue;
      }
    }
    if (best < 0 || results[static_cast<std::size_t>(j)].objective < results[static_cast<std::size_t>(best)].objective)
      best = j;
  }
  if (best < 0) std::rethrow_exception(failures.front());
  return std::move(results[static_cast<std::size_t>(best)]);
}

DescentReport descent_audit(std::span<const double> lagrangian) {
  DescentReport report;
  for (std::size_t k = 1; k < lagrangian.size(); ++k) {
    const double prev = lagrangian[k - 1];
    if (lagrangian[k] > prev + 1e-8 * (1.0 + std::abs(prev))) {
      report.violations.push_back(k);
      report.monotone_from = k;
    }
  }
  return report;
}

DescentReport descent_audit(std::span<const TraceRecord> trace) {
  std::vector<double> values;
  values.reserve(trace.size());
  for (const auto& rec : trace) values.push_back(rec.lagrangian);
  return descent_audit(values);
}

void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace) {
  const auto old_precision = out.precision();
  out << "k,lagrangian,primal_residual,psi_increment,newton_iters,objective\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& rec : trace)
    out << rec.k << ',' << rec.lagrangian << ',' << rec.primal_residual << ',' << rec.psi_increment << ','
        << rec.newton_iters << ',' << rec.objective << '\n';
  out.precision(old_precision);
}

}  // namespace rkbs
