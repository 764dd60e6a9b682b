#ifndef RKBS_ADMM_HPP
#define RKBS_ADMM_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rkbs/data.hpp"
#include "rkbs/losses.hpp"
#include "rkbs/tensor.hpp"

namespace rkbs {

struct SolverConfig {
  double lambda = 0.04;
  double beta = 0.1;
  int m = 1;
  double eps1 = 1e-10;  // Newton step length
  double eps2 = 1e-6;   // primal residual
  int max_outer = 200;
  int max_newton = 50;
  int restarts = 20;
  std::uint64_t seed = 0;
  double init_lo = -1.0;
  double init_hi = 1.0;

  // Throws ConfigError on any out-of-range field.
  void validate() const;
};

struct TraceRecord {
  int k = 0;
  double lagrangian = 0.0;
  double primal_residual = 0.0;
  double psi_increment = 0.0;
  int newton_iters = 0;
  double objective = 0.0;
};

struct SolveResult {
  Eigen::VectorXd c_star;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<TraceRecord> trace;
  int restart_index = 0;
};

struct NewtonResult {
  Eigen::VectorXd c;
  int newton_iters = 0;
  double grad_norm = 0.0;
};

// 2m lambda / ((2m - 1) beta): the identity shift of the c-subproblem Hessian.
double newton_shift(const SolverConfig& config);

// 2m lambda / (2m - 1): the multiplier factor gamma = factor * c.
double multiplier_factor(double lambda, int m);

/// alpha_i = prox of L(y_i, .)/N + (beta/2)(. - e_i)^2 with
/// e = A c^{2m-1} - gamma / beta, coordinatewise.
Eigen::VectorXd alpha_step(const TensorHandle& t, const Eigen::VectorXd& c, const Eigen::VectorXd& gamma,
                           const LossSpec& loss, const Dataset& data, double beta);

// grad H(c) = A c^{2m-1} + shift * c - r.
Eigen::VectorXd newton_gradient(const TensorHandle& t, const Eigen::VectorXd& c, const Eigen::VectorXd& r,
                                double shift);

// Solves (A c^{2m-2} (2m-1) + shift I) d = rhs. Uses the M x M capacitance
// system when t.low_rank(), an N x N Cholesky factorization otherwise.
Eigen::VectorXd newton_direction(const TensorHandle& t, const Eigen::VectorXd& c, double shift,
                                 const Eigen::VectorXd& rhs);
Eigen::VectorXd newton_direction_dense(const TensorHandle& t, const Eigen::VectorXd& c, double shift,
                                       const Eigen::VectorXd& rhs);
Eigen::VectorXd newton_direction_low_rank(const TensorHandle& t, const Eigen::VectorXd& c, double shift,
                                          const Eigen::VectorXd& rhs);

/// Newton's method on the strictly convex
///   H(c) = A c^{2m}/(2m) + (shift/2)|c|^2 - r^T c,  r = alpha + gamma/beta,
/// warm-started at c_start. A step is halved (at most 30 times) until |grad H|
/// decreases; iteration stops when the Newton direction is shorter than eps1.
/// For m = 1, H is quadratic and exactly one step is taken.
NewtonResult newton_c_step(const TensorHandle& t, const Eigen::VectorXd& alpha, const Eigen::VectorXd& gamma,
                           const SolverConfig& config, const Eigen::VectorXd& c_start);

Eigen::VectorXd gamma_step(const Eigen::VectorXd& c, double lambda, int m);

// G(c) + (beta/2) |alpha - A c^{2m-1} + gamma/beta|^2, the c-subproblem objective.
double c_subproblem_value(const TensorHandle& t, const Eigen::VectorXd& alpha, const Eigen::VectorXd& gamma,
                          const Eigen::VectorXd& c, double beta, double lambda);

// (sum_n |Phi_n^T (c_next - c_prev)|^{2m})^{1/(2m)}
double psi_increment(const TensorHandle& t, const Eigen::VectorXd& c_prev, const Eigen::VectorXd& c_next);

/// Runs the splitting iteration from c0 (alpha0 = A c0^{2m-1},
/// gamma0 = multiplier_factor * c0) until the primal residual drops below
/// eps2 or max_outer iterations have run. Throws SolverError if the residual
/// exceeds 1e8 or any iterate becomes non-finite.
SolveResult solve(const TensorHandle& t, const LossSpec& loss, const Dataset& data, const SolverConfig& config,
                  const Eigen::VectorXd& c0);

// Initial coefficients for restart j: uniform on [init_lo, init_hi]^N from seed ^ j.
Eigen::VectorXd restart_initial_point(const SolverConfig& config, std::size_t N, int restart);

/// Runs config.restarts independent solves (concurrently when OpenMP has
/// threads) and keeps the lowest objective, ties to the lowest restart index.
/// Diverged restarts are skipped; throws SolverError if all of them diverge.
SolveResult multi_start_solve(const TensorHandle& t, const LossSpec& loss, const Dataset& data,
                              const SolverConfig& config);

struct DescentReport {
  // Index from which the Lagrangian trace is nonincreasing.
  std::size_t monotone_from = 0;
  // Every k with L[k] > L[k-1] + 1e-8 (1 + |L[k-1]|).
  std::vector<std::size_t> violations;
};

DescentReport descent_audit(std::span<const double> lagrangian);
DescentReport descent_audit(std::span<const TraceRecord> trace);

// k,lagrangian,primal_residual,psi_increment,newton_iters,objective
void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace);

}  // namespace rkbs

#endif  // RKBS_ADMM_HPP
