#pragma once

#include <armadillo>
#include <optional>

#include "npqr/basis.hpp"
#include "npqr/dataio.hpp"

namespace npqr {

struct QrOptions {
  double step_factor = 0.9995;  // fraction-to-boundary
  double rel_tol = 1e-8;        // duality gap <= rel_tol * (1 + |objective|)
  int max_iter = 200;
  bool warm_start = true;       // chain tau-points in fit_process
  int threads = 1;              // used only when warm_start is false
};

// One weighted check-function problem, optionally with a linear term
// shift'beta added to the objective so that the optimum satisfies
// sum_i w_i Z_i (tau - 1{r_i < 0}) = shift.
struct QrProblem {
  arma::mat design;          // n x m, full column rank
  arma::vec y;
  double tau = 0.5;
  arma::vec weights;         // empty = all ones; must be > 0 otherwise
  arma::vec gradient_shift;  // empty = zero
};

struct QrSolution {
  arma::vec beta;
  arma::vec residuals;  // y - X beta (unweighted data)
  double objective = 0.0;
  int iterations = 0;
  double duality_gap = 0.0;
  arma::vec dual;       // LP box variables in [0,1], length n
};

// Interior-point state carried between tau-points for warm starts.
struct QrWarmState {
  arma::vec x;
  arma::vec y;
  bool valid = false;
};

struct QrProcessFit {
  TauGrid taus;
  arma::mat betas;        // m x |taus|
  arma::ivec iterations;  // per tau
  arma::vec gaps;
  arma::vec objectives;

  arma::vec residuals_at(const arma::mat& design, const arma::vec& y, arma::uword t) const {
    return y - design * betas.col(t);
  }
};

/// Weighted check-function objective sum w rho_tau(y - X beta) + shift'beta.
double check_objective(const arma::mat& X, const arma::vec& y, double tau,
                       const arma::vec& beta, const arma::vec& weights = {},
                       const arma::vec& shift = {});

/// Frisch-Newton primal-dual interior point on the LP dual of the weighted
/// check-function problem. Throws numeric_error on non-convergence (the
/// message carries the duality gap) and on factorization failure.
QrSolution fit_qr(const QrProblem& problem, const QrOptions& opt = {},
                  const QrWarmState* warm_in = nullptr, QrWarmState* warm_out = nullptr);

/// Solve the whole tau-grid. Ascending order, each point warm-started from
/// the previous one unless opt.warm_start is false (in which case tau-points
/// are independent and may run in parallel).
QrProcessFit fit_process(const arma::mat& design, const arma::vec& y, const TauGrid& taus,
                         const arma::vec& weights = {}, const arma::mat& shifts = {},
                         const QrOptions& opt = {});

/// Test oracle for small instances (n <= 30, m <= 4): enumerate all size-m
/// row subsets, solve the interpolation system, keep the best objective.
QrSolution brute_force_qr(const arma::mat& design, const arma::vec& y, double tau);

/// Smallest attainable sup-norm of the optimality condition
/// sum_i w_i Z_i c_i - shift, with c_i pinned to tau / tau-1 for residuals
/// beyond zero_tol and free in [tau-1, tau] on the zero set. When the LP
/// dual vector is available it pins the zero-set values exactly; otherwise
/// a projected-gradient bound is returned.
double subgradient_infnorm(const arma::mat& X, const arma::vec& y, double tau,
                           const arma::vec& beta, const arma::vec& weights = {},
                           const arma::vec& shift = {}, const arma::vec* dual = nullptr,
                           double zero_tol = -1.0);

/// Weighted quantile-count property: sum of weights with r < -ztol
/// <= tau * (total weight) <= sum of weights with r <= ztol.
bool quantile_count_ok(const arma::vec& residuals, double tau,
                       const arma::vec& weights = {}, double zero_tol = -1.0);

}  // namespace npqr
