#pragma once

#include <armadillo>
#include <string>
#include <variant>
#include <vector>

namespace npqr {

// Cubic-by-default B-spline on a strictly increasing breakpoint sequence.
// The basis dimension is (#breakpoints + degree - 1).
struct BSplineSpec {
  int degree = 3;
  arma::vec breakpoints;
};

// Polynomial basis orthonormalized over a sample of the treatment variable.
// Columns are stored as explicit coefficient vectors in powers of the
// centered/scaled variable u = (w - center) / scale, so derivatives are
// analytic. Column j of the basis is sum_k coef(k, j) * u^k.
struct PolynomialSpec {
  int degree = 1;
  double center = 0.0;
  double scale = 1.0;
  double lo = 0.0;   // observed sample range; evaluation domain
  double hi = 0.0;
  arma::mat coef;    // (degree+1) x degree
};

// Fourier basis: constant then sine/cosine pairs, orthonormal over one
// period. nbasis must be odd.
struct FourierSpec {
  int nbasis = 3;
  double period = 1.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Fully saturated indicator basis: one column per distinct treatment value.
struct IndicatorSpec {
  arma::vec levels;  // sorted, distinct
};

using BasisSpec = std::variant<BSplineSpec, PolynomialSpec, FourierSpec, IndicatorSpec>;

/// Number of basis columns m_w.
int basis_dim(const BasisSpec& spec);

/// Evaluation domain [lo, hi]. Indicator bases admit only their exact levels.
std::pair<double, double> basis_domain(const BasisSpec& spec);

/// Highest derivative order the basis supports (2, or 0 for indicators).
int basis_max_deriv(const BasisSpec& spec);

/// Evaluate Z(w) (deriv = 0) or d^k Z(w)/dw^k (deriv = 1, 2).
/// Throws numeric_error if w is outside the domain or deriv is unsupported.
arma::vec eval_basis(const BasisSpec& spec, double w, int deriv = 0);

/// Rows are eval_basis at each entry of w (all with the same deriv).
arma::mat eval_basis_matrix(const BasisSpec& spec, const arma::vec& w, int deriv = 0);

/// Column labels for design matrices and reports.
std::vector<std::string> basis_col_names(const BasisSpec& spec, const std::string& var);

/// Empirical quantiles of w at probs (order statistics with linear
/// interpolation), deduplicated. Errors if fewer than two distinct values
/// remain.
arma::vec quantile_breakpoints(const arma::vec& w_values, const arma::vec& probs);

/// Scalar empirical quantile, same interpolation convention.
double empirical_quantile(const arma::vec& sorted_values, double prob);

/// Orthonormal polynomial basis of the given degree fitted to the sample:
/// columns are mean-zero, unit-norm, mutually orthogonal over w_values.
PolynomialSpec fit_polynomial_basis(const arma::vec& w_values, int degree);

/// Indicator basis over the distinct values of w.
IndicatorSpec fit_indicator_basis(const arma::vec& w_values);

// Quantile-index grid. All entries strictly inside (0,1), strictly
// increasing. print_taus is the reporting subset; entries not on the grid
// are snapped to the nearest grid point (the caller sees a warning flag).
class TauGrid {
 public:
  TauGrid(arma::vec taus, arma::vec print_taus);
  explicit TauGrid(arma::vec taus);

  const arma::vec& taus() const { return taus_; }
  const arma::uvec& print_index() const { return print_index_; }
  bool print_snapped() const { return print_snapped_; }
  arma::uword size() const { return taus_.n_elem; }

 private:
  arma::vec taus_;
  arma::uvec print_index_;
  bool print_snapped_ = false;
};

}  // namespace npqr
