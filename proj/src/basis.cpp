#include "npqr/basis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "npqr/errors.hpp"

namespace npqr {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Padded (clamped) knot vector: degree copies of each boundary breakpoint.
arma::vec clamped_knots(const BSplineSpec& s) {
  const arma::uword nb = s.breakpoints.n_elem;
  const int d = s.degree;
  arma::vec knots(nb + 2 * static_cast<arma::uword>(d));
  for (int i = 0; i < d; ++i) knots(i) = s.breakpoints(0);
  for (arma::uword i = 0; i < nb; ++i) knots(d + i) = s.breakpoints(i);
  for (int i = 0; i < d; ++i) knots(d + nb + i) = s.breakpoints(nb - 1);
  return knots;
}

// Knot span containing u. Half-open spans, closed at the right endpoint.
int find_span(const arma::vec& knots, int degree, int nbasis, double u) {
  const int lo = degree;
  const int hi = nbasis;  // == n_knots - degree - 1
  if (u >= knots(hi)) return hi - 1;
  int low = lo, high = hi;
  while (high - low > 1) {
    const int mid = (low + high) / 2;
    if (u < knots(mid)) high = mid; else low = mid;
  }
  return low;
}

// Nonzero basis functions and their derivatives at u (NURBS-book A2.3).
// Returns (nders+1) x (degree+1); row k holds the k-th derivatives of
// N_{span-degree+j, degree}, j = 0..degree.
arma::mat ders_basis_funs(int span, double u, int degree, int nders,
                          const arma::vec& knots) {
  const int p = degree;
  arma::mat ndu(p + 1, p + 1, arma::fill::zeros);
  arma::vec left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left(j) = u - knots(span + 1 - j);
    right(j) = knots(span + j) - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right(r + 1) + left(j - r);
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right(r + 1) * temp;
      saved = left(j - r) * temp;
    }
    ndu(j, j) = saved;
  }

  arma::mat ders(nders + 1, p + 1, arma::fill::zeros);
  for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);

  arma::mat a(2, p + 1, arma::fill::zeros);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= nders; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      ders(k, r) = d;
      std::swap(s1, s2);
    }
  }

  double factor = p;
  for (int k = 1; k <= nders; ++k) {
    for (int j = 0; j <= p; ++j) ders(k, j) *= factor;
    factor *= (p - k);
  }
  return ders;
}

void check_domain(double w, double lo, double hi, const char* what) {
  if (!(w >= lo && w <= hi)) {
    std::ostringstream os;
    os << what << ": value " << w << " outside basis domain [" << lo << ", " << hi << "]";
    throw numeric_error(os.str());
  }
}

arma::vec eval_bspline(const BSplineSpec& s, double w, int deriv) {
  check_domain(w, s.breakpoints(0), s.breakpoints(s.breakpoints.n_elem - 1), "bspline");
  const int m = basis_dim(BasisSpec{s});
  const arma::vec knots = clamped_knots(s);
  const int span = find_span(knots, s.degree, m, w);
  const arma::mat ders = ders_basis_funs(span, w, s.degree, deriv, knots);
  arma::vec out(m, arma::fill::zeros);
  for (int j = 0; j <= s.degree; ++j) out(span - s.degree + j) = ders(deriv, j);
  return out;
}

arma::vec eval_polynomial(const PolynomialSpec& s, double w, int deriv) {
  check_domain(w, s.lo, s.hi, "polynomial");
  const double u = (w - s.center) / s.scale;
  const int nterm = s.degree + 1;
  arma::vec out(s.degree, arma::fill::zeros);
  // Horner on the derivative-adjusted coefficients, then chain rule.
  const double chain = std::pow(1.0 / s.scale, deriv);
  for (int j = 0; j < s.degree; ++j) {
    double acc = 0.0;
    for (int k = nterm - 1; k >= deriv; --k) {
      double fall = 1.0;
      for (int t = 0; t < deriv; ++t) fall *= (k - t);
      acc = acc * u + s.coef(k, j) * fall;
    }
    out(j) = acc * chain;
  }
  return out;
}

arma::vec eval_fourier(const FourierSpec& s, double w, int deriv) {
  check_domain(w, s.lo, s.hi, "fourier");
  arma::vec out(s.nbasis, arma::fill::zeros);
  const double cnorm = 1.0 / std::sqrt(s.period);
  const double pnorm = std::sqrt(2.0 / s.period);
  out(0) = (deriv == 0) ? cnorm : 0.0;
  const int npairs = (s.nbasis - 1) / 2;
  for (int j = 1; j <= npairs; ++j) {
    const double om = kTwoPi * j / s.period;
    const double a = om * w;
    const double powom = std::pow(om, deriv);
    double sv, cv;
    switch (deriv % 4) {  // d/dw sin -> cos -> -sin -> -cos cycle
      case 0: sv = std::sin(a); cv = std::cos(a); break;
      case 1: sv = std::cos(a); cv = -std::sin(a); break;
      case 2: sv = -std::sin(a); cv = -std::cos(a); break;
      default: sv = -std::cos(a); cv = std::sin(a); break;
    }
    out(2 * j - 1) = pnorm * powom * sv;
    out(2 * j) = pnorm * powom * cv;
  }
  return out;
}

arma::vec eval_indicator(const IndicatorSpec& s, double w, int deriv) {
  if (deriv != 0) throw numeric_error("derivative undefined for indicator basis");
  arma::vec out(s.levels.n_elem, arma::fill::zeros);
  // exact-match lookup; unseen values are an error, not extrapolation
  const double* begin = s.levels.memptr();
  const double* end = begin + s.levels.n_elem;
  const double* it = std::lower_bound(begin, end, w);
  if (it == end || *it != w) {
    std::ostringstream os;
    os << "indicator basis: value " << w << " is not one of the levels";
    throw numeric_error(os.str());
  }
  out(static_cast<arma::uword>(it - begin)) = 1.0;
  return out;
}

}  // namespace

int basis_dim(const BasisSpec& spec) {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BSplineSpec>) {
          return static_cast<int>(s.breakpoints.n_elem) + s.degree - 1;
        } else if constexpr (std::is_same_v<T, PolynomialSpec>) {
          return s.degree;
        } else if constexpr (std::is_same_v<T, FourierSpec>) {
          return s.nbasis;
        } else {
          return static_cast<int>(s.levels.n_elem);
        }
      },
      spec);
}

std::pair<double, double> basis_domain(const BasisSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::pair<double, double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BSplineSpec>) {
          return {s.breakpoints(0), s.breakpoints(s.breakpoints.n_elem - 1)};
        } else if constexpr (std::is_same_v<T, PolynomialSpec>) {
          return {s.lo, s.hi};
        } else if constexpr (std::is_same_v<T, FourierSpec>) {
          return {s.lo, s.hi};
        } else {
          return {s.levels(0), s.levels(s.levels.n_elem - 1)};
        }
      },
      spec);
}

int basis_max_deriv(const BasisSpec& spec) {
  return std::holds_alternative<IndicatorSpec>(spec) ? 0 : 2;
}

arma::vec eval_basis(const BasisSpec& spec, double w, int deriv) {
  if (deriv < 0 || deriv > 2) throw numeric_error("deriv must be 0, 1 or 2");
  return std::visit(
      [&](const auto& s) -> arma::vec {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BSplineSpec>) {
          return eval_bspline(s, w, deriv);
        } else if constexpr (std::is_same_v<T, PolynomialSpec>) {
          return eval_polynomial(s, w, deriv);
        } else if constexpr (std::is_same_v<T, FourierSpec>) {
          return eval_fourier(s, w, deriv);
        } else {
          return eval_indicator(s, w, deriv);
        }
      },
      spec);
}

arma::mat eval_basis_matrix(const BasisSpec& spec, const arma::vec& w, int deriv) {
  arma::mat out(w.n_elem, basis_dim(spec));
  for (arma::uword i = 0; i < w.n_elem; ++i) {
    out.row(i) = eval_basis(spec, w(i), deriv).t();
  }
  return out;
}

std::vector<std::string> basis_col_names(const BasisSpec& spec, const std::string& var) {
  std::vector<std::string> names;
  const int m = basis_dim(spec);
  names.reserve(m);
  if (const auto* ind = std::get_if<IndicatorSpec>(&spec)) {
    for (arma::uword j = 0; j < ind->levels.n_elem; ++j) {
      std::ostringstream os;
      os << var << "=" << ind->levels(j);
      names.push_back(os.str());
    }
    return names;
  }
  for (int j = 1; j <= m; ++j) names.push_back(var + ".z" + std::to_string(j));
  return names;
}

double empirical_quantile(const arma::vec& sorted_values, double prob) {
  const arma::uword n = sorted_values.n_elem;
  if (n == 0) throw numeric_error("quantile of empty vector");
  if (n == 1) return sorted_values(0);
  const double h = (static_cast<double>(n) - 1.0) * prob;
  const double fl = std::floor(h);
  const arma::uword lo = static_cast<arma::uword>(fl);
  if (lo + 1 >= n) return sorted_values(n - 1);
  const double frac = h - fl;
  return sorted_values(lo) + frac * (sorted_values(lo + 1) - sorted_values(lo));
}

arma::vec quantile_breakpoints(const arma::vec& w_values, const arma::vec& probs) {
  if (w_values.n_elem == 0) throw numeric_error("quantile_breakpoints: empty sample");
  for (arma::uword i = 0; i < probs.n_elem; ++i) {
    if (probs(i) < 0.0 || probs(i) > 1.0) {
      throw numeric_error("quantile_breakpoints: probs must lie in [0,1]");
    }
    if (i > 0 && probs(i) <= probs(i - 1)) {
      throw numeric_error("quantile_breakpoints: probs must be strictly increasing");
    }
  }
  arma::vec sorted = arma::sort(w_values);
  if (sorted(0) == sorted(sorted.n_elem - 1)) {
    throw numeric_error("quantile_breakpoints: treatment variable is constant");
  }
  std::vector<double> out;
  out.reserve(probs.n_elem);
  for (arma::uword i = 0; i < probs.n_elem; ++i) {
    const double q = empirical_quantile(sorted, probs(i));
    if (out.empty() || q > out.back()) out.push_back(q);
  }
  if (out.size() < 2) {
    throw numeric_error("quantile_breakpoints: fewer than two distinct breakpoints");
  }
  return arma::vec(out);
}

PolynomialSpec fit_polynomial_basis(const arma::vec& w_values, int degree) {
  if (degree < 1) throw numeric_error("polynomial degree must be >= 1");
  const arma::vec distinct = arma::unique(w_values);
  if (static_cast<arma::uword>(degree) >= distinct.n_elem) {
    throw numeric_error("polynomial degree must be smaller than the number of distinct values");
  }

  PolynomialSpec spec;
  spec.degree = degree;
  spec.center = arma::mean(w_values);
  spec.lo = w_values.min();
  spec.hi = w_values.max();
  spec.scale = std::max(std::abs(spec.lo - spec.center), std::abs(spec.hi - spec.center));

  const arma::uword n = w_values.n_elem;
  const int nterm = degree + 1;
  arma::vec u = (w_values - spec.center) / spec.scale;

  arma::mat V(n, nterm);
  V.col(0).ones();
  for (int k = 1; k < nterm; ++k) V.col(k) = V.col(k - 1) % u;

  // Modified Gram-Schmidt with one re-orthogonalization pass, carried out
  // in parallel on the coefficient matrix so the monomial map stays exact.
  arma::mat C(nterm, nterm, arma::fill::eye);
  for (int j = 0; j < nterm; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < j; ++k) {
        const double r = arma::dot(V.col(k), V.col(j));
        V.col(j) -= r * V.col(k);
        C.col(j) -= r * C.col(k);
      }
    }
    const double nrm = arma::norm(V.col(j));
    if (nrm < 1e-10 * std::sqrt(static_cast<double>(n))) {
      throw numeric_error("polynomial basis is rank deficient at degree " + std::to_string(j));
    }
    V.col(j) /= nrm;
    C.col(j) /= nrm;
  }

  spec.coef = C.cols(1, nterm - 1);  // drop the constant column
  return spec;
}

IndicatorSpec fit_indicator_basis(const arma::vec& w_values) {
  IndicatorSpec spec;
  spec.levels = arma::unique(w_values);
  if (spec.levels.n_elem == 0) throw numeric_error("indicator basis: empty sample");
  return spec;
}

TauGrid::TauGrid(arma::vec taus) : TauGrid(taus, taus) {}

TauGrid::TauGrid(arma::vec taus, arma::vec print_taus) : taus_(std::move(taus)) {
  if (taus_.n_elem == 0) throw config_error("tau grid is empty");
  for (arma::uword i = 0; i < taus_.n_elem; ++i) {
    if (!(taus_(i) > 0.0 && taus_(i) < 1.0)) {
      throw config_error("tau grid entries must lie strictly inside (0,1)");
    }
    if (i > 0 && taus_(i) <= taus_(i - 1)) {
      throw config_error("tau grid must be strictly increasing");
    }
  }
  if (print_taus.n_elem == 0) print_taus = taus_;
  print_index_.set_size(print_taus.n_elem);
  for (arma::uword i = 0; i < print_taus.n_elem; ++i) {
    const arma::uword idx = arma::index_min(arma::abs(taus_ - print_taus(i)));
    print_index_(i) = idx;
    if (taus_(idx) != print_taus(i)) print_snapped_ = true;
  }
}

}  // namespace npqr
