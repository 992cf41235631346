#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhm/accum.hpp"

namespace bhm {

/// Moments X_k = (hi^{k+1} - lo^{k+1}) / (k+1), k = 0..order: integrating
/// sum_k a_k x^k over [lo, hi] gives a . X.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bin_moments(Scalar lo, Scalar hi, int order) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x(order + 1);
  Scalar plo = lo, phi = hi;
  for (int k = 0; k <= order; ++k) {
    x(k) = (phi - plo) / Scalar(k + 1);
    plo *= lo;
    phi *= hi;
  }
  return x;
}

/// Horner evaluation of sum_k c_k u^k.
template <typename Derived>
typename Derived::Scalar polyval(const Eigen::MatrixBase<Derived>& c, typename Derived::Scalar u) {
  typename Derived::Scalar acc(0);
  for (Eigen::Index k = c.size() - 1; k >= 0; --k) acc = acc * u + c(k);
  return acc;
}

/// One polynomial piece on [lo, hi]. Coefficients and their covariance refer
/// to the local coordinate u = (x - center) / halfwidth, u in [-1, 1].
struct SplinePiece {
  double lo = 0.0;
  double hi = 0.0;
  Eigen::VectorXd coeffs;
  Eigen::MatrixXd cov;

  double center() const { return 0.5 * (lo + hi); }
  double halfwidth() const { return 0.5 * (hi - lo); }
  double local(double x) const { return (x - center()) / halfwidth(); }
  /// Local-coordinate moments of [a, b] scaled to x-integrals: row . coeffs = integral.
  Eigen::VectorXd moments(double a, double b, int order) const {
    return halfwidth() * bin_moments(local(a), local(b), order);
  }
};

/// Piecewise polynomial of order m with C^{m-1} joins at the breakpoints.
/// When produced by a fit it also carries the stacked piece coefficients,
/// their (rank n_p + m) covariance, and the selections of each piece.
struct SplineModel {
  int order = 0;
  Domain domain;
  std::vector<SplinePiece> pieces;

  Eigen::VectorXd params;
  Eigen::MatrixXd param_cov;
  std::vector<Eigen::MatrixXd> param_map;

  std::size_t size() const { return pieces.size(); }
  std::vector<double> breakpoints() const;
  std::size_t locate(double x) const;

  double operator()(double x) const;
  double eval_piece(std::size_t j, double x) const;
  /// d-th derivative with respect to x.
  double derivative(double x, int d) const;
  double derivative_piece(std::size_t j, double x, int d) const;
  /// Exact integral of the spline over [a, b] inside the domain.
  double integral(double a, double b) const;
  /// Global-coordinate coefficient of x^m on each piece (m-th derivative / m!).
  std::vector<double> leading_coefficients() const;
  /// Jumps of the leading coefficient across each interior knot.
  std::vector<double> leading_jumps() const;
};

/// Parametrization of an order-m spline on a fixed division by the local
/// coefficients of every piece, stacked. Continuity of value and derivatives
/// 1..m-1 at the knots is imposed by the fit as equality constraints, leaving
/// n_p + m free directions. Keeping each piece in its own coordinates avoids
/// the cancellations a global truncated-power form suffers on fine divisions.
class SplineBasis {
 public:
  SplineBasis(Domain domain, std::vector<double> breakpoints, int order);

  int order() const { return order_; }
  /// Number of stacked coefficients, n_p (m + 1).
  Eigen::Index size() const { return static_cast<Eigen::Index>(pieces_.size()) * (order_ + 1); }
  /// Free directions once continuity holds, n_p + m.
  Eigen::Index free_size() const { return static_cast<Eigen::Index>(pieces_.size()) + order_; }
  std::size_t pieces() const { return pieces_.size(); }
  const Domain& domain() const { return domain_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const SplinePiece& piece(std::size_t j) const { return pieces_[j]; }
  /// (m+1) x size() selection of piece j's coefficients.
  const Eigen::MatrixXd& piece_map(std::size_t j) const { return maps_[j]; }
  std::size_t locate(double x) const;

  /// Linear functional giving the spline integral over [lo, hi]; bins
  /// straddling knots are split into per-piece contributions.
  Eigen::RowVectorXd integral_row(double lo, double hi) const;
  /// Linear functional giving the d-th derivative at x.
  Eigen::RowVectorXd derivative_row(double x, int d) const;
  /// m (n_p - 1) unit-norm rows; the spline is C^{m-1} iff they annihilate it.
  Eigen::MatrixXd continuity_rows() const;
  /// Jump of the leading global-coordinate coefficient across interior knot q.
  Eigen::RowVectorXd jump_row(std::size_t q) const;

  SplineModel model(const Eigen::VectorXd& params, const Eigen::MatrixXd& cov) const;

 private:
  Domain domain_;
  int order_;
  std::vector<double> breaks_;
  std::vector<SplinePiece> pieces_;
  std::vector<Eigen::MatrixXd> maps_;

  Eigen::Index offset(std::size_t j) const { return static_cast<Eigen::Index>(j) * (order_ + 1); }
  Eigen::RowVectorXd local_derivative(std::size_t j, double x, int d) const;
};

struct LevelGoodness {
  int n = 0;
  std::size_t n_tilde = 0;
  double chi2 = 0.0;
  double chi2_over_n = 0.0;

  static LevelGoodness make(int n, std::size_t n_tilde, double chi2) {
    return {n, n_tilde, chi2, n_tilde ? chi2 / static_cast<double>(n_tilde) : 0.0};
  }
  double reduced() const { return chi2_over_n; }
  /// Largest acceptable reduced chi-square, 1 + T sqrt(2 / n~).
  double limit(double threshold) const;
  bool passes(double threshold) const { return n_tilde == 0 || reduced() <= limit(threshold); }
};

struct FitDiagnostics {
  std::vector<LevelGoodness> levels;
  double threshold = 0.0;
  std::size_t pieces = 0;
  bool accepted = false;
  double constraint_lambda = 0.0;
  std::vector<double> knot_weights;
  /// Objective sum_n chi2_n weight_n at the solution (penalty rows excluded).
  double objective = 0.0;
  Eigen::Index rank = 0;
};

struct FitResult {
  SplineModel model;
  FitDiagnostics diagnostics;
};

// BHMSPLINE v1: JSON document with 17-significant-digit reals.
void write_spline(std::ostream& out, const FitResult& fit);
FitResult read_spline(std::istream& in);
void save_spline(const std::string& path, const FitResult& fit);
FitResult load_spline(const std::string& path);

}  // namespace bhm
