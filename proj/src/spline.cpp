#include "bhm/spline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "format.hpp"

namespace bhm {

namespace {

std::size_t find_piece(const std::vector<double>& breaks, double x) {
  // breaks = {t_0, ..., t_np}; piece j covers [t_j, t_{j+1}), last piece closed.
  const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
  auto j = static_cast<std::size_t>(it - breaks.begin());
  j = j == 0 ? 0 : j - 1;
  return std::min(j, breaks.size() - 2);
}

double falling_factorial(int k, int d) {
  double r = 1.0;
  for (int i = 0; i < d; ++i) r *= k - i;
  return r;
}

}  // namespace

std::vector<double> SplineModel::breakpoints() const {
  std::vector<double> b;
  b.reserve(pieces.size() + 1);
  for (const auto& p : pieces) b.push_back(p.lo);
  if (!pieces.empty()) b.push_back(pieces.back().hi);
  return b;
}

std::size_t SplineModel::locate(double x) const {
  if (pieces.empty()) throw Error("empty spline");
  if (!domain.contains(x)) throw Error("x = " + format_real(x) + " outside the spline domain");
  return find_piece(breakpoints(), x);
}

double SplineModel::eval_piece(std::size_t j, double x) const {
  const auto& p = pieces.at(j);
  return polyval(p.coeffs, p.local(x));
}

double SplineModel::operator()(double x) const { return eval_piece(locate(x), x); }

double SplineModel::derivative_piece(std::size_t j, double x, int d) const {
  const auto& p = pieces.at(j);
  const double u = p.local(x);
  double acc = 0.0;
  for (int k = order; k >= d; --k) acc = acc * u + p.coeffs(k) * falling_factorial(k, d);
  return acc / std::pow(p.halfwidth(), d);
}

double SplineModel::derivative(double x, int d) const { return derivative_piece(locate(x), x, d); }

double SplineModel::integral(double a, double b) const {
  double sum = 0.0;
  for (const auto& p : pieces) {
    const double lo = std::max(a, p.lo);
    const double hi = std::min(b, p.hi);
    if (hi > lo) sum += p.moments(lo, hi, order).dot(p.coeffs);
  }
  return sum;
}

std::vector<double> SplineModel::leading_coefficients() const {
  std::vector<double> a;
  for (const auto& p : pieces) a.push_back(p.coeffs(order) / std::pow(p.halfwidth(), order));
  return a;
}

std::vector<double> SplineModel::leading_jumps() const {
  const auto a = leading_coefficients();
  std::vector<double> j;
  for (std::size_t i = 1; i < a.size(); ++i) j.push_back(a[i] - a[i - 1]);
  return j;
}

SplineBasis::SplineBasis(Domain domain, std::vector<double> breakpoints, int order)
    : domain_(domain), order_(order), breaks_(std::move(breakpoints)) {
  if (order < 0) throw Error("spline order must be non-negative");
  if (breaks_.size() < 2) throw Error("a division needs at least two breakpoints");
  if (breaks_.front() != domain.lo || breaks_.back() != domain.hi)
    throw Error("breakpoints must span the domain");
  for (std::size_t i = 1; i < breaks_.size(); ++i)
    if (!(breaks_[i - 1] < breaks_[i])) throw Error("breakpoints must be strictly increasing");

  const std::size_t np = breaks_.size() - 1;
  pieces_.resize(np);
  maps_.resize(np);
  for (std::size_t j = 0; j < np; ++j) {
    pieces_[j].lo = breaks_[j];
    pieces_[j].hi = breaks_[j + 1];
    Eigen::MatrixXd map = Eigen::MatrixXd::Zero(order + 1, size());
    map.middleCols(offset(j), order + 1).setIdentity();
    maps_[j] = std::move(map);
  }
}

std::size_t SplineBasis::locate(double x) const { return find_piece(breaks_, x); }

Eigen::RowVectorXd SplineBasis::integral_row(double lo, double hi) const {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(size());
  for (std::size_t j = locate(lo); j < pieces_.size(); ++j) {
    const auto& p = pieces_[j];
    if (p.lo >= hi) break;
    const double a = std::max(lo, p.lo);
    const double b = std::min(hi, p.hi);
    if (b > a) row.segment(offset(j), order_ + 1) = p.moments(a, b, order_).transpose();
  }
  return row;
}

Eigen::RowVectorXd SplineBasis::local_derivative(std::size_t j, double x, int d) const {
  const auto& p = pieces_[j];
  const double u = p.local(x);
  Eigen::RowVectorXd local = Eigen::RowVectorXd::Zero(order_ + 1);
  for (int k = d; k <= order_; ++k)
    local(k) = falling_factorial(k, d) * std::pow(u, k - d) / std::pow(p.halfwidth(), d);
  return local;
}

Eigen::RowVectorXd SplineBasis::derivative_row(double x, int d) const {
  const std::size_t j = locate(x);
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(size());
  row.segment(offset(j), order_ + 1) = local_derivative(j, x, d);
  return row;
}

Eigen::MatrixXd SplineBasis::continuity_rows() const {
  const auto knots = static_cast<Eigen::Index>(pieces_.size()) - 1;
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(knots * order_, size());
  Eigen::Index r = 0;
  for (std::size_t q = 0; q + 1 < pieces_.size(); ++q) {
    const double x = breaks_[q + 1];
    for (int d = 0; d < order_; ++d, ++r) {
      rows.row(r).segment(offset(q + 1), order_ + 1) = local_derivative(q + 1, x, d);
      rows.row(r).segment(offset(q), order_ + 1) = -local_derivative(q, x, d);
      rows.row(r) /= rows.row(r).norm();
    }
  }
  return rows;
}

Eigen::RowVectorXd SplineBasis::jump_row(std::size_t q) const {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(size());
  row(offset(q + 1) + order_) = 1.0 / std::pow(pieces_[q + 1].halfwidth(), order_);
  row(offset(q) + order_) = -1.0 / std::pow(pieces_[q].halfwidth(), order_);
  return row;
}

SplineModel SplineBasis::model(const Eigen::VectorXd& params, const Eigen::MatrixXd& cov) const {
  SplineModel m;
  m.order = order_;
  m.domain = domain_;
  m.params = params;
  m.param_cov = cov;
  m.param_map = maps_;
  m.pieces = pieces_;
  for (std::size_t j = 0; j < pieces_.size(); ++j) {
    m.pieces[j].coeffs = maps_[j] * params;
    m.pieces[j].cov = maps_[j] * cov * maps_[j].transpose();
  }
  return m;
}

double LevelGoodness::limit(double threshold) const {
  return 1.0 + threshold * std::sqrt(2.0 / static_cast<double>(n_tilde));
}

// --- BHMSPLINE v1 -----------------------------------------------------------

namespace {

void write_array(std::ostream& out, const Eigen::VectorXd& v) {
  out << '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? ", " : "") << format_real(v(i));
  out << ']';
}

Eigen::VectorXd vector_from(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace

void write_spline(std::ostream& out, const FitResult& fit) {
  const auto& m = fit.model;
  const auto& d = fit.diagnostics;
  out << "{\n";
  out << "  \"format\": \"BHMSPLINE\",\n  \"version\": 1,\n";
  out << "  \"order\": " << m.order << ",\n";
  out << "  \"domain\": [" << format_real(m.domain.lo) << ", " << format_real(m.domain.hi)
      << "],\n";
  out << "  \"accepted\": " << (d.accepted ? "true" : "false") << ",\n";
  out << "  \"threshold_used\": " << format_real(d.threshold) << ",\n";
  out << "  \"constraint_lambda\": " << format_real(d.constraint_lambda) << ",\n";
  out << "  \"pieces\": [";
  for (std::size_t j = 0; j < m.pieces.size(); ++j) {
    const auto& p = m.pieces[j];
    out << (j ? ",\n" : "\n") << "    {\"lo\": " << format_real(p.lo)
        << ", \"hi\": " << format_real(p.hi) << ", \"coefficients\": ";
    write_array(out, p.coeffs);
    out << ", \"covariance\": [";
    for (Eigen::Index r = 0; r < p.cov.rows(); ++r) {
      out << (r ? ", " : "");
      write_array(out, p.cov.row(r).transpose());
    }
    out << "]}";
  }
  out << "\n  ],\n  \"diagnostics\": [";
  for (std::size_t i = 0; i < d.levels.size(); ++i) {
    const auto& l = d.levels[i];
    out << (i ? ",\n" : "\n") << "    {\"n\": " << l.n << ", \"n_tilde\": " << l.n_tilde
        << ", \"chi2_over_n\": " << format_real(l.reduced()) << "}";
  }
  out << "\n  ]\n}\n";
}

FitResult read_spline(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("BHMSPLINE: malformed JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "BHMSPLINE" || j.at("version") != 1)
      throw Error("BHMSPLINE: header mismatch");
    FitResult fit;
    auto& m = fit.model;
    m.order = j.at("order").get<int>();
    m.domain = Domain(j.at("domain").at(0).get<double>(), j.at("domain").at(1).get<double>());
    fit.diagnostics.accepted = j.at("accepted").get<bool>();
    fit.diagnostics.threshold = j.at("threshold_used").get<double>();
    fit.diagnostics.constraint_lambda = j.at("constraint_lambda").get<double>();
    for (const auto& jp : j.at("pieces")) {
      SplinePiece p;
      p.lo = jp.at("lo").get<double>();
      p.hi = jp.at("hi").get<double>();
      p.coeffs = vector_from(jp.at("coefficients"));
      const auto& jc = jp.at("covariance");
      p.cov.resize(static_cast<Eigen::Index>(jc.size()), p.coeffs.size());
      for (std::size_t r = 0; r < jc.size(); ++r)
        p.cov.row(static_cast<Eigen::Index>(r)) = vector_from(jc[r]).transpose();
      if (p.coeffs.size() != m.order + 1 || p.cov.rows() != m.order + 1)
        throw Error("BHMSPLINE: piece size does not match order");
      m.pieces.push_back(std::move(p));
    }
    if (m.pieces.empty()) throw Error("BHMSPLINE: no pieces");
    if (m.pieces.front().lo != m.domain.lo || m.pieces.back().hi != m.domain.hi)
      throw Error("BHMSPLINE: pieces do not span the domain");
    for (std::size_t i = 1; i < m.pieces.size(); ++i)
      if (m.pieces[i].lo != m.pieces[i - 1].hi) throw Error("BHMSPLINE: pieces not contiguous");
    fit.diagnostics.pieces = m.pieces.size();
    for (const auto& jl : j.at("diagnostics")) {
      LevelGoodness l;
      l.n = jl.at("n").get<int>();
      l.n_tilde = jl.at("n_tilde").get<std::size_t>();
      l.chi2_over_n = jl.at("chi2_over_n").get<double>();
      l.chi2 = l.chi2_over_n * static_cast<double>(l.n_tilde);
      fit.diagnostics.levels.push_back(l);
    }
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("BHMSPLINE: ") + e.what());
  }
}

void save_spline(const std::string& path, const FitResult& fit) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_spline(out, fit);
  if (!out) throw Error("failed writing '" + path + "'");
}

FitResult load_spline(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_spline(in);
}

}  // namespace bhm
