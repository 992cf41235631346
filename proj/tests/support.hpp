#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "bhm/hierarchy.hpp"
#include "bhm/spline.hpp"

namespace bhm::testing {

/// Hierarchy whose elementary integrals are exactly those of F' (F the
/// antiderivative), each with relative error `rel`.
inline BinHierarchy exact_hierarchy(Domain d, int levels, const std::function<double(double)>& F,
                                    double rel = 0.05, std::uint64_t per_bin = 100) {
  SampleAccumulator acc(d, levels);
  const std::uint64_t total = per_bin * acc.size();
  std::vector<BinStats> bins;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double target = F(acc.edges()[i + 1]) - F(acc.edges()[i]);
    const double mean = target * static_cast<double>(total) / static_cast<double>(per_bin);
    bins.push_back({per_bin, mean, std::pow(rel * mean, 2) * static_cast<double>(per_bin)});
  }
  acc.assign(bins);
  return build_hierarchy(acc);
}

/// Single-piece model with local coefficients c on [lo, hi].
inline SplineModel single_piece(double lo, double hi, std::vector<double> c) {
  SplineModel m;
  m.order = static_cast<int>(c.size()) - 1;
  m.domain = Domain(lo, hi);
  SplinePiece p;
  p.lo = lo;
  p.hi = hi;
  p.coeffs = Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
  p.cov = Eigen::MatrixXd::Zero(p.coeffs.size(), p.coeffs.size());
  m.pieces.push_back(p);
  return m;
}

template <typename F>
double simpson(F&& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace bhm::testing
