#include "bhm/splinefit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bhm {

void FitConfig::validate() const {
  if (order < 0) throw Error("spline order must be non-negative");
  if (!(t_min >= 0.0) || !(t_min <= t_max)) throw Error("threshold range requires 0 <= t_min <= t_max");
  if (!(t_step > 0.0)) throw Error("threshold step must be positive");
  if (!(sv_cutoff > 0.0 && sv_cutoff < 1.0)) throw Error("singular-value cutoff must lie in (0, 1)");
  if (!(lambda_min > 0.0 && lambda_min <= lambda_max)) throw Error("bad constraint weight range");
  if (min_count < 1) throw Error("minimum bin occupancy must be at least 1");
  if (jump_iterations < 1) throw Error("at least one constrained iteration is required");
  for (const auto& bc : boundary)
    if (bc.derivative < 0 || bc.derivative > order)
      throw Error("boundary condition derivative out of range");
}

std::vector<double> FitConfig::thresholds() const {
  std::vector<double> ts;
  for (int i = 0;; ++i) {
    const double t = t_min + i * t_step;
    if (t > t_max + 1e-12 * std::max(1.0, t_max)) break;
    ts.push_back(t);
  }
  if (ts.back() < t_max) ts.push_back(t_max);
  return ts;
}

namespace {

struct LinearSystem {
  Eigen::MatrixXd rows;  // weighted residual rows
  Eigen::VectorXd rhs;
  Eigen::MatrixXd eq;  // equality constraints eq * p = eq_rhs
  Eigen::VectorXd eq_rhs;
};

struct Solution {
  Eigen::VectorXd params;
  Eigen::MatrixXd cov;
  Eigen::Index rank = 0;
};

LinearSystem assemble(const BinHierarchy& h, const SplineBasis& basis, const FitConfig& cfg) {
  const Eigen::MatrixXd continuity = basis.continuity_rows();
  std::size_t nrows = 0, neq = cfg.boundary.size() + static_cast<std::size_t>(continuity.rows());
  for (const auto& lvl : h.levels)
    for (const auto& b : lvl.bins) {
      if (b.weighted()) ++nrows;
      else if (b.exact()) ++neq;
    }
  LinearSystem sys;
  const auto p = basis.size();
  sys.rows.resize(static_cast<Eigen::Index>(nrows), p);
  sys.rhs.resize(static_cast<Eigen::Index>(nrows));
  sys.eq.resize(static_cast<Eigen::Index>(neq), p);
  sys.eq_rhs.resize(static_cast<Eigen::Index>(neq));
  Eigen::Index r = 0, e = 0;
  sys.eq.topRows(continuity.rows()) = continuity;
  sys.eq_rhs.head(continuity.rows()).setZero();
  e = continuity.rows();
  for (const auto& lvl : h.levels) {
    const double scale = std::sqrt(lvl.weight);
    for (const auto& b : lvl.bins) {
      if (b.weighted()) {
        const double s = scale / b.estimate.error;
        sys.rows.row(r) = basis.integral_row(b.lo, b.hi) * s;
        sys.rhs(r) = b.estimate.value * s;
        ++r;
      } else if (b.exact()) {
        // Unit-norm rows keep the relative rank cutoff meaningful.
        const auto row = basis.integral_row(b.lo, b.hi);
        const double norm = row.norm();
        sys.eq.row(e) = row / norm;
        sys.eq_rhs(e) = b.estimate.value / norm;
        ++e;
      }
    }
  }
  for (const auto& bc : cfg.boundary) {
    const double x = bc.side == BoundaryCondition::Side::Lower ? h.domain.lo : h.domain.hi;
    const auto row = basis.derivative_row(x, bc.derivative);
    const double norm = row.norm();
    sys.eq.row(e) = row / norm;
    sys.eq_rhs(e) = bc.value / norm;
    ++e;
  }
  return sys;
}

Eigen::Index kept(const Eigen::VectorXd& sv, double cutoff) {
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  Eigen::Index k = 0;
  while (k < sv.size() && sv(k) > cutoff * sv(0)) ++k;
  return k;
}

// min |A p - b|^2 subject to E p = e. Constraints are eliminated through the
// null space of E; the reduced problem is column-equilibrated and solved by a
// truncated SVD. The covariance is the pseudo-inverse of the reduced normal
// matrix mapped back to the full parameter set.
Solution solve(const LinearSystem& sys, double cutoff) {
  const Eigen::Index p = sys.rows.cols();
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd null = Eigen::MatrixXd::Identity(p, p);
  Eigen::Index eq_rank = 0;
  if (sys.eq.rows() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.eq, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    eq_rank = kept(s, 1e-12);
    const Eigen::MatrixXd v = svd.matrixV();
    const Eigen::MatrixXd u = svd.matrixU();
    p0 = v.leftCols(eq_rank) *
         (u.leftCols(eq_rank).transpose() * sys.eq_rhs).cwiseQuotient(s.head(eq_rank));
    const double resid = (sys.eq * p0 - sys.eq_rhs).norm();
    if (resid > 1e-8 * std::max(1.0, sys.eq_rhs.norm()))
      throw FitError("inconsistent equality constraints");
    null = v.rightCols(p - eq_rank);
  }
  const Eigen::Index q = null.cols();
  if (sys.rows.rows() < q)
    throw FitError("fewer usable bins (" + std::to_string(sys.rows.rows()) +
                   ") than free parameters (" + std::to_string(q) + ")");

  Solution sol;
  sol.params = p0;
  sol.cov = Eigen::MatrixXd::Zero(p, p);
  sol.rank = eq_rank;
  if (q == 0) return sol;

  Eigen::MatrixXd reduced = sys.rows * null;
  const Eigen::VectorXd target = sys.rhs - sys.rows * p0;
  Eigen::VectorXd scale = reduced.colwise().norm().transpose();
  for (Eigen::Index i = 0; i < q; ++i)
    if (!(scale(i) > 0.0)) scale(i) = 1.0;
  reduced = reduced * scale.cwiseInverse().asDiagonal();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(reduced, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const Eigen::Index k = kept(s, cutoff);
  const Eigen::MatrixXd v = svd.matrixV().leftCols(k);
  const Eigen::VectorXd inv = s.head(k).cwiseInverse();
  const Eigen::VectorXd y = v * (inv.asDiagonal() * (svd.matrixU().leftCols(k).transpose() * target));
  const Eigen::MatrixXd vs = scale.cwiseInverse().asDiagonal() * v * inv.asDiagonal();
  const Eigen::MatrixXd cov_z = vs * vs.transpose();

  sol.params = p0 + null * y.cwiseQuotient(scale);
  sol.cov = null * cov_z * null.transpose();
  sol.cov = 0.5 * (sol.cov + sol.cov.transpose());
  sol.rank = eq_rank + k;
  return sol;
}

FitResult finish(const BinHierarchy& h, const SplineBasis& basis, const Solution& sol) {
  FitResult fit;
  fit.model = basis.model(sol.params, sol.cov);
  fit.diagnostics.levels = level_goodness(h, fit.model);
  fit.diagnostics.pieces = basis.pieces();
  fit.diagnostics.objective = weighted_objective(h, fit.model);
  fit.diagnostics.rank = sol.rank;
  return fit;
}

double bin_chi2(const HierarchyBin& b, const SplineModel& model) {
  const double r = (b.estimate.value - model.integral(b.lo, b.hi)) / b.estimate.error;
  return r * r;
}

}  // namespace

std::vector<LevelGoodness> level_goodness(const BinHierarchy& h, const SplineModel& model) {
  std::vector<LevelGoodness> out;
  for (const auto& lvl : h.levels) {
    double chi2 = 0.0;
    std::size_t n = 0;
    for (const auto& b : lvl.bins)
      if (b.weighted()) {
        chi2 += bin_chi2(b, model);
        ++n;
      }
    if (n > 0) out.push_back(LevelGoodness::make(lvl.n, n, chi2));
  }
  return out;
}

double weighted_objective(const BinHierarchy& h, const SplineModel& model) {
  double total = 0.0;
  for (const auto& lvl : h.levels) {
    double chi2 = 0.0;
    for (const auto& b : lvl.bins)
      if (b.weighted()) chi2 += bin_chi2(b, model);
    total += lvl.weight * chi2;
  }
  return total;
}

FitResult fit_division(const BinHierarchy& h, const std::vector<double>& breakpoints,
                       const FitConfig& cfg) {
  cfg.validate();
  const SplineBasis basis(h.domain, breakpoints, cfg.order);
  const auto sys = assemble(h, basis, cfg);
  if (sys.rows.rows() == 0 && sys.eq.rows() == 0) throw FitError("no usable bins in the hierarchy");
  return finish(h, basis, solve(sys, cfg.sv_cutoff));
}

IntervalGoodness goodness_on_interval(const BinHierarchy& h, const SplineModel& model, double lo,
                                      double hi, double threshold) {
  IntervalGoodness g;
  for (int idx = 0; idx <= h.depth(); ++idx) {
    const auto inside = bins_inside(h, lo, hi, idx);
    if (inside.empty()) continue;
    const auto unusable =
        std::count_if(inside.begin(), inside.end(), [](const HierarchyBin& b) { return !b.usable; });
    if (2 * static_cast<std::size_t>(unusable) > inside.size()) {
      g.stopped_at = h.level(idx).n;
      break;
    }
    double chi2 = 0.0;
    std::size_t n = 0;
    for (const auto& b : inside)
      if (b.weighted()) {
        chi2 += bin_chi2(b, model);
        ++n;
      }
    if (n == 0) continue;
    const auto lg = LevelGoodness::make(h.level(idx).n, n, chi2);
    if (!lg.passes(threshold)) g.pass = false;
    g.levels.push_back(lg);
  }
  return g;
}

bool passes_globally(const std::vector<LevelGoodness>& levels, double threshold) {
  return std::all_of(levels.begin(), levels.end(),
                     [&](const LevelGoodness& l) { return l.passes(threshold); });
}

bool acceptable(const BinHierarchy& h, const SplineModel& model,
                const std::vector<LevelGoodness>& levels, double threshold) {
  if (!passes_globally(levels, threshold)) return false;
  return std::all_of(model.pieces.begin(), model.pieces.end(), [&](const SplinePiece& p) {
    return goodness_on_interval(h, model, p.lo, p.hi, threshold).pass;
  });
}

std::optional<double> split_point(const BinHierarchy& h, double lo, double hi, int order) {
  const auto& e = h.edges;
  const auto first = std::upper_bound(e.begin(), e.end(), lo);
  const auto last = std::lower_bound(e.begin(), e.end(), hi);
  if (first >= last) return std::nullopt;
  const double mid = 0.5 * (lo + hi);
  auto it = std::lower_bound(first, last, mid);
  if (it == last || (it != first && mid - *(it - 1) <= *it - mid)) --it;
  const double cut = *it;
  const auto need = static_cast<std::size_t>(order) + 1;
  if (h.elementary_bins_inside(lo, cut) <= need || h.elementary_bins_inside(cut, hi) <= need)
    return std::nullopt;
  return cut;
}

std::vector<double> knot_weights(const BinHierarchy& h, const SplineModel& model, double threshold) {
  const auto np = static_cast<long>(model.pieces.size());
  std::vector<IntervalGoodness> per_piece;
  for (const auto& p : model.pieces)
    per_piece.push_back(goodness_on_interval(h, model, p.lo, p.hi, threshold));
  std::vector<double> w;
  for (long q = 0; q + 1 < np; ++q) {
    // knot between pieces q and q+1; neighbours q-1 .. q+2
    double slack = std::numeric_limits<double>::infinity();
    for (long j = std::max(0L, q - 1); j <= std::min(np - 1, q + 2); ++j)
      for (const auto& l : per_piece[static_cast<std::size_t>(j)].levels)
        slack = std::min(slack, l.limit(threshold) - l.reduced());
    w.push_back(std::isfinite(slack) ? std::max(0.0, slack) : 0.0);
  }
  return w;
}

double jump_penalty(const SplineModel& model, const std::vector<double>& weights,
                    const std::vector<double>& reference_jumps) {
  const auto jumps = model.leading_jumps();
  double sum = 0.0;
  for (std::size_t q = 0; q < jumps.size() && q < weights.size(); ++q) {
    if (weights[q] <= 0.0 || reference_jumps[q] == 0.0) continue;
    const double r = jumps[q] / reference_jumps[q];
    sum += weights[q] * r * r;
  }
  return sum / static_cast<double>(model.pieces.size());
}

FitResult constrain_jumps(const BinHierarchy& h, const FitResult& unconstrained,
                          const FitConfig& cfg) {
  if (unconstrained.model.pieces.size() < 2) return unconstrained;
  const auto weights = knot_weights(h, unconstrained.model, unconstrained.diagnostics.threshold);
  if (std::none_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; })) {
    FitResult same = unconstrained;
    same.diagnostics.knot_weights = weights;
    return same;
  }
  return constrain_jumps(h, unconstrained, cfg, weights);
}

FitResult constrain_jumps(const BinHierarchy& h, const FitResult& unconstrained,
                          const FitConfig& cfg, const std::vector<double>& weights) {
  const auto& base = unconstrained.model;
  const double threshold = unconstrained.diagnostics.threshold;
  const std::size_t np = base.pieces.size();
  if (np < 2) return unconstrained;
  if (weights.size() != np - 1) throw Error("need one weight per interior knot");
  FitResult best = unconstrained;
  best.diagnostics.knot_weights = weights;

  const SplineBasis basis(h.domain, base.breakpoints(), cfg.order);
  const auto sys = assemble(h, basis, cfg);
  std::vector<double> reference(np - 1);
  for (std::size_t q = 0; q + 1 < np; ++q) reference[q] = basis.jump_row(q).dot(base.params);

  auto fit_at = [&](double lambda) {
    LinearSystem aug = sys;
    std::vector<std::size_t> active;
    for (std::size_t q = 0; q + 1 < np; ++q)
      if (weights[q] > 0.0 && reference[q] != 0.0) active.push_back(q);
    const auto r0 = aug.rows.rows();
    const auto extra = static_cast<Eigen::Index>(active.size());
    aug.rows.conservativeResize(r0 + extra, Eigen::NoChange);
    aug.rhs.conservativeResize(r0 + extra);
    aug.rows.bottomRows(extra).setZero();
    aug.rhs.tail(extra).setZero();
    for (Eigen::Index i = 0; i < extra; ++i) {
      const auto q = active[static_cast<std::size_t>(i)];
      aug.rows.row(r0 + i) =
          basis.jump_row(q) * (std::sqrt(lambda * weights[q] / static_cast<double>(np)) / reference[q]);
    }
    return finish(h, basis, solve(aug, cfg.sv_cutoff));
  };
  auto feasible = [&](const FitResult& f) {
    return acceptable(h, f.model, f.diagnostics.levels, threshold);
  };

  for (int iter = 0; iter < cfg.jump_iterations; ++iter) {
    double lambda = cfg.lambda_max;
    auto candidate = fit_at(lambda);
    if (!feasible(candidate)) {
      double lo = cfg.lambda_min;
      auto lo_fit = fit_at(lo);
      if (!feasible(lo_fit)) break;
      double hi = cfg.lambda_max;
      while (hi / lo > 1.05) {
        const double mid = std::sqrt(lo * hi);
        auto f = fit_at(mid);
        if (feasible(f)) {
          lo = mid;
          lo_fit = std::move(f);
        } else {
          hi = mid;
        }
      }
      lambda = lo;
      candidate = std::move(lo_fit);
    }
    candidate.diagnostics.accepted = true;
    candidate.diagnostics.threshold = threshold;
    candidate.diagnostics.constraint_lambda = lambda;
    candidate.diagnostics.knot_weights = weights;
    best = std::move(candidate);
    for (std::size_t q = 0; q + 1 < np; ++q)
      reference[q] = basis.jump_row(q).dot(best.model.params);
  }
  return best;
}

FitResult adaptive_fit(const BinHierarchy& h, const FitConfig& cfg) {
  cfg.validate();
  std::vector<double> breaks{h.domain.lo, h.domain.hi};
  FitResult current = fit_division(h, breaks, cfg);
  const auto thresholds = cfg.thresholds();
  bool accepted = false;
  double used = thresholds.back();

  // Adds a cut to every piece failing at t; false when nothing can be split.
  auto refine = [&](double t) {
    std::vector<double> next = breaks;
    bool changed = false;
    const auto& pieces = current.model.pieces;
    for (const auto& p : pieces) {
      if (pieces.size() > 1 && goodness_on_interval(h, current.model, p.lo, p.hi, t).pass)
        continue;
      if (auto cut = split_point(h, p.lo, p.hi, cfg.order)) {
        next.push_back(*cut);
        changed = true;
      }
    }
    if (!changed) return false;
    std::sort(next.begin(), next.end());
    try {
      current = fit_division(h, next, cfg);
      breaks = std::move(next);
    } catch (const FitError&) {
      return false;
    }
    return true;
  };

  if (cfg.escalate_first) {
    for (;;) {
      for (double t : thresholds) {
        if (acceptable(h, current.model, current.diagnostics.levels, t)) {
          accepted = true;
          used = t;
          break;
        }
      }
      if (accepted || !refine(thresholds.front())) break;
    }
  } else {
    for (double t : thresholds) {
      for (;;) {
        if (acceptable(h, current.model, current.diagnostics.levels, t)) {
          accepted = true;
          used = t;
          break;
        }
        if (!refine(t)) break;
      }
      if (accepted) break;
    }
  }

  current.diagnostics.accepted = accepted;
  current.diagnostics.threshold = used;
  if (accepted && cfg.jump_constraint && current.model.pieces.size() > 1)
    return constrain_jumps(h, current, cfg);
  return current;
}

}  // namespace bhm
