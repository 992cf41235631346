#pragma once

#include <optional>
#include <vector>

#include "bhm/hierarchy.hpp"
#include "bhm/spline.hpp"

namespace bhm {

/// Known value of the spline or one of its derivatives at a domain endpoint.
struct BoundaryCondition {
  enum class Side { Lower, Upper };
  Side side = Side::Lower;
  int derivative = 0;
  double value = 0.0;
};

struct FitConfig {
  int order = 3;
  /// Acceptance threshold range; T starts at t_min and grows by t_step.
  double t_min = 2.0;
  double t_max = 4.0;
  double t_step = 0.5;
  /// Try the whole threshold range on each division before splitting further.
  bool escalate_first = true;
  std::uint64_t min_count = kDefaultMinCount;
  bool jump_constraint = true;
  /// Constrained re-fits; 2 repeats once with the constrained jumps as reference.
  int jump_iterations = 1;
  double sv_cutoff = 1e-10;
  double lambda_min = 1e-4;
  double lambda_max = 1e6;
  std::vector<BoundaryCondition> boundary;

  void validate() const;
  std::vector<double> thresholds() const;
};

/// Raised when a least-squares system has fewer equations than unknowns.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Unweighted chi2_n / n~ per level over the usable, finite-error bins.
std::vector<LevelGoodness> level_goodness(const BinHierarchy& h, const SplineModel& model);

/// Sum over levels of weight_n * chi2_n, recomputed from the model integrals.
double weighted_objective(const BinHierarchy& h, const SplineModel& model);

/// Least-squares fit of a spline with the given breakpoints to every usable
/// hierarchy bin. Residual rows are weighted by 2^{-n/2}; bins with exactly
/// known integrals and boundary conditions enter as equality constraints.
/// Diagnostics carry level goodness but no acceptance decision.
FitResult fit_division(const BinHierarchy& h, const std::vector<double>& breakpoints,
                       const FitConfig& cfg);

struct IntervalGoodness {
  bool pass = true;
  /// Levels that were evaluated, in order.
  std::vector<LevelGoodness> levels;
  /// Level at which the scan stopped because most bins lacked data, if any.
  std::optional<int> stopped_at;
  bool vacuous() const { return levels.empty(); }
};

/// Per-level check restricted to bins fully inside [lo, hi].
IntervalGoodness goodness_on_interval(const BinHierarchy& h, const SplineModel& model, double lo,
                                      double hi, double threshold);

/// Full-domain check: every level with usable bins must pass.
bool passes_globally(const std::vector<LevelGoodness>& levels, double threshold);

/// Accepted iff the full-domain check and every per-piece check pass.
bool acceptable(const BinHierarchy& h, const SplineModel& model,
                const std::vector<LevelGoodness>& levels, double threshold);

/// Elementary edge nearest the midpoint of [lo, hi], if both halves would hold
/// more than order + 1 elementary bins.
std::optional<double> split_point(const BinHierarchy& h, double lo, double hi, int order);

/// Automatic knot placement with threshold escalation and optional jump
/// constraint. Returns the best-effort model with accepted = false when no
/// acceptable division exists up to t_max.
FitResult adaptive_fit(const BinHierarchy& h, const FitConfig& cfg);

/// Weights lambda_j for each interior knot from the slack of the
/// unconstrained fit on the neighbouring pieces.
std::vector<double> knot_weights(const BinHierarchy& h, const SplineModel& model, double threshold);

/// Re-fit on the same division with a penalty on jumps of the highest
/// derivative, using the largest global weight that keeps the fit acceptable.
FitResult constrain_jumps(const BinHierarchy& h, const FitResult& unconstrained,
                          const FitConfig& cfg);
/// Same with explicit knot weights; always re-solves, even when all are zero.
FitResult constrain_jumps(const BinHierarchy& h, const FitResult& unconstrained,
                          const FitConfig& cfg, const std::vector<double>& weights);

/// Sum_j lambda_j (jump_j / reference_j)^2 / n_p with unit global weight.
double jump_penalty(const SplineModel& model, const std::vector<double>& weights,
                    const std::vector<double>& reference_jumps);

}  // namespace bhm
