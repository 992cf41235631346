#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "bhm/hierarchy.hpp"
#include "bhm/spline.hpp"

namespace bhm {

enum class ZeroCondition { I, II, III, IV };

struct LevelExcess {
  int n = 0;
  std::size_t n_tilde = 0;
  /// (chi2_n / n~ - 1) / sqrt(2 / n~) for the zero function; +inf when a
  /// usable bin has an exactly known nonzero integral.
  double excess = 0.0;
};

struct ZeroVerdict {
  bool consistent_with_zero = true;
  std::optional<ZeroCondition> condition;
  std::vector<LevelExcess> levels;
};

std::string_view to_string(ZeroCondition c);

/// Decides from the per-level excess of the zero-function chi-square whether
/// the data are certainly inconsistent with zero:
///   (i)   some level >= 4
///   (ii)  two levels >= 3
///   (iii) one level >= 3 and two other levels >= 2
///   (iv)  four levels >= 2
ZeroVerdict check_zero(const BinHierarchy& h);

/// Accepts the fit at 2N once int |f_N - f_2N| < alpha int |f_2N| over the domain.
bool evolution_accept(const SplineModel& model_n, const SplineModel& model_2n, double alpha);

/// Integral of |f(x)| over the common domain of the models, by adaptive
/// Gauss-Kronrod between the union of their breakpoints.
double absolute_difference_integral(const SplineModel& a, const SplineModel* b);

}  // namespace bhm
