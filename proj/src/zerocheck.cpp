#include "bhm/zerocheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace bhm {

std::string_view to_string(ZeroCondition c) {
  switch (c) {
    case ZeroCondition::I: return "i";
    case ZeroCondition::II: return "ii";
    case ZeroCondition::III: return "iii";
    case ZeroCondition::IV: return "iv";
  }
  return "?";
}

ZeroVerdict check_zero(const BinHierarchy& h) {
  ZeroVerdict v;
  for (const auto& lvl : h.levels) {
    double chi2 = 0.0;
    std::size_t n = 0;
    bool exact_nonzero = false;
    for (const auto& b : lvl.bins) {
      if (b.weighted()) {
        const double r = b.estimate.value / b.estimate.error;
        chi2 += r * r;
        ++n;
      } else if (b.exact() && b.estimate.value != 0.0) {
        exact_nonzero = true;
      }
    }
    if (exact_nonzero) {
      v.levels.push_back({lvl.n, n, std::numeric_limits<double>::infinity()});
    } else if (n > 0) {
      const double nt = static_cast<double>(n);
      v.levels.push_back({lvl.n, n, (chi2 / nt - 1.0) / std::sqrt(2.0 / nt)});
    }
  }

  // Each level counted once, at its highest tier.
  std::size_t four = 0, three = 0, two = 0;
  for (const auto& l : v.levels) {
    if (l.excess >= 4.0) ++four;
    else if (l.excess >= 3.0) ++three;
    else if (l.excess >= 2.0) ++two;
  }
  if (four >= 1) v.condition = ZeroCondition::I;
  else if (three >= 2) v.condition = ZeroCondition::II;
  else if (three == 1 && two >= 2) v.condition = ZeroCondition::III;
  else if (three + two >= 4) v.condition = ZeroCondition::IV;
  v.consistent_with_zero = !v.condition.has_value();
  return v;
}

double absolute_difference_integral(const SplineModel& a, const SplineModel* b) {
  std::vector<double> cuts = a.breakpoints();
  if (b) {
    if (!(a.domain == b->domain)) throw Error("models span different domains");
    const auto more = b->breakpoints();
    cuts.insert(cuts.end(), more.begin(), more.end());
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    // Evaluate on the piece owning the open interval so endpoints stay consistent.
    const double mid = 0.5 * (lo + hi);
    const auto ja = a.locate(mid);
    const auto jb = b ? b->locate(mid) : 0;
    auto f = [&](double x) {
      const double fa = a.eval_piece(ja, x);
      return std::abs(b ? fa - b->eval_piece(jb, x) : fa);
    };
    total += gauss_kronrod<double, 15>::integrate(f, lo, hi, 30, 1e-12);
  }
  return total;
}

bool evolution_accept(const SplineModel& model_n, const SplineModel& model_2n, double alpha) {
  if (!(alpha > 0.0)) throw Error("alpha must be positive");
  const double rhs = absolute_difference_integral(model_2n, nullptr);
  if (rhs == 0.0) return false;
  const double lhs = absolute_difference_integral(model_n, &model_2n);
  return lhs < alpha * rhs;
}

}  // namespace bhm
