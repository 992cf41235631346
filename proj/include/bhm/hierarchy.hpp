#pragma once

#include <cstdint>
#include <vector>

#include "bhm/accum.hpp"

namespace bhm {

inline constexpr std::uint64_t kDefaultMinCount = 10;

struct HierarchyBin {
  int level = 0;
  std::size_t index = 0;
  double lo = 0.0;
  double hi = 0.0;
  BinStats stats;
  IntegralEstimate estimate;
  bool usable = false;

  /// Usable with a zero error: the integral is known exactly (all values
  /// identical and every sampled point inside the bin). Such bins enter a fit
  /// as equality constraints rather than chi-square rows.
  bool exact() const { return usable && estimate.error == 0.0; }
  /// Usable with a finite error, i.e. contributes one chi-square term.
  bool weighted() const { return usable && estimate.error > 0.0; }
};

/// One level of bins together with its weight in the fit objective.
struct BinLevel {
  int n = 0;
  double weight = 1.0;
  std::vector<HierarchyBin> bins;
};

/// Levels 0..K of pairwise pooled bins. Level n holds 2^n bins and enters the
/// least-squares objective with weight 2^-n. Immutable after build().
struct BinHierarchy {
  Domain domain;
  std::vector<BinLevel> levels;
  std::uint64_t total = 0;
  std::uint64_t min_count = kDefaultMinCount;
  /// Elementary-bin edges, kept for knot alignment.
  std::vector<double> edges;

  int depth() const { return static_cast<int>(levels.size()) - 1; }
  const BinLevel& level(int n) const { return levels.at(static_cast<std::size_t>(n)); }
  const HierarchyBin& top() const { return levels.front().bins.front(); }
  /// Number of elementary bins in [lo, hi].
  std::size_t elementary_bins_inside(double lo, double hi) const;
};

BinHierarchy build_hierarchy(const SampleAccumulator& acc,
                             std::uint64_t min_count = kDefaultMinCount);

/// Bins of the given level lying fully inside [lo, hi], in order, usable or not.
std::vector<HierarchyBin> bins_inside(const BinHierarchy& h, double lo, double hi, int level);

/// Single-level view holding the finest usable non-overlapping binning: an
/// elementary bin stays as is if usable, otherwise it is coarse grained with
/// its sibling until the combination is usable. Bins that never become usable
/// are dropped. Used to compare against fitting elementary bins only.
BinHierarchy finest_usable_partition(const BinHierarchy& h);

}  // namespace bhm
