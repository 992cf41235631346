#include "bhm/hierarchy.hpp"

#include <algorithm>
#include <cmath>

namespace bhm {

std::size_t BinHierarchy::elementary_bins_inside(double lo, double hi) const {
  const auto first = std::lower_bound(edges.begin(), edges.end(), lo);
  const auto last = std::upper_bound(edges.begin(), edges.end(), hi);
  const auto n_edges = last - first;
  return n_edges > 1 ? static_cast<std::size_t>(n_edges - 1) : 0;
}

BinHierarchy build_hierarchy(const SampleAccumulator& acc, std::uint64_t min_count) {
  if (acc.total() < 2) throw Error("hierarchy needs at least two recorded points");
  BinHierarchy h;
  h.domain = acc.domain();
  h.total = acc.total();
  h.min_count = min_count;
  h.edges.assign(acc.edges().begin(), acc.edges().end());

  const int depth = acc.levels();
  h.levels.resize(static_cast<std::size_t>(depth) + 1);
  auto finish = [&](HierarchyBin& b) {
    b.estimate = integral(b.stats, h.total);
    b.usable = b.stats.count >= min_count;
  };

  auto& finest = h.levels.back();
  finest.n = depth;
  finest.weight = std::ldexp(1.0, -depth);
  finest.bins.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    auto& b = finest.bins[i];
    b.level = depth;
    b.index = i;
    b.lo = acc.edges()[i];
    b.hi = acc.edges()[i + 1];
    b.stats = acc.bin(i);
    finish(b);
  }
  for (int n = depth - 1; n >= 0; --n) {
    const auto& children = h.levels[static_cast<std::size_t>(n) + 1].bins;
    auto& lvl = h.levels[static_cast<std::size_t>(n)];
    lvl.n = n;
    lvl.weight = std::ldexp(1.0, -n);
    lvl.bins.resize(children.size() / 2);
    for (std::size_t j = 0; j < lvl.bins.size(); ++j) {
      const auto& left = children[2 * j];
      const auto& right = children[2 * j + 1];
      auto& b = lvl.bins[j];
      b.level = n;
      b.index = j;
      b.lo = left.lo;
      b.hi = right.hi;
      b.stats = pool(left.stats, right.stats);
      finish(b);
    }
  }
  return h;
}

std::vector<HierarchyBin> bins_inside(const BinHierarchy& h, double lo, double hi, int level) {
  std::vector<HierarchyBin> out;
  if (level < 0 || level > h.depth()) return out;
  const auto& bins = h.level(level).bins;
  // Bins are ordered; find the first with bin.lo >= lo.
  auto it = std::lower_bound(bins.begin(), bins.end(), lo,
                             [](const HierarchyBin& b, double x) { return b.lo < x; });
  for (; it != bins.end() && it->hi <= hi; ++it) out.push_back(*it);
  return out;
}

namespace {

void refine(const BinHierarchy& h, int n, std::size_t idx, std::vector<HierarchyBin>& out) {
  const auto& b = h.level(n).bins[idx];
  if (n < h.depth()) {
    const auto& next = h.level(n + 1).bins;
    if (next[2 * idx].usable && next[2 * idx + 1].usable) {
      refine(h, n + 1, 2 * idx, out);
      refine(h, n + 1, 2 * idx + 1, out);
      return;
    }
  }
  if (b.usable) out.push_back(b);
}

}  // namespace

BinHierarchy finest_usable_partition(const BinHierarchy& h) {
  BinHierarchy out;
  out.domain = h.domain;
  out.total = h.total;
  out.min_count = h.min_count;
  out.edges = h.edges;
  BinLevel lvl;
  lvl.n = h.depth();
  lvl.weight = 1.0;
  refine(h, 0, 0, lvl.bins);
  out.levels.push_back(std::move(lvl));
  return out;
}

}  // namespace bhm
