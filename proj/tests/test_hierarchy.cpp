#include <random>
#include <vector>

#include <doctest.h>

#include "bhm/hierarchy.hpp"

using namespace bhm;

namespace {

SampleAccumulator with_counts(const std::vector<std::uint64_t>& counts) {
  int k = 0;
  while ((std::size_t{1} << k) < counts.size()) ++k;
  SampleAccumulator acc(Domain(0, 1), k);
  std::vector<BinStats> bins;
  for (auto c : counts) bins.push_back({c, c ? 1.0 : 0.0, 0.0});
  acc.assign(bins);
  return acc;
}

}  // namespace

TEST_CASE("usable flags follow pooled counts") {
  const auto h = build_hierarchy(with_counts({3, 0, 5, 2}), 4);
  REQUIRE(h.depth() == 2);
  std::vector<bool> l2, l1;
  for (const auto& b : h.level(2).bins) l2.push_back(b.usable);
  for (const auto& b : h.level(1).bins) l1.push_back(b.usable);
  CHECK(l2 == std::vector<bool>{false, false, true, false});
  CHECK(l1 == std::vector<bool>{false, true});
  CHECK(h.level(1).bins[0].stats.count == 3);
  CHECK(h.level(1).bins[1].stats.count == 7);
  CHECK(h.top().usable);
  CHECK(h.top().stats.count == 10);
  CHECK(h.level(2).weight == 0.25);
}

TEST_CASE("depth zero") {
  const auto acc = with_counts({12});
  const auto h = build_hierarchy(acc);
  REQUIRE(h.depth() == 0);
  CHECK(h.top().stats == acc.bin(0));
  CHECK(h.top().lo == 0.0);
  CHECK(h.top().hi == 1.0);
}

TEST_CASE("parents pool their children") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> g;
  SampleAccumulator acc(Domain(0, 1), 4);
  std::vector<double> all;
  std::vector<double> left_half;
  for (int i = 0; i < 3000; ++i) {
    const double x = u(rng), v = g(rng);
    acc.record(x, v);
    all.push_back(v);
    if (x < 0.5) left_half.push_back(v);
  }
  const auto h = build_hierarchy(acc);
  auto stats = [](const std::vector<double>& v) {
    double m = 0, m2 = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) m2 += (x - m) * (x - m);
    return std::pair{m, m2};
  };
  const auto [m, m2] = stats(all);
  CHECK(h.top().stats.mean == doctest::Approx(m).epsilon(1e-12));
  CHECK(h.top().stats.m2 == doctest::Approx(m2).epsilon(1e-12));
  const auto [lm, lm2] = stats(left_half);
  CHECK(h.level(1).bins[0].stats.mean == doctest::Approx(lm).epsilon(1e-12));
  CHECK(h.level(1).bins[0].stats.m2 == doctest::Approx(lm2).epsilon(1e-12));

  for (int n = 0; n < h.depth(); ++n)
    for (std::size_t i = 0; i < h.level(n).bins.size(); ++i) {
      const auto& p = h.level(n).bins[i].estimate.value;
      const auto& c = h.level(n + 1).bins;
      CHECK(p == doctest::Approx(c[2 * i].estimate.value + c[2 * i + 1].estimate.value)
                     .epsilon(1e-13));
    }
}

TEST_CASE("top bin of an all-positive importance sample is exact") {
  SampleAccumulator acc(Domain(0, 1), 3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) acc.record(u(rng), 1.0);
  const auto h = build_hierarchy(acc);
  CHECK(h.top().estimate.value == 1.0);
  CHECK(h.top().estimate.error == 0.0);
  CHECK(h.top().exact());
}

TEST_CASE("bins_inside") {
  const auto h = build_hierarchy(with_counts({3, 0, 5, 2}), 1);
  CHECK(bins_inside(h, 0, 1, 2).size() == 4);
  CHECK(bins_inside(h, 0, 1, 1).size() == 2);
  CHECK(bins_inside(h, 0.2, 0.7, 0).empty());
  const auto inside = bins_inside(h, 0.25, 1.0, 2);
  REQUIRE(inside.size() == 3);
  CHECK(inside[0].index == 1);
  CHECK(inside[1].index == 2);
  CHECK(inside[2].index == 3);
  CHECK(h.elementary_bins_inside(0.25, 1.0) == 3);
}

TEST_CASE("finest usable partition") {
  // Siblings are split only when both halves are usable.
  const auto h = build_hierarchy(with_counts({12, 3, 14, 20}), 10);
  const auto f = finest_usable_partition(h);
  REQUIRE(f.levels.size() == 1);
  const auto& bins = f.levels.front().bins;
  REQUIRE(bins.size() == 3);
  CHECK(bins[0].hi == 0.5);
  CHECK(bins[0].stats.count == 15);
  CHECK(bins[1].lo == 0.5);
  CHECK(bins[1].hi == 0.75);
  CHECK(bins[2].stats.count == 20);
}
