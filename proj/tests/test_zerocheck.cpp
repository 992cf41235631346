#include <cmath>

#include <doctest.h>

#include "bhm/testbed.hpp"
#include "bhm/zerocheck.hpp"
#include "support.hpp"

using namespace bhm;

namespace {

// Hierarchy whose level n has the given excess of the zero-function chi-square.
BinHierarchy with_excess(const std::vector<double>& excess) {
  BinHierarchy h;
  h.domain = Domain(0, 1);
  h.total = 1000;
  for (std::size_t n = 0; n < excess.size(); ++n) {
    BinLevel lvl;
    lvl.n = static_cast<int>(n);
    lvl.weight = std::ldexp(1.0, -lvl.n);
    const std::size_t count = std::size_t{1} << n;
    const double nt = static_cast<double>(count);
    const double r = std::sqrt(1 + excess[n] * std::sqrt(2 / nt));
    for (std::size_t i = 0; i < count; ++i) {
      HierarchyBin b;
      b.level = lvl.n;
      b.index = i;
      b.lo = static_cast<double>(i) / nt;
      b.hi = static_cast<double>(i + 1) / nt;
      b.usable = true;
      b.estimate = {r, 1.0, 100};
      lvl.bins.push_back(b);
    }
    h.levels.push_back(lvl);
  }
  return h;
}

ZeroCondition triggered(const std::vector<double>& excess) {
  const auto v = check_zero(with_excess(excess));
  REQUIRE(v.condition.has_value());
  CHECK_FALSE(v.consistent_with_zero);
  return *v.condition;
}

}  // namespace

TEST_CASE("all-zero data") {
  SampleAccumulator acc(Domain(0, 1), 3);
  for (int i = 0; i < 400; ++i) acc.record((i + 0.5) / 400, 0.0);
  const auto v = check_zero(build_hierarchy(acc));
  CHECK(v.consistent_with_zero);
  CHECK_FALSE(v.condition.has_value());
}

TEST_CASE("single bin four sigma away") {
  SampleAccumulator acc(Domain(0, 1), 0);
  // count = N = 100, mean 1, dI = sqrt(m2 / (99 * 100)) = 0.25.
  acc.assign({BinStats{100, 1.0, 0.0625 * 99 * 100}});
  const auto v = check_zero(build_hierarchy(acc));
  REQUIRE(v.levels.size() == 1);
  CHECK(v.levels[0].excess == doctest::Approx(15 / std::sqrt(2.0)));
  CHECK(v.condition == ZeroCondition::I);
}

TEST_CASE("each condition is reachable") {
  CHECK(triggered({4.5, 0, 0, 0}) == ZeroCondition::I);
  CHECK(triggered({3.5, 3.5, 0, 0}) == ZeroCondition::II);
  CHECK(triggered({3.5, 2.5, 2.5, 0}) == ZeroCondition::III);
  CHECK(triggered({2.5, 2.5, 2.5, 2.5}) == ZeroCondition::IV);

  CHECK(check_zero(with_excess({2.5, 2.5, 2.5, 0})).consistent_with_zero);
  CHECK(check_zero(with_excess({3.5, 2.5, 0, 0})).consistent_with_zero);
  CHECK(check_zero(with_excess({3.9, 1.9, 1.9, 1.9})).consistent_with_zero);
}

TEST_CASE("exactly known nonzero bin") {
  SampleAccumulator acc(Domain(0, 1), 1);
  for (int i = 0; i < 100; ++i) acc.record((i + 0.5) / 100, 1.0);
  const auto v = check_zero(build_hierarchy(acc));
  CHECK(std::isinf(v.levels[0].excess));
  CHECK(v.condition == ZeroCondition::I);
}

TEST_CASE("sign toy at small and large samples") {
  const auto d = builtin("signtoy");
  auto small = make_accumulator(d, 8);
  sample(d, 100000, 1, small);
  CHECK(check_zero(build_hierarchy(small)).consistent_with_zero);

  auto large = make_accumulator(d, 8);
  sample(d, 10000000, 1, large);
  CHECK_FALSE(check_zero(build_hierarchy(large)).consistent_with_zero);
}

TEST_CASE("evolution acceptance") {
  const auto f = bhm::testing::single_piece(0, 2, {1.0, 0.5});
  CHECK(evolution_accept(f, f, 0.1));

  const auto zero = bhm::testing::single_piece(0, 2, {0.0});
  const auto c = bhm::testing::single_piece(0, 2, {3.0});
  CHECK_FALSE(evolution_accept(zero, c, 0.5));
  CHECK_FALSE(evolution_accept(zero, c, 0.99));
  CHECK(evolution_accept(zero, c, 1.01));
  CHECK(absolute_difference_integral(c, &zero) == doctest::Approx(6.0));
}
