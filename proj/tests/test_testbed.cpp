#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "bhm/testbed.hpp"
#include "support.hpp"

using namespace bhm;
using bhm::testing::simpson;

TEST_CASE("signs of the test functions") {
  CHECK(builtin("quartic").f(0.5) == doctest::Approx(0.0625 - 0.2));
  CHECK(builtin("quartic").f(0.5) < 0);
  for (const char* name : {"cubic", "cosine", "exp"}) {
    const auto d = builtin(name);
    double lowest = INFINITY;
    for (int i = 0; i <= 1000; ++i) lowest = std::min(lowest, d.f(d.lo + (d.hi - d.lo) * i / 1000));
    CHECK(lowest > 0);
  }
  CHECK_THROWS_AS(builtin("gaussian"), Error);
}

TEST_CASE("norms") {
  for (const auto& name : builtin_names()) {
    const auto d = builtin(name);
    if (!d.bounded()) continue;
    const double q = simpson([&](double x) { return std::abs(d.f(x)); }, d.lo, d.hi, 400000);
    if (name == "signtoy") {
      const double both = simpson([](double x) { return std::exp(-0.99 * x) + std::exp(-x); },
                                  d.lo, d.hi);
      CHECK(d.norm == doctest::Approx(both).epsilon(1e-9));
    } else {
      CHECK(d.norm == doctest::Approx(q).epsilon(1e-7));
    }
  }
  // int_0^inf x^-1/2 (1 + x)^-1 dx = pi
  CHECK(builtin("divergent").norm == doctest::Approx(M_PI));
}

TEST_CASE("no samples leave the accumulator empty") {
  const auto d = builtin("cubic");
  auto acc = make_accumulator(d, 4);
  sample(d, 0, 1, acc);
  CHECK(acc.total() == 0);
}

TEST_CASE("importance-sampled positive target integrates to one") {
  const auto d = builtin("cubic");
  auto acc = make_accumulator(d, 6);
  sample(d, 10000, 1, acc);
  const auto h = build_hierarchy(acc);
  CHECK(h.top().estimate.value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(h.top().estimate.error == 0.0);
}

TEST_CASE("quartic integral") {
  const auto d = builtin("quartic");
  auto acc = make_accumulator(d, 6);
  sample(d, 10000, 1, acc);
  const auto top = build_hierarchy(acc).top().estimate;
  const double want = 2 * (0.2 - 0.8 / 3) / d.norm;
  CHECK(std::abs(top.value - want) <= 4 * top.error);
}

TEST_CASE("samplers reproduce and follow the target") {
  for (const char* name : {"cubic", "quartic", "exp", "cosine"}) {
    const auto d = builtin(name);
    auto a = make_accumulator(d, 5), b = make_accumulator(d, 5);
    sample(d, 5000, 17, a);
    sample(d, 5000, 17, b);
    CHECK(std::equal(a.bins().begin(), a.bins().end(), b.bins().begin()));

    // Kolmogorov-Smirnov against the CDF of |f|, 1% critical value.
    constexpr int n = 100000;
    Sampler s(d, 23);
    std::vector<double> xs(n);
    for (auto& x : xs) x = s.next().x;
    std::sort(xs.begin(), xs.end());
    constexpr int grid = 4000;
    std::vector<double> cdf(grid + 1, 0.0);
    const double h = (d.hi - d.lo) / grid;
    for (int i = 1; i <= grid; ++i)
      cdf[i] = cdf[i - 1] + simpson([&](double x) { return std::abs(d.f(x)); },
                                    d.lo + (i - 1) * h, d.lo + i * h, 20);
    double ks = 0;
    for (int i = 0; i < n; ++i) {
      const double pos = (xs[i] - d.lo) / h;
      const int k = std::min(grid - 1, static_cast<int>(pos));
      const double c = (cdf[k] + (pos - k) * (cdf[k + 1] - cdf[k])) / cdf[grid];
      ks = std::max({ks, std::abs(c - double(i) / n), std::abs(c - double(i + 1) / n)});
    }
    CHECK_MESSAGE(ks < 1.628 / std::sqrt(double(n)), name);
  }
}

TEST_CASE("sign chain") {
  // At x = 0 both sectors weigh the same, so every switch is accepted.
  Rng rng(3);
  SignChainState s{1, 0.0, true};
  for (int i = 0; i < 10; ++i) {
    const int before = s.sector;
    s = sign_chain_step(s, rng);
    CHECK(s.sector == -before);
    s.switch_next = true;
  }

  // Stationary mean of the recorded sign, with batch-means standard error.
  const auto d = builtin("signtoy");
  Sampler chain(d, 5);
  constexpr int batches = 100, per = 100000;
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double sum = 0;
    for (int i = 0; i < per; ++i) sum += chain.next().v;
    means.push_back(sum / per);
  }
  double mean = 0, var = 0;
  for (double m : means) mean += m / batches;
  for (double m : means) var += (m - mean) * (m - mean) / (batches - 1);
  const double a = -std::expm1(-2.97) / 0.99, b = -std::expm1(-3.0);
  const double want = (a - b) / (a + b);
  CHECK(want > 0);
  CHECK(std::abs(mean - want) <= 3 * std::sqrt(var / batches));
}

TEST_CASE("naive histogram") {
  SampleAccumulator one(Domain(0, 2), 0);
  for (int i = 0; i < 10; ++i) one.record(0.1 * i, 1.0);
  CHECK(naive_histogram(one)(1.0) == doctest::Approx(0.5));

  const auto d = builtin("exp");
  auto acc = make_accumulator(d, 5);
  sample(d, 20000, 2, acc);
  const auto st = naive_histogram(acc);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double w = st.edges[i + 1] - st.edges[i];
    CHECK(st.values[i] * w == doctest::Approx(acc.integral(i).value).epsilon(1e-14));
  }
}

TEST_CASE("elementary-only fit on consistent data") {
  const auto h = bhm::testing::exact_hierarchy(Domain(0, 1), 5, [](double x) { return x * x * x; });
  const auto full = adaptive_fit(h, FitConfig{});
  const auto elem = elementary_only_fit(h, FitConfig{});
  REQUIRE(full.model.size() == elem.model.size());
  for (double x : {0.0, 0.3, 0.77, 1.0})
    CHECK(elem.model(x) == doctest::Approx(full.model(x)).epsilon(1e-9));
}
