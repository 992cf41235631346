#include "bhm/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bhm {

namespace {

constexpr double kPi = std::numbers::pi;

double cubic(double x) { return 1.0 - 1.5 * x + 2.0 * x * x - 0.5 * x * x * x; }
double cubic_antiderivative(double x) {
  return x - 0.75 * x * x + (2.0 / 3.0) * x * x * x - 0.125 * x * x * x * x;
}
double quartic(double x) { return x * x * x * x - 0.8 * x * x; }
double quartic_antiderivative(double x) { return std::pow(x, 5) / 5.0 - 0.8 * x * x * x / 3.0; }

double sign_toy(double x) { return std::exp(-0.99 * x) - std::exp(-x); }
double sector_weight(int sector, double x) {
  return sector > 0 ? std::exp(-0.99 * x) : std::exp(-x);
}

TestDistribution make(std::string_view name) {
  TestDistribution d;
  d.name = std::string(name);
  if (name == "cubic") {
    d.f = cubic;
    d.lo = 1.0;
    d.hi = 2.8;
    d.norm = cubic_antiderivative(2.8) - cubic_antiderivative(1.0);
    d.envelope = 2.1;  // max of the cubic on [1, 2.8] is about 2.056
  } else if (name == "quartic") {
    d.f = quartic;
    d.lo = -1.0;
    d.hi = 1.0;
    const double root = std::sqrt(0.8);
    d.norm = 2.0 * (quartic_antiderivative(1.0) - 2.0 * quartic_antiderivative(root));
    d.envelope = 0.2;  // |f| peaks at the endpoints
  } else if (name == "exp") {
    d.f = [](double x) { return std::exp(-3.0 * x); };
    d.lo = 1.0;
    d.hi = 2.8;
    const double a = std::exp(-3.0), b = std::exp(-8.4);
    d.norm = (a - b) / 3.0;
    d.sampler = SamplerKind::InverseCdf;
    d.inverse_cdf = [a, b](double u) { return -std::log(a - u * (a - b)) / 3.0; };
  } else if (name == "cosine") {
    d.f = [](double x) { return 10.0 + std::cos(10.0 * x); };
    d.lo = 1.0;
    d.hi = kPi + 0.6;
    d.norm = 10.0 * (d.hi - d.lo) + (std::sin(10.0 * d.hi) - std::sin(10.0)) / 10.0;
    d.envelope = 11.0;
  } else if (name == "divergent") {
    d.f = [](double x) { return 1.0 / (std::sqrt(x) * (1.0 + x)); };
    d.lo = 0.0;
    d.hi = std::numeric_limits<double>::infinity();
    d.norm = kPi;  // int_0^inf = 2 arctan(sqrt x) |_0^inf
    d.sampler = SamplerKind::InverseCdf;
    d.inverse_cdf = [](double u) {
      const double t = std::tan(0.5 * kPi * u);
      return t * t;
    };
  } else if (name == "signtoy") {
    d.f = sign_toy;
    d.lo = 0.0;
    d.hi = 3.0;
    d.norm = -std::expm1(-2.97) / 0.99 - std::expm1(-3.0);
    d.sampler = SamplerKind::MarkovChain;
  } else {
    throw Error("unknown distribution '" + std::string(name) + "'");
  }
  return d;
}

}  // namespace

Domain TestDistribution::domain() const {
  if (!bounded()) throw Error("distribution '" + name + "' has a semi-infinite domain");
  return Domain(lo, hi);
}

TestDistribution builtin(std::string_view name) { return make(name); }

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"cubic",  "quartic",   "exp",
                                              "cosine", "divergent", "signtoy"};
  return names;
}

SignChainState sign_chain_step(SignChainState s, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (s.switch_next) {
    const double ratio = sector_weight(-s.sector, s.x) / sector_weight(s.sector, s.x);
    if (unit(rng) < ratio) s.sector = -s.sector;
  } else {
    const double proposal = 3.0 * unit(rng);
    const double ratio = sector_weight(s.sector, proposal) / sector_weight(s.sector, s.x);
    if (unit(rng) < ratio) s.x = proposal;
  }
  s.switch_next = !s.switch_next;
  return s;
}

Sampler::Sampler(const TestDistribution& dist, std::uint64_t seed) : dist_(&dist), rng_(seed) {
  if (dist.sampler == SamplerKind::MarkovChain)
    for (std::uint64_t i = 0; i < kChainBurnIn; ++i) chain_ = sign_chain_step(chain_, rng_);
}

Draw Sampler::next() {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& d = *dist_;
  switch (d.sampler) {
    case SamplerKind::InverseCdf: {
      const double x = d.inverse_cdf(unit(rng_));
      return {x, d.f(x) < 0.0 ? -1.0 : 1.0};
    }
    case SamplerKind::Rejection: {
      for (;;) {
        const double x = d.lo + (d.hi - d.lo) * unit(rng_);
        const double fx = d.f(x);
        if (std::abs(fx) > d.envelope) throw Error("rejection envelope violated for " + d.name);
        if (unit(rng_) * d.envelope < std::abs(fx)) return {x, fx < 0.0 ? -1.0 : 1.0};
      }
    }
    case SamplerKind::MarkovChain: {
      chain_ = sign_chain_step(chain_, rng_);
      return {chain_.x, static_cast<double>(chain_.sector)};
    }
  }
  return {};
}

SampleAccumulator make_accumulator(const TestDistribution& dist, int levels,
                                   const Transform& transform) {
  if (transform.identity()) return SampleAccumulator(dist.domain(), levels);
  if (dist.lo != 0.0 && transform.kind != TransformKind::Custom)
    throw Error("semi-infinite transforms assume a domain starting at 0");
  const Domain original(dist.lo, dist.bounded() ? dist.hi : dist.lo + 1.0);
  return SampleAccumulator(transform.target_domain(original), levels);
}

namespace {

void record_draw(SampleAccumulator& acc, const Draw& d, const Transform& t) {
  if (t.identity() && t.weight_power == 0.0) {
    acc.record(d.x, d.v);
    return;
  }
  const auto fw = forward(t, d.x);
  acc.record(fw.y, d.v * fw.weight);
}

}  // namespace

void sample(const TestDistribution& dist, std::uint64_t n, std::uint64_t seed,
            SampleAccumulator& acc, const Transform& transform) {
  if (n == 0) return;
  Sampler s(dist, seed);
  for (std::uint64_t i = 0; i < n; ++i) record_draw(acc, s.next(), transform);
}

std::vector<SampleAccumulator> sample_parts(const TestDistribution& dist, std::uint64_t n,
                                            std::uint64_t seed, int levels, std::size_t parts,
                                            const Transform& transform) {
  if (parts == 0) throw Error("need at least one part");
  std::vector<SampleAccumulator> out(parts, make_accumulator(dist, levels, transform));
  Sampler s(dist, seed);
  for (std::size_t p = 0; p < parts; ++p) {
    const std::uint64_t begin = n * p / parts, end = n * (p + 1) / parts;
    for (std::uint64_t i = begin; i < end; ++i) record_draw(out[p], s.next(), transform);
  }
  return out;
}

double Staircase::operator()(double x) const {
  if (x < edges.front() || x > edges.back()) throw Error("x outside the histogram");
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  auto i = static_cast<std::size_t>(it - edges.begin());
  i = std::min(i == 0 ? 0 : i - 1, values.size() - 1);
  return values[i];
}

Staircase naive_histogram(const SampleAccumulator& acc) {
  Staircase s;
  s.edges.assign(acc.edges().begin(), acc.edges().end());
  s.values.resize(acc.size(), 0.0);
  if (acc.total() == 0) return s;
  const auto n = static_cast<double>(acc.total());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const auto& b = acc.bin(i);
    s.values[i] = b.mean * static_cast<double>(b.count) / (n * (s.edges[i + 1] - s.edges[i]));
  }
  return s;
}

FitResult elementary_only_fit(const BinHierarchy& h, const FitConfig& cfg) {
  return adaptive_fit(finest_usable_partition(h), cfg);
}

}  // namespace bhm
