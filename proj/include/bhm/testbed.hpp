#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "bhm/splinefit.hpp"
#include "bhm/transforms.hpp"

namespace bhm {

enum class SamplerKind { InverseCdf, Rejection, MarkovChain };

/// Reference target with its default sampler. Points are drawn from |f| (or,
/// for the sign toy, from f_1 + f_-1) and recorded with v = sign f, so a
/// histogram estimates f / norm.
struct TestDistribution {
  std::string name;
  std::function<double(double)> f;
  double lo = 0.0;
  double hi = 1.0;  // may be +inf
  SamplerKind sampler = SamplerKind::Rejection;
  double norm = 1.0;
  double envelope = 0.0;
  std::function<double(double)> inverse_cdf;

  bool bounded() const { return std::isfinite(hi); }
  Domain domain() const;
  /// The function a histogram of this distribution estimates.
  double density(double x) const { return f(x) / norm; }
};

TestDistribution builtin(std::string_view name);
const std::vector<std::string>& builtin_names();

using Rng = std::mt19937_64;

struct Draw {
  double x = 0.0;
  double v = 1.0;
};

/// Two-sector Metropolis chain for f = exp(-0.99 x) - exp(-x) on [0, 3].
struct SignChainState {
  int sector = 1;
  double x = 1.5;
  bool switch_next = true;
};

/// One update, alternating sector switches and x moves. The returned state's
/// (x, sector) is the point to record.
SignChainState sign_chain_step(SignChainState state, Rng& rng);

inline constexpr std::uint64_t kChainBurnIn = 1000;

/// Stateful draw source for a distribution; chains are burnt in on creation.
class Sampler {
 public:
  Sampler(const TestDistribution& dist, std::uint64_t seed);
  Draw next();

 private:
  const TestDistribution* dist_;
  Rng rng_;
  SignChainState chain_;
};

/// Draws n points and records them (through the transform, if any).
void sample(const TestDistribution& dist, std::uint64_t n, std::uint64_t seed,
            SampleAccumulator& acc, const Transform& transform = {});

/// Histogram grid for a distribution: its domain, or the transformed one.
SampleAccumulator make_accumulator(const TestDistribution& dist, int levels,
                                   const Transform& transform = {});

/// n points split into `parts` consecutive blocks, one histogram each.
std::vector<SampleAccumulator> sample_parts(const TestDistribution& dist, std::uint64_t n,
                                            std::uint64_t seed, int levels, std::size_t parts,
                                            const Transform& transform = {});

/// Naive histogram estimate: mean_i N_i / (N Delta_i) on each elementary bin.
struct Staircase {
  std::vector<double> edges;
  std::vector<double> values;
  double operator()(double x) const;
};

Staircase naive_histogram(const SampleAccumulator& acc);

/// Adaptive fit to the finest usable non-overlapping binning only.
FitResult elementary_only_fit(const BinHierarchy& h, const FitConfig& cfg);

}  // namespace bhm
