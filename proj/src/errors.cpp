#include "bhm/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

#include "bhm/parallel.hpp"

namespace bhm {

std::string_view to_string(ErrorMethod m) {
  switch (m) {
    case ErrorMethod::Covariance: return "covariance";
    case ErrorMethod::Bootstrap: return "bootstrap";
    case ErrorMethod::Evolution: return "evolution";
  }
  return "unknown";
}

std::vector<double> uniform_grid(const Domain& d, std::size_t points) {
  if (points < 2) throw Error("a grid needs at least two points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = d.lo + d.width() * (static_cast<double>(i) / static_cast<double>(points - 1));
  g.back() = d.hi;
  return g;
}

double covariance_error(const SplineModel& model, double x) {
  const auto& p = model.pieces.at(model.locate(x));
  if (p.cov.size() == 0) throw Error("spline carries no covariance");
  const double u = p.local(x);
  Eigen::VectorXd powers(p.coeffs.size());
  double acc = 1.0;
  for (Eigen::Index k = 0; k < powers.size(); ++k, acc *= u) powers(k) = acc;
  const double var = powers.dot(p.cov * powers);
  const double scale = std::max(1e-300, p.cov.diagonal().cwiseAbs().maxCoeff());
  if (var < -1e-12 * scale) throw Error("negative variance: corrupted covariance");
  return std::sqrt(std::max(0.0, var));
}

ErrorBand covariance_band(const SplineModel& model, std::span<const double> grid) {
  ErrorBand band{{grid.begin(), grid.end()}, {}, ErrorMethod::Covariance};
  band.sigma.reserve(grid.size());
  for (double x : grid) band.sigma.push_back(covariance_error(model, x));
  return band;
}

namespace {

std::vector<double> column_sigma(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  std::vector<double> sigma(cols, 0.0);
  if (rows.size() < 2) return sigma;
  for (std::size_t c = 0; c < cols; ++c) {
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
      ++n;
      const double d = r[c] - mean;
      mean += d / static_cast<double>(n);
      m2 += d * (r[c] - mean);
    }
    sigma[c] = std::sqrt(m2 / static_cast<double>(n - 1));
  }
  return sigma;
}

}  // namespace

BootstrapResult bootstrap(std::span<const SampleAccumulator> parts,
                          const std::vector<double>& knots, const FitConfig& cfg,
                          std::size_t replicas, std::span<const double> grid, std::uint64_t seed,
                          int threads) {
  const std::size_t m = parts.size();
  if (m == 0) throw Error("bootstrap needs at least one partial histogram");
  if (replicas < m) throw Error("bootstrap needs at least as many replicas as parts");
  for (const auto& p : parts)
    if (!p.same_grid(parts.front())) throw Error("partial histograms must share one grid");

  BootstrapResult out;
  out.values.assign(replicas, {});
  const auto max_redraws = replicas / 10;
  std::atomic<std::size_t> redrawn{0};

  parallel_for(replicas, threads, [&](std::size_t r) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(r)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    for (;;) {
      std::vector<std::uint64_t> weights(m, 0);
      for (std::size_t i = 0; i < m; ++i) ++weights[pick(rng)];
      const auto combined = weighted_merge(parts, weights);
      try {
        const auto h = build_hierarchy(combined, cfg.min_count);
        const auto fit = fit_division(h, knots, cfg);
        if (fit.diagnostics.rank < fit.model.params.size()) throw FitError("rank deficient");
        std::vector<double> v;
        v.reserve(grid.size());
        for (double x : grid) v.push_back(fit.model(x));
        out.values[r] = std::move(v);
        return;
      } catch (const FitError&) {
        if (redrawn.fetch_add(1) + 1 > max_redraws)
          throw Error("bootstrap aborted: more than 10% of replicas were rank deficient");
      }
    }
  });

  out.redrawn = redrawn.load();
  out.band.x.assign(grid.begin(), grid.end());
  out.band.method = ErrorMethod::Bootstrap;
  out.band.sigma = column_sigma(out.values, grid.size());
  return out;
}

ErrorBand bootstrap_error(std::span<const SampleAccumulator> parts,
                          const std::vector<double>& knots, const FitConfig& cfg,
                          std::size_t replicas, std::span<const double> grid, std::uint64_t seed,
                          int threads) {
  return bootstrap(parts, knots, cfg, replicas, grid, seed, threads).band;
}

void EvolutionTrace::add(const SplineModel& model) {
  std::vector<double> v;
  v.reserve(grid.size());
  for (double x : grid) v.push_back(model(x));
  snapshots.push_back(std::move(v));
}

EvolutionTrace evolution_trace(std::span<const SampleAccumulator> blocks, std::size_t per_snapshot,
                               const FitConfig& cfg, std::span<const double> grid, int k0) {
  if (blocks.empty()) throw Error("evolution analysis needs sample blocks");
  if (per_snapshot == 0) throw Error("snapshot interval must hold at least one block");
  EvolutionTrace trace;
  trace.k0 = k0;
  trace.grid.assign(grid.begin(), grid.end());
  // The jump constraint picks its weight by a search on acceptability, which
  // makes consecutive fits jump; k f_k - (k-1) f_{k-1} amplifies that by k.
  FitConfig snap = cfg;
  snap.jump_constraint = false;
  SampleAccumulator acc = blocks.front();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) acc.merge(blocks[i]);
    if ((i + 1) % per_snapshot != 0) continue;
    if (trace.snapshots.empty()) trace.delta = acc.total();
    trace.add(adaptive_fit(build_hierarchy(acc, snap.min_count), snap).model);
  }
  return trace;
}

std::vector<double> increment_dispersion(const EvolutionTrace& trace) {
  if (trace.k0 < 1) throw Error("evolution cutoff k0 must be at least 1");
  const auto k_final = trace.snapshots.size();
  if (k_final < static_cast<std::size_t>(trace.k0) + 2)
    throw Error("evolution analysis needs at least k0 + 2 snapshots");
  for (const auto& s : trace.snapshots)
    if (s.size() != trace.grid.size()) throw Error("snapshot does not match the grid");

  std::vector<std::vector<double>> increments;
  for (std::size_t k = static_cast<std::size_t>(trace.k0) + 1; k <= k_final; ++k) {
    const auto& cur = trace.snapshots[k - 1];
    const auto& prev = trace.snapshots[k - 2];
    std::vector<double> a(cur.size());
    const auto kk = static_cast<double>(k);
    for (std::size_t i = 0; i < cur.size(); ++i) a[i] = kk * cur[i] - (kk - 1.0) * prev[i];
    increments.push_back(std::move(a));
  }
  return column_sigma(increments, trace.grid.size());
}

ErrorBand evolution_error(const EvolutionTrace& trace) {
  auto sigma = increment_dispersion(trace);
  const double root_k = std::sqrt(static_cast<double>(trace.snapshots.size()));
  for (auto& s : sigma) s /= root_k;
  return {trace.grid, std::move(sigma), ErrorMethod::Evolution};
}

double robust_error(std::span<const double> values) {
  if (values.size() < kMinRobustRuns)
    throw Error("robust error needs at least " + std::to_string(kMinRobustRuns) + " runs");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v : values) dev.push_back(std::abs(v - mean));
  const auto need = static_cast<std::size_t>(std::ceil(0.6827 * static_cast<double>(dev.size())));
  std::nth_element(dev.begin(), dev.begin() + static_cast<long>(need - 1), dev.end());
  return dev[need - 1];
}

double robust_error(std::span<const SplineModel> runs, double x) {
  std::vector<double> v;
  v.reserve(runs.size());
  for (const auto& m : runs) v.push_back(m(x));
  return robust_error(v);
}

}  // namespace bhm
