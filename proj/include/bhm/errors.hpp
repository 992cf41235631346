#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bhm/splinefit.hpp"

namespace bhm {

enum class ErrorMethod { Covariance, Bootstrap, Evolution };

std::string_view to_string(ErrorMethod m);

/// One standard error of the fitted spline on a grid.
struct ErrorBand {
  std::vector<double> x;
  std::vector<double> sigma;
  ErrorMethod method = ErrorMethod::Covariance;
};

inline constexpr std::size_t kDefaultGridPoints = 512;

std::vector<double> uniform_grid(const Domain& d, std::size_t points = kDefaultGridPoints);

/// sqrt(sum_ij C_ij u^{i+j}) with the owning piece's coefficient covariance.
double covariance_error(const SplineModel& model, double x);
ErrorBand covariance_band(const SplineModel& model, std::span<const double> grid);

struct BootstrapResult {
  ErrorBand band;
  /// replicas x grid values of the replica fits.
  std::vector<std::vector<double>> values;
  std::size_t redrawn = 0;
};

/// Bootstrap over M partial histograms: each replica is a multinomial(M)
/// integer combination of the parts, fitted with the knots held fixed and no
/// acceptance test. Rank-deficient replicas are redrawn; more than 10% of
/// redraws aborts. Deterministic for a given seed at any thread count.
BootstrapResult bootstrap(std::span<const SampleAccumulator> parts,
                          const std::vector<double>& knots, const FitConfig& cfg,
                          std::size_t replicas, std::span<const double> grid, std::uint64_t seed,
                          int threads = 1);

ErrorBand bootstrap_error(std::span<const SampleAccumulator> parts,
                          const std::vector<double>& knots, const FitConfig& cfg,
                          std::size_t replicas, std::span<const double> grid, std::uint64_t seed,
                          int threads = 1);

/// Fits saved every `delta` samples, evaluated on a fixed grid. snapshots[k-1]
/// holds the fit after k * delta samples.
struct EvolutionTrace {
  std::uint64_t delta = 0;
  int k0 = 1;
  std::vector<double> grid;
  std::vector<std::vector<double>> snapshots;

  void add(const SplineModel& model);
};

/// Trace from consecutive sample blocks (one stream, in order): a snapshot
/// every `per_snapshot` blocks, each an adaptive fit of everything so far.
/// Snapshots are fitted without the jump constraint.
EvolutionTrace evolution_trace(std::span<const SampleAccumulator> blocks, std::size_t per_snapshot,
                               const FitConfig& cfg, std::span<const double> grid, int k0);

/// Per-grid-point dispersion of the increments A_k = k f_k - (k-1) f_{k-1}, k > k0.
std::vector<double> increment_dispersion(const EvolutionTrace& trace);

/// sigma_* / sqrt(k_final) at every grid point.
ErrorBand evolution_error(const EvolutionTrace& trace);

inline constexpr std::size_t kMinRobustRuns = 30;

/// Half-width of the smallest interval around the ensemble mean holding
/// 68.27% of the values; one standard error on the same scale as the others.
double robust_error(std::span<const double> values);
double robust_error(std::span<const SplineModel> runs, double x);

}  // namespace bhm
