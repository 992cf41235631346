#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bhm {

/// Raised when input data or files violate a documented contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Domain {
  double lo = 0.0;
  double hi = 1.0;

  Domain() = default;
  Domain(double lo, double hi);

  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  friend bool operator==(const Domain&, const Domain&) = default;
};

/// Streaming statistics of the values recorded into one bin.
/// m2 is the sum of squared deviations from the mean, (count - 1) * Var.
struct BinStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++count;
    const double delta = v - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (v - mean);
  }

  /// Statistics of this bin's sample list repeated `times` times.
  BinStats repeated(std::uint64_t times) const;

  friend bool operator==(const BinStats&, const BinStats&) = default;
};

/// Pooled statistics of the union of two sample lists.
BinStats pool(const BinStats& a, const BinStats& b);

struct IntegralEstimate {
  double value = 0.0;
  double error = 0.0;
  std::uint64_t count = 0;
};

/// Sampled integral I = mean * count / total and its error. Requires total >= 2.
IntegralEstimate integral(const BinStats& bin, std::uint64_t total);

inline constexpr std::size_t kDefaultMaxBins = std::size_t{1} << 26;

/// 2^K elementary bins over a domain, each holding streaming statistics of
/// the values recorded into it. Single writer; combine workers with merge().
class SampleAccumulator {
 public:
  SampleAccumulator(Domain domain, int levels,
                    std::optional<std::vector<double>> edges = std::nullopt,
                    std::size_t max_bins = kDefaultMaxBins);

  void record(double x, double v);

  /// Index of the elementary bin owning x. Interior edges belong to the
  /// right-hand bin, the upper domain boundary to the last bin.
  std::size_t locate(double x) const;

  const Domain& domain() const { return domain_; }
  int levels() const { return levels_; }
  std::size_t size() const { return bins_.size(); }
  std::span<const double> edges() const { return edges_; }
  bool uniform() const { return uniform_; }
  std::span<const BinStats> bins() const { return bins_; }
  const BinStats& bin(std::size_t i) const { return bins_.at(i); }
  std::uint64_t total() const { return total_; }

  IntegralEstimate integral(std::size_t i) const { return bhm::integral(bins_.at(i), total_); }

  bool same_grid(const SampleAccumulator& other) const;

  /// In-place pooled merge. Throws Error on grid mismatch.
  SampleAccumulator& merge(const SampleAccumulator& other, std::uint64_t multiplicity = 1);

  /// Replace statistics wholesale (file readers, tests).
  void assign(std::vector<BinStats> bins);

 private:
  Domain domain_;
  int levels_;
  bool uniform_;
  std::vector<double> edges_;
  std::vector<BinStats> bins_;
  std::uint64_t total_ = 0;
};

SampleAccumulator merge(const SampleAccumulator& a, const SampleAccumulator& b);

/// Sum of the parts, each counted with its integer multiplicity. Equivalent to
/// recording part i's sample list weights[i] times.
SampleAccumulator weighted_merge(std::span<const SampleAccumulator> parts,
                                 std::span<const std::uint64_t> weights);

// BHMHIST v1 text format.
void write_histogram(std::ostream& out, const SampleAccumulator& acc);
SampleAccumulator read_histogram(std::istream& in);
void save_histogram(const std::string& path, const SampleAccumulator& acc);
SampleAccumulator load_histogram(const std::string& path);

}  // namespace bhm
