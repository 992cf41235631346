#include "bhm/accum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "format.hpp"

namespace bhm {

Domain::Domain(double lo_, double hi_) : lo(lo_), hi(hi_) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
    throw Error("domain requires finite lo < hi, got [" + format_real(lo) + ", " +
                format_real(hi) + "]");
}

BinStats BinStats::repeated(std::uint64_t times) const {
  if (times == 0 || count == 0) return {};
  return {count * times, mean, m2 * static_cast<double>(times)};
}

BinStats pool(const BinStats& a, const BinStats& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  const auto na = static_cast<double>(a.count);
  const auto nb = static_cast<double>(b.count);
  const std::uint64_t count = a.count + b.count;
  const auto n = static_cast<double>(count);
  const double delta = b.mean - a.mean;
  BinStats out;
  out.count = count;
  out.mean = (na * a.mean + nb * b.mean) / n;
  out.m2 = a.m2 + b.m2 + delta * delta * (na * nb / n);
  return out;
}

IntegralEstimate integral(const BinStats& bin, std::uint64_t total) {
  if (total < 2) throw Error("integral error needs at least two recorded points");
  IntegralEstimate est;
  est.count = bin.count;
  if (bin.count == 0) return est;
  const auto n = static_cast<double>(total);
  const auto ni = static_cast<double>(bin.count);
  est.value = bin.mean * ni / n;
  // M2(I) = M2(v) + mean^2 N_i (N - N_i) / N;  Var(I) = M2(I)/(N-1);  dI = sqrt(Var/N)
  const double m2_integral =
      bin.m2 + bin.mean * bin.mean * ni * static_cast<double>(total - bin.count) / n;
  est.error = std::sqrt(std::max(0.0, m2_integral) / ((n - 1.0) * n));
  return est;
}

SampleAccumulator::SampleAccumulator(Domain domain, int levels,
                                     std::optional<std::vector<double>> edges,
                                     std::size_t max_bins)
    : domain_(domain), levels_(levels), uniform_(!edges.has_value()) {
  if (levels < 0) throw Error("number of levels must be non-negative");
  if (levels >= 63 || (std::size_t{1} << levels) > max_bins)
    throw Error("2^" + std::to_string(levels) + " elementary bins exceed the memory cap of " +
                std::to_string(max_bins));
  const std::size_t n = std::size_t{1} << levels;
  if (edges) {
    if (edges->size() != n + 1)
      throw Error("expected " + std::to_string(n + 1) + " edges, got " +
                  std::to_string(edges->size()));
    if (edges->front() != domain.lo || edges->back() != domain.hi)
      throw Error("edge endpoints do not match the domain");
    for (std::size_t i = 1; i < edges->size(); ++i)
      if (!((*edges)[i - 1] < (*edges)[i])) throw Error("edges must be strictly increasing");
    edges_ = std::move(*edges);
  } else {
    edges_.resize(n + 1);
    const double w = domain.width();
    for (std::size_t i = 0; i <= n; ++i)
      edges_[i] = domain.lo + w * (static_cast<double>(i) / static_cast<double>(n));
    edges_.back() = domain.hi;
  }
  bins_.assign(n, BinStats{});
}

std::size_t SampleAccumulator::locate(double x) const {
  if (!(x >= domain_.lo && x <= domain_.hi))
    throw Error("point " + format_real(x) + " outside domain [" + format_real(domain_.lo) +
                ", " + format_real(domain_.hi) + "]");
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  const auto idx = static_cast<std::size_t>(it - edges_.begin()) - 1;
  return std::min(idx, bins_.size() - 1);
}

void SampleAccumulator::record(double x, double v) {
  bins_[locate(x)].add(v);
  ++total_;
}

bool SampleAccumulator::same_grid(const SampleAccumulator& other) const {
  return domain_ == other.domain_ && levels_ == other.levels_ && edges_ == other.edges_;
}

SampleAccumulator& SampleAccumulator::merge(const SampleAccumulator& other,
                                            std::uint64_t multiplicity) {
  if (!same_grid(other)) throw Error("cannot merge histograms on different grids");
  if (multiplicity == 0) return *this;
  for (std::size_t i = 0; i < bins_.size(); ++i)
    bins_[i] = pool(bins_[i], other.bins_[i].repeated(multiplicity));
  total_ += other.total_ * multiplicity;
  return *this;
}

void SampleAccumulator::assign(std::vector<BinStats> bins) {
  if (bins.size() != bins_.size()) throw Error("bin count mismatch");
  std::uint64_t total = 0;
  for (const auto& b : bins) {
    if (b.count == 0 && (b.mean != 0.0 || b.m2 != 0.0))
      throw Error("empty bin with nonzero statistics");
    if (!(b.m2 >= 0.0)) throw Error("negative scaled variance");
    total += b.count;
  }
  bins_ = std::move(bins);
  total_ = total;
}

SampleAccumulator merge(const SampleAccumulator& a, const SampleAccumulator& b) {
  SampleAccumulator out = a;
  out.merge(b);
  return out;
}

SampleAccumulator weighted_merge(std::span<const SampleAccumulator> parts,
                                 std::span<const std::uint64_t> weights) {
  if (parts.empty()) throw Error("weighted merge needs at least one part");
  if (parts.size() != weights.size()) throw Error("one weight per part required");
  const auto& first = parts.front();
  std::optional<std::vector<double>> edges;
  if (!first.uniform()) edges.emplace(first.edges().begin(), first.edges().end());
  SampleAccumulator out(first.domain(), first.levels(), std::move(edges));
  for (std::size_t i = 0; i < parts.size(); ++i) out.merge(parts[i], weights[i]);
  return out;
}

void write_histogram(std::ostream& out, const SampleAccumulator& acc) {
  out << "BHMHIST 1\n";
  out << "domain " << format_real(acc.domain().lo) << ' ' << format_real(acc.domain().hi) << '\n';
  out << "K " << acc.levels() << '\n';
  out << "N " << acc.total() << '\n';
  if (acc.uniform()) {
    out << "edges uniform\n";
  } else {
    out << "edges";
    for (double e : acc.edges()) out << ' ' << format_real(e);
    out << '\n';
  }
  const auto bins = acc.bins();
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].count == 0) continue;
    out << "bin " << i << ' ' << bins[i].count << ' ' << format_real(bins[i].mean) << ' '
        << format_real(bins[i].m2) << '\n';
  }
}

namespace {

std::istringstream expect_line(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw Error("BHMHIST: missing '" + key + "' line");
  std::istringstream ls(line);
  std::string word;
  ls >> word;
  if (word != key) throw Error("BHMHIST: expected '" + key + "', got '" + line + "'");
  return ls;
}

std::string next_token(std::istringstream& ls, const char* what) {
  std::string tok;
  if (!(ls >> tok)) throw Error(std::string("BHMHIST: missing ") + what);
  return tok;
}

std::uint64_t parse_count(const std::string& tok) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    throw Error("BHMHIST: bad integer '" + tok + "'");
  }
  if (pos != tok.size() || tok.front() == '-') throw Error("BHMHIST: bad integer '" + tok + "'");
  return v;
}

}  // namespace

SampleAccumulator read_histogram(std::istream& in) {
  {
    auto ls = expect_line(in, "BHMHIST");
    if (next_token(ls, "version") != "1") throw Error("BHMHIST: unsupported version");
  }
  auto dl = expect_line(in, "domain");
  const double lo = parse_real(next_token(dl, "domain lower bound"));
  const double hi = parse_real(next_token(dl, "domain upper bound"));
  auto kl = expect_line(in, "K");
  const auto k = parse_count(next_token(kl, "K"));
  if (k > 62) throw Error("BHMHIST: K out of range");
  auto nl = expect_line(in, "N");
  const auto total = parse_count(next_token(nl, "N"));
  auto el = expect_line(in, "edges");
  std::optional<std::vector<double>> edges;
  std::string tok = next_token(el, "edges");
  if (tok != "uniform") {
    edges.emplace();
    edges->push_back(parse_real(tok));
    while (el >> tok) edges->push_back(parse_real(tok));
  }
  SampleAccumulator acc(Domain(lo, hi), static_cast<int>(k), std::move(edges));
  std::vector<BinStats> bins(acc.size());
  std::string line;
  std::size_t last = 0;
  bool any = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word != "bin") throw Error("BHMHIST: unexpected line '" + line + "'");
    const auto i = parse_count(next_token(ls, "bin index"));
    if (i >= bins.size()) throw Error("BHMHIST: bin index out of range");
    if (any && i <= last) throw Error("BHMHIST: bin indices must be increasing");
    BinStats b;
    b.count = parse_count(next_token(ls, "bin count"));
    b.mean = parse_real(next_token(ls, "bin mean"));
    b.m2 = parse_real(next_token(ls, "bin m2"));
    if (b.count == 0) throw Error("BHMHIST: listed bin with zero count");
    bins[i] = b;
    last = i;
    any = true;
  }
  acc.assign(std::move(bins));
  if (acc.total() != total) throw Error("BHMHIST: N does not equal the sum of bin counts");
  return acc;
}

void save_histogram(const std::string& path, const SampleAccumulator& acc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_histogram(out, acc);
  if (!out) throw Error("failed writing '" + path + "'");
}

SampleAccumulator load_histogram(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_histogram(in);
}

}  // namespace bhm
