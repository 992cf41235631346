#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "bhm/bhm.hpp"
#include "bhm/parallel.hpp"

namespace bhm::cli {

namespace {

std::string real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct FitOptions {
  FitConfig cfg;
  bool no_jump = false;

  void attach(CLI::App* app) {
    app->add_option("--order", cfg.order, "Spline order m")->capture_default_str();
    app->add_option("--t-min", cfg.t_min, "Lowest acceptance threshold")->capture_default_str();
    app->add_option("--t-max", cfg.t_max, "Highest acceptance threshold")->capture_default_str();
    app->add_option("--min-count", cfg.min_count, "Points needed for a usable bin")
        ->capture_default_str();
    app->add_flag("--no-jump-constraint", no_jump, "Skip the jump constraint");
  }
  FitConfig config() const {
    FitConfig c = cfg;
    c.jump_constraint = !no_jump;
    return c;
  }
};

struct TransformOptions {
  std::string kind = "none";
  double power = 0.0;

  void attach(CLI::App* app) {
    app->add_option("--transform", kind, "none, arctan or exp")->capture_default_str();
    app->add_option("--weight-power", power, "Sampled values are weighted by x^p")
        ->capture_default_str();
  }
  Transform get() const { return Transform::parse(kind, power); }
};

/// Evaluation grid in the original variable, with error options.
struct BandOptions {
  std::size_t points = kDefaultGridPoints;
  std::optional<double> from, to;
  bool log = false;
  std::string method = "cov";
  std::vector<std::string> parts;
  std::size_t replicas = 0;
  std::uint64_t seed = 1;
  int threads = 0;
  std::size_t snapshot_every = 1;
  int k0 = 1;

  void attach(CLI::App* app) {
    app->add_option("--points", points, "Grid points")->capture_default_str();
    app->add_option("--from", from, "Grid start (default: domain start)");
    app->add_option("--to", to, "Grid end (default: domain end)");
    app->add_flag("--log", log, "Logarithmic grid spacing");
    app->add_option("--errors", method, "cov, bootstrap or evolution")
        ->check(CLI::IsMember({"cov", "bootstrap", "evolution"}))
        ->capture_default_str();
    app->add_option("--parts", parts,
                    "Partial histograms: bootstrap parts, or consecutive blocks for evolution");
    app->add_option("--replicas", replicas, "Bootstrap replicas (default max(100, parts))");
    app->add_option("--seed", seed, "Bootstrap seed")->capture_default_str();
    app->add_option("--threads", threads, "Worker threads (default BHM_THREADS, else 1)");
    app->add_option("--snapshot-every", snapshot_every, "Blocks per evolution snapshot")
        ->capture_default_str();
    app->add_option("--k0", k0, "Evolution cutoff k0")->capture_default_str();
  }
};

std::vector<double> make_grid(const BandOptions& o, const Transform& t, const Domain& spline_domain) {
  double lo, hi;
  if (t.identity()) {
    lo = o.from.value_or(spline_domain.lo);
    hi = o.to.value_or(spline_domain.hi);
  } else {
    if (!o.from || !o.to) throw Error("--from and --to are required with a transform");
    lo = *o.from;
    hi = *o.to;
  }
  if (!(lo < hi)) throw Error("grid needs --from < --to");
  if (o.points < 2) throw Error("grid needs at least two points");
  if (o.log && !(lo > 0.0)) throw Error("logarithmic grid needs a positive start");
  std::vector<double> g(o.points);
  for (std::size_t i = 0; i < o.points; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(o.points - 1);
    g[i] = o.log ? std::exp(std::log(lo) + s * (std::log(hi) - std::log(lo))) : lo + s * (hi - lo);
  }
  g.back() = hi;
  return g;
}

std::vector<SampleAccumulator> load_parts(const std::vector<std::string>& paths,
                                          const Domain& domain) {
  std::vector<SampleAccumulator> parts;
  for (const auto& p : paths) {
    parts.push_back(load_histogram(p));
    if (!(parts.back().domain() == domain))
      throw Error("histogram " + p + " does not span the spline domain");
    if (!parts.back().same_grid(parts.front())) throw Error("parts use different grids");
  }
  return parts;
}

struct Evaluated {
  std::vector<double> x, f, sigma;
};

Evaluated evaluate(const SplineModel& model, const BandOptions& o, const Transform& t,
                   const FitOptions& fo) {
  Evaluated e;
  e.x = make_grid(o, t, model.domain);
  std::vector<double> y;
  for (double x : e.x) y.push_back(t.identity() ? x : forward(t, x).y);
  for (double v : y)
    if (!model.domain.contains(v)) throw Error("grid point outside the spline domain");

  FitConfig cfg = fo.config();
  cfg.order = model.order;
  std::vector<double> sigma_y;
  if (o.method == "cov") {
    sigma_y = covariance_band(model, y).sigma;
  } else {
    if (o.parts.empty()) throw Error("--errors " + o.method + " needs --parts");
    const auto parts = load_parts(o.parts, model.domain);
    if (o.method == "bootstrap") {
      const std::size_t replicas = o.replicas ? o.replicas : std::max<std::size_t>(100, parts.size());
      sigma_y = bootstrap_error(parts, model.breakpoints(), cfg, replicas, y, o.seed,
                                thread_count(o.threads > 0 ? std::optional(o.threads) : std::nullopt))
                    .sigma;
    } else {
      sigma_y = evolution_error(evolution_trace(parts, o.snapshot_every, cfg, y, o.k0)).sigma;
    }
  }
  for (std::size_t i = 0; i < e.x.size(); ++i) {
    const double r = restore_factor(t, e.x[i]);
    e.f.push_back(model(y[i]) * r);
    e.sigma.push_back(sigma_y[i] * r);
  }
  return e;
}

void print_levels(std::ostream& err, const FitResult& fit) {
  err << "# level\tn_tilde\tchi2/n\tlimit\n";
  for (const auto& l : fit.diagnostics.levels)
    err << l.n << '\t' << l.n_tilde << '\t' << real(l.reduced()) << '\t'
        << real(l.limit(fit.diagnostics.threshold)) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bin hierarchy method: smooth functions from sampled histograms", "bhm"};
  app.require_subcommand(1);

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Sample a built-in test function");
  std::string dist, output;
  std::uint64_t n = 0, seed = 1;
  int levels = 10;
  std::size_t parts = 1;
  TransformOptions sample_t;
  sample_cmd->add_option("--dist", dist, "Built-in distribution")
      ->required()
      ->check(CLI::IsMember(builtin_names()));
  sample_cmd->add_option("--n", n, "Number of points")->required();
  sample_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  sample_cmd->add_option("--k", levels, "Hierarchy depth K (2^K elementary bins)")
      ->capture_default_str();
  sample_cmd->add_option("--parts", parts, "Split into consecutive partial histograms")
      ->capture_default_str();
  sample_cmd->add_option("-o,--output", output, "Output file (parts get .000, .001, ...)")
      ->required();
  sample_t.attach(sample_cmd);

  // merge
  auto* merge_cmd = app.add_subcommand("merge", "Pool histograms recorded on one grid");
  std::vector<std::string> inputs;
  merge_cmd->add_option("inputs", inputs, "Histogram files")->required()->expected(2, -1);
  merge_cmd->add_option("-o,--output", output, "Output file")->required();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit a spline to a histogram");
  std::string input;
  FitOptions fit_o;
  bool force = false;
  fit_cmd->add_option("histogram", input, "Histogram file")->required();
  fit_cmd->add_option("-o,--output", output, "Spline file")->required();
  fit_cmd->add_flag("--force", force, "Fit even if the data are consistent with zero");
  fit_o.attach(fit_cmd);

  // eval / errors / compare share the band machinery
  std::string spline_path;
  BandOptions band;
  TransformOptions band_t;
  FitOptions band_fit;
  auto* eval_cmd = app.add_subcommand("eval", "Tabulate a spline with its error band");
  auto* errors_cmd = app.add_subcommand("errors", "Tabulate the error band of a spline");
  auto* compare_cmd = app.add_subcommand("compare", "Tabulate the deviation from a built-in truth");
  for (auto* c : {eval_cmd, errors_cmd, compare_cmd}) {
    c->add_option("spline", spline_path, "Spline file")->required();
    band.attach(c);
    band_t.attach(c);
    c->add_option("--min-count", band_fit.cfg.min_count, "Usable-bin occupancy for refits")
        ->capture_default_str();
  }
  compare_cmd->add_option("--dist", dist, "Built-in truth")
      ->required()
      ->check(CLI::IsMember(builtin_names()));

  // check-zero
  auto* zero_cmd = app.add_subcommand("check-zero", "Test whether a histogram is consistent with zero");
  std::uint64_t zero_min_count = kDefaultMinCount;
  zero_cmd->add_option("histogram", input, "Histogram file")->required();
  zero_cmd->add_option("--min-count", zero_min_count, "Points needed for a usable bin")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "bhm: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (sample_cmd->parsed()) {
      const auto d = builtin(dist);
      const auto t = sample_t.get();
      if (parts == 0) throw Error("--parts must be at least 1");
      if (parts == 1) {
        auto acc = make_accumulator(d, levels, t);
        sample(d, n, seed, acc, t);
        save_histogram(output, acc);
      } else {
        const auto blocks = sample_parts(d, n, seed, levels, parts, t);
        for (std::size_t i = 0; i < blocks.size(); ++i) {
          char suffix[16];
          std::snprintf(suffix, sizeof suffix, ".%03zu", i);
          save_histogram(output + suffix, blocks[i]);
        }
      }
      return kExitOk;
    }

    if (merge_cmd->parsed()) {
      auto acc = load_histogram(inputs.front());
      for (std::size_t i = 1; i < inputs.size(); ++i) acc = merge(acc, load_histogram(inputs[i]));
      save_histogram(output, acc);
      return kExitOk;
    }

    if (fit_cmd->parsed()) {
      const auto cfg = fit_o.config();
      cfg.validate();
      const auto acc = load_histogram(input);
      const auto h = build_hierarchy(acc, cfg.min_count);
      const auto zero = check_zero(h);
      if (zero.consistent_with_zero && !force) {
        err << "bhm: data are consistent with zero; collect more data or pass --force\n";
        return kExitZero;
      }
      const auto fit = adaptive_fit(h, cfg);
      save_spline(output, fit);
      print_levels(err, fit);
      err << "# pieces " << fit.model.size() << ", threshold " << real(fit.diagnostics.threshold)
          << ", " << (fit.diagnostics.accepted ? "accepted" : "NOT accepted") << '\n';
      return fit.diagnostics.accepted ? kExitOk : kExitUnaccepted;
    }

    if (zero_cmd->parsed()) {
      const auto h = build_hierarchy(load_histogram(input), zero_min_count);
      const auto v = check_zero(h);
      if (v.consistent_with_zero) {
        out << "consistent-with-zero\n";
      } else {
        out << "inconsistent-with-zero condition=" << to_string(*v.condition) << '\n';
      }
      err << "# level\tn_tilde\texcess\n";
      for (const auto& l : v.levels) err << l.n << '\t' << l.n_tilde << '\t' << real(l.excess) << '\n';
      return v.consistent_with_zero ? kExitZero : kExitOk;
    }

    const auto fit = load_spline(spline_path);
    const auto t = band_t.get();
    const auto e = evaluate(fit.model, band, t, band_fit);
    if (eval_cmd->parsed()) {
      out << "# x\tf\tsigma\n";
      for (std::size_t i = 0; i < e.x.size(); ++i)
        out << real(e.x[i]) << '\t' << real(e.f[i]) << '\t' << real(e.sigma[i]) << '\n';
    } else if (errors_cmd->parsed()) {
      out << "# x\tsigma_" << band.method << '\n';
      for (std::size_t i = 0; i < e.x.size(); ++i)
        out << real(e.x[i]) << '\t' << real(e.sigma[i]) << '\n';
    } else {
      const auto truth = builtin(dist);
      out << "# x\tf-f_true\tsigma\n";
      for (std::size_t i = 0; i < e.x.size(); ++i)
        out << real(e.x[i]) << '\t' << real(e.f[i] - truth.density(e.x[i])) << '\t'
            << real(e.sigma[i]) << '\n';
    }
    return kExitOk;
  } catch (const std::exception& ex) {
    err << "bhm: " << ex.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace bhm::cli
