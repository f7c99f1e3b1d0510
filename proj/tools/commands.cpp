#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <set>
#include <stdexcept>

#include "qlspatial/error.hpp"
#include "qlspatial/estimator.hpp"
#include "qlspatial/io.hpp"
#include "qlspatial/simulate.hpp"
#include "qlspatial/validation.hpp"

namespace qlspatial::cli {

namespace fs = std::filesystem;

std::string default_out_dir() {
  const char* env = std::getenv("QLSPATIAL_OUT");
  return env != nullptr && *env != '\0' ? std::string(env) : std::string(".");
}

Settings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  return parse_key_values(in);
}

namespace {

std::ofstream open_output(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / name;
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  return f;
}

// Maps exceptions to exit codes; the body returns its own code on success.
template <typename Fn>
int run_guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const FitError& e) {
    err << "estimation failed (" << to_string(e.kind()) << "): " << e.what() << '\n';
    if (!e.trace().empty()) {
      err << "trace:";
      for (const auto& rec : e.trace()) err << ' ' << rec.score_norm;
      err << '\n';
    }
    return kEstimationFailed;
  } catch (const InfeasibleCorrelation& e) {
    err << "infeasible correlation: " << e.what() << '\n';
    return kInfeasible;
  } catch (const NotPositiveDefinite& e) {
    err << "infeasible correlation: " << e.what() << '\n';
    return kInfeasible;
  } catch (const DataError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::out_of_range& e) {
    err << "invalid input: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

struct WorkingCorrelation {
  CorrelationModel model;
  std::optional<ExponentialVariogramFit> variogram;
  std::map<std::string, std::string> context;
};

WorkingCorrelation resolve_correlation(const GridData& data, const CorrelationOptions& opts,
                                       std::ostream& err) {
  if (opts.rho && opts.range) {
    throw std::invalid_argument("give at most one of --rho and --range");
  }
  if (opts.metric != 1 && opts.metric != 2) {
    throw std::invalid_argument("--metric must be 1 or 2");
  }
  const Metric metric{static_cast<double>(opts.metric)};
  WorkingCorrelation out;
  if (opts.rho) {
    out.model = CorrelationModel{opts.a, *opts.rho, metric};
    out.context["correlation.source"] = "fixed";
  } else if (opts.range) {
    out.model = correlation_from_range(*opts.range, opts.convention);
    out.model.metric = metric;
    out.context["correlation.source"] = "range";
    out.context["variogram.range"] = format_double(*opts.range);
  } else {
    BinaryField field;
    if (opts.source == "data") {
      field = data.response;
    } else if (opts.source == "covariate") {
      if (data.covariates.cols() == 0) {
        throw std::invalid_argument("covariate correlation source needs a covariate column");
      }
      field = BinaryField(data.covariates.col(0));
    } else {
      throw std::invalid_argument("unknown correlation source '" + opts.source + "'");
    }
    const Lattice& lat = data.lattice;
    const double width = opts.bin_width.value_or(0.5 * lat.spacing());
    const double max_lag = opts.max_lag.value_or(
        0.5 * static_cast<double>(std::min(lat.rows(), lat.cols())) * lat.spacing());
    const Semivariogram sv = empirical_semivariogram(field, lat, width, max_lag);
    if (sv.constant_field) {
      throw DataError("no spatial variation: the " + opts.source + " field is constant");
    }
    for (const auto& w : sv.warnings) err << "warning: " << w << '\n';
    const ExponentialVariogramFit vf = fit_exponential(sv);
    if (vf.near_independence()) {
      err << "warning: variogram range at the lower search bound; field looks independent\n";
    }
    out.model = correlation_from_fit(vf, opts.convention);
    out.model.metric = metric;
    out.variogram = vf;
    out.context["correlation.source"] = "variogram-" + opts.source;
    out.context["variogram.sill"] = format_double(vf.sill);
    out.context["variogram.range"] = format_double(vf.range);
  }
  out.context["correlation.a"] = format_double(out.model.a);
  out.context["correlation.rho"] = format_double(out.model.rho);
  out.context["correlation.metric"] = std::to_string(opts.metric);
  out.context["range_convention"] =
      opts.convention == RangeConvention::thirds ? "thirds" : "literal";
  return out;
}

int run_fit(const FitCommandOptions& options, bool independence_test, std::ostream& out,
            std::ostream& err) {
  return run_guarded(err, [&] {
    const GridData data = read_grid_csv_file(options.data_path);
    if (independence_test && data.covariates.cols() != 1) {
      throw DataError("independence test needs exactly one covariate column, found " +
                      std::to_string(data.covariates.cols()));
    }
    const WorkingCorrelation wc = resolve_correlation(data, options.correlation, err);
    const CorrelationMatrix gamma = CorrelationMatrix::build(data.lattice, wc.model);
    if (options.dump_gamma) {
      auto f = open_output(options.out_dir.empty() ? default_out_dir() : options.out_dir,
                           "gamma.csv");
      write_matrix_csv(f, gamma.dense());
    }
    const DesignMatrix design = design_with_intercept(data.covariates);
    FitOptions fo;
    fo.tol = options.tol;
    fo.max_iter = options.max_iter;
    fo.damping = options.damping;
    FitReport report;
    report.names.push_back("intercept");
    for (const auto& name : data.covariate_names) report.names.push_back(name);
    report.fit = fit(design, data.response.values(), gamma, fo);
    report.context = wc.context;
    report.context["sites"] = std::to_string(data.lattice.size());
    if (independence_test || design.cols() > 1) {
      report.wald = wald_test(report.fit, design.cols() - 1);
    }
    write_fit_report_text(out, report);
    if (!options.out_dir.empty()) {
      const std::string stem = independence_test ? "test_report" : "fit_report";
      auto text = open_output(options.out_dir, stem + ".txt");
      write_fit_report_text(text, report);
      auto kv = open_output(options.out_dir, stem + ".kv");
      write_fit_report_kv(kv, report);
    }
    return static_cast<int>(kOk);
  });
}

// Typed lookups over Settings with a record of which keys were used.
class SettingsReader {
 public:
  explicit SettingsReader(const Settings& s) : settings_(s) {}

  double number(const std::string& key, double fallback) {
    used_.insert(key);
    const auto it = settings_.find(key);
    if (it == settings_.end()) return fallback;
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(it->second, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != it->second.size()) {
      throw DataError("setting '" + key + "' is not a number: '" + it->second + "'");
    }
    return v;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const double v = number(key, static_cast<double>(fallback));
    if (v < 0.0 || v != std::floor(v)) {
      throw DataError("setting '" + key + "' must be a nonnegative integer");
    }
    return static_cast<std::size_t>(v);
  }

  bool flag(const std::string& key, bool fallback) {
    used_.insert(key);
    const auto it = settings_.find(key);
    if (it == settings_.end()) return fallback;
    if (it->second == "1" || it->second == "true") return true;
    if (it->second == "0" || it->second == "false") return false;
    throw DataError("setting '" + key + "' must be true or false");
  }

  void reject_unknown() const {
    for (const auto& [key, value] : settings_) {
      if (!used_.contains(key)) throw DataError("unknown setting '" + key + "'");
    }
  }

 private:
  const Settings& settings_;
  std::set<std::string> used_;
};

ValidationConfig read_validation_config(const Settings& settings) {
  SettingsReader r(settings);
  ValidationConfig c;
  c.rows = r.count("rows", 16);
  c.cols = r.count("cols", 16);
  const double b0 = r.number("beta0", -0.34);
  const double b1 = r.number("beta1", -0.26);
  const bool intercept_only = r.flag("intercept_only", false);
  c.beta0 = intercept_only ? Eigen::VectorXd::Constant(1, b0) : Eigen::VectorXd(Eigen::Vector2d(b0, b1));
  c.covariate_prob = r.number("covariate_prob", 0.5);
  c.correlation.a = r.number("a", 1.0);
  c.correlation.rho = r.number("rho", std::exp(-1.0 / 1.091));
  c.correlation.metric = Metric{r.number("metric", 2.0)};
  c.normality_correlation.rho = r.number("normality_rho", 0.4);
  c.normality_correlation.metric = Metric{r.number("normality_metric", 1.0)};
  c.seed = static_cast<std::uint64_t>(r.count("seed", 1));
  c.coverage_replicates = r.count("reps", 500);
  c.normality_replicates = r.count("normality_reps", 2000);
  c.max_bound_side = r.count("max_bound_side", 20);
  c.moment_pmfs = r.count("moment_pmfs", 200);
  r.reject_unknown();
  return c;
}

}  // namespace

int cmd_fit(const FitCommandOptions& options, std::ostream& out, std::ostream& err) {
  return run_fit(options, false, out, err);
}

int cmd_test_independence(const FitCommandOptions& options, std::ostream& out, std::ostream& err) {
  return run_fit(options, true, out, err);
}

int cmd_variogram(const VariogramCommandOptions& options, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    const GridData data = read_grid_csv_file(options.data_path);
    if (data.response.is_constant()) {
      throw DataError("no spatial variation: the response field is constant");
    }
    const Lattice& lat = data.lattice;
    const double width = options.bin_width.value_or(0.5 * lat.spacing());
    const double max_lag = options.max_lag.value_or(
        0.5 * static_cast<double>(std::min(lat.rows(), lat.cols())) * lat.spacing());
    const Semivariogram sv = empirical_semivariogram(data.response, lat, width, max_lag);
    for (const auto& w : sv.warnings) err << "warning: " << w << '\n';
    const ExponentialVariogramFit vf = fit_exponential(sv);
    {
      auto csv = open_output(options.out_dir, "semivariogram.csv");
      write_semivariogram_csv(csv, sv);
      auto svg = open_output(options.out_dir, "semivariogram.svg");
      write_semivariogram_svg(svg, sv, vf);
    }
    out << "bins: " << sv.bins.size() << " (width " << width << ", max lag " << max_lag << ")\n";
    out << "exponential fit: sill " << format_double(vf.sill) << ", range "
        << format_double(vf.range) << '\n';
    if (vf.near_independence()) out << "range at lower search bound: near independence\n";
    if (vf.at_upper_bound) out << "range at upper search bound: sill not reached\n";
    out << "wrote " << (fs::path(options.out_dir) / "semivariogram.csv").string() << " and "
        << (fs::path(options.out_dir) / "semivariogram.svg").string() << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_simulate(const Settings& settings, const std::string& out_path, std::ostream& out,
                 std::ostream& err) {
  return run_guarded(err, [&] {
    Settings s = settings;
    const bool shrink = s.contains("allow_shrinkage") &&
                        (s["allow_shrinkage"] == "1" || s["allow_shrinkage"] == "true");
    s.erase("allow_shrinkage");
    const ValidationConfig c = read_validation_config(s);
    SimulationConfig sim;
    sim.lattice = Lattice(c.rows, c.cols);
    sim.beta0 = c.beta0;
    if (c.beta0.size() > 1) {
      sim.covariates = random_covariate(sim.lattice.size(), c.covariate_prob, c.seed);
    }
    sim.correlation = c.correlation;
    sim.seed = c.seed;
    sim.allow_shrinkage = shrink;
    const FieldSimulator simulator(sim);
    if (simulator.shrinkage() > 0.0) {
      err << "warning: latent correlation shrunk toward identity by " << simulator.shrinkage()
          << '\n';
    }
    GridData data;
    data.lattice = sim.lattice;
    data.response = simulator.draw(sim.seed);
    if (c.beta0.size() > 1) {
      data.covariate_names = {"x"};
      data.covariates = sim.covariates;
    } else {
      data.covariates.resize(static_cast<Eigen::Index>(sim.lattice.size()), 0);
    }
    {
      const fs::path path(out_path);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      std::ofstream f(path);
      if (!f) throw DataError("cannot write '" + out_path + "'");
      write_grid_csv(f, data);
    }
    out << "lattice: " << c.rows << " x " << c.cols << " (N = " << sim.lattice.size() << ")\n";
    out << "beta0:";
    for (Eigen::Index j = 0; j < c.beta0.size(); ++j) out << ' ' << c.beta0(j);
    out << '\n';
    out << "correlation: a = " << c.correlation.a << ", rho = " << format_double(c.correlation.rho)
        << ", metric L" << c.correlation.metric.p << '\n';
    out << "seed: " << c.seed << '\n';
    out << "wrote " << out_path << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_validate(const Settings& settings, const std::string& out_dir, std::ostream& out,
                 std::ostream& err) {
  return run_guarded(err, [&] {
    const ValidationConfig c = read_validation_config(settings);
    CoverageSummary summary;
    const std::vector<CheckResult> results = run_validation(c, &summary);
    std::ostringstream report;
    report << "validation: " << c.rows << " x " << c.cols << " lattice, a = " << c.correlation.a
           << ", rho = " << c.correlation.rho << ", metric L" << c.correlation.metric.p
           << " (normality study: rho = " << c.normality_correlation.rho << ", metric L"
           << c.normality_correlation.metric.p << "), seed " << c.seed << '\n';
    bool all = true;
    for (const auto& r : results) {
      all = all && r.passed;
      report << (r.passed ? "PASS" : "FAIL") << "  " << r.name << "  [" << r.tolerance << "]  "
             << r.detail << '\n';
    }
    report << (all ? "all checks passed" : "some checks failed") << '\n';
    out << report.str();
    if (!out_dir.empty()) {
      auto f = open_output(out_dir, "validation_report.txt");
      f << report.str();
      auto csv = open_output(out_dir, "mc_coverage.csv");
      csv << "replicate,ok,failure";
      const Eigen::Index p = c.beta0.size();
      for (Eigen::Index j = 0; j < p; ++j) csv << ",beta" << j << ",se" << j;
      csv << ",wald\n" << std::setprecision(17);
      for (const auto& row : summary.rows) {
        csv << row.replicate << ',' << (row.ok ? 1 : 0) << ',' << row.failure;
        for (Eigen::Index j = 0; j < p; ++j) {
          if (row.ok) {
            csv << ',' << row.beta_hat(j) << ',' << row.std_error(j);
          } else {
            csv << ",,";
          }
        }
        csv << ',';
        if (row.ok) csv << row.wald_last;
        csv << '\n';
      }
    }
    return static_cast<int>(all ? kOk : kChecksFailed);
  });
}

}  // namespace qlspatial::cli
