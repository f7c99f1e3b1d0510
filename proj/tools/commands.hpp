#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "qlspatial/correlation.hpp"
#include "qlspatial/variogram.hpp"

namespace qlspatial::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kInvalidInput = 2,
  kEstimationFailed = 3,
  kInfeasible = 4,
  kChecksFailed = 5,
};

/// Where the working correlation comes from. Exactly one source applies:
/// --rho (fixed a, rho), --range (fixed exponential range), or a
/// semivariogram fitted to the response ("data") or to the first
/// covariate ("covariate").
struct CorrelationOptions {
  int metric = 2;
  std::optional<double> rho;
  double a = 1.0;
  std::optional<double> range;
  std::string source = "data";
  RangeConvention convention = RangeConvention::literal;
  std::optional<double> bin_width;
  std::optional<double> max_lag;
};

struct FitCommandOptions {
  std::string data_path;
  CorrelationOptions correlation;
  double tol = 1e-8;
  int max_iter = 50;
  bool damping = false;
  std::string out_dir;  // empty: no files written
  bool dump_gamma = false;
};

struct VariogramCommandOptions {
  std::string data_path;
  std::optional<double> bin_width;
  std::optional<double> max_lag;
  std::string out_dir = ".";
};

/// Settings for simulate/validate as key=value pairs: the config file first,
/// then command-line overrides.
using Settings = std::map<std::string, std::string>;

int cmd_fit(const FitCommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_test_independence(const FitCommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_variogram(const VariogramCommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_simulate(const Settings& settings, const std::string& out_path, std::ostream& out,
                 std::ostream& err);
int cmd_validate(const Settings& settings, const std::string& out_dir, std::ostream& out,
                 std::ostream& err);

/// Reads a key=value file into Settings.
Settings load_settings(const std::string& path);

/// Output directory default: $QLSPATIAL_OUT, else ".".
std::string default_out_dir();

}  // namespace qlspatial::cli
