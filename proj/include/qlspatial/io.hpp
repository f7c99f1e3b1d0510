#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qlspatial/estimator.hpp"
#include "qlspatial/field.hpp"
#include "qlspatial/lattice.hpp"
#include "qlspatial/variogram.hpp"

namespace qlspatial {

/// Grid data file: CSV header "row,col,y[,cov...]", 1-based row/col, one
/// line per site of a complete m x n grid. All values 0/1.
struct GridData {
  Lattice lattice{1, 1};
  BinaryField response;
  std::vector<std::string> covariate_names;
  Eigen::MatrixXd covariates;  // N x u in site order
};

/// Throws DataError naming the offending line or cell.
GridData read_grid_csv(std::istream& in);
GridData read_grid_csv_file(const std::string& path);
void write_grid_csv(std::ostream& out, const GridData& data);

/// Columns exactly h,gamma_hat,count.
void write_semivariogram_csv(std::ostream& out, const Semivariogram& sv);

/// Scatter of the empirical bins with the fitted curve and a sill/range label.
void write_semivariogram_svg(std::ostream& out, const Semivariogram& sv,
                             const std::optional<ExponentialVariogramFit>& fit);

/// Row-major, full precision.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);

/// key = value lines; '#' starts a comment. Throws DataError on malformed
/// lines or duplicate keys.
std::map<std::string, std::string> parse_key_values(std::istream& in);

struct FitReport {
  std::vector<std::string> names;  // coefficient names
  FitResult fit;
  std::optional<WaldTest> wald;     // for the last coefficient
  std::map<std::string, std::string> context;  // correlation settings etc.
};

void write_fit_report_text(std::ostream& out, const FitReport& report);
/// One key=value per line; machine readable.
void write_fit_report_kv(std::ostream& out, const FitReport& report);

}  // namespace qlspatial
