#include "qlspatial/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "qlspatial/error.hpp"

namespace qlspatial {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

long parse_integer(const std::string& text, std::size_t line_no, const std::string& column) {
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw DataError("line " + std::to_string(line_no) + ": column '" + column +
                    "' is not an integer: '" + text + "'");
  }
  return value;
}

double parse_binary(const std::string& text, std::size_t line_no, const std::string& column) {
  if (text == "0") return 0.0;
  if (text == "1") return 1.0;
  throw DataError("line " + std::to_string(line_no) + ": column '" + column +
                  "' must be 0 or 1, got '" + text + "'");
}

}  // namespace

GridData read_grid_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.size() < 3 || header[0] != "row" || header[1] != "col" || header[2] != "y") {
    throw DataError("grid file header must start with row,col,y");
  }

  struct Record {
    long row, col;
    std::vector<double> values;  // y then covariates
  };
  std::vector<Record> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " columns, found " +
                      std::to_string(cells.size()));
    }
    Record rec{parse_integer(cells[0], line_no, "row"), parse_integer(cells[1], line_no, "col"),
               {}};
    if (rec.row < 1 || rec.col < 1) {
      throw DataError("line " + std::to_string(line_no) + ": row and col are 1-based");
    }
    for (std::size_t c = 2; c < cells.size(); ++c) {
      rec.values.push_back(parse_binary(cells[c], line_no, header[c]));
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) {
    throw DataError("grid file has no data rows");
  }

  long m = 0, n = 0;
  for (const auto& r : records) {
    m = std::max(m, r.row);
    n = std::max(n, r.col);
  }
  const auto mm = static_cast<std::size_t>(m);
  const auto nn = static_cast<std::size_t>(n);
  GridData data;
  data.lattice = Lattice(mm, nn);
  const std::size_t u = header.size() - 3;
  data.covariate_names.assign(header.begin() + 3, header.end());

  std::vector<const Record*> slot(mm * nn, nullptr);
  for (const auto& r : records) {
    const std::size_t k = data.lattice.site_index(
        Site{static_cast<std::size_t>(r.row - 1), static_cast<std::size_t>(r.col - 1)});
    if (slot[k] != nullptr) {
      throw DataError("duplicate cell (" + std::to_string(r.row) + "," + std::to_string(r.col) +
                      ")");
    }
    slot[k] = &r;
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(mm * nn));
  data.covariates.resize(static_cast<Eigen::Index>(mm * nn), static_cast<Eigen::Index>(u));
  for (std::size_t k = 0; k < slot.size(); ++k) {
    if (slot[k] == nullptr) {
      const Site s = data.lattice.site_coords(k);
      throw DataError("missing cell (" + std::to_string(s.row + 1) + "," +
                      std::to_string(s.col + 1) + "): grid must be complete");
    }
    const auto i = static_cast<Eigen::Index>(k);
    y(i) = slot[k]->values[0];
    for (std::size_t c = 0; c < u; ++c) {
      data.covariates(i, static_cast<Eigen::Index>(c)) = slot[k]->values[c + 1];
    }
  }
  data.response = BinaryField(std::move(y));
  return data;
}

GridData read_grid_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open grid file '" + path + "'");
  }
  return read_grid_csv(in);
}

void write_grid_csv(std::ostream& out, const GridData& data) {
  out << "row,col,y";
  for (const auto& name : data.covariate_names) out << ',' << name;
  out << '\n';
  // Row-major listing reads naturally; site order is recovered from row/col.
  const Lattice& lat = data.lattice;
  for (std::size_t r = 0; r < lat.rows(); ++r) {
    for (std::size_t c = 0; c < lat.cols(); ++c) {
      const std::size_t k = lat.site_index(Site{r, c});
      out << r + 1 << ',' << c + 1 << ',' << static_cast<int>(data.response[k]);
      for (Eigen::Index j = 0; j < data.covariates.cols(); ++j) {
        out << ',' << static_cast<int>(data.covariates(static_cast<Eigen::Index>(k), j));
      }
      out << '\n';
    }
  }
}

void write_semivariogram_csv(std::ostream& out, const Semivariogram& sv) {
  out << "h,gamma_hat,count\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& b : sv.bins) {
    out << b.lag << ',' << b.gamma << ',' << b.count << '\n';
  }
}

void write_semivariogram_svg(std::ostream& out, const Semivariogram& sv,
                             const std::optional<ExponentialVariogramFit>& fit) {
  constexpr double width = 480, height = 360, left = 60, right = 20, top = 30, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  double x_max = sv.max_lag > 0.0 ? sv.max_lag : 1.0;
  double y_max = 0.0;
  for (const auto& b : sv.bins) y_max = std::max(y_max, b.gamma);
  if (fit) y_max = std::max(y_max, fit->sill);
  y_max = y_max > 0.0 ? 1.1 * y_max : 1.0;
  auto px = [&](double x) { return left + plot_w * x / x_max; };
  auto py = [&](double y) { return top + plot_h * (1.0 - y / y_max); };

  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x_max * t / 4.0;
    const double yv = y_max * t / 4.0;
    out << "<text x=\"" << px(xv) << "\" y=\"" << top + plot_h + 16
        << "\" text-anchor=\"middle\">" << std::setprecision(2) << xv << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
        << std::setprecision(3) << yv << "</text>\n";
  }
  out << std::setprecision(2);
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\">distance</text>\n";
  out << "<text x=\"16\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(-90 16 "
      << top + plot_h / 2 << ")\" text-anchor=\"middle\">semivariance</text>\n";
  for (const auto& b : sv.bins) {
    out << "<circle cx=\"" << px(b.lag) << "\" cy=\"" << py(b.gamma)
        << "\" r=\"3\" fill=\"none\" stroke=\"black\"/>\n";
  }
  if (fit) {
    out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    constexpr int steps = 100;
    for (int s = 0; s <= steps; ++s) {
      const double h = x_max * s / steps;
      out << px(h) << ',' << py((*fit)(h)) << (s < steps ? " " : "");
    }
    out << "\"/>\n";
    out << std::setprecision(3);
    out << "<text x=\"" << left + plot_w - 4 << "\" y=\"" << top + 14
        << "\" text-anchor=\"end\">sill " << fit->sill << ", range " << fit->range
        << "</text>\n";
  }
  out << "</svg>\n";
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw DataError("config line " + std::to_string(line_no) + ": empty key");
    }
    if (!out.emplace(key, value).second) {
      throw DataError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

namespace {

std::string coefficient_name(const FitReport& r, std::size_t j) {
  return j < r.names.size() ? r.names[j] : "beta" + std::to_string(j);
}

}  // namespace

void write_fit_report_text(std::ostream& out, const FitReport& report) {
  const FitResult& f = report.fit;
  out << "Quasi-likelihood fit (" << (f.converged ? "converged" : "not converged") << " after "
      << f.iterations << " iterations)\n";
  for (const auto& [key, value] : report.context) out << "  " << key << ": " << value << '\n';
  out << std::fixed << std::setprecision(4);
  out << "\ncoefficient        estimate    std.error\n";
  for (Eigen::Index j = 0; j < f.beta_hat.size(); ++j) {
    out << std::left << std::setw(16) << coefficient_name(report, static_cast<std::size_t>(j))
        << std::right << std::setw(12) << f.beta_hat(j) << std::setw(13)
        << std::sqrt(f.cov_hat(j, j)) << '\n';
  }
  out << "\nestimated covariance of beta_hat\n";
  for (Eigen::Index i = 0; i < f.cov_hat.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto ni = coefficient_name(report, static_cast<std::size_t>(i));
      const auto nj = coefficient_name(report, static_cast<std::size_t>(j));
      out << "  " << (i == j ? "var(" + ni + ")" : "cov(" + ni + "," + nj + ")") << " = "
          << f.cov_hat(i, j) << '\n';
    }
  }
  if (report.wald) {
    const auto last = static_cast<Eigen::Index>(f.beta_hat.size() - 1);
    const auto name = coefficient_name(report, static_cast<std::size_t>(last));
    out << "\nWald test of " << name << " = 0\n";
    out << std::setprecision(2) << "  statistic = " << report.wald->statistic << " on "
        << report.wald->df << " df\n";
    out << std::setprecision(5) << "  p-value   = " << report.wald->p_value << '\n';
    if (report.wald->p_value < 0.05) {
      out << "  direction: " << name << " is "
          << (f.beta_hat(last) < 0 ? "negative; the covariate discourages the response"
                                   : "positive; the covariate encourages the response")
          << '\n';
    } else {
      out << "  no significant association at the 5% level\n";
    }
  }
  out << "\niteration trace (||U||_inf)\n";
  out << std::scientific << std::setprecision(3);
  for (std::size_t i = 0; i < f.trace.size(); ++i) {
    out << "  " << i << ": " << f.trace[i].score_norm << '\n';
  }
  out << std::defaultfloat;
}

void write_fit_report_kv(std::ostream& out, const FitReport& report) {
  const FitResult& f = report.fit;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "converged=" << (f.converged ? 1 : 0) << '\n';
  out << "iterations=" << f.iterations << '\n';
  for (const auto& [key, value] : report.context) out << key << '=' << value << '\n';
  for (Eigen::Index j = 0; j < f.beta_hat.size(); ++j) {
    out << "beta." << coefficient_name(report, static_cast<std::size_t>(j)) << '='
        << f.beta_hat(j) << '\n';
  }
  for (Eigen::Index i = 0; i < f.cov_hat.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.cov_hat.cols(); ++j) {
      out << "cov." << i << '.' << j << '=' << f.cov_hat(i, j) << '\n';
    }
  }
  if (report.wald) {
    out << "wald.statistic=" << report.wald->statistic << '\n';
    out << "wald.df=" << report.wald->df << '\n';
    out << "wald.p_value=" << report.wald->p_value << '\n';
  }
  for (std::size_t i = 0; i < f.trace.size(); ++i) {
    out << "trace." << i << ".score_norm=" << f.trace[i].score_norm << '\n';
    for (Eigen::Index j = 0; j < f.trace[i].beta.size(); ++j) {
      out << "trace." << i << ".beta." << j << '=' << f.trace[i].beta(j) << '\n';
    }
  }
}

}  // namespace qlspatial
