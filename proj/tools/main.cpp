#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using qlspatial::RangeConvention;
namespace cli = qlspatial::cli;

void add_correlation_options(CLI::App* cmd, cli::CorrelationOptions& c) {
  cmd->add_option("--metric", c.metric, "distance metric: 1 (L1) or 2 (L2)")
      ->check(CLI::IsMember({1, 2}));
  cmd->add_option("--rho", c.rho, "fixed correlation decay rho");
  cmd->add_option("--a", c.a, "fixed correlation scale a (with --rho)");
  cmd->add_option("--range", c.range, "fixed exponential variogram range");
  cmd->add_option("--correlation-source", c.source,
                  "semivariogram used when neither --rho nor --range is given")
      ->check(CLI::IsMember({"data", "covariate"}));
  cmd->add_option("--effective-range-convention", c.convention,
                  "literal: scale = range; thirds: scale = range / 3")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, RangeConvention>{{"literal", RangeConvention::literal},
                                                 {"thirds", RangeConvention::thirds}}));
  cmd->add_option("--bin-width", c.bin_width, "semivariogram bin width");
  cmd->add_option("--max-lag", c.max_lag, "semivariogram maximum lag");
}

void add_fit_options(CLI::App* cmd, cli::FitCommandOptions& f) {
  cmd->add_option("data", f.data_path, "grid CSV file (row,col,y[,covariates])")->required();
  add_correlation_options(cmd, f.correlation);
  cmd->add_option("--tol", f.tol, "convergence tolerance on ||U||_inf");
  cmd->add_option("--max-iter", f.max_iter, "Newton-Raphson iteration limit");
  cmd->add_flag("--damping", f.damping, "halve steps while the score norm increases");
  cmd->add_option("--out", f.out_dir, "directory for report files");
  cmd->add_flag("--dump-gamma", f.dump_gamma, "write the correlation matrix as gamma.csv");
}

// Optional numeric/text overrides collected into Settings.
struct SettingFlags {
  std::map<std::string, std::optional<std::string>> values;

  void add(CLI::App* cmd, const std::string& flag, const std::string& key,
           const std::string& help) {
    cmd->add_option(flag, values[key], help);
  }

  void apply(cli::Settings& s) const {
    for (const auto& [key, value] : values) {
      if (value) s[key] = *value;
    }
  }
};

void add_simulation_flags(CLI::App* cmd, SettingFlags& flags) {
  flags.add(cmd, "--rows", "rows", "lattice rows");
  flags.add(cmd, "--cols", "cols", "lattice columns");
  flags.add(cmd, "--beta0", "beta0", "true intercept");
  flags.add(cmd, "--beta1", "beta1", "true covariate coefficient");
  flags.add(cmd, "--rho", "rho", "correlation decay rho");
  flags.add(cmd, "--a", "a", "correlation scale a");
  flags.add(cmd, "--metric", "metric", "distance metric: 1 or 2");
  flags.add(cmd, "--seed", "seed", "master random seed");
  flags.add(cmd, "--covariate-prob", "covariate_prob", "P(x = 1) for the simulated covariate");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-likelihood analysis of spatially correlated binary lattice data"};
  app.require_subcommand(1);

  cli::FitCommandOptions fit_opts;
  auto* fit_cmd = app.add_subcommand("fit", "fit a marginal logistic model by quasi-likelihood");
  add_fit_options(fit_cmd, fit_opts);

  cli::FitCommandOptions test_opts;
  auto* test_cmd =
      app.add_subcommand("test", "Wald test of independence between response and covariate");
  add_fit_options(test_cmd, test_opts);

  cli::VariogramCommandOptions vg_opts;
  vg_opts.out_dir = cli::default_out_dir();
  auto* vg_cmd = app.add_subcommand("variogram", "empirical semivariogram and exponential fit");
  vg_cmd->add_option("data", vg_opts.data_path, "grid CSV file")->required();
  vg_cmd->add_option("--bin-width", vg_opts.bin_width, "lag bin width");
  vg_cmd->add_option("--max-lag", vg_opts.max_lag, "maximum lag");
  vg_cmd->add_option("--out", vg_opts.out_dir, "output directory");

  std::string sim_config;
  std::string sim_out_dir = cli::default_out_dir();
  std::string sim_file = "simulated.csv";
  bool sim_shrink = false;
  SettingFlags sim_flags;
  auto* sim_cmd = app.add_subcommand("simulate", "write a synthetic grid data file");
  sim_cmd->add_option("--config", sim_config, "key=value configuration file");
  sim_cmd->add_option("--out", sim_out_dir, "output directory");
  sim_cmd->add_option("--file", sim_file, "output file name");
  sim_cmd->add_flag("--allow-shrinkage", sim_shrink,
                    "repair a non-PD latent matrix by shrinking toward identity");
  add_simulation_flags(sim_cmd, sim_flags);

  std::string val_config;
  std::string val_out_dir = cli::default_out_dir();
  SettingFlags val_flags;
  auto* val_cmd = app.add_subcommand("validate", "Monte Carlo and numerical validation suites");
  val_cmd->add_option("--config", val_config, "key=value configuration file");
  val_cmd->add_option("--out", val_out_dir, "output directory");
  add_simulation_flags(val_cmd, val_flags);
  val_flags.add(val_cmd, "--reps", "reps", "coverage replicates");
  val_flags.add(val_cmd, "--normality-reps", "normality_reps", "normality replicates");
  val_flags.add(val_cmd, "--normality-rho", "normality_rho",
                "correlation decay of the normality study");
  val_flags.add(val_cmd, "--normality-metric", "normality_metric",
                "distance metric of the normality study");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInvalidInput;
  }

  if (fit_cmd->parsed()) return cli::cmd_fit(fit_opts, std::cout, std::cerr);
  if (test_cmd->parsed()) return cli::cmd_test_independence(test_opts, std::cout, std::cerr);
  if (vg_cmd->parsed()) return cli::cmd_variogram(vg_opts, std::cout, std::cerr);

  auto settings_for = [](const std::string& path, const SettingFlags& flags,
                         cli::Settings& out) -> bool {
    try {
      if (!path.empty()) out = cli::load_settings(path);
    } catch (const std::exception& e) {
      std::cerr << "invalid input: " << e.what() << '\n';
      return false;
    }
    flags.apply(out);
    return true;
  };

  if (sim_cmd->parsed()) {
    cli::Settings s;
    if (!settings_for(sim_config, sim_flags, s)) return cli::kInvalidInput;
    if (sim_shrink) s["allow_shrinkage"] = "true";
    return cli::cmd_simulate(s, (std::filesystem::path(sim_out_dir) / sim_file).string(),
                             std::cout, std::cerr);
  }
  if (val_cmd->parsed()) {
    cli::Settings s;
    if (!settings_for(val_config, val_flags, s)) return cli::kInvalidInput;
    return cli::cmd_validate(s, val_out_dir, std::cout, std::cerr);
  }
  return cli::kInternal;
}
