// Command line driver: one- and two-sample multivariate location tests plus
// Monte Carlo power studies, all backed by the loctest core library.
//
// Exit codes: 0 = success, 1 = bad invocation or configuration, 2 = runtime
// failure while computing (singular matrices, non-convergence, ...).

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "loctest/errors.hpp"
#include "loctest/harness.hpp"
#include "loctest/io.hpp"
#include "loctest/matrix.hpp"
#include "loctest/outcome.hpp"

namespace {

using loctest::config_error;

// Options shared by the test1/test2 subcommands.
struct TestCli {
  std::string data;    // test1
  std::string data1;   // test2
  std::string data2;   // test2
  std::string theta0;  // test1: comma separated null location
  std::string method = "npbayes";
  double alpha = 0.05;
  std::uint64_t seed = 1;
  bool header = false;
  // npbayes knobs
  std::string prior = "dp";
  double mass = 2.0;
  std::string base_mean;
  double base_scale = 10.0;
  std::size_t draws = 1000;
  std::size_t truncation = 0;
  double ridge = -1.0;
  // classical knob
  std::size_t resamples = 0;
};

void add_common_test_options(CLI::App& sub, TestCli& cli) {
  sub.add_option("--method", cli.method, "Test to run")
      ->check(CLI::IsMember({"npbayes", "sign", "rank", "signed_rank", "hotelling"}))
      ->capture_default_str();
  sub.add_option("--alpha", cli.alpha, "Significance level in (0,1)")->capture_default_str();
  sub.add_option("--seed", cli.seed, "RNG seed")->capture_default_str();
  sub.add_flag("--header", cli.header, "Skip the first row of each data file");
  sub.add_option("--prior", cli.prior, "npbayes prior: Dirichlet process or its bootstrap limit")
      ->check(CLI::IsMember({"dp", "bootstrap"}))
      ->capture_default_str();
  sub.add_option("--mass", cli.mass, "npbayes: prior mass of the Dirichlet process")
      ->capture_default_str();
  sub.add_option("--base-mean", cli.base_mean,
                 "npbayes: comma separated mean of the Gaussian base measure (default zeros)");
  sub.add_option("--base-scale", cli.base_scale,
                 "npbayes: base measure covariance is this multiple of the identity")
      ->capture_default_str();
  sub.add_option("--draws", cli.draws, "npbayes: posterior draws")->capture_default_str();
  sub.add_option("--truncation", cli.truncation,
                 "npbayes: stick-breaking truncation level (0 = automatic)")
      ->capture_default_str();
  sub.add_option("--ridge", cli.ridge,
                 "npbayes: ridge added to the credible-region scatter (negative = automatic)")
      ->capture_default_str();
  sub.add_option("--resamples", cli.resamples,
                 "classical methods: also report a resampled p-value from this many "
                 "sign flips (one-sample) or permutations (two-sample)")
      ->capture_default_str();
}

loctest::SingleTestRequest make_request(const TestCli& cli) {
  if (!(cli.alpha > 0.0 && cli.alpha < 1.0))
    throw config_error("--alpha must lie strictly between 0 and 1");
  loctest::SingleTestRequest req;
  req.method = loctest::parse_method(cli.method);
  req.alpha = cli.alpha;
  req.seed = cli.seed;
  req.bootstrap_prior = cli.prior == "bootstrap";
  req.mass = cli.mass;
  if (!cli.base_mean.empty()) req.base_mean = loctest::parse_vector(cli.base_mean);
  req.base_scale = cli.base_scale;
  req.draws = cli.draws;
  req.truncation = cli.truncation;
  req.ridge = cli.ridge;
  req.resamples = cli.resamples;
  return req;
}

void print_outcome(const loctest::TestOutcome& out, double alpha) {
  std::cout << "method    = " << out.method << '\n';
  std::cout << "statistic = " << loctest::format_double(out.statistic) << '\n';
  std::cout << "threshold = " << loctest::format_double(out.threshold) << '\n';
  if (out.p_value)
    std::cout << "p_value   = " << loctest::format_double(*out.p_value) << '\n';
  std::cout << "decision  = " << (out.reject ? "reject" : "accept") << " (alpha = "
            << loctest::format_double(alpha) << ")\n";
  if (!out.diagnostics.empty()) {
    std::cout << "diagnostics:\n";
    for (const auto& [key, value] : out.diagnostics)
      std::cout << "  " << key << " = " << loctest::format_double(value) << '\n';
  }
}

int run_test1(const TestCli& cli) {
  const loctest::Sample data = loctest::read_csv_file(cli.data, cli.header);
  const loctest::Vector theta0 = loctest::parse_vector(cli.theta0);
  const loctest::SingleTestRequest req = make_request(cli);
  const loctest::TestOutcome out = loctest::run_one_sample_method(data, theta0, req);
  std::cout << "data      = " << cli.data << " (n = " << data.rows()
            << ", dim = " << data.cols() << ")\n";
  std::cout << "theta0    = " << cli.theta0 << '\n';
  print_outcome(out, cli.alpha);
  return 0;
}

int run_test2(const TestCli& cli) {
  const loctest::Sample data1 = loctest::read_csv_file(cli.data1, cli.header);
  const loctest::Sample data2 = loctest::read_csv_file(cli.data2, cli.header);
  const loctest::SingleTestRequest req = make_request(cli);
  const loctest::TestOutcome out = loctest::run_two_sample_method(data1, data2, req);
  std::cout << "data1     = " << cli.data1 << " (n = " << data1.rows()
            << ", dim = " << data1.cols() << ")\n";
  std::cout << "data2     = " << cli.data2 << " (n = " << data2.rows()
            << ", dim = " << data2.cols() << ")\n";
  print_outcome(out, cli.alpha);
  return 0;
}

// Options shared by the power/powercmp subcommands.
struct StudyCli {
  std::string config;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::string out;
  bool full = false;
  const CLI::Option* reps_opt = nullptr;
  const CLI::Option* seed_opt = nullptr;
  const CLI::Option* workers_opt = nullptr;
};

void add_common_study_options(CLI::App& sub, StudyCli& cli) {
  sub.add_option("--config", cli.config, "Study configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cli.reps_opt = sub.add_option("--reps", cli.reps, "Override the configured replication count");
  cli.seed_opt = sub.add_option("--seed", cli.seed, "Override the configured seed");
  cli.workers_opt =
      sub.add_option("--workers", cli.workers,
                     "Worker threads (default: LOCTEST_WORKERS or the hardware count)");
  sub.add_flag("--full", cli.full,
               "Run 2000 replications unless --reps is given (full-scale study)");
  sub.add_option("--out", cli.out, "Also write the table as CSV to this file");
}

void write_out_file(const std::string& path, const std::string& text) {
  std::ofstream file(path);
  if (!file) throw config_error("cannot open output file: " + path);
  file << text;
  if (!file.good()) throw config_error("failed while writing output file: " + path);
}

template <typename Config>
void apply_study_overrides(const StudyCli& cli, Config& cfg) {
  if (cli.reps_opt->count() > 0)
    cfg.replications = cli.reps;
  else if (cli.full)
    cfg.replications = 2000;
  if (cli.seed_opt->count() > 0) cfg.seed = cli.seed;
  if (cli.workers_opt->count() > 0) cfg.workers = cli.workers;
}

int run_power(const StudyCli& cli) {
  loctest::StudyConfig cfg = loctest::load_study_config(cli.config);
  apply_study_overrides(cli, cfg);
  loctest::validate_config(cfg);
  const loctest::PowerTable table = loctest::run_power_study(cfg);
  std::cout << loctest::format_power_table_text(table);
  if (!cli.out.empty()) write_out_file(cli.out, loctest::format_power_table_csv(table));
  std::cerr << "completed in " << loctest::format_double(table.wall_seconds) << " s\n";
  return 0;
}

int run_powercmp(const StudyCli& cli) {
  loctest::ComparisonConfig cfg = loctest::load_comparison_config(cli.config);
  apply_study_overrides(cli, cfg);
  loctest::validate_config(cfg);
  const loctest::ComparisonTable table = loctest::run_power_comparison(cfg);
  std::cout << loctest::format_comparison_text(table);
  if (!cli.out.empty()) write_out_file(cli.out, loctest::format_comparison_csv(table));
  std::cerr << "completed in " << loctest::format_double(table.wall_seconds) << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Multivariate location testing: nonparametric Bayesian credible-region "
      "tests, spatial sign and rank tests, Hotelling-type tests, and Monte "
      "Carlo power studies."};
  app.require_subcommand(1);

  TestCli test1_cli;
  CLI::App* test1 = app.add_subcommand(
      "test1", "Test a null location against one multivariate sample");
  test1->add_option("--data", test1_cli.data, "CSV file, one observation per row")
      ->required()
      ->check(CLI::ExistingFile);
  test1->add_option("--theta0", test1_cli.theta0, "Comma separated null location")->required();
  add_common_test_options(*test1, test1_cli);

  TestCli test2_cli;
  CLI::App* test2 = app.add_subcommand(
      "test2", "Test equality of location between two multivariate samples");
  test2->add_option("--data1", test2_cli.data1, "First sample, CSV")
      ->required()
      ->check(CLI::ExistingFile);
  test2->add_option("--data2", test2_cli.data2, "Second sample, CSV")
      ->required()
      ->check(CLI::ExistingFile);
  add_common_test_options(*test2, test2_cli);

  StudyCli power_cli;
  CLI::App* power = app.add_subcommand(
      "power", "Monte Carlo power study over distributions and methods");
  add_common_study_options(*power, power_cli);

  StudyCli powercmp_cli;
  CLI::App* powercmp = app.add_subcommand(
      "powercmp", "Theoretical local power against its Monte Carlo estimate");
  add_common_study_options(*powercmp, powercmp_cli);

  try {
    app.parse(argc, argv);
    if (test1->parsed()) return run_test1(test1_cli);
    if (test2->parsed()) return run_test2(test2_cli);
    if (power->parsed()) return run_power(power_cli);
    return run_powercmp(powercmp_cli);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return 1;
  } catch (const loctest::config_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const loctest::parse_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
}
