#ifndef LOCTEST_HARNESS_HPP
#define LOCTEST_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "loctest/datagen.hpp"
#include "loctest/matrix.hpp"
#include "loctest/outcome.hpp"
#include "loctest/sym_matrix.hpp"

namespace loctest {

enum class Method { npbayes, sign, rank, signed_rank, hotelling };

Method parse_method(const std::string& name);       // throws config_error
std::string method_name(Method method);

enum class StudyKind { one_sample, two_sample };

enum class DistFamily { gaussian, student_t, gamma };

// A simulation family before shifting: unit scatter for gaussian/t, the
// recentered unit-copula gamma for gamma (spatial median moved to the
// origin).
struct DistEntry {
  DistFamily family = DistFamily::gaussian;
  double nu = 1.0;      // student_t only
  double shape = 2.0;   // gamma only
  double rate = 1.0;    // gamma only
};

// One table row: a family plus the true location(s) its samples are shifted
// to. Tests are always of the origin (one-sample) or of equality
// (two-sample), so the locations directly encode null vs alternative.
struct StudyRow {
  std::string label;
  DistEntry dist;
  Vector loc1;
  Vector loc2;  // two-sample only
};

struct StudyConfig {
  StudyKind kind = StudyKind::one_sample;
  std::size_t dim = 2;
  std::size_t n = 100;        // one-sample
  std::size_t n1 = 100;       // two-sample
  std::size_t n2 = 90;
  std::size_t replications = 500;
  double alpha = 0.05;
  bool bootstrap_prior = false;  // npbayes prior: DP by default
  double mass = 2.0;
  Vector base_mean;           // empty = zeros(dim)
  double base_scale = 10.0;   // base covariance = base_scale * I
  std::size_t draws = 1000;   // posterior draws per test
  std::size_t truncation = 0; // 0 = automatic
  double ridge = -1.0;        // credible-region ridge; negative = automatic
  std::uint64_t seed = 1;
  std::size_t workers = 0;    // 0 = default_worker_count()
  std::vector<Method> methods;
  std::vector<StudyRow> rows;
};

// Parses the key = value study format ('#' comments, repeated `row =` lines).
// Raises config_error with a line reference on bad input.
StudyConfig parse_study_config(std::istream& in);
StudyConfig load_study_config(const std::string& path);

// Full-config validation (dimensions, method/kind compatibility, ranges).
void validate_config(const StudyConfig& cfg);

// Canonical re-runnable key = value serialization of the effective config.
std::string config_echo(const StudyConfig& cfg);

struct PowerCell {
  std::size_t rejections = 0;
  std::size_t completed = 0;
  std::string error;  // nonempty = cell aborted; message from lowest failing rep
  double proportion() const;
  double std_error() const;  // binomial: sqrt(p(1-p)/completed)
};

struct PowerTable {
  std::vector<std::string> row_labels;
  std::vector<Method> methods;
  std::vector<std::vector<PowerCell>> cells;  // [row][method]
  std::string config;                         // echo of the effective config
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

// Runs the Monte Carlo power study: replications x rows x methods, with the
// dataset shared across methods within a replication. Deterministic given
// (config, seed) regardless of worker count; a failing replication marks its
// cell with an error instead of aborting the study.
PowerTable run_power_study(const StudyConfig& cfg);

std::string format_power_table_text(const PowerTable& table);
std::string format_power_table_csv(const PowerTable& table);

// The distribution a row draws from, shifted to `loc` (gamma rows are first
// recentered so their spatial median sits at the origin).
DistributionSpec row_distribution(const StudyConfig& cfg, const DistEntry& dist,
                                  std::span<const double> loc);

// Spatial median of the unshifted gamma-copula family, estimated once per
// (shape, rate, dim) from a fixed-seed million-draw sample and cached.
Vector gamma_copula_center(double shape, double rate, std::size_t dim);

// ---- single-dataset testing --------------------------------------------

struct SingleTestRequest {
  Method method = Method::npbayes;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  bool bootstrap_prior = false;
  double mass = 2.0;
  Vector base_mean;  // empty = zeros(k)
  double base_scale = 10.0;
  std::size_t draws = 1000;
  std::size_t truncation = 0;
  double ridge = -1.0;
  std::size_t resamples = 0;  // classical methods: also attach a resampled p-value
};

TestOutcome run_one_sample_method(const Sample& data, std::span<const double> theta0,
                                  const SingleTestRequest& req);
TestOutcome run_two_sample_method(const Sample& data1, const Sample& data2,
                                  const SingleTestRequest& req);

// ---- theoretical vs empirical power ------------------------------------

struct ComparisonConfig {
  StudyKind kind = StudyKind::one_sample;
  std::size_t dim = 2;
  DistFamily family = DistFamily::gaussian;  // gaussian or student_t
  double nu = 1.0;
  std::size_t n = 400;   // one-sample
  std::size_t n1 = 400;  // two-sample
  std::size_t n2 = 360;
  double alpha = 0.05;
  std::size_t replications = 500;
  std::size_t mc_size = 1000000;  // Monte Carlo size for the theoretical formula
  bool bootstrap_prior = true;    // empirical runs default to the bootstrap limit
  double mass = 2.0;
  Vector base_mean;
  double base_scale = 10.0;
  std::size_t draws = 1000;
  std::size_t truncation = 0;
  double ridge = -1.0;
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  std::vector<Vector> h1_list;  // local drifts; samples sit at theta0 + h/sqrt(n)
  std::vector<Vector> h2_list;  // two-sample only, parallel to h1_list
};

ComparisonConfig parse_comparison_config(std::istream& in);
ComparisonConfig load_comparison_config(const std::string& path);
void validate_config(const ComparisonConfig& cfg);
std::string config_echo(const ComparisonConfig& cfg);

struct ComparisonRow {
  std::string label;
  double theoretical = 0.0;
  PowerCell empirical;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::string config;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

ComparisonTable run_power_comparison(const ComparisonConfig& cfg);

std::string format_comparison_text(const ComparisonTable& table);
std::string format_comparison_csv(const ComparisonTable& table);

}  // namespace loctest

#endif  // LOCTEST_HARNESS_HPP
