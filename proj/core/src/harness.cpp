#include "loctest/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "loctest/asymptotics.hpp"
#include "loctest/bnp.hpp"
#include "loctest/classical.hpp"
#include "loctest/errors.hpp"
#include "loctest/io.hpp"
#include "loctest/parallel.hpp"
#include "loctest/rng.hpp"
#include "loctest/spatial.hpp"

namespace loctest {

namespace {

// Fixed per-method substream ids; a replication's seed plus one of these
// gives the method its own stream, so adding or removing methods never
// shifts another method's randomness.
std::uint64_t method_stream_id(Method method) {
  switch (method) {
    case Method::npbayes: return 1;
    case Method::sign: return 2;
    case Method::rank: return 3;
    case Method::signed_rank: return 4;
    case Method::hotelling: return 5;
  }
  return 0;
}

std::string trim_copy(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_trim(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(sep, start);
    out.push_back(trim_copy(pos == std::string_view::npos ? text.substr(start)
                                                          : text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void bad_config(std::size_t line, const std::string& what) {
  throw config_error("line " + std::to_string(line) + ": " + what);
}

double parse_real(const std::string& text, std::size_t line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size())
    bad_config(line, "expected a number, got '" + text + "'");
  return v;
}

std::uint64_t parse_unsigned(const std::string& text, std::size_t line) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size())
    bad_config(line, "expected a nonnegative integer, got '" + text + "'");
  return v;
}

Vector parse_vec(const std::string& text, std::size_t line) {
  try {
    return parse_vector(text);
  } catch (const parse_error&) {
    bad_config(line, "expected a comma-separated vector, got '" + text + "'");
  }
}

struct KvLine {
  std::size_t line_no;
  std::string key, value;
};

std::vector<KvLine> scan_kv(std::istream& in) {
  std::vector<KvLine> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim_copy(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) bad_config(line_no, "expected 'key = value'");
    KvLine kv;
    kv.line_no = line_no;
    kv.key = trim_copy(std::string_view(body).substr(0, eq));
    kv.value = trim_copy(std::string_view(body).substr(eq + 1));
    if (kv.key.empty()) bad_config(line_no, "missing key before '='");
    if (kv.value.empty()) bad_config(line_no, "missing value for '" + kv.key + "'");
    out.push_back(std::move(kv));
  }
  return out;
}

StudyKind parse_kind(const std::string& text, std::size_t line) {
  if (text == "one_sample") return StudyKind::one_sample;
  if (text == "two_sample") return StudyKind::two_sample;
  bad_config(line, "kind must be one_sample or two_sample, got '" + text + "'");
}

DistEntry parse_dist(const std::string& text, std::size_t line) {
  const auto parts = split_trim(text, ':');
  DistEntry d;
  if (parts[0] == "gaussian") {
    if (parts.size() > 1) bad_config(line, "gaussian takes no parameters");
    d.family = DistFamily::gaussian;
  } else if (parts[0] == "t") {
    d.family = DistFamily::student_t;
    if (parts.size() > 2) bad_config(line, "t takes at most one parameter (t:NU)");
    if (parts.size() == 2) d.nu = parse_real(parts[1], line);
  } else if (parts[0] == "gamma") {
    d.family = DistFamily::gamma;
    if (parts.size() > 3) bad_config(line, "gamma takes at most two parameters (gamma:S:R)");
    if (parts.size() >= 2) d.shape = parse_real(parts[1], line);
    if (parts.size() == 3) d.rate = parse_real(parts[2], line);
  } else {
    bad_config(line, "unknown distribution '" + parts[0] + "' (gaussian, t:NU, gamma:S:R)");
  }
  return d;
}

std::string dist_label(const DistEntry& d) {
  switch (d.family) {
    case DistFamily::gaussian: return "gaussian";
    case DistFamily::student_t: return "t:" + format_double(d.nu);
    case DistFamily::gamma:
      return "gamma:" + format_double(d.shape) + ":" + format_double(d.rate);
  }
  return "?";
}

std::string vec_label(const Vector& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::string row_label(const StudyRow& row) {
  std::string out = dist_label(row.dist) + " @ " + vec_label(row.loc1);
  if (!row.loc2.empty()) out += " | " + vec_label(row.loc2);
  return out;
}

StudyRow parse_row(const std::string& text, std::size_t line) {
  const std::size_t at = text.find('@');
  if (at == std::string::npos) bad_config(line, "row must look like 'dist @ location'");
  StudyRow row;
  row.dist = parse_dist(trim_copy(std::string_view(text).substr(0, at)), line);
  const auto locs = split_trim(std::string_view(text).substr(at + 1), '|');
  if (locs.empty() || locs.size() > 2)
    bad_config(line, "row takes one location (one-sample) or two separated by '|'");
  row.loc1 = parse_vec(locs[0], line);
  if (locs.size() == 2) row.loc2 = parse_vec(locs[1], line);
  row.label = row_label(row);
  return row;
}

bool parse_prior(const std::string& text, std::size_t line) {
  if (text == "dp") return false;
  if (text == "bootstrap") return true;
  bad_config(line, "prior must be dp or bootstrap, got '" + text + "'");
}

std::string format_fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';  // doubled per RFC 4180
    out += c;
  }
  out += '"';
  return out;
}

std::string comment_block(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out += "# " + line + "\n";
  return out;
}

PosteriorChoice make_prior(bool bootstrap, double mass, const Vector& base_mean,
                           double base_scale, std::size_t k) {
  if (bootstrap) return BootstrapPosterior{};
  GaussianBase base;
  base.mean = base_mean.empty() ? Vector(k, 0.0) : base_mean;
  SymMatrix cov = SymMatrix::identity(k);
  cov *= base_scale;
  base.covariance = cov;
  DPPrior prior;
  prior.mass = mass;
  prior.base = base;
  return prior;
}

void check_common(const std::string& what, std::size_t dim, std::size_t replications,
                  double alpha, double mass, double base_scale, const Vector& base_mean,
                  std::size_t draws) {
  if (dim == 0) throw config_error(what + ": dim must be at least 1");
  if (replications == 0) throw config_error(what + ": reps must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw config_error(what + ": alpha must lie in (0,1)");
  if (!(mass > 0.0)) throw config_error(what + ": mass must be positive");
  if (!(base_scale > 0.0)) throw config_error(what + ": base_scale must be positive");
  if (!base_mean.empty() && base_mean.size() != dim)
    throw config_error(what + ": base_mean must have " + std::to_string(dim) + " entries");
  if (draws == 0) throw config_error(what + ": draws must be at least 1");
}

void check_dist_entry(const std::string& what, const DistEntry& d) {
  if (d.family == DistFamily::student_t && !(d.nu >= 1.0))
    throw config_error(what + ": t degrees of freedom must be >= 1");
  if (d.family == DistFamily::gamma && (!(d.shape > 0.0) || !(d.rate > 0.0)))
    throw config_error(what + ": gamma shape and rate must be positive");
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "npbayes") return Method::npbayes;
  if (name == "sign") return Method::sign;
  if (name == "rank") return Method::rank;
  if (name == "signed_rank") return Method::signed_rank;
  if (name == "hotelling") return Method::hotelling;
  throw config_error("unknown method '" + name +
                     "' (npbayes, sign, rank, signed_rank, hotelling)");
}

std::string method_name(Method method) {
  switch (method) {
    case Method::npbayes: return "npbayes";
    case Method::sign: return "sign";
    case Method::rank: return "rank";
    case Method::signed_rank: return "signed_rank";
    case Method::hotelling: return "hotelling";
  }
  return "?";
}

StudyConfig parse_study_config(std::istream& in) {
  StudyConfig cfg;
  for (const KvLine& kv : scan_kv(in)) {
    const std::size_t ln = kv.line_no;
    if (kv.key == "kind") cfg.kind = parse_kind(kv.value, ln);
    else if (kv.key == "dim") cfg.dim = parse_unsigned(kv.value, ln);
    else if (kv.key == "n") cfg.n = parse_unsigned(kv.value, ln);
    else if (kv.key == "n1") cfg.n1 = parse_unsigned(kv.value, ln);
    else if (kv.key == "n2") cfg.n2 = parse_unsigned(kv.value, ln);
    else if (kv.key == "reps") cfg.replications = parse_unsigned(kv.value, ln);
    else if (kv.key == "alpha") cfg.alpha = parse_real(kv.value, ln);
    else if (kv.key == "prior") cfg.bootstrap_prior = parse_prior(kv.value, ln);
    else if (kv.key == "mass") cfg.mass = parse_real(kv.value, ln);
    else if (kv.key == "base_mean") cfg.base_mean = parse_vec(kv.value, ln);
    else if (kv.key == "base_scale") cfg.base_scale = parse_real(kv.value, ln);
    else if (kv.key == "draws") cfg.draws = parse_unsigned(kv.value, ln);
    else if (kv.key == "truncation")
      cfg.truncation = kv.value == "auto" ? 0 : parse_unsigned(kv.value, ln);
    else if (kv.key == "ridge")
      cfg.ridge = kv.value == "auto" ? -1.0 : parse_real(kv.value, ln);
    else if (kv.key == "seed") cfg.seed = parse_unsigned(kv.value, ln);
    else if (kv.key == "workers") cfg.workers = parse_unsigned(kv.value, ln);
    else if (kv.key == "methods") {
      cfg.methods.clear();
      for (const std::string& name : split_trim(kv.value, ','))
        cfg.methods.push_back(parse_method(name));
    } else if (kv.key == "row") {
      cfg.rows.push_back(parse_row(kv.value, ln));
    } else {
      bad_config(ln, "unknown key '" + kv.key + "'");
    }
  }
  return cfg;
}

StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  return parse_study_config(in);
}

void validate_config(const StudyConfig& cfg) {
  check_common("config", cfg.dim, cfg.replications, cfg.alpha, cfg.mass, cfg.base_scale,
               cfg.base_mean, cfg.draws);
  if (cfg.methods.empty()) throw config_error("config: methods must be nonempty");
  for (std::size_t i = 0; i < cfg.methods.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.methods.size(); ++j)
      if (cfg.methods[i] == cfg.methods[j])
        throw config_error("config: duplicate method '" + method_name(cfg.methods[i]) + "'");
  const bool two = cfg.kind == StudyKind::two_sample;
  for (const Method m : cfg.methods) {
    if (!two && m == Method::rank)
      throw config_error("config: method 'rank' applies to two samples only");
    if (two && m == Method::signed_rank)
      throw config_error("config: method 'signed_rank' applies to one sample only");
  }
  if (two) {
    if (cfg.n1 <= cfg.dim || cfg.n2 <= cfg.dim)
      throw config_error("config: need n1 > dim and n2 > dim");
  } else if (cfg.n <= cfg.dim) {
    throw config_error("config: need n > dim");
  }
  if (cfg.rows.empty()) throw config_error("config: at least one row is required");
  for (const StudyRow& row : cfg.rows) {
    check_dist_entry("row '" + row.label + "'", row.dist);
    if (row.loc1.size() != cfg.dim)
      throw config_error("row '" + row.label + "': location dimension must equal dim");
    if (two && row.loc2.size() != cfg.dim)
      throw config_error("row '" + row.label + "': two-sample rows need 'loc1 | loc2'");
    if (!two && !row.loc2.empty())
      throw config_error("row '" + row.label + "': one-sample rows take a single location");
  }
}

std::string config_echo(const StudyConfig& cfg) {
  std::string out;
  out += "kind = ";
  out += cfg.kind == StudyKind::two_sample ? "two_sample" : "one_sample";
  out += "\ndim = " + std::to_string(cfg.dim);
  if (cfg.kind == StudyKind::two_sample) {
    out += "\nn1 = " + std::to_string(cfg.n1);
    out += "\nn2 = " + std::to_string(cfg.n2);
  } else {
    out += "\nn = " + std::to_string(cfg.n);
  }
  out += "\nreps = " + std::to_string(cfg.replications);
  out += "\nalpha = " + format_double(cfg.alpha);
  out += std::string("\nprior = ") + (cfg.bootstrap_prior ? "bootstrap" : "dp");
  out += "\nmass = " + format_double(cfg.mass);
  out += "\nbase_mean = " +
         vec_label(cfg.base_mean.empty() ? Vector(cfg.dim, 0.0) : cfg.base_mean);
  out += "\nbase_scale = " + format_double(cfg.base_scale);
  out += "\ndraws = " + std::to_string(cfg.draws);
  out += "\ntruncation = " +
         (cfg.truncation == 0 ? std::string("auto") : std::to_string(cfg.truncation));
  out += "\nridge = " + (cfg.ridge < 0.0 ? std::string("auto") : format_double(cfg.ridge));
  out += "\nseed = " + std::to_string(cfg.seed);
  out += "\nmethods = ";
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    if (i) out += ", ";
    out += method_name(cfg.methods[i]);
  }
  for (const StudyRow& row : cfg.rows) out += "\nrow = " + row.label;
  out += "\n";
  return out;
}

double PowerCell::proportion() const {
  return completed == 0 ? 0.0
                        : static_cast<double>(rejections) / static_cast<double>(completed);
}

double PowerCell::std_error() const {
  if (completed == 0) return 0.0;
  const double p = proportion();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(completed));
}

Vector gamma_copula_center(double shape, double rate, std::size_t dim) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("gamma_copula_center: shape and rate must be positive");
  if (dim == 0) throw std::invalid_argument("gamma_copula_center: dim must be at least 1");

  static std::mutex cache_mutex;
  static std::map<std::tuple<double, double, std::size_t>, Vector> cache;
  const auto key = std::make_tuple(shape, rate, dim);
  std::lock_guard<std::mutex> lock(cache_mutex);
  if (const auto it = cache.find(key); it != cache.end()) return it->second;

  // Fixed-seed estimate so every study recenters identically.
  const std::string tag = "gamma-center:" + format_double(shape) + ":" + format_double(rate) +
                          ":" + std::to_string(dim);
  Rng rng(derive_seed(hash_string(tag), 0));
  constexpr std::size_t kDrawCount = 1000000;
  WeightedPointSet ps;
  ps.points = sample_gamma_copula(shape, rate, SymMatrix::identity(dim), Vector(dim, 0.0),
                                  kDrawCount, rng);
  ps.weights.assign(kDrawCount, 1.0 / static_cast<double>(kDrawCount));
  snap_weight_sum(ps.weights);
  const MedianSolution sol = weighted_spatial_median(ps, {});
  if (!sol.converged)
    throw convergence_error("gamma_copula_center: median solve did not converge");
  cache.emplace(key, sol.location);
  return sol.location;
}

DistributionSpec row_distribution(const StudyConfig& cfg, const DistEntry& dist,
                                  std::span<const double> loc) {
  const std::size_t k = cfg.dim;
  if (loc.size() != k) throw config_error("row location dimension must equal dim");
  switch (dist.family) {
    case DistFamily::gaussian: {
      MvnSpec spec;
      spec.theta.assign(loc.begin(), loc.end());
      spec.sigma = SymMatrix::identity(k);
      return spec;
    }
    case DistFamily::student_t: {
      MvtSpec spec;
      spec.theta.assign(loc.begin(), loc.end());
      spec.sigma = SymMatrix::identity(k);
      spec.nu = dist.nu;
      return spec;
    }
    case DistFamily::gamma: {
      const Vector center = gamma_copula_center(dist.shape, dist.rate, k);
      GammaCopulaSpec spec;
      spec.shape = dist.shape;
      spec.rate = dist.rate;
      spec.corr = SymMatrix::identity(k);
      spec.shift.resize(k);
      for (std::size_t j = 0; j < k; ++j) spec.shift[j] = loc[j] - center[j];
      return spec;
    }
  }
  throw config_error("row_distribution: unknown family");
}

TestOutcome run_one_sample_method(const Sample& data, std::span<const double> theta0,
                                  const SingleTestRequest& req) {
  switch (req.method) {
    case Method::npbayes: {
      TestOptions opts;
      opts.num_draws = req.draws;
      opts.level = 1.0 - req.alpha;
      opts.truncation = req.truncation;
      opts.ridge = req.ridge;
      const PosteriorChoice prior =
          make_prior(req.bootstrap_prior, req.mass, req.base_mean, req.base_scale, data.cols());
      return one_sample_test(data, theta0, prior, opts, req.seed);
    }
    case Method::sign:
    case Method::signed_rank: {
      const ScoreKind kind =
          req.method == Method::sign ? ScoreKind::sign : ScoreKind::signed_rank;
      TestOutcome out = one_sample_score_test(data, theta0, kind, req.alpha);
      if (req.resamples > 0) {
        Rng rng(derive_seed(req.seed, 101));
        out.diagnostics["resample_pvalue"] =
            sign_flip_pvalue(data, theta0, kind, req.resamples, rng);
      }
      return out;
    }
    case Method::rank:
      throw config_error("method 'rank' applies to two samples only");
    case Method::hotelling:
      return hotelling_one_sample(data, theta0, req.alpha);
  }
  throw config_error("unknown method");
}

TestOutcome run_two_sample_method(const Sample& data1, const Sample& data2,
                                  const SingleTestRequest& req) {
  switch (req.method) {
    case Method::npbayes: {
      TestOptions opts;
      opts.num_draws = req.draws;
      opts.level = 1.0 - req.alpha;
      opts.truncation = req.truncation;
      opts.ridge = req.ridge;
      const PosteriorChoice prior =
          make_prior(req.bootstrap_prior, req.mass, req.base_mean, req.base_scale, data1.cols());
      return two_sample_test(data1, data2, prior, opts, req.seed);
    }
    case Method::sign:
    case Method::rank: {
      const ScoreKind kind = req.method == Method::sign ? ScoreKind::sign : ScoreKind::rank;
      TestOutcome out = two_sample_score_test(data1, data2, kind, true, req.alpha);
      if (req.resamples > 0) {
        Rng rng(derive_seed(req.seed, 101));
        out.diagnostics["resample_pvalue"] =
            permutation_pvalue(data1, data2, kind, req.resamples, rng);
      }
      return out;
    }
    case Method::signed_rank:
      throw config_error("method 'signed_rank' applies to one sample only");
    case Method::hotelling:
      return hotelling_two_sample(data1, data2, req.alpha);
  }
  throw config_error("unknown method");
}

PowerTable run_power_study(const StudyConfig& cfg) {
  validate_config(cfg);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t nrows = cfg.rows.size();
  const std::size_t nmeth = cfg.methods.size();
  const bool two = cfg.kind == StudyKind::two_sample;
  const std::size_t reps = cfg.replications;

  std::vector<DistributionSpec> spec1, spec2;
  spec1.reserve(nrows);
  for (const StudyRow& row : cfg.rows) {
    spec1.push_back(row_distribution(cfg, row.dist, row.loc1));
    if (two) spec2.push_back(row_distribution(cfg, row.dist, row.loc2));
  }

  struct Accum {
    std::size_t rejections = 0, completed = 0;
    std::size_t error_rep = std::numeric_limits<std::size_t>::max();
    std::string error;
  };
  std::vector<std::vector<Accum>> acc(nrows, std::vector<Accum>(nmeth));
  std::mutex acc_mutex;

  SingleTestRequest base;
  base.alpha = cfg.alpha;
  base.bootstrap_prior = cfg.bootstrap_prior;
  base.mass = cfg.mass;
  base.base_mean = cfg.base_mean;
  base.base_scale = cfg.base_scale;
  base.draws = cfg.draws;
  base.truncation = cfg.truncation;
  base.ridge = cfg.ridge;

  const Vector origin(cfg.dim, 0.0);
  const std::size_t workers = cfg.workers ? cfg.workers : default_worker_count();

  parallel_for(nrows * reps, workers, [&](std::size_t task) {
    const std::size_t r = task / reps;
    const std::size_t rep = task % reps;
    const std::uint64_t row_seed = derive_seed(cfg.seed, hash_string(cfg.rows[r].label));
    const std::uint64_t rep_seed = derive_seed(row_seed, rep);
    Rng data_rng(derive_seed(rep_seed, 0));

    const Sample d1 = sample_distribution(spec1[r], two ? cfg.n1 : cfg.n, data_rng);
    Sample d2;
    if (two) d2 = sample_distribution(spec2[r], cfg.n2, data_rng);

    struct Local {
      bool ok = false;
      bool reject = false;
      std::string error;
    };
    std::vector<Local> local(nmeth);
    for (std::size_t m = 0; m < nmeth; ++m) {
      SingleTestRequest req = base;
      req.method = cfg.methods[m];
      req.seed = derive_seed(rep_seed, method_stream_id(req.method));
      try {
        const TestOutcome out =
            two ? run_two_sample_method(d1, d2, req) : run_one_sample_method(d1, origin, req);
        local[m].ok = true;
        local[m].reject = out.reject;
      } catch (const std::exception& e) {
        local[m].error = e.what();
      }
    }
    const std::lock_guard<std::mutex> lock(acc_mutex);
    for (std::size_t m = 0; m < nmeth; ++m) {
      Accum& a = acc[r][m];
      if (local[m].ok) {
        ++a.completed;
        if (local[m].reject) ++a.rejections;
      } else if (rep < a.error_rep) {
        a.error_rep = rep;
        a.error = local[m].error;
      }
    }
  });

  PowerTable table;
  table.methods = cfg.methods;
  table.config = config_echo(cfg);
  table.seed = cfg.seed;
  table.row_labels.reserve(nrows);
  table.cells.assign(nrows, std::vector<PowerCell>(nmeth));
  for (std::size_t r = 0; r < nrows; ++r) {
    table.row_labels.push_back(cfg.rows[r].label);
    for (std::size_t m = 0; m < nmeth; ++m) {
      PowerCell& cell = table.cells[r][m];
      cell.rejections = acc[r][m].rejections;
      cell.completed = acc[r][m].completed;
      cell.error = acc[r][m].error;
    }
  }
  table.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return table;
}

std::string format_power_table_text(const PowerTable& table) {
  std::string out = comment_block(table.config);

  std::vector<std::string> cells;
  std::size_t label_width = 3;  // "row"
  for (const std::string& label : table.row_labels)
    label_width = std::max(label_width, label.size());
  std::vector<std::size_t> widths(table.methods.size());
  for (std::size_t m = 0; m < table.methods.size(); ++m)
    widths[m] = method_name(table.methods[m]).size();

  std::vector<std::vector<std::string>> body(table.cells.size());
  for (std::size_t r = 0; r < table.cells.size(); ++r) {
    body[r].resize(table.methods.size());
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
      const PowerCell& cell = table.cells[r][m];
      body[r][m] = cell.error.empty() ? format_fixed(cell.proportion(), 4) + " (" +
                                            format_fixed(cell.std_error(), 4) + ")"
                                      : std::string("error");
      widths[m] = std::max(widths[m], body[r][m].size());
    }
  }

  auto pad = [](const std::string& s, std::size_t w) {
    return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
  };
  out += pad("row", label_width);
  for (std::size_t m = 0; m < table.methods.size(); ++m)
    out += "  " + pad(method_name(table.methods[m]), widths[m]);
  out += "\n";
  for (std::size_t r = 0; r < table.cells.size(); ++r) {
    out += pad(table.row_labels[r], label_width);
    for (std::size_t m = 0; m < table.methods.size(); ++m) out += "  " + pad(body[r][m], widths[m]);
    out += "\n";
  }

  bool any_error = false;
  for (const auto& row : table.cells)
    for (const PowerCell& cell : row) any_error = any_error || !cell.error.empty();
  if (any_error) {
    out += "# cell errors:\n";
    for (std::size_t r = 0; r < table.cells.size(); ++r)
      for (std::size_t m = 0; m < table.methods.size(); ++m)
        if (!table.cells[r][m].error.empty())
          out += "#   " + table.row_labels[r] + " / " + method_name(table.methods[m]) + ": " +
                 table.cells[r][m].error + "\n";
  }
  return out;
}

std::string format_power_table_csv(const PowerTable& table) {
  std::string out = comment_block(table.config);
  out += "row,method,rejections,completed,proportion,std_error,error\n";
  for (std::size_t r = 0; r < table.cells.size(); ++r)
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
      const PowerCell& cell = table.cells[r][m];
      out += csv_quote(table.row_labels[r]) + "," + method_name(table.methods[m]) + "," +
             std::to_string(cell.rejections) + "," + std::to_string(cell.completed) + "," +
             format_double(cell.proportion()) + "," + format_double(cell.std_error()) + "," +
             csv_quote(cell.error) + "\n";
    }
  return out;
}

ComparisonConfig parse_comparison_config(std::istream& in) {
  ComparisonConfig cfg;
  for (const KvLine& kv : scan_kv(in)) {
    const std::size_t ln = kv.line_no;
    if (kv.key == "kind") cfg.kind = parse_kind(kv.value, ln);
    else if (kv.key == "dim") cfg.dim = parse_unsigned(kv.value, ln);
    else if (kv.key == "model") {
      const DistEntry d = parse_dist(kv.value, ln);
      if (d.family == DistFamily::gamma)
        bad_config(ln, "model must be gaussian or t:NU (no closed score for gamma)");
      cfg.family = d.family;
      cfg.nu = d.nu;
    } else if (kv.key == "n") cfg.n = parse_unsigned(kv.value, ln);
    else if (kv.key == "n1") cfg.n1 = parse_unsigned(kv.value, ln);
    else if (kv.key == "n2") cfg.n2 = parse_unsigned(kv.value, ln);
    else if (kv.key == "alpha") cfg.alpha = parse_real(kv.value, ln);
    else if (kv.key == "reps") cfg.replications = parse_unsigned(kv.value, ln);
    else if (kv.key == "mc_size") cfg.mc_size = parse_unsigned(kv.value, ln);
    else if (kv.key == "prior") cfg.bootstrap_prior = parse_prior(kv.value, ln);
    else if (kv.key == "mass") cfg.mass = parse_real(kv.value, ln);
    else if (kv.key == "base_mean") cfg.base_mean = parse_vec(kv.value, ln);
    else if (kv.key == "base_scale") cfg.base_scale = parse_real(kv.value, ln);
    else if (kv.key == "draws") cfg.draws = parse_unsigned(kv.value, ln);
    else if (kv.key == "truncation")
      cfg.truncation = kv.value == "auto" ? 0 : parse_unsigned(kv.value, ln);
    else if (kv.key == "ridge")
      cfg.ridge = kv.value == "auto" ? -1.0 : parse_real(kv.value, ln);
    else if (kv.key == "seed") cfg.seed = parse_unsigned(kv.value, ln);
    else if (kv.key == "workers") cfg.workers = parse_unsigned(kv.value, ln);
    else if (kv.key == "h") {
      const auto parts = split_trim(kv.value, '|');
      if (parts.empty() || parts.size() > 2)
        bad_config(ln, "h takes one drift vector or two separated by '|'");
      cfg.h1_list.push_back(parse_vec(parts[0], ln));
      cfg.h2_list.push_back(parts.size() == 2 ? parse_vec(parts[1], ln) : Vector{});
    } else {
      bad_config(ln, "unknown key '" + kv.key + "'");
    }
  }
  return cfg;
}

ComparisonConfig load_comparison_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  return parse_comparison_config(in);
}

void validate_config(const ComparisonConfig& cfg) {
  check_common("config", cfg.dim, cfg.replications, cfg.alpha, cfg.mass, cfg.base_scale,
               cfg.base_mean, cfg.draws);
  if (cfg.family == DistFamily::gamma)
    throw config_error("config: comparison models must be gaussian or t:NU");
  if (cfg.family == DistFamily::student_t && !(cfg.nu >= 1.0))
    throw config_error("config: t degrees of freedom must be >= 1");
  if (cfg.mc_size < 1000) throw config_error("config: mc_size must be at least 1000");
  const bool two = cfg.kind == StudyKind::two_sample;
  if (two) {
    if (cfg.n1 <= cfg.dim || cfg.n2 <= cfg.dim)
      throw config_error("config: need n1 > dim and n2 > dim");
  } else if (cfg.n <= cfg.dim) {
    throw config_error("config: need n > dim");
  }
  if (cfg.h1_list.empty()) throw config_error("config: at least one h line is required");
  for (std::size_t i = 0; i < cfg.h1_list.size(); ++i) {
    if (cfg.h1_list[i].size() != cfg.dim)
      throw config_error("config: h vectors must have dim entries");
    if (two && cfg.h2_list[i].size() != cfg.dim)
      throw config_error("config: two-sample comparisons need 'h1 | h2' lines");
    if (!two && !cfg.h2_list[i].empty())
      throw config_error("config: one-sample comparisons take a single h vector");
  }
}

std::string config_echo(const ComparisonConfig& cfg) {
  std::string out;
  out += "kind = ";
  out += cfg.kind == StudyKind::two_sample ? "two_sample" : "one_sample";
  out += "\ndim = " + std::to_string(cfg.dim);
  out += "\nmodel = ";
  out += cfg.family == DistFamily::gaussian ? "gaussian" : "t:" + format_double(cfg.nu);
  if (cfg.kind == StudyKind::two_sample) {
    out += "\nn1 = " + std::to_string(cfg.n1);
    out += "\nn2 = " + std::to_string(cfg.n2);
  } else {
    out += "\nn = " + std::to_string(cfg.n);
  }
  out += "\nreps = " + std::to_string(cfg.replications);
  out += "\nalpha = " + format_double(cfg.alpha);
  out += "\nmc_size = " + std::to_string(cfg.mc_size);
  out += std::string("\nprior = ") + (cfg.bootstrap_prior ? "bootstrap" : "dp");
  out += "\nmass = " + format_double(cfg.mass);
  out += "\nbase_mean = " +
         vec_label(cfg.base_mean.empty() ? Vector(cfg.dim, 0.0) : cfg.base_mean);
  out += "\nbase_scale = " + format_double(cfg.base_scale);
  out += "\ndraws = " + std::to_string(cfg.draws);
  out += "\ntruncation = " +
         (cfg.truncation == 0 ? std::string("auto") : std::to_string(cfg.truncation));
  out += "\nridge = " + (cfg.ridge < 0.0 ? std::string("auto") : format_double(cfg.ridge));
  out += "\nseed = " + std::to_string(cfg.seed);
  for (std::size_t i = 0; i < cfg.h1_list.size(); ++i) {
    out += "\nh = " + vec_label(cfg.h1_list[i]);
    if (!cfg.h2_list[i].empty()) out += " | " + vec_label(cfg.h2_list[i]);
  }
  out += "\n";
  return out;
}

ComparisonTable run_power_comparison(const ComparisonConfig& cfg) {
  validate_config(cfg);
  const auto start = std::chrono::steady_clock::now();
  const bool two = cfg.kind == StudyKind::two_sample;
  const std::size_t count = cfg.h1_list.size();

  const SymMatrix scatter = SymMatrix::identity(cfg.dim);
  const ModelSpec model = cfg.family == DistFamily::gaussian ? gaussian_model(scatter)
                                                             : t_model(scatter, cfg.nu);
  const Vector origin(cfg.dim, 0.0);
  const double lambda = static_cast<double>(cfg.n1) / static_cast<double>(cfg.n1 + cfg.n2);

  std::vector<std::string> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    labels[i] = vec_label(cfg.h1_list[i]);
    if (two) labels[i] += " | " + vec_label(cfg.h2_list[i]);
  }

  // Empirical side: a power study over npbayes with the drifts scaled down
  // to actual locations at the configured sample sizes.
  StudyConfig sc;
  sc.kind = cfg.kind;
  sc.dim = cfg.dim;
  sc.n = cfg.n;
  sc.n1 = cfg.n1;
  sc.n2 = cfg.n2;
  sc.replications = cfg.replications;
  sc.alpha = cfg.alpha;
  sc.bootstrap_prior = cfg.bootstrap_prior;
  sc.mass = cfg.mass;
  sc.base_mean = cfg.base_mean;
  sc.base_scale = cfg.base_scale;
  sc.draws = cfg.draws;
  sc.truncation = cfg.truncation;
  sc.ridge = cfg.ridge;
  sc.seed = cfg.seed;
  sc.workers = cfg.workers;
  sc.methods = {Method::npbayes};
  DistEntry entry;
  entry.family = cfg.family;
  entry.nu = cfg.nu;
  for (std::size_t i = 0; i < count; ++i) {
    StudyRow row;
    row.dist = entry;
    row.loc1.resize(cfg.dim);
    const double root1 = std::sqrt(static_cast<double>(two ? cfg.n1 : cfg.n));
    for (std::size_t j = 0; j < cfg.dim; ++j) row.loc1[j] = cfg.h1_list[i][j] / root1;
    if (two) {
      row.loc2.resize(cfg.dim);
      const double root2 = std::sqrt(static_cast<double>(cfg.n2));
      for (std::size_t j = 0; j < cfg.dim; ++j) row.loc2[j] = cfg.h2_list[i][j] / root2;
    }
    row.label = "drift " + labels[i];
    sc.rows.push_back(std::move(row));
  }
  const PowerTable empirical = run_power_study(sc);

  ComparisonTable table;
  table.config = config_echo(cfg);
  table.seed = cfg.seed;
  table.rows.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    ComparisonRow& row = table.rows[i];
    row.label = labels[i];
    Rng theory_rng(derive_seed(cfg.seed, hash_string("theory: " + labels[i])));
    row.theoretical =
        two ? two_sample_local_power(model, model, origin, cfg.h1_list[i], cfg.h2_list[i],
                                     lambda, cfg.alpha, cfg.mc_size, theory_rng)
            : one_sample_local_power(model, origin, cfg.h1_list[i], cfg.alpha, cfg.mc_size,
                                     theory_rng);
    row.empirical = empirical.cells[i][0];
  }
  table.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return table;
}

std::string format_comparison_text(const ComparisonTable& table) {
  std::string out = comment_block(table.config);
  std::size_t label_width = 1;
  for (const ComparisonRow& row : table.rows)
    label_width = std::max(label_width, row.label.size());
  auto pad = [](const std::string& s, std::size_t w) {
    return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
  };
  out += pad("h", label_width) + "  theoretical  empirical         |diff|\n";
  for (const ComparisonRow& row : table.rows) {
    const std::string emp =
        row.empirical.error.empty()
            ? format_fixed(row.empirical.proportion(), 4) + " (" +
                  format_fixed(row.empirical.std_error(), 4) + ")"
            : std::string("error");
    const std::string diff =
        row.empirical.error.empty()
            ? format_fixed(std::abs(row.theoretical - row.empirical.proportion()), 4)
            : std::string("-");
    out += pad(row.label, label_width) + "  " + pad(format_fixed(row.theoretical, 4), 11) +
           "  " + pad(emp, 16) + "  " + diff + "\n";
  }
  for (const ComparisonRow& row : table.rows)
    if (!row.empirical.error.empty())
      out += "#   " + row.label + ": " + row.empirical.error + "\n";
  return out;
}

std::string format_comparison_csv(const ComparisonTable& table) {
  std::string out = comment_block(table.config);
  out += "h,theoretical,empirical,rejections,completed,std_error,error\n";
  for (const ComparisonRow& row : table.rows) {
    out += csv_quote(row.label) + "," + format_double(row.theoretical) + "," +
           format_double(row.empirical.proportion()) + "," +
           std::to_string(row.empirical.rejections) + "," +
           std::to_string(row.empirical.completed) + "," +
           format_double(row.empirical.std_error()) + "," + csv_quote(row.empirical.error) +
           "\n";
  }
  return out;
}

}  // namespace loctest
