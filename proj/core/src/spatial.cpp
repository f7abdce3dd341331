#include "loctest/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "loctest/sym_matrix.hpp"

namespace loctest {

namespace {

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

void snap_weight_sum(Vector& weights) {
  if (weights.empty()) return;
  for (int pass = 0; pass < 4; ++pass) {
    double sum = 0.0;
    for (const double v : weights) sum += v;
    const double excess = sum - 1.0;
    if (std::abs(excess) <= 1e-14) return;
    auto largest = std::max_element(weights.begin(), weights.end());
    *largest -= excess;
    if (*largest < 0.0) *largest = 0.0;
  }
}

void spatial_sign(std::span<const double> y, std::span<double> out) {
  const double n = norm2(y);
  if (n == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] / n;
}

Vector spatial_sign(std::span<const double> y) {
  Vector out(y.size());
  spatial_sign(y, out);
  return out;
}

Vector spatial_rank(std::span<const double> y, const Sample& sample) {
  if (sample.rows() == 0) throw std::invalid_argument("spatial_rank: empty sample");
  const std::size_t k = y.size();
  Vector acc(k, 0.0), diff(k);
  for (std::size_t i = 0; i < sample.rows(); ++i) {
    const auto row = sample.row(i);
    for (std::size_t j = 0; j < k; ++j) diff[j] = y[j] - row[j];
    const double n = norm2(diff);
    if (n == 0.0) continue;
    for (std::size_t j = 0; j < k; ++j) acc[j] += diff[j] / n;
  }
  for (double& v : acc) v /= static_cast<double>(sample.rows());
  return acc;
}

Vector spatial_signed_rank(std::span<const double> y, const Sample& sample) {
  if (sample.rows() == 0) throw std::invalid_argument("spatial_signed_rank: empty sample");
  const std::size_t k = y.size();
  Vector acc(k, 0.0), diff(k);
  for (std::size_t i = 0; i < sample.rows(); ++i) {
    const auto row = sample.row(i);
    for (int sign = -1; sign <= 1; sign += 2) {
      for (std::size_t j = 0; j < k; ++j) diff[j] = y[j] + sign * row[j];
      const double n = norm2(diff);
      if (n == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) acc[j] += diff[j] / n;
    }
  }
  for (double& v : acc) v /= 2.0 * static_cast<double>(sample.rows());
  return acc;
}

namespace {

double objective_at(const WeightedPointSet& ps, std::span<const double> theta) {
  const std::size_t k = theta.size();
  double obj = 0.0;
  Vector diff(k);
  for (std::size_t j = 0; j < ps.points.rows(); ++j) {
    if (ps.weights[j] == 0.0) continue;
    const auto row = ps.points.row(j);
    for (std::size_t d = 0; d < k; ++d) diff[d] = row[d] - theta[d];
    obj += ps.weights[j] * norm2(diff);
  }
  return obj;
}

// Univariate weighted median of positions t with weights w (positive only).
// Returns the midpoint of the optimal set and whether that set is a
// nondegenerate interval.
struct Median1D {
  double value;
  bool interval;
  bool at_point;
};

Median1D weighted_median_1d(std::vector<std::pair<double, double>> tw) {
  std::sort(tw.begin(), tw.end());
  // Group tied positions.
  std::vector<std::pair<double, double>> grouped;
  for (const auto& [t, w] : tw) {
    if (!grouped.empty() && grouped.back().first == t)
      grouped.back().second += w;
    else
      grouped.emplace_back(t, w);
  }
  double cum = 0.0;
  for (std::size_t i = 0; i < grouped.size(); ++i) {
    cum += grouped[i].second;
    if (cum >= 0.5 - 1e-12) {
      if (std::abs(cum - 0.5) <= 1e-12 && i + 1 < grouped.size()) {
        // Left weight exactly half: every point of [t_i, t_{i+1}] minimizes.
        const double lo = grouped[i].first, hi = grouped[i + 1].first;
        return {0.5 * (lo + hi), hi > lo, hi == lo};
      }
      return {grouped[i].first, false, true};
    }
  }
  return {grouped.back().first, false, true};  // unreachable for valid weights
}

MedianSolution solve_collinear(const WeightedPointSet& ps, std::span<const double> center,
                               std::span<const double> direction, bool flag_nonunique) {
  const std::size_t k = center.size();
  std::vector<std::pair<double, double>> tw;
  for (std::size_t j = 0; j < ps.points.rows(); ++j) {
    if (ps.weights[j] == 0.0) continue;
    const auto row = ps.points.row(j);
    double t = 0.0;
    for (std::size_t d = 0; d < k; ++d) t += direction[d] * (row[d] - center[d]);
    tw.emplace_back(t, ps.weights[j]);
  }
  const Median1D med = weighted_median_1d(std::move(tw));

  MedianSolution sol;
  sol.location.resize(k);
  for (std::size_t d = 0; d < k; ++d) sol.location[d] = center[d] + med.value * direction[d];
  sol.objective = objective_at(ps, sol.location);
  sol.converged = true;
  sol.at_data_point = med.at_point && !med.interval;
  sol.possibly_nonunique = flag_nonunique || med.interval;
  return sol;
}

}  // namespace

MedianSolution weighted_spatial_median(const WeightedPointSet& ps, const MedianOptions& opts) {
  const std::size_t n = ps.points.rows();
  const std::size_t k = ps.points.cols();
  if (n == 0 || k == 0) throw std::invalid_argument("weighted_spatial_median: empty point set");
  if (ps.weights.size() != n)
    throw std::invalid_argument("weighted_spatial_median: weight/point count mismatch");

  double wsum = 0.0;
  std::size_t first_pos = n;
  for (std::size_t j = 0; j < n; ++j) {
    if (ps.weights[j] < 0.0)
      throw std::invalid_argument("weighted_spatial_median: negative weight");
    wsum += ps.weights[j];
    if (ps.weights[j] > 0.0 && first_pos == n) first_pos = j;
  }
  if (first_pos == n) throw std::invalid_argument("weighted_spatial_median: all weights zero");
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("weighted_spatial_median: weights must sum to 1");

  // All mass on one point.
  bool single = true;
  for (std::size_t j = first_pos; j < n && single; ++j) {
    if (ps.weights[j] == 0.0) continue;
    for (std::size_t d = 0; d < k; ++d)
      if (ps.points(j, d) != ps.points(first_pos, d)) {
        single = false;
        break;
      }
  }
  if (single) {
    MedianSolution sol;
    sol.location.assign(ps.points.row(first_pos).begin(), ps.points.row(first_pos).end());
    sol.objective = 0.0;
    sol.converged = true;
    sol.at_data_point = true;
    return sol;
  }

  // Weighted mean: the starting iterate, and the centering point for the
  // rank test below.
  Vector mean(k, 0.0);
  double scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto row = ps.points.row(j);
    for (std::size_t d = 0; d < k; ++d) {
      mean[d] += ps.weights[j] * row[d];
      scale = std::max(scale, std::abs(row[d]));
    }
  }

  if (k == 1) {
    const double dir[1] = {1.0};
    return solve_collinear(ps, mean, dir, false);
  }

  // Collinear support reduces to a univariate weighted median along the
  // principal axis of the weighted scatter.
  {
    SymMatrix cov(k);
    Vector diff(k);
    for (std::size_t j = 0; j < n; ++j) {
      if (ps.weights[j] == 0.0) continue;
      const auto row = ps.points.row(j);
      for (std::size_t d = 0; d < k; ++d) diff[d] = row[d] - mean[d];
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b <= a; ++b) cov.add(a, b, ps.weights[j] * diff[a] * diff[b]);
    }
    const SymEigen eig = sym_eigen(cov);
    const double largest = eig.values.back();
    const double second = eig.values[k - 2];
    if (second <= 1e-12 * largest) {
      Vector dir(k);
      for (std::size_t d = 0; d < k; ++d) dir[d] = eig.vectors(d, k - 1);
      return solve_collinear(ps, mean, dir, true);
    }
  }

  const double atom_eps = 1e-12 * (1.0 + scale);

  MedianSolution sol;
  sol.location = mean;
  Vector theta = std::move(mean);
  Vector dist(n), diff(k), residual_dir(k), next(k), extrapolated(k);
  // Atoms already checked by the optimality certificate below.
  std::vector<bool> certified(n, false);
  // State for the step-ratio extrapolation below.
  double prev_step = -1.0;
  std::size_t last_jump = 0;

  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    if (opts.trace) opts.trace->push_back(objective_at(ps, theta));

    // Pull of the far points and mass sitting at the current iterate.
    double atom_weight = 0.0;
    double inv_dist_sum = 0.0;
    std::fill(residual_dir.begin(), residual_dir.end(), 0.0);
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (ps.weights[j] == 0.0) {
        dist[j] = -1.0;
        continue;
      }
      const auto row = ps.points.row(j);
      for (std::size_t d = 0; d < k; ++d) diff[d] = row[d] - theta[d];
      dist[j] = norm2(diff);
      if (dist[j] <= atom_eps) {
        atom_weight += ps.weights[j];
        continue;
      }
      const double wd = ps.weights[j] / dist[j];
      inv_dist_sum += wd;
      for (std::size_t d = 0; d < k; ++d) {
        residual_dir[d] += wd * diff[d];
        next[d] += wd * row[d];
      }
    }

    sol.iterations = iter + 1;
    const double pull = norm2(residual_dir);

    if (pull <= atom_weight + opts.tol) {
      // Gradient norm (atom_weight = 0) or the atom optimality residual is
      // within tolerance.
      sol.converged = true;
      sol.at_data_point = atom_weight > 0.0;
      break;
    }
    if (inv_dist_sum == 0.0) {  // all mass at the iterate yet not optimal: impossible
      sol.converged = true;
      sol.at_data_point = true;
      break;
    }

    // Exact optimality certificate at the nearest data point: by convexity,
    // an atom is a global minimizer exactly when the pull of the remaining
    // points there is at most the atom's weight. When the minimum sits at an
    // atom, plain Weiszfeld approaches it only linearly with ratio
    // pull/weight (arbitrarily slow for borderline atoms), so test the
    // nearest atom directly — once — and return it exactly if it certifies.
    {
      std::size_t nearest = n;
      for (std::size_t j = 0; j < n; ++j)
        if (ps.weights[j] > 0.0 && dist[j] >= 0.0 && (nearest == n || dist[j] < dist[nearest]))
          nearest = j;
      if (nearest < n && !certified[nearest]) {
        const auto y0 = ps.points.row(nearest);
        double cluster_weight = 0.0;
        std::fill(diff.begin(), diff.end(), 0.0);
        Vector& atom_pull = diff;
        Vector gap(k);
        for (std::size_t j = 0; j < n; ++j) {
          if (ps.weights[j] == 0.0) continue;
          const auto row = ps.points.row(j);
          for (std::size_t d = 0; d < k; ++d) gap[d] = row[d] - y0[d];
          const double dj = norm2(gap);
          if (dj <= atom_eps) {
            cluster_weight += ps.weights[j];
            certified[j] = true;
            continue;
          }
          for (std::size_t d = 0; d < k; ++d) atom_pull[d] += ps.weights[j] * gap[d] / dj;
        }
        if (norm2(atom_pull) <= cluster_weight + opts.tol) {
          theta.assign(y0.begin(), y0.end());
          sol.converged = true;
          sol.at_data_point = true;
          break;
        }
      }
    }

    for (std::size_t d = 0; d < k; ++d) next[d] /= inv_dist_sum;
    if (atom_weight > 0.0) {
      // Vardi-Zhang: shrink the Weiszfeld step toward the atom.
      const double eta = std::min(1.0, atom_weight / pull);
      for (std::size_t d = 0; d < k; ++d) next[d] = (1.0 - eta) * next[d] + eta * theta[d];
    }

    double step = 0.0, loc = 0.0;
    for (std::size_t d = 0; d < k; ++d) {
      step += (next[d] - theta[d]) * (next[d] - theta[d]);
      loc += next[d] * next[d];
    }
    step = std::sqrt(step);

    // Near a barely-suboptimal atom the fixed-point map contracts with
    // ratio arbitrarily close to 1 and plain iteration crawls. Once past the
    // opening iterations, estimate the contraction ratio from consecutive
    // step norms and jump to the geometric-series limit whenever that
    // strictly lowers the objective (safeguarded Aitken extrapolation).
    bool jumped = false;
    if (iter >= 64 && iter >= last_jump + 16 && prev_step > 0.0 && step > 0.0) {
      const double rho = step / prev_step;
      if (rho >= 0.5 && rho < 1.0) {
        const double gain = rho / (1.0 - rho);
        for (std::size_t d = 0; d < k; ++d)
          extrapolated[d] = next[d] + gain * (next[d] - theta[d]);
        if (objective_at(ps, extrapolated) < objective_at(ps, next)) {
          next = extrapolated;
          jumped = true;
          last_jump = iter;
        }
      }
    }
    prev_step = jumped ? -1.0 : step;

    theta = next;
    if (!jumped && step <= opts.tol * (1.0 + std::sqrt(loc))) {
      sol.converged = true;
      break;
    }
  }

  sol.location = theta;
  sol.objective = objective_at(ps, sol.location);
  if (!sol.at_data_point) {
    for (std::size_t j = 0; j < n && !sol.at_data_point; ++j) {
      if (ps.weights[j] == 0.0) continue;
      const auto row = ps.points.row(j);
      double d2 = 0.0;
      for (std::size_t d = 0; d < k; ++d)
        d2 += (row[d] - theta[d]) * (row[d] - theta[d]);
      sol.at_data_point = std::sqrt(d2) <= atom_eps;
    }
  }
  return sol;
}

}  // namespace loctest
