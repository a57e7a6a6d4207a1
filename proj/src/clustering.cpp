#include "qabc/clustering.hpp"

#include "qabc/parallel.hpp"

#include <deque>
#include <limits>

namespace qabc {

DistanceMatrix distance_matrix(const std::vector<NormalizedSpectrum>& spectra, Metric metric) {
  const auto n = spectra.size();
  require(n >= 2, "distance matrix needs at least two spectra");
  for (std::size_t i = 1; i < n; ++i)
    require(spectra[i].grid == spectra[0].grid, "spectrum " + std::to_string(i) + " is on a different grid");
  DistanceMatrix out;
  out.metric = metric;
  out.values = MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = distance(spectra[i], spectra[j], metric);
  });
  out.values.triangularView<Eigen::StrictlyLower>() = out.values.transpose();
  return out;
}

MatrixXd conditional_probabilities(const MatrixXd& distances, Real perplexity) {
  const auto n = distances.rows();
  require(distances.cols() == n && n >= 2, "distance matrix must be square");
  require(perplexity > 0.0, "perplexity must be positive");
  require(distances.maxCoeff() > 0.0, "all distances are zero");
  const Real target = std::log2(perplexity);
  MatrixXd p = MatrixXd::Zero(n, n);
  VectorXd row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    VectorXd d2 = distances.row(i).transpose().cwiseAbs2();
    d2[i] = 0.0;
    // Offsetting by the smallest off-diagonal distance leaves P unchanged.
    Real dmin = std::numeric_limits<Real>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, d2[j]);
    Real beta = 1.0, lo = 0.0, hi = std::numeric_limits<Real>::infinity();
    bool converged = false;
    for (int iter = 0; iter < 200; ++iter) {
      Real sum = 0.0, weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        row[j] = j == i ? 0.0 : std::exp(-beta * (d2[j] - dmin));
        sum += row[j];
        weighted += row[j] * (d2[j] - dmin);
      }
      const Real entropy = (std::log(sum) + beta * weighted / sum) / std::numbers::ln2;
      row /= sum;
      if (std::abs(entropy - target) < 1e-5) {
        converged = true;
        break;
      }
      if (entropy > target) {
        lo = beta;
        beta = std::isinf(hi) ? 2.0 * beta : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    if (!converged)
      throw NumericalError("perplexity bisection did not converge for row " + std::to_string(i));
    p.row(i) = row.transpose();
  }
  return p;
}

MatrixXd joint_probabilities(const MatrixXd& distances, Real perplexity) {
  const MatrixXd c = conditional_probabilities(distances, perplexity);
  MatrixXd p = (c + c.transpose()) / (2.0 * static_cast<Real>(c.rows()));
  return p / p.sum();
}

namespace {

Real kl_divergence(const MatrixXd& p, const MatrixXd& q) {
  Real kl = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (p(i, j) > 0.0) kl += p(i, j) * std::log(p(i, j) / std::max(q(i, j), 1e-300));
  return std::max(0.0, kl);
}

}  // namespace

Embedding2D tsne(const DistanceMatrix& dist, const TsneOptions& opts) {
  const auto n = dist.values.rows();
  require(n >= 5, "t-SNE needs at least 5 points");
  require(opts.perplexity < static_cast<Real>(n - 1) / 3.0, "perplexity must be below (n - 1) / 3");
  require(opts.iterations >= 1 && opts.learning_rate > 0.0, "invalid t-SNE schedule");
  const MatrixXd p = joint_probabilities(dist.values, opts.perplexity);

  Rng rng(stream_seed(opts.seed, 0x75e));
  std::normal_distribution<Real> normal(0.0, 1e-2);
  MatrixXd y(n, 2), update = MatrixXd::Zero(n, 2), gains = MatrixXd::Ones(n, 2), grad(n, 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < 2; ++c) y(i, c) = normal(rng);

  Embedding2D out;
  out.perplexity = opts.perplexity;
  MatrixXd num(n, n), q(n, n);
  for (int iter = 0; iter < opts.iterations; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        num(i, j) = i == j ? 0.0 : 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
    q = num / num.sum();
    const Real exaggeration = iter < opts.exaggeration_iterations ? opts.exaggeration : 1.0;

    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        grad.row(i) += 4.0 * (exaggeration * p(i, j) - q(i, j)) * num(i, j) * (y.row(i) - y.row(j));

    const Real momentum = iter < opts.momentum_switch ? opts.initial_momentum : opts.final_momentum;
    for (Eigen::Index i = 0; i < n; ++i)
      for (int c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (update(i, c) > 0.0);
        gains(i, c) = std::max(opts.min_gain, same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2);
        update(i, c) = momentum * update(i, c) - opts.learning_rate * gains(i, c) * grad(i, c);
      }
    y += update;
    y.rowwise() -= y.colwise().mean();
    out.kl_trace.push_back(kl_divergence(p, q));
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      num(i, j) = i == j ? 0.0 : 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
  out.kl = kl_divergence(p, num / num.sum());
  if (!y.allFinite()) throw NumericalError("t-SNE diverged");
  out.coords = y;
  return out;
}

ClusterLabels dbscan(const MatrixXd& points, Real eps, int min_pts) {
  require(eps > 0.0, "eps must be positive");
  require(min_pts >= 1, "min_pts must be >= 1");
  const auto n = points.rows();
  const auto neighbors = [&](Eigen::Index i) {
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j < n; ++j)
      if ((points.row(i) - points.row(j)).norm() <= eps) out.push_back(j);
    return out;
  };
  constexpr int kUnvisited = -2;
  ClusterLabels out;
  out.labels.assign(static_cast<std::size_t>(n), kUnvisited);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (out.labels[static_cast<std::size_t>(i)] != kUnvisited) continue;
    const auto seed_nb = neighbors(i);
    if (static_cast<int>(seed_nb.size()) < min_pts) {
      out.labels[static_cast<std::size_t>(i)] = -1;
      continue;
    }
    const int cluster = out.clusters++;
    out.labels[static_cast<std::size_t>(i)] = cluster;
    std::deque<Eigen::Index> queue(seed_nb.begin(), seed_nb.end());
    while (!queue.empty()) {
      const auto j = queue.front();
      queue.pop_front();
      auto& lj = out.labels[static_cast<std::size_t>(j)];
      if (lj == -1) lj = cluster;  // border point
      if (lj != kUnvisited) continue;
      lj = cluster;
      const auto nb = neighbors(j);
      if (static_cast<int>(nb.size()) >= min_pts) queue.insert(queue.end(), nb.begin(), nb.end());
    }
  }
  return out;
}

Real k_distance_elbow(const MatrixXd& points, int min_pts) {
  const auto n = points.rows();
  require(min_pts >= 2 && min_pts <= n, "min_pts must be in [2, n]");
  std::vector<Real> kdist(static_cast<std::size_t>(n));
  std::vector<Real> d(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) d[static_cast<std::size_t>(j)] = (points.row(i) - points.row(j)).norm();
    std::nth_element(d.begin(), d.begin() + (min_pts - 1), d.end());
    kdist[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(min_pts - 1)];
  }
  std::sort(kdist.begin(), kdist.end());
  const Real lo = kdist.front(), hi = kdist.back();
  if (hi <= lo) return hi > 0.0 ? hi : 1.0;
  std::size_t best = 0;
  Real best_gap = -1.0;
  for (std::size_t k = 0; k < kdist.size(); ++k) {
    const Real x = static_cast<Real>(k) / static_cast<Real>(kdist.size() - 1);
    const Real gap = x - (kdist[k] - lo) / (hi - lo);
    if (gap > best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  return kdist[best];
}

Real suggest_eps(const MatrixXd& points) {
  const auto n = points.rows();
  require(n >= 3, "need at least three points");
  // Prim on the complete graph.
  std::vector<Real> reach(static_cast<std::size_t>(n), std::numeric_limits<Real>::infinity());
  std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
  std::vector<Real> edges;
  Eigen::Index next = 0;
  for (Eigen::Index step = 0; step < n; ++step) {
    const Eigen::Index u = next;
    in_tree[static_cast<std::size_t>(u)] = true;
    if (step > 0) edges.push_back(reach[static_cast<std::size_t>(u)]);
    Real best = std::numeric_limits<Real>::infinity();
    for (Eigen::Index v = 0; v < n; ++v) {
      if (in_tree[static_cast<std::size_t>(v)]) continue;
      auto& r = reach[static_cast<std::size_t>(v)];
      r = std::min(r, (points.row(u) - points.row(v)).norm());
      if (r < best) {
        best = r;
        next = v;
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  std::size_t gap = edges.size() - 1;
  Real best_ratio = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const Real ratio = edges[k + 1] / std::max(edges[k], 1e-300);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      gap = k;
    }
  }
  if (edges.back() <= 0.0) return 1.0;
  if (gap + 1 >= edges.size()) return edges.back();
  return std::sqrt(std::max(edges[gap], 1e-300) * edges[gap + 1]);
}

namespace {

Classification score_clusters(const NormalizedSpectrum& query, const std::vector<NormalizedSpectrum>& members,
                              const std::vector<int>& labels, Metric metric, bool nearest) {
  require(members.size() == labels.size() && !members.empty(), "members and labels differ in length");
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  require(k >= 1, "no labeled clusters");
  std::vector<Real> sum(static_cast<std::size_t>(k), 0.0);
  std::vector<Real> best(static_cast<std::size_t>(k), std::numeric_limits<Real>::infinity());
  std::vector<int> count(static_cast<std::size_t>(k), 0);
  for (std::size_t m = 0; m < members.size(); ++m) {
    if (labels[m] < 0) continue;
    const Real d = distance(query, members[m], metric);
    const auto c = static_cast<std::size_t>(labels[m]);
    sum[c] += d;
    best[c] = std::min(best[c], d);
    ++count[c];
  }
  Classification out;
  for (int c = 0; c < k; ++c) {
    require(count[static_cast<std::size_t>(c)] > 0, "cluster " + std::to_string(c) + " is empty");
    out.scores.push_back(nearest ? best[static_cast<std::size_t>(c)]
                                 : sum[static_cast<std::size_t>(c)] / count[static_cast<std::size_t>(c)]);
  }
  out.label = 0;
  for (int c = 1; c < k; ++c)
    if (out.scores[static_cast<std::size_t>(c)] < out.scores[static_cast<std::size_t>(out.label)]) out.label = c;
  for (int c = 0; c < k; ++c)
    if (c != out.label && out.scores[static_cast<std::size_t>(c)] == out.scores[static_cast<std::size_t>(out.label)])
      out.tie = true;
  return out;
}

void best_assignment(const std::vector<std::vector<int>>& table, std::size_t row, std::vector<bool>& used,
                     int current, int& best) {
  if (row == table.size()) {
    best = std::max(best, current);
    return;
  }
  best_assignment(table, row + 1, used, current, best);  // leave unmatched
  for (std::size_t c = 0; c < used.size(); ++c) {
    if (used[c]) continue;
    used[c] = true;
    best_assignment(table, row + 1, used, current + table[row][c], best);
    used[c] = false;
  }
}

}  // namespace

Classification classify(const NormalizedSpectrum& query, const std::vector<NormalizedSpectrum>& members,
                        const std::vector<int>& labels, Metric metric) {
  return score_clusters(query, members, labels, metric, false);
}

Classification classify_nearest(const NormalizedSpectrum& query, const std::vector<NormalizedSpectrum>& members,
                                const std::vector<int>& labels, Metric metric) {
  return score_clusters(query, members, labels, metric, true);
}

Real label_agreement(const std::vector<int>& labels, const std::vector<int>& truth) {
  require(labels.size() == truth.size() && !labels.empty(), "label vectors differ in length");
  const int kp = std::max(0, *std::max_element(labels.begin(), labels.end()) + 1);
  const int kt = std::max(0, *std::max_element(truth.begin(), truth.end()) + 1);
  require(kp <= 10 && kt <= 10, "too many clusters for exhaustive matching");
  std::vector<std::vector<int>> table(static_cast<std::size_t>(kp), std::vector<int>(static_cast<std::size_t>(kt), 0));
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0 && truth[i] >= 0) ++table[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(truth[i])];
  std::vector<bool> used(static_cast<std::size_t>(kt), false);
  int best = 0;
  best_assignment(table, 0, used, 0, best);
  return static_cast<Real>(best) / static_cast<Real>(labels.size());
}

}  // namespace qabc
