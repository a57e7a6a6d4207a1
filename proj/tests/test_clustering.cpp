#include "doctest.h"
#include "support.hpp"

#include "qabc/clustering.hpp"
#include "qabc/fixtures.hpp"
#include "qabc/parallel.hpp"

#include <numeric>

using namespace qabc;

namespace {

MatrixXd blobs(Rng& rng, int per_blob, const std::vector<Eigen::Vector2d>& centers, Real sigma) {
  std::normal_distribution<Real> normal(0.0, sigma);
  MatrixXd x(per_blob * static_cast<int>(centers.size()), 2);
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (int k = 0; k < per_blob; ++k) {
      const auto row = static_cast<Eigen::Index>(c) * per_blob + k;
      x(row, 0) = centers[c].x() + normal(rng);
      x(row, 1) = centers[c].y() + normal(rng);
    }
  return x;
}

MatrixXd pairwise(const MatrixXd& x) {
  MatrixXd d(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j) d(i, j) = (x.row(i) - x.row(j)).norm();
  return d;
}

struct FixtureSet {
  Dataset data;
  std::vector<NormalizedSpectrum> spectra;
  std::vector<int> labels;
};

const FixtureSet& fixture_set() {
  static const FixtureSet set = [] {
    FixtureSet s;
    s.data = generate_fixtures();
    s.spectra.resize(s.data.size());
    parallel_for(s.data.size(), [&](std::size_t k) { s.spectra[k] = normalize(simulate_spectrum(s.data[k].params)); });
    for (const auto& r : s.data) s.labels.push_back(*r.label);
    return s;
  }();
  return set;
}

}  // namespace

TEST_CASE("distance matrix structure") {
  Rng rng(3);
  std::vector<NormalizedSpectrum> s;
  for (int k = 0; k < 3; ++k) s.push_back(normalize(simulate_spectrum(test::random_params(4, rng))));
  std::vector<NormalizedSpectrum> doubled = s;
  doubled.insert(doubled.end(), s.begin(), s.end());
  const DistanceMatrix d = distance_matrix(doubled, Metric::Hellinger);
  CHECK(d.values.diagonal().cwiseAbs().maxCoeff() < 1e-12);
  CHECK((d.values - d.values.transpose()).norm() == 0.0);
  CHECK((d.values.topLeftCorner(3, 3) - d.values.topRightCorner(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(d.values.topRightCorner(3, 3).diagonal().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fixture clusters are tighter than their separation") {
  const auto& f = fixture_set();
  const MatrixXd d = distance_matrix(f.spectra, Metric::Hellinger).values;
  Real within = 0, between = 0;
  int nw = 0, nb = 0;
  for (std::size_t i = 0; i < f.labels.size(); ++i)
    for (std::size_t j = i + 1; j < f.labels.size(); ++j) {
      const Real v = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (f.labels[i] == f.labels[j]) within += v, ++nw;
      else between += v, ++nb;
    }
  CHECK(within / nw < 0.5 * between / nb);
}

TEST_CASE("conditional probabilities hit the perplexity") {
  Rng rng(9);
  const MatrixXd d = pairwise(blobs(rng, 20, {{0, 0}, {3, 1}, {-2, 4}}, 1.0));
  for (Real perp : {5.0, 10.0, 20.0}) {
    const MatrixXd p = conditional_probabilities(d, perp);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      CHECK(p(i, i) == 0.0);
      CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      Real h = 0.0;
      for (Eigen::Index j = 0; j < p.cols(); ++j)
        if (p(i, j) > 0) h -= p(i, j) * std::log2(p(i, j));
      CHECK(std::abs(std::exp2(h) - perp) < 1e-3);
    }
    const MatrixXd joint = joint_probabilities(d, perp);
    CHECK(joint.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((joint - joint.transpose()).norm() < 1e-15);
  }
}

TEST_CASE("t-SNE separates far groups and is reproducible") {
  Rng rng(2);
  const MatrixXd x = blobs(rng, 15, {{0, 0}, {100, 0}}, 0.5);
  const DistanceMatrix d{pairwise(x), Metric::Euclidean};
  TsneOptions o;
  o.perplexity = 5;
  const Embedding2D a = tsne(d, o);
  const Embedding2D b = tsne(d, o);
  CHECK(a.coords == b.coords);
  CHECK(a.kl_trace == b.kl_trace);
  const Eigen::RowVector2d c0 = a.coords.topRows(15).colwise().mean();
  const Eigen::RowVector2d c1 = a.coords.bottomRows(15).colwise().mean();
  Real spread = 0.0;
  for (int k = 0; k < 30; ++k) spread += (a.coords.row(k) - (k < 15 ? c0 : c1)).squaredNorm();
  spread = std::sqrt(spread / 30);
  CHECK((c0 - c1).norm() > 5.0 * spread);
  CHECK(a.kl >= 0.0);
  CHECK(a.kl_trace.size() == 1000);
  CHECK(a.kl < a.kl_trace[100]);
  o.seed = 1;
  CHECK_FALSE(tsne(d, o).coords == a.coords);
}

TEST_CASE("t-SNE rejects an impossible perplexity") {
  Rng rng(2);
  const DistanceMatrix d{pairwise(blobs(rng, 5, {{0, 0}}, 1.0)), Metric::Euclidean};
  TsneOptions o;
  o.perplexity = 10;
  CHECK_THROWS_AS(tsne(d, o), ValidationError);
}

TEST_CASE("DBSCAN on two blobs") {
  Rng rng(4);
  const MatrixXd x = blobs(rng, 30, {{0, 0}, {10, 0}}, 0.1);
  const ClusterLabels l = dbscan(x, 0.5, 3);
  CHECK(l.clusters == 2);
  CHECK(std::count(l.labels.begin(), l.labels.end(), -1) == 0);
  CHECK(l.labels.front() != l.labels.back());
  const Real eps = suggest_eps(x);
  CHECK(dbscan(x, eps, 3).clusters == 2);
}

TEST_CASE("DBSCAN edge cases") {
  const MatrixXd same = MatrixXd::Ones(12, 2);
  const ClusterLabels l = dbscan(same, 0.1, 4);
  CHECK(l.clusters == 1);
  CHECK(std::count(l.labels.begin(), l.labels.end(), 0) == 12);
  MatrixXd sparse(3, 2);
  sparse << 0, 0, 10, 0, 20, 0;
  CHECK(dbscan(sparse, 1.0, 2).clusters == 0);
  CHECK(dbscan(sparse, 1.0, 1).clusters == 3);
  CHECK_THROWS_AS(dbscan(sparse, -1.0, 2), ValidationError);
}

TEST_CASE("k-distance elbow on noise plus blob") {
  Rng rng(6);
  MatrixXd x = blobs(rng, 40, {{0, 0}}, 0.2);
  MatrixXd y(50, 2);
  y.topRows(40) = x;
  std::uniform_real_distribution<Real> u(-30, 30);
  for (int k = 40; k < 50; ++k) y(k, 0) = u(rng), y(k, 1) = u(rng);
  const Real eps = k_distance_elbow(y, 4);
  CHECK(eps > 0.05);
  CHECK(eps < 5.0);
}

TEST_CASE("label agreement") {
  CHECK(label_agreement({0, 0, 1, 1, 2}, {2, 2, 0, 0, 1}) == 1.0);
  CHECK(label_agreement({0, 0, 1, -1}, {1, 1, 0, 0}) == 0.75);
  CHECK(label_agreement({0, 0, 0, 0}, {0, 0, 1, 1}) == 0.5);
}

TEST_CASE("classification") {
  const auto& f = fixture_set();
  for (int c = 0; c < 4; ++c) {
    NormalizedSpectrum centroid = f.spectra[0];
    centroid.values.setZero();
    int count = 0;
    for (std::size_t k = 0; k < f.labels.size(); ++k)
      if (f.labels[k] == c) centroid.values += f.spectra[k].values, ++count;
    centroid.values /= count;
    const Classification cl = classify(centroid, f.spectra, f.labels);
    CHECK(cl.label == c);
    CHECK(cl.scores.size() == 4);
    CHECK(classify_nearest(centroid, f.spectra, f.labels).label == c);
  }
  // A member matches itself exactly under the nearest rule.
  const Classification self = classify_nearest(f.spectra[20], f.spectra, f.labels);
  CHECK(self.label == f.labels[20]);
  CHECK(self.scores[static_cast<std::size_t>(f.labels[20])] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("classification ties go to the smaller index") {
  const UniformGrid g{0.0, 0.1, 100};
  Rng rng(1);
  const auto a = test::boxes(g, rng);
  const Classification cl = classify(a, {a, a}, {1, 0});
  CHECK(cl.label == 0);
  CHECK(cl.tie);
}

TEST_CASE("fixture embedding: normalized kernels, KL settles") {
  const auto& f = fixture_set();
  const DistanceMatrix d = distance_matrix(f.spectra, Metric::Hellinger);
  CHECK(joint_probabilities(d.values, 10.0).sum() == doctest::Approx(1.0).epsilon(1e-9));
  const Embedding2D e = tsne(d);
  REQUIRE(e.kl_trace.size() == 1000);
  CHECK(e.kl >= 0.0);
  // Momentum descent wobbles: non-increasing over the final 10% up to 1e-4 of the loss.
  Real rise = 0.0;
  for (std::size_t k = 901; k < e.kl_trace.size(); ++k) rise = std::max(rise, e.kl_trace[k] - e.kl_trace[k - 1]);
  MESSAGE("largest step increase in the final 10%: " << rise / e.kl);
  CHECK(rise <= 1e-4 * e.kl);
  CHECK(e.kl_trace.back() <= e.kl_trace[900]);
}

TEST_CASE("DBSCAN is invariant to point order") {
  Rng rng(10);
  const MatrixXd x = blobs(rng, 20, {{0, 0}, {6, 0}, {0, 6}}, 0.4);
  const ClusterLabels base = dbscan(x, 1.0, 4);
  std::vector<int> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    MatrixXd y(x.rows(), 2);
    for (std::size_t k = 0; k < order.size(); ++k) y.row(static_cast<Eigen::Index>(k)) = x.row(order[k]);
    const ClusterLabels l = dbscan(y, 1.0, 4);
    std::vector<int> back(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) back[static_cast<std::size_t>(order[k])] = l.labels[k];
    CHECK(l.clusters == base.clusters);
    CHECK(label_agreement(back, base.labels) == 1.0);
  }
}

TEST_CASE("duplicating a member into its own cluster keeps the label") {
  const auto& f = fixture_set();
  std::vector<NormalizedSpectrum> train(f.spectra.begin() + 1, f.spectra.end());
  std::vector<int> labels(f.labels.begin() + 1, f.labels.end());
  for (std::size_t k = 0; k < 8; ++k) {
    const std::size_t pick = (k * 9) % train.size();
    const int before = classify(f.spectra[0], train, labels).label;
    train.push_back(train[pick]);
    labels.push_back(labels[pick]);
    CHECK(classify(f.spectra[0], train, labels).label == before);
  }
}
