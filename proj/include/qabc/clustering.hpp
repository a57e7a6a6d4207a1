#pragma once

// Exact t-SNE embedding of a distance matrix, DBSCAN on the embedding, and
// classification of new spectra against labeled clusters.

#include "qabc/metrics.hpp"

namespace qabc {

struct DistanceMatrix {
  MatrixXd values;
  Metric metric = Metric::Hellinger;
};

DistanceMatrix distance_matrix(const std::vector<NormalizedSpectrum>& spectra, Metric metric);

struct TsneOptions {
  Real perplexity = 10.0;
  int iterations = 1000;
  Real learning_rate = 100.0;
  Real initial_momentum = 0.5;
  Real final_momentum = 0.8;
  int momentum_switch = 250;
  Real exaggeration = 4.0;
  int exaggeration_iterations = 100;
  Real min_gain = 0.01;
  std::uint64_t seed = 0;
};

struct Embedding2D {
  MatrixXd coords;  // n x 2
  Real kl = 0.0;
  Real perplexity = 0.0;
  std::vector<Real> kl_trace;  // per iteration, without exaggeration
};

/// Row-conditional P(j|i) from squared distances, bandwidth per row bisected
/// until the Shannon entropy (bits) matches log2(perplexity) within 1e-5.
MatrixXd conditional_probabilities(const MatrixXd& distances, Real perplexity);

/// Symmetrized joint P = (P(j|i) + P(i|j)) / 2n.
MatrixXd joint_probabilities(const MatrixXd& distances, Real perplexity);

Embedding2D tsne(const DistanceMatrix& dist, const TsneOptions& opts = {});

struct ClusterLabels {
  std::vector<int> labels;  // -1 = noise
  int clusters = 0;
};

/// Neighborhoods include the point itself, so min_pts = 1 makes every point core.
ClusterLabels dbscan(const MatrixXd& points, Real eps, int min_pts);

/// Elbow of the sorted k-distance curve (k = min_pts - 1, self excluded),
/// located as the point farthest below the chord joining its ends.
Real k_distance_elbow(const MatrixXd& points, int min_pts);

/// Default eps: geometric midpoint of the largest ratio between consecutive
/// sorted minimum-spanning-tree edge lengths (the single-linkage gap).
Real suggest_eps(const MatrixXd& points);

struct Classification {
  int label = -1;
  std::vector<Real> scores;  // per cluster 0..K-1: mean (or nearest) distance
  bool tie = false;
};

/// argmin over clusters of the mean distance to the cluster's members. Noise
/// members are ignored. Ties go to the smaller index and are reported.
Classification classify(const NormalizedSpectrum& query, const std::vector<NormalizedSpectrum>& members,
                        const std::vector<int>& labels, Metric metric = Metric::Hellinger);

/// Same, scoring each cluster by its closest member.
Classification classify_nearest(const NormalizedSpectrum& query, const std::vector<NormalizedSpectrum>& members,
                                const std::vector<int>& labels, Metric metric = Metric::Hellinger);

/// Fraction of points whose label matches `truth` under the best one-to-one
/// relabeling (noise counts as a mismatch). Exhaustive over permutations, so
/// intended for a handful of clusters.
Real label_agreement(const std::vector<int>& labels, const std::vector<int>& truth);

}  // namespace qabc
