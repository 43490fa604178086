/*
 * Copyright 2026 ICMT Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iostream>
#include <limits>
#include <vector>

#include "icmt/errors.hpp"
#include "icmt/model.hpp"
#include "icmt/rng.hpp"

namespace icmt {

struct ClusterAssignment {
  std::vector<int> assign;    // per item, in [0, K)
  Eigen::MatrixXd centroids;  // K x D
  int n_clusters = 1;
  double inertia = 0.0;
};

/// Popularity-correlation clustering embedding:
/// (v_i (.) v') / (||v_i|| * ||v'||). Not a unit vector; the norms only
/// remove the scale of either factor. Degenerate zero-norm inputs map to the
/// zero vector.
inline Eigen::RowVectorXd clustering_embedding(
    const Eigen::RowVectorXd& item_repr, const Eigen::RowVectorXd& pop_emb) {
  const double ni = item_repr.norm();
  const double np = pop_emb.norm();
  if (ni == 0.0 || np == 0.0) {
    static bool warned = false;
    if (!warned) {
      std::cerr << "warning: zero-norm clustering embedding input; "
                   "using zero vector\n";
      warned = true;
    }
    return Eigen::RowVectorXd::Zero(item_repr.cols());
  }
  return item_repr.cwiseProduct(pop_emb) / (ni * np);
}

inline Eigen::RowVectorXd clustering_embedding(const ModelParams& p,
                                               const NormalizedAdjacency* adj,
                                               ItemId i) {
  return clustering_embedding(item_repr(p, adj, i), p.pop_emb);
}

/// Clustering embeddings for the whole item set from precomputed
/// representations.
inline Eigen::MatrixXd clustering_embeddings(const ModelParams& p,
                                             const Representations& reps) {
  Eigen::MatrixXd out(reps.items.rows(), reps.items.cols());
  for (Eigen::Index i = 0; i < reps.items.rows(); ++i) {
    out.row(i) = clustering_embedding(
        Eigen::RowVectorXd(reps.items.row(i)), p.pop_emb);
  }
  return out;
}

/// Lloyd k-means with k-means++ seeding. Deterministic per seed; assignment
/// ties break to the lowest cluster id; empty clusters steal the point
/// farthest from its centroid.
inline ClusterAssignment kmeans(const Eigen::MatrixXd& points, int n_clusters,
                                std::uint64_t seed, int max_iter = 100,
                                double tol = 1e-6) {
  const auto n = points.rows();
  if (n_clusters < 1) throw ConfigError("kmeans requires K >= 1");
  if (n < n_clusters) throw ConfigError("kmeans requires n_points >= K");

  ClusterAssignment result;
  result.n_clusters = n_clusters;
  result.assign.assign(static_cast<std::size_t>(n), 0);
  result.centroids.resize(n_clusters, points.cols());

  Rng rng(seed);

  // k-means++ seeding.
  std::vector<Eigen::Index> chosen;
  chosen.push_back(static_cast<Eigen::Index>(
      rng.next_below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd dist2 =
      (points.rowwise() - points.row(chosen[0])).rowwise().squaredNorm();
  while (static_cast<int>(chosen.size()) < n_clusters) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double r = rng.next_double() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2(i);
        if (acc >= r) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = static_cast<Eigen::Index>(
          rng.next_below(static_cast<std::uint64_t>(n)));
    }
    chosen.push_back(pick);
    dist2 = dist2.cwiseMin(
        (points.rowwise() - points.row(pick)).rowwise().squaredNorm());
  }
  for (int k = 0; k < n_clusters; ++k) {
    result.centroids.row(k) = points.row(chosen[static_cast<std::size_t>(k)]);
  }

  std::vector<std::int64_t> counts(static_cast<std::size_t>(n_clusters), 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    // Assignment step.
    result.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < n_clusters; ++k) {
        const double d = (points.row(i) - result.centroids.row(k)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      result.assign[static_cast<std::size_t>(i)] = best;
      result.inertia += best_d;
    }

    // Empty-cluster repair: hand over the point farthest from its centroid.
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      ++counts[static_cast<std::size_t>(result.assign[static_cast<std::size_t>(i)])];
    }
    for (int k = 0; k < n_clusters; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) continue;
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int a = result.assign[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(a)] <= 1) continue;
        const double d = (points.row(i) - result.centroids.row(a)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) continue;
      --counts[static_cast<std::size_t>(result.assign[static_cast<std::size_t>(far)])];
      result.assign[static_cast<std::size_t>(far)] = k;
      counts[static_cast<std::size_t>(k)] = 1;
    }

    // Update step.
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n_clusters, points.cols());
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = result.assign[static_cast<std::size_t>(i)];
      next.row(a) += points.row(i);
      ++counts[static_cast<std::size_t>(a)];
    }
    double shift = 0.0;
    for (int k = 0; k < n_clusters; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) {
        next.row(k) /= static_cast<double>(counts[static_cast<std::size_t>(k)]);
      } else {
        next.row(k) = result.centroids.row(k);
      }
      shift = std::max(shift, (next.row(k) - result.centroids.row(k)).norm());
    }
    result.centroids = next;
    if (shift < tol) break;
  }

  // Final assignment against the converged centroids.
  result.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_clusters; ++k) {
      const double d = (points.row(i) - result.centroids.row(k)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    result.assign[static_cast<std::size_t>(i)] = best;
    result.inertia += best_d;
  }
  return result;
}

}  // namespace icmt
