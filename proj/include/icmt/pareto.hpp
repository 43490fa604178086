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
#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "icmt/errors.hpp"

namespace icmt {

/// M_ij = <g_i, g_j> over the flattened per-cluster gradients.
inline Eigen::MatrixXd gram_matrix(const std::vector<Eigen::VectorXd>& grads) {
  const auto k = static_cast<Eigen::Index>(grads.size());
  for (const auto& g : grads) {
    if (g.size() != grads[0].size()) {
      throw ConfigError("gram_matrix: gradient length mismatch");
    }
  }
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a; b < k; ++b) {
      m(a, b) = grads[static_cast<std::size_t>(a)].dot(
          grads[static_cast<std::size_t>(b)]);
      m(b, a) = m(a, b);
    }
  }
  return m;
}

/// Exact step for min_gamma ((1-gamma) w + gamma e_t)' M ((1-gamma) w + gamma e_t),
/// clamped to [0, 1]. A vanishing curvature means the segment is flat: 0.
inline double line_search_gamma(const Eigen::VectorXd& w, Eigen::Index t,
                                const Eigen::MatrixXd& m) {
  Eigen::VectorXd diff = w;
  diff(t) -= 1.0;  // w - e_t
  const double denom = diff.dot(m * diff);
  if (denom <= 1e-18) return 0.0;
  const double gamma = diff.dot(m * w) / denom;
  return std::clamp(gamma, 0.0, 1.0);
}

struct ObjectiveWeights {
  Eigen::VectorXd w;  // size K, nonnegative, sums to K
};

struct PeSolveResult {
  ObjectiveWeights weights;
  Eigen::VectorXd simplex_point;  // pre-scaling solution, sums to 1
  double simplex_norm_sq = 0.0;   // w' M w at the simplex point
  int iterations = 0;
  bool hit_iteration_cap = false;
};

namespace detail {

/// Active-set refinement of a Frank-Wolfe iterate. Solves the
/// equality-constrained quadratic on the support face exactly, dropping
/// negative coordinates and admitting violated ones, and returns the result
/// only when it is feasible and at least as good as the input.
inline bool polish_min_norm(const Eigen::MatrixXd& m, Eigen::VectorXd& w) {
  const Eigen::Index k = m.rows();
  std::vector<Eigen::Index> face;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (w(i) > 1e-12) face.push_back(i);
  }
  const double start_obj = w.dot(m * w);
  const double scale = 1.0 + std::fabs(start_obj);

  for (int round = 0; round < static_cast<int>(4 * k + 8); ++round) {
    const auto f = static_cast<Eigen::Index>(face.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(f + 1, f + 1);
    for (Eigen::Index a = 0; a < f; ++a) {
      for (Eigen::Index b = 0; b < f; ++b) {
        kkt(a, b) = 2.0 * m(face[static_cast<std::size_t>(a)],
                            face[static_cast<std::size_t>(b)]);
      }
      kkt(a, f) = 1.0;
      kkt(f, a) = 1.0;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(f + 1);
    rhs(f) = 1.0;
    const Eigen::VectorXd sol = kkt.colPivHouseholderQr().solve(rhs);
    if (!sol.allFinite()) return false;

    Eigen::Index worst = -1;
    double worst_val = -1e-12;
    for (Eigen::Index a = 0; a < f; ++a) {
      if (sol(a) < worst_val) {
        worst_val = sol(a);
        worst = a;
      }
    }
    if (worst >= 0) {
      if (f <= 1) return false;
      face.erase(face.begin() + static_cast<std::ptrdiff_t>(worst));
      continue;
    }

    Eigen::VectorXd candidate = Eigen::VectorXd::Zero(k);
    for (Eigen::Index a = 0; a < f; ++a) {
      candidate(face[static_cast<std::size_t>(a)]) = std::max(sol(a), 0.0);
    }
    const double csum = candidate.sum();
    if (csum <= 0.0) return false;
    candidate /= csum;

    // admit the most violated off-face coordinate, if any
    const Eigen::VectorXd mc = m * candidate;
    const double obj = candidate.dot(mc);
    Eigen::Index admit = -1;
    double admit_val = obj - 1e-12 * scale;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (candidate(i) <= 0.0 && mc(i) < admit_val) {
        admit_val = mc(i);
        admit = i;
      }
    }
    if (admit >= 0) {
      face.push_back(admit);
      std::sort(face.begin(), face.end());
      continue;
    }

    // strict improvement only: flat objectives (identical gradients) keep
    // the Frank-Wolfe point, preserving the uniform-weights convention
    if (obj < start_obj - 1e-12 * scale) {
      w = candidate;
      return true;
    }
    return false;
  }
  return false;
}

}  // namespace detail

/// Frank-Wolfe min-norm-point solve on the unit simplex, starting from the
/// uniform point: pick t = argmin_i (M w)_i, line-search toward e_t, stop
/// when the step vanishes. The vanilla iteration zig-zags near face-interior
/// optima, so the converged face is then re-solved exactly (active-set
/// polish). The result is scaled by K so the weights sum to K.
inline PeSolveResult pe_solve(const Eigen::MatrixXd& m, int max_iter = 100,
                              double tol = 1e-7,
                              std::ostream* trace = nullptr) {
  const Eigen::Index k = m.rows();
  if (k < 1) throw ConfigError("pe_solve requires K >= 1");

  PeSolveResult res;
  Eigen::VectorXd w =
      Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  if (k > 1) {
    for (int iter = 0; iter < max_iter; ++iter) {
      const Eigen::VectorXd mw = m * w;
      Eigen::Index t = 0;
      mw.minCoeff(&t);
      const double gamma = line_search_gamma(w, t, m);
      if (trace != nullptr) {
        *trace << iter << ',' << w.dot(mw) << ',' << gamma << '\n';
      }
      ++res.iterations;
      if (gamma < tol) break;
      w = (1.0 - gamma) * w;
      w(t) += gamma;
      if (iter == max_iter - 1) res.hit_iteration_cap = true;
    }
    detail::polish_min_norm(m, w);
  }

  res.simplex_point = w;
  res.simplex_norm_sq = w.dot(m * w);
  Eigen::VectorXd scaled = (static_cast<double>(k) * w).cwiseMax(0.0);
  const double sum = scaled.sum();
  if (sum > 0.0) scaled *= static_cast<double>(k) / sum;
  res.weights.w = scaled;
  return res;
}

struct KktReport {
  bool pass = false;
  bool weights_nonneg = false;
  bool sum_ok = false;
  bool common_descent = false;
  double min_weight = 0.0;
  double sum_abs_error = 0.0;
  double worst_descent_slack = 0.0;  // min_k g_k . d - d . d, >= -eps*(1+|d.d|)
};

/// Min-norm-point optimality via the Gram matrix alone: weights feasible
/// (nonnegative, sum K) and the combined direction d = sum (w_k/K) g_k is a
/// common descent direction, g_k . d >= d . d for every k.
inline KktReport kkt_check(const Eigen::VectorXd& weights,
                           const Eigen::MatrixXd& m, double eps = 1e-5) {
  const auto k = weights.size();
  KktReport rep;
  rep.min_weight = weights.minCoeff();
  rep.weights_nonneg = rep.min_weight >= -eps;
  rep.sum_abs_error = std::fabs(weights.sum() - static_cast<double>(k));
  rep.sum_ok = rep.sum_abs_error <= eps;

  const Eigen::VectorXd u = weights / static_cast<double>(k);
  const Eigen::VectorXd mu = m * u;
  const double dd = u.dot(mu);
  rep.worst_descent_slack = (mu.array() - dd).minCoeff();
  rep.common_descent = rep.worst_descent_slack >= -eps * (1.0 + std::fabs(dd));

  rep.pass = rep.weights_nonneg && rep.sum_ok && rep.common_descent;
  return rep;
}

}  // namespace icmt
