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
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "icmt/errors.hpp"
#include "icmt/model.hpp"
#include "icmt/sampling.hpp"

namespace icmt {

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Binary cross-entropy in log-sum-exp form; finite for any finite score.
inline double bce_loss(double score, int label) {
  return softplus(score) - static_cast<double>(label) * score;
}

/// d bce / d score.
inline double bce_grad(double score, int label) {
  return sigmoid(score) - static_cast<double>(label);
}

/// Raw contractive value (Eq.-style sum of squared representation Jacobians),
/// restricted to the batch's positive pairs. Both base models have
/// representations linear in their parameters, so the value carries no
/// parameter gradient; PMF lookups make it exactly zero.
inline double contractive_loss(const ModelParams& p,
                               const NormalizedAdjacency* adj,
                               const TrainBatch& batch) {
  if (p.kind == ModelKind::pmf || p.n_layers == 0) return 0.0;
  std::vector<UserId> users;
  users.reserve(batch.positives.size());
  for (const auto& [u, i] : batch.positives) users.push_back(u);
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  std::vector<Eigen::VectorXd> rows;
  std::vector<std::int64_t> row_of(static_cast<std::size_t>(adj->n_users), -1);
  rows.reserve(users.size());
  for (const UserId u : users) {
    row_of[static_cast<std::size_t>(u)] = static_cast<std::int64_t>(rows.size());
    rows.push_back(propagation_coeff_row(*adj, p.n_layers, u));
  }
  const double dim = static_cast<double>(p.dim());
  double total = 0.0;
  for (const auto& [u, i] : batch.positives) {
    const double c = rows[static_cast<std::size_t>(
        row_of[static_cast<std::size_t>(u)])](i);
    total += c * c * dim;
    // + ||d v_i / d v'||^2, identically zero: v' never enters propagation.
  }
  return total;
}

/// Scalar losses of one batch, split the way the gradients are:
/// per-cluster positive parts, the negative part, and raw regularizer values.
struct BatchLosses {
  Eigen::VectorXd cluster_positive;  // K entries
  double negative = 0.0;
  double contractive = 0.0;  // raw, multiply by lambda_c
  double l2 = 0.0;           // raw sum of squares, multiply by lambda_1

  double unweighted_total() const { return cluster_positive.sum() + negative; }
  double total(double lambda_c, double lambda_1) const {
    return unweighted_total() + lambda_c * contractive + lambda_1 * l2;
  }
};

namespace detail {

inline std::vector<UserId> distinct_users(const TrainBatch& batch) {
  std::vector<UserId> users;
  users.reserve(batch.positives.size() + batch.negatives.size());
  for (const auto& [u, i] : batch.positives) users.push_back(u);
  for (const auto& [u, i] : batch.negatives) users.push_back(u);
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  return users;
}

inline std::vector<ItemId> distinct_items(const TrainBatch& batch) {
  std::vector<ItemId> items;
  items.reserve(batch.positives.size() + batch.negatives.size());
  for (const auto& [u, i] : batch.positives) items.push_back(i);
  for (const auto& [u, i] : batch.negatives) items.push_back(i);
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return items;
}

}  // namespace detail

/// Pure loss evaluation (no gradients); the finite-difference reference point
/// for the assembled gradients. The L2 term covers the parameters touched by
/// the batch: its distinct user rows, distinct item rows, and v'.
inline BatchLosses compute_losses(
    const ModelParams& p, const NormalizedAdjacency* adj,
    const TrainBatch& batch, const std::vector<int>& assign, int n_clusters,
    double lambda_c, double lambda_1,
    const std::vector<double>* pair_weights = nullptr) {
  const Representations reps = compute_representations(p, adj);
  BatchLosses out;
  out.cluster_positive = Eigen::VectorXd::Zero(n_clusters);
  for (std::size_t idx = 0; idx < batch.positives.size(); ++idx) {
    const auto [u, i] = batch.positives[idx];
    const int k = assign[static_cast<std::size_t>(i)];
    if (k < 0 || k >= n_clusters) throw ConfigError("item not assigned to a cluster");
    const double score = predict_icmt(p, reps, u, i);
    const double w = pair_weights ? (*pair_weights)[idx] : 1.0;
    out.cluster_positive(k) += w * bce_loss(score, 1);
  }
  for (const auto& [u, i] : batch.negatives) {
    out.negative += bce_loss(predict_icmt(p, reps, u, i), 0);
  }
  if (lambda_c != 0.0) out.contractive = contractive_loss(p, adj, batch);
  if (lambda_1 != 0.0) {
    for (const UserId u : detail::distinct_users(batch)) {
      out.l2 += p.user_emb.row(u).squaredNorm();
    }
    for (const ItemId i : detail::distinct_items(batch)) {
      out.l2 += p.item_emb.row(i).squaredNorm();
    }
    out.l2 += p.pop_emb.squaredNorm();
  }
  return out;
}

/// Analytic batch gradients, split into parameter groups. per_cluster_shared
/// holds the positive-loss gradients w.r.t. the user table keyed by the
/// positive item's cluster; negative-pair, contractive and L2 parts stay
/// unweighted in shared_negative. item_grads/pop_grad carry the item-specific
/// group from the unweighted loss plus regularizers.
struct GradientBundle {
  std::vector<UserId> shared_rows;  // ascending; index base of shared matrices
  std::vector<Eigen::MatrixXd> per_cluster_shared;
  Eigen::MatrixXd shared_negative;
  std::vector<ItemId> item_rows;  // ascending
  Eigen::MatrixXd item_grads;
  Eigen::RowVectorXd pop_grad;
  BatchLosses losses;

  /// Column-major flatten of each per-cluster shared gradient (for the Gram
  /// matrix; the order is irrelevant as long as it is shared).
  std::vector<Eigen::VectorXd> flattened_shared() const {
    std::vector<Eigen::VectorXd> flat;
    flat.reserve(per_cluster_shared.size());
    for (const auto& mat : per_cluster_shared) {
      flat.emplace_back(
          Eigen::Map<const Eigen::VectorXd>(mat.data(), mat.size()));
    }
    return flat;
  }
};

inline GradientBundle assemble_gradients(
    const ModelParams& p, const NormalizedAdjacency* adj,
    const TrainBatch& batch, const std::vector<int>& assign, int n_clusters,
    double lambda_c, double lambda_1,
    const std::vector<double>* pair_weights = nullptr) {
  const bool graph_model = p.kind == ModelKind::lgc && p.n_layers > 0;
  const Representations reps = compute_representations(p, adj);
  const auto dim = p.dim();

  GradientBundle bundle;
  bundle.losses.cluster_positive = Eigen::VectorXd::Zero(n_clusters);
  bundle.pop_grad = Eigen::RowVectorXd::Zero(dim);

  const std::vector<UserId> batch_users = detail::distinct_users(batch);
  const std::vector<ItemId> batch_items = detail::distinct_items(batch);

  // Index bases: batch-touched rows for PMF; every row for LGC, where the
  // propagation spreads gradients across the whole graph.
  if (graph_model) {
    bundle.shared_rows.resize(static_cast<std::size_t>(p.n_users()));
    for (std::int64_t u = 0; u < p.n_users(); ++u) {
      bundle.shared_rows[static_cast<std::size_t>(u)] = u;
    }
    bundle.item_rows.resize(static_cast<std::size_t>(p.n_items()));
    for (std::int64_t i = 0; i < p.n_items(); ++i) {
      bundle.item_rows[static_cast<std::size_t>(i)] = i;
    }
  } else {
    bundle.shared_rows = batch_users;
    bundle.item_rows = batch_items;
  }
  std::vector<std::int64_t> user_local(static_cast<std::size_t>(p.n_users()), -1);
  std::vector<std::int64_t> item_local(static_cast<std::size_t>(p.n_items()), -1);
  for (std::size_t r = 0; r < bundle.shared_rows.size(); ++r) {
    user_local[static_cast<std::size_t>(bundle.shared_rows[r])] =
        static_cast<std::int64_t>(r);
  }
  for (std::size_t r = 0; r < bundle.item_rows.size(); ++r) {
    item_local[static_cast<std::size_t>(bundle.item_rows[r])] =
        static_cast<std::int64_t>(r);
  }

  const auto shared_count = static_cast<Eigen::Index>(bundle.shared_rows.size());
  const auto item_count = static_cast<Eigen::Index>(bundle.item_rows.size());
  bundle.per_cluster_shared.assign(
      static_cast<std::size_t>(n_clusters),
      Eigen::MatrixXd::Zero(shared_count, dim));
  bundle.shared_negative = Eigen::MatrixXd::Zero(shared_count, dim);
  bundle.item_grads = Eigen::MatrixXd::Zero(item_count, dim);

  // Final-representation gradients, one accumulator per cluster plus one for
  // the negatives (LGC only; PMF scatters straight into table rows).
  std::vector<Eigen::MatrixXd> rep_user_grad, rep_item_grad;
  Eigen::MatrixXd rep_user_grad_neg, rep_item_grad_neg;
  if (graph_model) {
    rep_user_grad.assign(static_cast<std::size_t>(n_clusters),
                         Eigen::MatrixXd::Zero(p.n_users(), dim));
    rep_item_grad.assign(static_cast<std::size_t>(n_clusters),
                         Eigen::MatrixXd::Zero(p.n_items(), dim));
    rep_user_grad_neg = Eigen::MatrixXd::Zero(p.n_users(), dim);
    rep_item_grad_neg = Eigen::MatrixXd::Zero(p.n_items(), dim);
  }

  for (std::size_t idx = 0; idx < batch.positives.size(); ++idx) {
    const auto [u, i] = batch.positives[idx];
    const int k = assign[static_cast<std::size_t>(i)];
    if (k < 0 || k >= n_clusters) throw ConfigError("item not assigned to a cluster");
    const double score = predict_icmt(p, reps, u, i);
    const double w = pair_weights ? (*pair_weights)[idx] : 1.0;
    const double e = w * bce_grad(score, 1);
    bundle.losses.cluster_positive(k) += w * bce_loss(score, 1);
    if (graph_model) {
      rep_user_grad[static_cast<std::size_t>(k)].row(u) += e * reps.items.row(i);
      rep_item_grad[static_cast<std::size_t>(k)].row(i) +=
          e * (reps.users.row(u) + p.lambda_p * p.pop_emb);
    } else {
      bundle.per_cluster_shared[static_cast<std::size_t>(k)].row(
          user_local[static_cast<std::size_t>(u)]) += e * reps.items.row(i);
      bundle.item_grads.row(item_local[static_cast<std::size_t>(i)]) +=
          e * (reps.users.row(u) + p.lambda_p * p.pop_emb);
    }
    bundle.pop_grad += e * p.lambda_p * reps.items.row(i);
  }

  for (const auto& [u, i] : batch.negatives) {
    const double score = predict_icmt(p, reps, u, i);
    const double e = bce_grad(score, 0);
    bundle.losses.negative += bce_loss(score, 0);
    if (graph_model) {
      rep_user_grad_neg.row(u) += e * reps.items.row(i);
      rep_item_grad_neg.row(i) +=
          e * (reps.users.row(u) + p.lambda_p * p.pop_emb);
    } else {
      bundle.shared_negative.row(user_local[static_cast<std::size_t>(u)]) +=
          e * reps.items.row(i);
      bundle.item_grads.row(item_local[static_cast<std::size_t>(i)]) +=
          e * (reps.users.row(u) + p.lambda_p * p.pop_emb);
    }
    bundle.pop_grad += e * p.lambda_p * reps.items.row(i);
  }

  if (graph_model) {
    Eigen::MatrixXd table_user, table_item;
    for (int k = 0; k < n_clusters; ++k) {
      backpropagate_representations(p, adj, rep_user_grad[static_cast<std::size_t>(k)],
                                    rep_item_grad[static_cast<std::size_t>(k)],
                                    table_user, table_item);
      bundle.per_cluster_shared[static_cast<std::size_t>(k)] = table_user;
      bundle.item_grads += table_item;
    }
    backpropagate_representations(p, adj, rep_user_grad_neg, rep_item_grad_neg,
                                  table_user, table_item);
    bundle.shared_negative = table_user;
    bundle.item_grads += table_item;
  }

  if (lambda_c != 0.0) {
    // Literal contractive term: value only. The Jacobians of both base models
    // are parameter-independent, so the gradient contribution is exactly zero.
    bundle.losses.contractive = contractive_loss(p, adj, batch);
  }

  if (lambda_1 != 0.0) {
    for (const UserId u : batch_users) {
      bundle.shared_negative.row(user_local[static_cast<std::size_t>(u)]) +=
          2.0 * lambda_1 * p.user_emb.row(u);
      bundle.losses.l2 += p.user_emb.row(u).squaredNorm();
    }
    for (const ItemId i : batch_items) {
      bundle.item_grads.row(item_local[static_cast<std::size_t>(i)]) +=
          2.0 * lambda_1 * p.item_emb.row(i);
      bundle.losses.l2 += p.item_emb.row(i).squaredNorm();
    }
    bundle.pop_grad += 2.0 * lambda_1 * p.pop_emb;
    bundle.losses.l2 += p.pop_emb.squaredNorm();
  }

  return bundle;
}

struct AdamState {
  Eigen::MatrixXd m_user, v_user, m_item, v_item;
  Eigen::RowVectorXd m_pop, v_pop;
  std::int64_t step = 0;

  static AdamState init(const ModelParams& p) {
    AdamState s;
    s.m_user = Eigen::MatrixXd::Zero(p.n_users(), p.dim());
    s.v_user = s.m_user;
    s.m_item = Eigen::MatrixXd::Zero(p.n_items(), p.dim());
    s.v_item = s.m_item;
    s.m_pop = Eigen::RowVectorXd::Zero(p.dim());
    s.v_pop = s.m_pop;
    return s;
  }
};

namespace detail {

template <class Mat>
inline void adam_update(Mat& theta, const Mat& grad, Mat& m, Mat& v, double lr,
                        std::int64_t step) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  theta.array() -=
      lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

}  // namespace detail

/// One optimizer step: shared tables move along
/// sum_k w_k * per_cluster_shared_k + shared_negative, item-specific tables
/// along item_grads/pop_grad, everything through Adam
/// (beta1=0.9, beta2=0.999, eps=1e-8).
inline void apply_weighted_update(ModelParams& p, const GradientBundle& bundle,
                                  const Eigen::VectorXd& weights,
                                  AdamState& state, double lr) {
  if (weights.size() != static_cast<Eigen::Index>(bundle.per_cluster_shared.size())) {
    throw ConfigError("weight count does not match cluster count");
  }
  Eigen::MatrixXd grad_user = Eigen::MatrixXd::Zero(p.n_users(), p.dim());
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    const auto& mat = bundle.per_cluster_shared[static_cast<std::size_t>(k)];
    for (std::size_t r = 0; r < bundle.shared_rows.size(); ++r) {
      grad_user.row(bundle.shared_rows[r]) +=
          weights(k) * mat.row(static_cast<Eigen::Index>(r));
    }
  }
  for (std::size_t r = 0; r < bundle.shared_rows.size(); ++r) {
    grad_user.row(bundle.shared_rows[r]) +=
        bundle.shared_negative.row(static_cast<Eigen::Index>(r));
  }
  Eigen::MatrixXd grad_item = Eigen::MatrixXd::Zero(p.n_items(), p.dim());
  for (std::size_t r = 0; r < bundle.item_rows.size(); ++r) {
    grad_item.row(bundle.item_rows[r]) =
        bundle.item_grads.row(static_cast<Eigen::Index>(r));
  }
  if (!grad_user.allFinite() || !grad_item.allFinite() ||
      !bundle.pop_grad.allFinite()) {
    throw NumericalError("non-finite gradient; aborting update");
  }
  ++state.step;
  detail::adam_update(p.user_emb, grad_user, state.m_user, state.v_user, lr,
                      state.step);
  detail::adam_update(p.item_emb, grad_item, state.m_item, state.v_item, lr,
                      state.step);
  Eigen::RowVectorXd pop_grad = bundle.pop_grad;
  detail::adam_update(p.pop_emb, pop_grad, state.m_pop, state.v_pop, lr,
                      state.step);
}

}  // namespace icmt
