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
#include <set>
#include <vector>

#include <json.hpp>

#include "icmt/dataset.hpp"
#include "icmt/model.hpp"

namespace icmt {

struct MetricsReport {
  std::int64_t n = 20;
  double recall = 0.0;
  double ndcg = 0.0;
  double recall_tail = 0.0;
  double ndcg_tail = 0.0;
  double coverage = 0.0;
  double apt = 0.0;
  std::int64_t n_eval_users = 0;
  std::int64_t head_size = 0;
  std::int64_t tail_size = 0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"N", n},
                          {"recall", recall},
                          {"ndcg", ndcg},
                          {"recall_tail", recall_tail},
                          {"ndcg_tail", ndcg_tail},
                          {"coverage", coverage},
                          {"apt", apt},
                          {"n_eval_users", n_eval_users},
                          {"head_size", head_size},
                          {"tail_size", tail_size}};
  }
};

/// Top-N item ids by descending score, ties broken by ascending id,
/// exclusions (sorted) removed from the candidate set.
inline std::vector<ItemId> rank_top_n(const Eigen::VectorXd& scores,
                                      std::int64_t n,
                                      const std::vector<ItemId>& exclusions) {
  std::vector<ItemId> candidates;
  candidates.reserve(static_cast<std::size_t>(scores.size()));
  for (ItemId i = 0; i < scores.size(); ++i) {
    if (!std::binary_search(exclusions.begin(), exclusions.end(), i)) {
      candidates.push_back(i);
    }
  }
  const auto cutoff = std::min<std::size_t>(static_cast<std::size_t>(n),
                                            candidates.size());
  std::partial_sort(candidates.begin(),
                    candidates.begin() + static_cast<std::ptrdiff_t>(cutoff),
                    candidates.end(), [&](ItemId a, ItemId b) {
                      const double sa = scores(a), sb = scores(b);
                      return sa != sb ? sa > sb : a < b;
                    });
  candidates.resize(cutoff);
  return candidates;
}

/// Inference-score ranking for one user (popularity term excluded).
inline std::vector<ItemId> rank_top_n(const ModelParams& p,
                                      const NormalizedAdjacency* adj, UserId u,
                                      std::int64_t n,
                                      const std::vector<ItemId>& exclusions) {
  const Representations reps = compute_representations(p, adj);
  const Eigen::VectorXd scores = reps.items * reps.users.row(u).transpose();
  return rank_top_n(scores, n, exclusions);
}

inline double recall_at_n(const std::vector<ItemId>& list,
                          const std::vector<ItemId>& truth_sorted) {
  if (truth_sorted.empty()) return 0.0;
  std::int64_t hits = 0;
  for (const ItemId i : list) {
    if (std::binary_search(truth_sorted.begin(), truth_sorted.end(), i)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth_sorted.size());
}

inline double ndcg_at_n(const std::vector<ItemId>& list,
                        const std::vector<ItemId>& truth_sorted,
                        std::int64_t n) {
  if (truth_sorted.empty()) return 0.0;
  double dcg = 0.0;
  for (std::size_t r = 0; r < list.size(); ++r) {
    if (std::binary_search(truth_sorted.begin(), truth_sorted.end(), list[r])) {
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  const auto ideal = std::min<std::int64_t>(
      n, static_cast<std::int64_t>(truth_sorted.size()));
  double idcg = 0.0;
  for (std::int64_t r = 1; r <= ideal; ++r) {
    idcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  }
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

/// Tail restriction: ground truth intersected with the tail set, hits counted
/// at their ranks in the full list. Returns false when the user has no tail
/// truth (skipped for tail metrics).
inline bool tail_metrics(const std::vector<ItemId>& list,
                         const std::vector<ItemId>& truth_sorted,
                         const HeadTailPartition& partition, std::int64_t n,
                         double& recall_tail, double& ndcg_tail) {
  std::vector<ItemId> tail_truth;
  for (const ItemId i : truth_sorted) {
    if (partition.tail(i)) tail_truth.push_back(i);
  }
  if (tail_truth.empty()) return false;
  recall_tail = recall_at_n(list, tail_truth);
  ndcg_tail = ndcg_at_n(list, tail_truth, n);
  return true;
}

/// Coverage (catalog fraction recommended to anyone) and APT (mean per-list
/// tail share).
inline std::pair<double, double> coverage_apt(
    const std::vector<std::vector<ItemId>>& all_lists,
    const HeadTailPartition& partition, std::int64_t n_items) {
  std::set<ItemId> distinct;
  double apt_sum = 0.0;
  for (const auto& list : all_lists) {
    std::int64_t tail_hits = 0;
    for (const ItemId i : list) {
      distinct.insert(i);
      if (partition.tail(i)) ++tail_hits;
    }
    if (!list.empty()) {
      apt_sum += static_cast<double>(tail_hits) /
                 static_cast<double>(list.size());
    }
  }
  const double coverage =
      static_cast<double>(distinct.size()) / static_cast<double>(n_items);
  const double apt =
      all_lists.empty() ? 0.0 : apt_sum / static_cast<double>(all_lists.size());
  return {coverage, apt};
}

/// Full evaluation pass: per-user top-N by inference score with the given
/// exclusions, averaged in fixed user-id order. Users with empty truth are
/// skipped; tail averages use their own user count.
inline MetricsReport evaluate_ranking(
    const ModelParams& p, const NormalizedAdjacency* adj,
    const std::vector<std::vector<ItemId>>& truth_by_user,
    const std::vector<std::vector<ItemId>>& exclusions_by_user,
    const HeadTailPartition& partition, std::int64_t n) {
  MetricsReport report;
  report.n = n;
  report.head_size = partition.head_size;
  report.tail_size = partition.tail_size;

  const Representations reps = compute_representations(p, adj);
  std::vector<std::vector<ItemId>> lists;
  double recall_sum = 0.0, ndcg_sum = 0.0;
  double recall_tail_sum = 0.0, ndcg_tail_sum = 0.0;
  std::int64_t tail_users = 0;
  for (UserId u = 0; u < p.n_users(); ++u) {
    const auto& truth = truth_by_user[static_cast<std::size_t>(u)];
    if (truth.empty()) continue;
    const Eigen::VectorXd scores = reps.items * reps.users.row(u).transpose();
    std::vector<ItemId> list =
        rank_top_n(scores, n, exclusions_by_user[static_cast<std::size_t>(u)]);
    recall_sum += recall_at_n(list, truth);
    ndcg_sum += ndcg_at_n(list, truth, n);
    double rt = 0.0, nt = 0.0;
    if (tail_metrics(list, truth, partition, n, rt, nt)) {
      recall_tail_sum += rt;
      ndcg_tail_sum += nt;
      ++tail_users;
    }
    lists.push_back(std::move(list));
    ++report.n_eval_users;
  }
  if (report.n_eval_users > 0) {
    recall_sum /= static_cast<double>(report.n_eval_users);
    ndcg_sum /= static_cast<double>(report.n_eval_users);
  }
  report.recall = recall_sum;
  report.ndcg = ndcg_sum;
  if (tail_users > 0) {
    report.recall_tail = recall_tail_sum / static_cast<double>(tail_users);
    report.ndcg_tail = ndcg_tail_sum / static_cast<double>(tail_users);
  }
  const auto [coverage, apt] = coverage_apt(lists, partition, p.n_items());
  report.coverage = coverage;
  report.apt = apt;
  return report;
}

}  // namespace icmt
