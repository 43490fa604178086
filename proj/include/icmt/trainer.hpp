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
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "icmt/cluster.hpp"
#include "icmt/dataset.hpp"
#include "icmt/errors.hpp"
#include "icmt/lossgrad.hpp"
#include "icmt/metrics.hpp"
#include "icmt/model.hpp"
#include "icmt/pareto.hpp"
#include "icmt/rng.hpp"
#include "icmt/sampling.hpp"

namespace icmt {

enum class Method { icmt, normal, ips };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::icmt: return "icmt";
    case Method::normal: return "normal";
    case Method::ips: return "ips";
  }
  return "icmt";
}

inline Method method_from_string(const std::string& s) {
  if (s == "icmt") return Method::icmt;
  if (s == "normal") return Method::normal;
  if (s == "ips") return Method::ips;
  throw ConfigError("unknown method: " + s);
}

struct TrainConfig {
  Method method = Method::icmt;
  ModelKind model_kind = ModelKind::pmf;
  std::int64_t embedding_dim = 64;
  std::int64_t n_layers = 3;
  int n_clusters = 2;
  double lambda_p = 2e-3;
  double lambda_c = 1e-3;
  double lambda_1 = 1e-4;
  double learning_rate = 1e-3;
  std::int64_t batch_size = 512;
  std::int64_t neg_ratio = 1;
  std::int64_t recluster_every = 1;
  std::int64_t eval_every_batches = 3000;
  std::int64_t patience = 10;
  std::int64_t max_epochs = 50;
  std::int64_t eval_n = 20;
  std::uint64_t seed = 42;

  void validate() const {
    if (n_clusters < 1) throw ConfigError("n_clusters must be >= 1");
    if (lambda_p < 0.0 || lambda_c < 0.0 || lambda_1 < 0.0) {
      throw ConfigError("regularization weights must be nonnegative");
    }
    if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (neg_ratio < 0) throw ConfigError("neg_ratio must be >= 0");
    if (recluster_every < 1) throw ConfigError("recluster_every must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (eval_n < 1) throw ConfigError("eval_n must be >= 1");
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"method", to_string(method)},
                          {"model_kind", icmt::to_string(model_kind)},
                          {"embedding_dim", embedding_dim},
                          {"n_layers", n_layers},
                          {"n_clusters", n_clusters},
                          {"lambda_p", lambda_p},
                          {"lambda_c", lambda_c},
                          {"lambda_1", lambda_1},
                          {"learning_rate", learning_rate},
                          {"batch_size", batch_size},
                          {"neg_ratio", neg_ratio},
                          {"recluster_every", recluster_every},
                          {"eval_every_batches", eval_every_batches},
                          {"patience", patience},
                          {"max_epochs", max_epochs},
                          {"eval_n", eval_n},
                          {"seed", seed}};
  }
};

/// Strict config parse: every key must be known (typos in hyperparameter
/// grids fail loudly).
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "method") {
      cfg.method = method_from_string(value.get<std::string>());
    } else if (key == "model_kind") {
      cfg.model_kind = model_kind_from_string(value.get<std::string>());
    } else if (key == "embedding_dim") {
      cfg.embedding_dim = value.get<std::int64_t>();
    } else if (key == "n_layers") {
      cfg.n_layers = value.get<std::int64_t>();
    } else if (key == "n_clusters") {
      cfg.n_clusters = value.get<int>();
    } else if (key == "lambda_p") {
      cfg.lambda_p = value.get<double>();
    } else if (key == "lambda_c") {
      cfg.lambda_c = value.get<double>();
    } else if (key == "lambda_1") {
      cfg.lambda_1 = value.get<double>();
    } else if (key == "learning_rate") {
      cfg.learning_rate = value.get<double>();
    } else if (key == "batch_size") {
      cfg.batch_size = value.get<std::int64_t>();
    } else if (key == "neg_ratio") {
      cfg.neg_ratio = value.get<std::int64_t>();
    } else if (key == "recluster_every") {
      cfg.recluster_every = value.get<std::int64_t>();
    } else if (key == "eval_every_batches") {
      cfg.eval_every_batches = value.get<std::int64_t>();
    } else if (key == "patience") {
      cfg.patience = value.get<std::int64_t>();
    } else if (key == "max_epochs") {
      cfg.max_epochs = value.get<std::int64_t>();
    } else if (key == "eval_n") {
      cfg.eval_n = value.get<std::int64_t>();
    } else if (key == "seed") {
      cfg.seed = value.get<std::uint64_t>();
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  cfg.validate();
  return cfg;
}

struct EvalRecord {
  std::int64_t batches = 0;
  double recall = 0.0;
  double ndcg = 0.0;
  double mean_tail_weight = 1.0;       // mean over tail items since last eval
  std::vector<double> cluster_losses;  // mean per batch since last eval
};

struct TrainHistory {
  std::vector<EvalRecord> records;
  std::vector<double> batch_losses;  // unweighted positive+negative loss
  std::vector<double> epoch_losses;  // per-epoch means of the above
  std::int64_t total_batches = 0;
  int n_clusters = 1;
  bool cluster_columns = true;  // icmt history carries per-cluster columns
  bool pe_hit_iteration_cap = false;
};

struct TrainResult {
  ModelParams params;  // best validation-NDCG checkpoint seen
  TrainHistory history;
  double best_ndcg = 0.0;
  std::int64_t best_batches = 0;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Min-norm weights for one batch. Clusters with no positive pairs in the
/// batch have zero gradients and would soak up all the weight under the
/// literal min-norm problem; they get a neutral 1.0 instead and the solve
/// runs over the populated clusters, preserving sum(w) = K.
inline Eigen::VectorXd solve_batch_weights(const GradientBundle& bundle, int k,
                                           bool* hit_cap,
                                           std::ostream* trace) {
  const auto flat = bundle.flattened_shared();
  std::vector<int> present;
  for (int c = 0; c < k; ++c) {
    if (flat[static_cast<std::size_t>(c)].squaredNorm() > 0.0) present.push_back(c);
  }
  Eigen::VectorXd weights = Eigen::VectorXd::Ones(k);
  if (present.size() < 2) return weights;
  std::vector<Eigen::VectorXd> grads;
  grads.reserve(present.size());
  for (const int c : present) grads.push_back(flat[static_cast<std::size_t>(c)]);
  const Eigen::MatrixXd gram = gram_matrix(grads);
  const PeSolveResult res = pe_solve(gram, 100, 1e-7, trace);
  if (res.hit_iteration_cap && hit_cap != nullptr) *hit_cap = true;
  for (std::size_t idx = 0; idx < present.size(); ++idx) {
    weights(present[idx]) = res.weights.w(static_cast<Eigen::Index>(idx));
  }
  return weights;
}

}  // namespace detail

/// Algorithm-2 training loop, also hosting the Normal and IPS baselines.
/// Baselines score with the interest term only and skip clustering and the
/// PE solve; IPS additionally weights each positive by inverse training
/// popularity (normalized to mean 1).
inline TrainResult train(const TrainConfig& cfg, const DataSplit& split,
                         const InteractionDataset& ds,
                         std::ostream* pe_trace = nullptr) {
  cfg.validate();
  const bool is_icmt = cfg.method == Method::icmt;
  const int n_clusters = is_icmt ? cfg.n_clusters : 1;
  const double lambda_p = is_icmt ? cfg.lambda_p : 0.0;
  const double lambda_c = is_icmt ? cfg.lambda_c : 0.0;

  NormalizedAdjacency adj_store;
  const NormalizedAdjacency* adj = nullptr;
  if (cfg.model_kind == ModelKind::lgc) {
    adj_store = build_adjacency(split.train, ds.n_users, ds.n_items);
    adj = &adj_store;
  }

  ModelParams params =
      init_params(cfg.model_kind, ds.n_users, ds.n_items, cfg.embedding_dim,
                  cfg.n_layers, lambda_p, cfg.seed);
  AdamState adam = AdamState::init(params);
  Rng sampling_rng = Rng::substream(cfg.seed, "sampling");
  const std::uint64_t kmeans_key = Rng::derive(cfg.seed, "kmeans");

  const std::vector<std::int64_t> train_pop = train_popularity(split, ds.n_items);
  const HeadTailPartition partition = partition_head_tail(train_pop);

  std::vector<double> ips_item_weight;
  if (cfg.method == Method::ips) {
    ips_item_weight.assign(static_cast<std::size_t>(ds.n_items), 0.0);
    double sum = 0.0;
    for (const auto& [u, i] : split.train) {
      sum += 1.0 / static_cast<double>(train_pop[static_cast<std::size_t>(i)]);
    }
    const double scale =
        sum > 0.0 ? static_cast<double>(split.train.size()) / sum : 1.0;
    for (ItemId i = 0; i < ds.n_items; ++i) {
      if (train_pop[static_cast<std::size_t>(i)] > 0) {
        ips_item_weight[static_cast<std::size_t>(i)] =
            scale / static_cast<double>(train_pop[static_cast<std::size_t>(i)]);
      }
    }
  }

  const auto val_truth = group_by_user(split.validation, ds.n_users);
  const auto train_items = group_by_user(split.train, ds.n_users);

  std::vector<int> assign(static_cast<std::size_t>(ds.n_items), 0);
  Eigen::VectorXd weights = Eigen::VectorXd::Ones(n_clusters);

  TrainHistory history;
  history.n_clusters = n_clusters;
  history.cluster_columns = is_icmt;

  ModelParams best = params;
  double best_ndcg = -1.0;
  std::int64_t best_batches = 0;
  std::int64_t evals_since_improve = 0;

  Eigen::VectorXd acc_cluster_losses = Eigen::VectorXd::Zero(n_clusters);
  double acc_tail_weight = 0.0;
  std::int64_t acc_batches = 0;

  auto record_eval = [&]() {
    const MetricsReport val = evaluate_ranking(params, adj, val_truth,
                                               train_items, partition,
                                               cfg.eval_n);
    EvalRecord rec;
    rec.batches = history.total_batches;
    rec.recall = val.recall;
    rec.ndcg = val.ndcg;
    rec.mean_tail_weight =
        acc_batches > 0 ? acc_tail_weight / static_cast<double>(acc_batches)
                        : 1.0;
    rec.cluster_losses.resize(static_cast<std::size_t>(n_clusters));
    for (int k = 0; k < n_clusters; ++k) {
      rec.cluster_losses[static_cast<std::size_t>(k)] =
          acc_batches > 0
              ? acc_cluster_losses(k) / static_cast<double>(acc_batches)
              : 0.0;
    }
    history.records.push_back(rec);
    acc_cluster_losses.setZero();
    acc_tail_weight = 0.0;
    acc_batches = 0;
    if (val.ndcg > best_ndcg) {
      best_ndcg = val.ndcg;
      best = params;
      best_batches = history.total_batches;
      evals_since_improve = 0;
    } else {
      ++evals_since_improve;
    }
  };

  bool stop = false;
  for (std::int64_t epoch = 0; epoch < cfg.max_epochs && !stop; ++epoch) {
    EpochSampler sampler(split, ds, cfg.batch_size, cfg.neg_ratio,
                         &sampling_rng);
    double epoch_loss_sum = 0.0;
    std::int64_t epoch_batches = 0;
    while (auto maybe_batch = sampler.next()) {
      const TrainBatch& batch = *maybe_batch;
      if (is_icmt &&
          history.total_batches % cfg.recluster_every == 0) {
        const Representations reps = compute_representations(params, adj);
        const Eigen::MatrixXd cluster_points =
            clustering_embeddings(params, reps);
        const std::uint64_t kmeans_seed = splitmix64(
            kmeans_key + static_cast<std::uint64_t>(history.total_batches));
        assign = kmeans(cluster_points, n_clusters, kmeans_seed).assign;
      }

      std::vector<double> pair_weights;
      const std::vector<double>* pair_weights_ptr = nullptr;
      if (cfg.method == Method::ips) {
        pair_weights.reserve(batch.positives.size());
        for (const auto& [u, i] : batch.positives) {
          pair_weights.push_back(ips_item_weight[static_cast<std::size_t>(i)]);
        }
        pair_weights_ptr = &pair_weights;
      }

      const GradientBundle bundle =
          assemble_gradients(params, adj, batch, assign, n_clusters, lambda_c,
                             cfg.lambda_1, pair_weights_ptr);
      if (is_icmt) {
        bool hit_cap = false;
        weights = detail::solve_batch_weights(bundle, n_clusters, &hit_cap,
                                              pe_trace);
        if (hit_cap && !history.pe_hit_iteration_cap) {
          history.pe_hit_iteration_cap = true;
          std::cerr << "note: PE solver hit its iteration cap at batch "
                    << history.total_batches << "\n";
        }
      }
      apply_weighted_update(params, bundle, weights, adam, cfg.learning_rate);

      const double batch_loss = bundle.losses.unweighted_total();
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("training diverged: non-finite loss at batch " +
                             std::to_string(history.total_batches));
      }
      history.batch_losses.push_back(batch_loss);
      epoch_loss_sum += batch_loss;
      ++epoch_batches;

      acc_cluster_losses += bundle.losses.cluster_positive;
      if (is_icmt && partition.tail_size > 0) {
        double tail_weight_sum = 0.0;
        for (ItemId i = 0; i < ds.n_items; ++i) {
          if (partition.tail(i)) {
            tail_weight_sum += weights(assign[static_cast<std::size_t>(i)]);
          }
        }
        acc_tail_weight +=
            tail_weight_sum / static_cast<double>(partition.tail_size);
      } else {
        acc_tail_weight += 1.0;
      }
      ++acc_batches;
      ++history.total_batches;

      if (cfg.eval_every_batches > 0 &&
          history.total_batches % cfg.eval_every_batches == 0) {
        record_eval();
        if (evals_since_improve >= cfg.patience) {
          stop = true;
          break;
        }
      }
    }
    if (epoch_batches > 0) {
      history.epoch_losses.push_back(epoch_loss_sum /
                                     static_cast<double>(epoch_batches));
    }
  }

  if (acc_batches > 0 || history.records.empty()) record_eval();

  TrainResult result;
  result.params = std::move(best);
  result.history = std::move(history);
  result.best_ndcg = best_ndcg;
  result.best_batches = best_batches;
  return result;
}

/// History CSV. ICMT rows carry the mean tail weight and per-cluster loss
/// columns; baseline rows carry a single loss column.
inline void write_history_csv(const std::filesystem::path& path,
                              const TrainHistory& history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history: " + path.string());
  if (history.cluster_columns) {
    out << "batches,recall20,ndcg20,mean_tail_weight";
    for (int k = 0; k < history.n_clusters; ++k) out << ",loss_cluster_" << k;
    out << '\n';
    for (const auto& rec : history.records) {
      out << rec.batches << ',' << detail::format_double(rec.recall) << ','
          << detail::format_double(rec.ndcg) << ','
          << detail::format_double(rec.mean_tail_weight);
      for (const double loss : rec.cluster_losses) {
        out << ',' << detail::format_double(loss);
      }
      out << '\n';
    }
  } else {
    out << "batches,recall20,ndcg20,loss\n";
    for (const auto& rec : history.records) {
      const double loss = std::accumulate(rec.cluster_losses.begin(),
                                          rec.cluster_losses.end(), 0.0);
      out << rec.batches << ',' << detail::format_double(rec.recall) << ','
          << detail::format_double(rec.ndcg) << ','
          << detail::format_double(loss) << '\n';
    }
  }
}

// --- gradient-domination diagnostics -----------------------------------------

struct GradientPair {
  ItemId head_item = 0;
  ItemId tail_item = 0;
  bool defined = false;
  double cosine = 0.0;
};

struct GradientReport {
  std::vector<double> item_grad_norms;  // per item id
  bool spearman_defined = false;
  double spearman = 0.0;
  std::vector<GradientPair> pairs;
  bool min_cosine_defined = false;
  double min_cosine = 0.0;

  nlohmann::json to_json(const std::vector<std::int64_t>& popularity) const {
    std::vector<ItemId> order(item_grad_norms.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<ItemId>(i);
    std::sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
      const auto pa = popularity[static_cast<std::size_t>(a)];
      const auto pb = popularity[static_cast<std::size_t>(b)];
      return pa != pb ? pa > pb : a < b;
    });
    nlohmann::json items = nlohmann::json::array();
    for (const ItemId i : order) {
      items.push_back({{"item", i},
                       {"popularity", popularity[static_cast<std::size_t>(i)]},
                       {"grad_norm", item_grad_norms[static_cast<std::size_t>(i)]}});
    }
    nlohmann::json pair_list = nlohmann::json::array();
    for (const auto& p : pairs) {
      pair_list.push_back(
          {{"head_item", p.head_item},
           {"tail_item", p.tail_item},
           {"cosine", p.defined ? nlohmann::json(p.cosine) : nlohmann::json()}});
    }
    return nlohmann::json{
        {"items", items},
        {"spearman_popularity_grad_norm",
         spearman_defined ? nlohmann::json(spearman) : nlohmann::json()},
        {"head_tail_pairs", pair_list},
        {"min_cosine",
         min_cosine_defined ? nlohmann::json(min_cosine) : nlohmann::json()}};
  }
};

namespace detail {

inline std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t pos = 0;
  while (pos < n) {
    std::size_t end = pos;
    while (end + 1 < n && values[order[end + 1]] == values[order[pos]]) ++end;
    const double rank = 0.5 * static_cast<double>(pos + end) + 1.0;
    for (std::size_t k = pos; k <= end; ++k) ranks[order[k]] = rank;
    pos = end + 1;
  }
  return ranks;
}

inline bool spearman(const std::vector<double>& x, const std::vector<double>& y,
                     double& out) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) return false;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return false;
  out = sxy / std::sqrt(sxx * syy);
  return true;
}

/// Gradient of one item's positive loss w.r.t. the user table, flattened.
inline Eigen::VectorXd item_shared_gradient(
    const ModelParams& p, const NormalizedAdjacency* adj,
    const Representations& reps, const std::vector<UserId>& users, ItemId i) {
  if (p.kind == ModelKind::pmf || p.n_layers == 0) {
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(p.n_users(), p.dim());
    for (const UserId u : users) {
      const double e = bce_grad(predict_icmt(p, reps, u, i), 1);
      grad.row(u) += e * reps.items.row(i);
    }
    return Eigen::Map<const Eigen::VectorXd>(grad.data(), grad.size());
  }
  Eigen::MatrixXd rep_user = Eigen::MatrixXd::Zero(p.n_users(), p.dim());
  Eigen::MatrixXd rep_item = Eigen::MatrixXd::Zero(p.n_items(), p.dim());
  for (const UserId u : users) {
    const double e = bce_grad(predict_icmt(p, reps, u, i), 1);
    rep_user.row(u) += e * reps.items.row(i);
    rep_item.row(i) += e * (reps.users.row(u) + p.lambda_p * p.pop_emb);
  }
  Eigen::MatrixXd table_user, table_item;
  backpropagate_representations(p, adj, rep_user, rep_item, table_user,
                                table_item);
  return Eigen::Map<const Eigen::VectorXd>(table_user.data(),
                                           table_user.size());
}

}  // namespace detail

/// Fig.-1-style diagnostics: per-item accumulated item-embedding gradient
/// norms over one pass of the training positives, plus cosines between the
/// shared-parameter gradients of the most popular head and tail items.
inline GradientReport analyze_gradients(const ModelParams& p,
                                        const NormalizedAdjacency* adj,
                                        const DataSplit& split,
                                        const HeadTailPartition& partition,
                                        std::int64_t top_pairs) {
  const Representations reps = compute_representations(p, adj);
  const auto n_items = p.n_items();
  const std::vector<std::int64_t> pop = train_popularity(split, n_items);

  Eigen::MatrixXd rep_user = Eigen::MatrixXd::Zero(p.n_users(), p.dim());
  Eigen::MatrixXd rep_item = Eigen::MatrixXd::Zero(n_items, p.dim());
  std::vector<std::vector<UserId>> users_of_item(static_cast<std::size_t>(n_items));
  for (const auto& [u, i] : split.train) {
    const double e = bce_grad(predict_icmt(p, reps, u, i), 1);
    rep_user.row(u) += e * reps.items.row(i);
    rep_item.row(i) += e * (reps.users.row(u) + p.lambda_p * p.pop_emb);
    users_of_item[static_cast<std::size_t>(i)].push_back(u);
  }
  Eigen::MatrixXd table_user, table_item;
  backpropagate_representations(p, adj, rep_user, rep_item, table_user,
                                table_item);

  GradientReport report;
  report.item_grad_norms.resize(static_cast<std::size_t>(n_items));
  std::vector<double> pop_values(static_cast<std::size_t>(n_items));
  for (ItemId i = 0; i < n_items; ++i) {
    report.item_grad_norms[static_cast<std::size_t>(i)] = table_item.row(i).norm();
    pop_values[static_cast<std::size_t>(i)] =
        static_cast<double>(pop[static_cast<std::size_t>(i)]);
  }
  report.spearman_defined =
      detail::spearman(pop_values, report.item_grad_norms, report.spearman);

  auto select_top = [&](bool head) {
    std::vector<ItemId> ids;
    for (ItemId i = 0; i < n_items; ++i) {
      if (partition.head(i) == head) ids.push_back(i);
    }
    std::sort(ids.begin(), ids.end(), [&](ItemId a, ItemId b) {
      const auto pa = pop[static_cast<std::size_t>(a)];
      const auto pb = pop[static_cast<std::size_t>(b)];
      return pa != pb ? pa > pb : a < b;
    });
    if (static_cast<std::int64_t>(ids.size()) > top_pairs) {
      ids.resize(static_cast<std::size_t>(top_pairs));
    }
    return ids;
  };
  const std::vector<ItemId> head_ids = select_top(true);
  const std::vector<ItemId> tail_ids = select_top(false);

  auto shared_grad = [&](ItemId i) {
    return detail::item_shared_gradient(p, adj, reps,
                                        users_of_item[static_cast<std::size_t>(i)], i);
  };
  std::vector<Eigen::VectorXd> head_grads, tail_grads;
  for (const ItemId i : head_ids) head_grads.push_back(shared_grad(i));
  for (const ItemId i : tail_ids) tail_grads.push_back(shared_grad(i));

  for (std::size_t a = 0; a < head_ids.size(); ++a) {
    for (std::size_t b = 0; b < tail_ids.size(); ++b) {
      GradientPair pair;
      pair.head_item = head_ids[a];
      pair.tail_item = tail_ids[b];
      const double na = head_grads[a].norm();
      const double nb = tail_grads[b].norm();
      if (na > 0.0 && nb > 0.0) {
        pair.defined = true;
        pair.cosine = head_grads[a].dot(tail_grads[b]) / (na * nb);
        if (!report.min_cosine_defined || pair.cosine < report.min_cosine) {
          report.min_cosine_defined = true;
          report.min_cosine = pair.cosine;
        }
      }
      report.pairs.push_back(pair);
    }
  }
  return report;
}

}  // namespace icmt
