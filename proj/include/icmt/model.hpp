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
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "icmt/dataset.hpp"
#include "icmt/errors.hpp"
#include "icmt/rng.hpp"

namespace icmt {

enum class ModelKind { pmf, lgc };

inline std::string to_string(ModelKind k) {
  return k == ModelKind::pmf ? "pmf" : "lgc";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "pmf") return ModelKind::pmf;
  if (s == "lgc") return ModelKind::lgc;
  throw ConfigError("unknown model kind: " + s);
}

/// Embedding tables. user_emb is the shared parameter group; item_emb and
/// pop_emb together form the item-specific group.
struct ModelParams {
  ModelKind kind = ModelKind::pmf;
  std::int64_t n_layers = 3;   // LGC only
  double lambda_p = 2e-3;
  Eigen::MatrixXd user_emb;    // n_users x D
  Eigen::MatrixXd item_emb;    // n_items x D
  Eigen::RowVectorXd pop_emb;  // 1 x D

  std::int64_t n_users() const { return user_emb.rows(); }
  std::int64_t n_items() const { return item_emb.rows(); }
  std::int64_t dim() const { return user_emb.cols(); }
};

/// Entries i.i.d. N(0, 0.01), filled row-major: user table, item table,
/// popularity vector. Bit-identical per seed.
inline ModelParams init_params(ModelKind kind, std::int64_t n_users,
                               std::int64_t n_items, std::int64_t dim,
                               std::int64_t n_layers, double lambda_p,
                               std::uint64_t seed) {
  if (dim < 1) throw ConfigError("embedding dim must be >= 1");
  ModelParams p;
  p.kind = kind;
  p.n_layers = n_layers;
  p.lambda_p = lambda_p;
  p.user_emb.resize(n_users, dim);
  p.item_emb.resize(n_items, dim);
  p.pop_emb.resize(dim);
  Rng rng = Rng::substream(seed, "init");
  auto fill = [&rng](auto& mat) {
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) {
        mat(r, c) = rng.next_normal(0.0, 0.01);
      }
    }
  };
  fill(p.user_emb);
  fill(p.item_emb);
  fill(p.pop_emb);
  return p;
}

/// Symmetric-normalized bipartite training graph: edge (u,i) carries
/// 1/sqrt(deg_u * deg_i).
struct NormalizedAdjacency {
  std::int64_t n_users = 0;
  std::int64_t n_items = 0;
  std::vector<std::vector<std::pair<ItemId, double>>> user_neighbors;
  std::vector<std::vector<std::pair<UserId, double>>> item_neighbors;
};

inline NormalizedAdjacency build_adjacency(
    const std::vector<Interaction>& train_pairs, std::int64_t n_users,
    std::int64_t n_items) {
  NormalizedAdjacency adj;
  adj.n_users = n_users;
  adj.n_items = n_items;
  adj.user_neighbors.assign(static_cast<std::size_t>(n_users), {});
  adj.item_neighbors.assign(static_cast<std::size_t>(n_items), {});
  std::vector<std::int64_t> du(static_cast<std::size_t>(n_users), 0);
  std::vector<std::int64_t> di(static_cast<std::size_t>(n_items), 0);
  for (const auto& [u, i] : train_pairs) {
    ++du[static_cast<std::size_t>(u)];
    ++di[static_cast<std::size_t>(i)];
  }
  for (const auto& [u, i] : train_pairs) {
    const double coeff =
        1.0 / std::sqrt(static_cast<double>(du[static_cast<std::size_t>(u)]) *
                        static_cast<double>(di[static_cast<std::size_t>(i)]));
    adj.user_neighbors[static_cast<std::size_t>(u)].emplace_back(i, coeff);
    adj.item_neighbors[static_cast<std::size_t>(i)].emplace_back(u, coeff);
  }
  return adj;
}

/// Final user/item representations (post propagation for LGC).
struct Representations {
  Eigen::MatrixXd users;
  Eigen::MatrixXd items;
};

/// One symmetric propagation step; the operator is self-adjoint, so this also
/// serves as the backward pass.
inline void propagate_step(const NormalizedAdjacency& adj,
                           const Eigen::MatrixXd& users_in,
                           const Eigen::MatrixXd& items_in,
                           Eigen::MatrixXd& users_out,
                           Eigen::MatrixXd& items_out) {
  users_out.setZero(users_in.rows(), users_in.cols());
  items_out.setZero(items_in.rows(), items_in.cols());
  for (std::int64_t u = 0; u < adj.n_users; ++u) {
    for (const auto& [i, c] : adj.user_neighbors[static_cast<std::size_t>(u)]) {
      users_out.row(u) += c * items_in.row(i);
    }
  }
  for (std::int64_t i = 0; i < adj.n_items; ++i) {
    for (const auto& [u, c] : adj.item_neighbors[static_cast<std::size_t>(i)]) {
      items_out.row(i) += c * users_in.row(u);
    }
  }
}

/// Mean of layer-0..L propagation outputs over the training graph (LGC);
/// plain table lookup for PMF. adj may be null for PMF.
inline Representations compute_representations(const ModelParams& p,
                                               const NormalizedAdjacency* adj) {
  Representations reps{p.user_emb, p.item_emb};
  if (p.kind == ModelKind::pmf || p.n_layers == 0) return reps;
  Eigen::MatrixXd users_cur = p.user_emb;
  Eigen::MatrixXd items_cur = p.item_emb;
  Eigen::MatrixXd users_next, items_next;
  for (std::int64_t layer = 0; layer < p.n_layers; ++layer) {
    propagate_step(*adj, users_cur, items_cur, users_next, items_next);
    users_cur.swap(users_next);
    items_cur.swap(items_next);
    reps.users += users_cur;
    reps.items += items_cur;
  }
  const double scale = 1.0 / static_cast<double>(p.n_layers + 1);
  reps.users *= scale;
  reps.items *= scale;
  return reps;
}

/// Adjoint of compute_representations: maps gradients w.r.t. final
/// representations to gradients w.r.t. the embedding tables.
inline void backpropagate_representations(const ModelParams& p,
                                          const NormalizedAdjacency* adj,
                                          const Eigen::MatrixXd& grad_users,
                                          const Eigen::MatrixXd& grad_items,
                                          Eigen::MatrixXd& table_user_grad,
                                          Eigen::MatrixXd& table_item_grad) {
  if (p.kind == ModelKind::pmf || p.n_layers == 0) {
    table_user_grad = grad_users;
    table_item_grad = grad_items;
    return;
  }
  table_user_grad = grad_users;
  table_item_grad = grad_items;
  Eigen::MatrixXd users_cur = grad_users;
  Eigen::MatrixXd items_cur = grad_items;
  Eigen::MatrixXd users_next, items_next;
  for (std::int64_t layer = 0; layer < p.n_layers; ++layer) {
    propagate_step(*adj, users_cur, items_cur, users_next, items_next);
    users_cur.swap(users_next);
    items_cur.swap(items_next);
    table_user_grad += users_cur;
    table_item_grad += items_cur;
  }
  const double scale = 1.0 / static_cast<double>(p.n_layers + 1);
  table_user_grad *= scale;
  table_item_grad *= scale;
}

inline Eigen::RowVectorXd user_repr(const ModelParams& p,
                                    const NormalizedAdjacency* adj, UserId u) {
  if (p.kind == ModelKind::pmf) return p.user_emb.row(u);
  return compute_representations(p, adj).users.row(u);
}

inline Eigen::RowVectorXd item_repr(const ModelParams& p,
                                    const NormalizedAdjacency* adj, ItemId i) {
  if (p.kind == ModelKind::pmf) return p.item_emb.row(i);
  return compute_representations(p, adj).items.row(i);
}

/// Training score: <v_u, v_i> + lambda_p * <v', v_i>.
inline double predict_icmt(const ModelParams& p, const Representations& reps,
                           UserId u, ItemId i) {
  return reps.users.row(u).dot(reps.items.row(i)) +
         p.lambda_p * p.pop_emb.dot(reps.items.row(i));
}

inline double predict_icmt(const ModelParams& p,
                           const NormalizedAdjacency* adj, UserId u, ItemId i) {
  return predict_icmt(p, compute_representations(p, adj), u, i);
}

/// Inference score: interest term only, popularity embedding disentangled.
inline double predict_inference(const ModelParams& p,
                                const Representations& reps, UserId u,
                                ItemId i) {
  return reps.users.row(u).dot(reps.items.row(i));
}

inline double predict_inference(const ModelParams& p,
                                const NormalizedAdjacency* adj, UserId u,
                                ItemId i) {
  return predict_inference(p, compute_representations(p, adj), u, i);
}

/// Item-side coefficients of user u's representation: propagation is linear,
/// so v_u = sum_w coeff[w] * e_w and d v_u / d e_i = coeff[i] * I.
inline Eigen::VectorXd propagation_coeff_row(const NormalizedAdjacency& adj,
                                             std::int64_t n_layers, UserId u) {
  Eigen::VectorXd users_cur = Eigen::VectorXd::Zero(adj.n_users);
  Eigen::VectorXd items_cur = Eigen::VectorXd::Zero(adj.n_items);
  users_cur(u) = 1.0;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(adj.n_items);
  Eigen::VectorXd users_next(adj.n_users), items_next(adj.n_items);
  for (std::int64_t layer = 0; layer < n_layers; ++layer) {
    users_next.setZero();
    items_next.setZero();
    for (std::int64_t uu = 0; uu < adj.n_users; ++uu) {
      if (users_cur(uu) == 0.0) continue;
      for (const auto& [i, c] : adj.user_neighbors[static_cast<std::size_t>(uu)]) {
        items_next(i) += c * users_cur(uu);
      }
    }
    for (std::int64_t ii = 0; ii < adj.n_items; ++ii) {
      if (items_cur(ii) == 0.0) continue;
      for (const auto& [uu, c] : adj.item_neighbors[static_cast<std::size_t>(ii)]) {
        users_next(uu) += c * items_cur(ii);
      }
    }
    users_cur.swap(users_next);
    items_cur.swap(items_next);
    acc += items_cur;
  }
  return acc / static_cast<double>(n_layers + 1);
}

/// Closed-form representation Jacobians, reported as multiples of the DxD
/// identity. The popularity vector never enters a representation, so the
/// second coefficient is identically zero; PMF lookups make both zero.
struct ReprJacobians {
  double user_wrt_item = 0.0;  // d v_u / d e_i = coeff * I
  double item_wrt_pop = 0.0;   // d v_i / d v'  = coeff * I
};

inline ReprJacobians repr_jacobians(const ModelParams& p,
                                    const NormalizedAdjacency* adj, UserId u,
                                    ItemId i) {
  ReprJacobians jac;
  if (p.kind == ModelKind::lgc && p.n_layers > 0) {
    jac.user_wrt_item = propagation_coeff_row(*adj, p.n_layers, u)(i);
  }
  return jac;
}

// --- checkpoint serialization -----------------------------------------------

namespace detail {

inline void write_f64_le(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline double read_f64_le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw DataError("truncated checkpoint table");
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

inline void write_table_le(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64_le(out, m(r, c));
  }
}

inline void read_table_le(std::istream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_f64_le(in);
  }
}

}  // namespace detail

/// Single-line JSON header, then raw little-endian f64 tables in order:
/// user_emb, item_emb, pop_emb (row-major).
inline void save_checkpoint(const std::string& path, const ModelParams& p,
                            std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  nlohmann::json header{{"model_kind", to_string(p.kind)},
                        {"D", p.dim()},
                        {"n_layers", p.n_layers},
                        {"lambda_p", p.lambda_p},
                        {"n_users", p.n_users()},
                        {"n_items", p.n_items()},
                        {"seed", seed}};
  out << header.dump() << '\n';
  detail::write_table_le(out, p.user_emb);
  detail::write_table_le(out, p.item_emb);
  Eigen::MatrixXd pop = p.pop_emb;
  detail::write_table_le(out, pop);
}

inline std::pair<ModelParams, std::uint64_t> load_checkpoint(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint: " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw DataError("missing checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }
  ModelParams p;
  p.kind = model_kind_from_string(header.at("model_kind").get<std::string>());
  p.n_layers = header.at("n_layers").get<std::int64_t>();
  p.lambda_p = header.at("lambda_p").get<double>();
  const auto dim = header.at("D").get<std::int64_t>();
  p.user_emb.resize(header.at("n_users").get<std::int64_t>(), dim);
  p.item_emb.resize(header.at("n_items").get<std::int64_t>(), dim);
  detail::read_table_le(in, p.user_emb);
  detail::read_table_le(in, p.item_emb);
  Eigen::MatrixXd pop(1, dim);
  detail::read_table_le(in, pop);
  p.pop_emb = pop.row(0);
  return {std::move(p), header.at("seed").get<std::uint64_t>()};
}

}  // namespace icmt
