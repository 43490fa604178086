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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "icmt/errors.hpp"
#include "icmt/rng.hpp"

namespace icmt {

using UserId = std::int64_t;
using ItemId = std::int64_t;
using Interaction = std::pair<UserId, ItemId>;

/// Implicit-feedback log with dense contiguous ids.
struct InteractionDataset {
  std::int64_t n_users = 0;
  std::int64_t n_items = 0;
  std::vector<Interaction> positives;           // sorted by (user, item), unique
  std::vector<std::int64_t> popularity;         // interactions per item
  std::vector<std::vector<ItemId>> user_items;  // sorted per-user item lists

  bool has_positive(UserId u, ItemId i) const {
    const auto& items = user_items[static_cast<std::size_t>(u)];
    return std::binary_search(items.begin(), items.end(), i);
  }
};

struct DataSplit {
  std::vector<Interaction> train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.8, 0.1, 0.1};
};

struct HeadTailPartition {
  std::vector<char> is_head;  // per item
  std::int64_t head_size = 0;
  std::int64_t tail_size = 0;

  bool head(ItemId i) const { return is_head[static_cast<std::size_t>(i)] != 0; }
  bool tail(ItemId i) const { return !head(i); }
};

namespace detail {

inline void index_user_items(InteractionDataset& ds) {
  ds.user_items.assign(static_cast<std::size_t>(ds.n_users), {});
  ds.popularity.assign(static_cast<std::size_t>(ds.n_items), 0);
  for (const auto& [u, i] : ds.positives) {
    ds.user_items[static_cast<std::size_t>(u)].push_back(i);
    ++ds.popularity[static_cast<std::size_t>(i)];
  }
  for (auto& items : ds.user_items) std::sort(items.begin(), items.end());
}

}  // namespace detail

/// Builds a dataset from already-densified unique pairs.
inline InteractionDataset make_dataset(std::vector<Interaction> pairs,
                                       std::int64_t n_users,
                                       std::int64_t n_items) {
  InteractionDataset ds;
  ds.n_users = n_users;
  ds.n_items = n_items;
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  ds.positives = std::move(pairs);
  detail::index_user_items(ds);
  return ds;
}

/// Parses `user_token<sep>item_token[<sep>ignored...]` lines (sep = ',' or
/// '\t', '#' starts a comment), densifies tokens in first-appearance order,
/// then applies iterative k-core filtering and re-densifies the survivors.
inline InteractionDataset load_interactions(const std::string& path,
                                            std::int64_t min_core) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read interaction file: " + path);

  std::map<std::string, std::int64_t> user_ids, item_ids;
  std::vector<std::int64_t> first_user, first_item;  // id -> appearance order
  std::vector<Interaction> pairs;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t pos = line.find_first_of(",\t", start);
      if (pos == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": malformed record: " + line);
    }
    auto intern = [](std::map<std::string, std::int64_t>& table,
                     const std::string& token) {
      const auto [it, inserted] =
          table.emplace(token, static_cast<std::int64_t>(table.size()));
      return it->second;
    };
    pairs.emplace_back(intern(user_ids, fields[0]), intern(item_ids, fields[1]));
  }

  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  // Iterative k-core: drop users/items below min_core until stable.
  auto n_users = static_cast<std::int64_t>(user_ids.size());
  auto n_items = static_cast<std::int64_t>(item_ids.size());
  std::vector<char> user_alive(static_cast<std::size_t>(n_users), 1);
  std::vector<char> item_alive(static_cast<std::size_t>(n_items), 1);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::int64_t> user_deg(static_cast<std::size_t>(n_users), 0);
    std::vector<std::int64_t> item_deg(static_cast<std::size_t>(n_items), 0);
    for (const auto& [u, i] : pairs) {
      if (user_alive[static_cast<std::size_t>(u)] &&
          item_alive[static_cast<std::size_t>(i)]) {
        ++user_deg[static_cast<std::size_t>(u)];
        ++item_deg[static_cast<std::size_t>(i)];
      }
    }
    for (std::int64_t u = 0; u < n_users; ++u) {
      if (user_alive[static_cast<std::size_t>(u)] &&
          user_deg[static_cast<std::size_t>(u)] < min_core) {
        user_alive[static_cast<std::size_t>(u)] = 0;
        changed = true;
      }
    }
    for (std::int64_t i = 0; i < n_items; ++i) {
      if (item_alive[static_cast<std::size_t>(i)] &&
          item_deg[static_cast<std::size_t>(i)] < min_core) {
        item_alive[static_cast<std::size_t>(i)] = 0;
        changed = true;
      }
    }
  }

  // Re-densify surviving ids, preserving first-appearance order.
  std::vector<std::int64_t> user_map(static_cast<std::size_t>(n_users), -1);
  std::vector<std::int64_t> item_map(static_cast<std::size_t>(n_items), -1);
  std::int64_t next_user = 0, next_item = 0;
  for (std::int64_t u = 0; u < n_users; ++u) {
    if (user_alive[static_cast<std::size_t>(u)]) {
      user_map[static_cast<std::size_t>(u)] = next_user++;
    }
  }
  for (std::int64_t i = 0; i < n_items; ++i) {
    if (item_alive[static_cast<std::size_t>(i)]) {
      item_map[static_cast<std::size_t>(i)] = next_item++;
    }
  }
  std::vector<Interaction> kept;
  kept.reserve(pairs.size());
  for (const auto& [u, i] : pairs) {
    const auto mu = user_map[static_cast<std::size_t>(u)];
    const auto mi = item_map[static_cast<std::size_t>(i)];
    if (mu >= 0 && mi >= 0) kept.emplace_back(mu, mi);
  }
  if (kept.empty()) throw DataError("empty dataset after filtering");

  return make_dataset(std::move(kept), next_user, next_item);
}

/// Per-user random 8:1:1-style split. Counts are rounded to nearest with the
/// remainder going to train; a user always keeps at least one train positive.
inline DataSplit split_dataset(const InteractionDataset& ds,
                               const std::array<double, 3>& ratios,
                               std::uint64_t seed) {
  double sum = 0.0;
  for (const double r : ratios) {
    if (r < 0.0) throw ConfigError("split ratios must be nonnegative");
    sum += r;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }

  DataSplit split;
  split.seed = seed;
  split.ratios = ratios;
  for (UserId u = 0; u < ds.n_users; ++u) {
    std::vector<ItemId> items = ds.user_items[static_cast<std::size_t>(u)];
    Rng rng = Rng::substream(seed, "split", static_cast<std::uint64_t>(u));
    rng.shuffle(items);
    const auto n = static_cast<std::int64_t>(items.size());
    auto n_val = static_cast<std::int64_t>(std::llround(ratios[1] * static_cast<double>(n)));
    auto n_test = static_cast<std::int64_t>(std::llround(ratios[2] * static_cast<double>(n)));
    while (n - n_val - n_test < 1) {
      if (n_test > 0) {
        --n_test;
      } else if (n_val > 0) {
        --n_val;
      } else {
        break;
      }
    }
    std::int64_t pos = 0;
    for (std::int64_t k = 0; k < n_val; ++k) split.validation.emplace_back(u, items[static_cast<std::size_t>(pos++)]);
    for (std::int64_t k = 0; k < n_test; ++k) split.test.emplace_back(u, items[static_cast<std::size_t>(pos++)]);
    for (; pos < n; ++pos) split.train.emplace_back(u, items[static_cast<std::size_t>(pos)]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

/// Per-item interaction counts restricted to the training split.
inline std::vector<std::int64_t> train_popularity(const DataSplit& split,
                                                  std::int64_t n_items) {
  std::vector<std::int64_t> pop(static_cast<std::size_t>(n_items), 0);
  for (const auto& [u, i] : split.train) ++pop[static_cast<std::size_t>(i)];
  return pop;
}

/// 20/80 Pareto-principle split: the ceil(0.2*n_items) most popular items are
/// head; ties broken by ascending item id.
inline HeadTailPartition partition_head_tail(
    const std::vector<std::int64_t>& popularity) {
  const auto n_items = static_cast<std::int64_t>(popularity.size());
  if (n_items < 1) throw DataError("cannot partition an empty item set");
  std::vector<ItemId> order(static_cast<std::size_t>(n_items));
  for (std::int64_t i = 0; i < n_items; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
    const auto pa = popularity[static_cast<std::size_t>(a)];
    const auto pb = popularity[static_cast<std::size_t>(b)];
    return pa != pb ? pa > pb : a < b;
  });
  HeadTailPartition part;
  part.head_size = static_cast<std::int64_t>(
      std::ceil(0.2 * static_cast<double>(n_items)));
  part.tail_size = n_items - part.head_size;
  part.is_head.assign(static_cast<std::size_t>(n_items), 0);
  for (std::int64_t k = 0; k < part.head_size; ++k) {
    part.is_head[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
  }
  return part;
}

inline HeadTailPartition partition_head_tail(const InteractionDataset& ds) {
  return partition_head_tail(ds.popularity);
}

/// Per-user item lists for one side of a split.
inline std::vector<std::vector<ItemId>> group_by_user(
    const std::vector<Interaction>& pairs, std::int64_t n_users) {
  std::vector<std::vector<ItemId>> by_user(static_cast<std::size_t>(n_users));
  for (const auto& [u, i] : pairs) by_user[static_cast<std::size_t>(u)].push_back(i);
  for (auto& items : by_user) std::sort(items.begin(), items.end());
  return by_user;
}

}  // namespace icmt
