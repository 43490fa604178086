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
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "icmt/dataset.hpp"
#include "icmt/errors.hpp"
#include "icmt/rng.hpp"

namespace icmt {

struct SynthConfig {
  std::int64_t n_users = 200;
  std::int64_t n_items = 300;
  double zipf_exponent = 1.2;
  std::uint64_t seed = 0;
  std::int64_t interactions = 0;  // 0 -> 40 per user
};

namespace detail {

/// Water-filled integer allocation: counts proportional to the weights,
/// capped per item at its eligible-user count, remainders to the largest
/// fractional parts.
inline std::vector<std::int64_t> allocate_counts(
    const std::vector<double>& weights, const std::vector<std::int64_t>& caps,
    std::int64_t total) {
  const std::size_t n = weights.size();
  std::vector<std::int64_t> counts(n, 0);
  std::vector<char> capped(n, 0);
  std::int64_t remaining = total;

  // cap pass: items whose proportional share exceeds their cap stick there
  for (bool changed = true; changed;) {
    changed = false;
    double open_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!capped[i]) open_mass += weights[i];
    }
    if (open_mass <= 0.0) break;
    for (std::size_t i = 0; i < n; ++i) {
      if (capped[i]) continue;
      const double target =
          static_cast<double>(remaining) * weights[i] / open_mass;
      if (target >= static_cast<double>(caps[i])) {
        capped[i] = 1;
        counts[i] = caps[i];
        remaining -= caps[i];
        changed = true;
        break;  // recompute the open mass
      }
    }
  }

  double open_mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!capped[i]) open_mass += weights[i];
  }
  if (open_mass > 0.0 && remaining > 0) {
    std::vector<std::pair<double, std::size_t>> fractions;
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (capped[i]) continue;
      const double target =
          static_cast<double>(remaining) * weights[i] / open_mass;
      counts[i] = static_cast<std::int64_t>(std::floor(target));
      assigned += counts[i];
      fractions.emplace_back(target - std::floor(target), i);
    }
    std::sort(fractions.begin(), fractions.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::int64_t leftover = remaining - assigned;
    for (const auto& [frac, i] : fractions) {
      if (leftover <= 0) break;
      if (counts[i] < caps[i]) {
        ++counts[i];
        --leftover;
      }
    }
  }
  return counts;
}

}  // namespace detail

/// Zipf-popularity implicit log with two opposed user groups. Item rank = id;
/// the target count of item i is proportional to (i+1)^-zipf (capped by its
/// eligible-user pool, since pairs are unique). Head items (top 20% of ids)
/// draw users from everyone; tail items belong to one of two halves by id
/// parity and draw only from the matching user-id-parity group, which plants
/// opposing tail preferences between the groups.
inline std::vector<Interaction> generate_synthetic(const SynthConfig& cfg) {
  if (cfg.n_users < 2 || cfg.n_items < 2) {
    throw ConfigError("synthetic data needs at least 2 users and 2 items");
  }
  if (cfg.zipf_exponent < 0.0) {
    throw ConfigError("zipf exponent must be nonnegative");
  }
  const std::int64_t total =
      cfg.interactions > 0 ? cfg.interactions : 40 * cfg.n_users;
  const auto head_size = static_cast<std::int64_t>(
      std::ceil(0.2 * static_cast<double>(cfg.n_items)));

  std::vector<UserId> group_users[2];
  for (UserId u = 0; u < cfg.n_users; ++u) {
    group_users[u % 2].push_back(u);
  }

  std::vector<double> weights(static_cast<std::size_t>(cfg.n_items));
  std::vector<std::int64_t> caps(static_cast<std::size_t>(cfg.n_items));
  for (ItemId i = 0; i < cfg.n_items; ++i) {
    weights[static_cast<std::size_t>(i)] =
        std::pow(static_cast<double>(i + 1), -cfg.zipf_exponent);
    if (i < head_size) {
      caps[static_cast<std::size_t>(i)] = cfg.n_users;
    } else {
      caps[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(
          group_users[(i - head_size) % 2].size());
    }
  }
  const std::int64_t capacity =
      std::accumulate(caps.begin(), caps.end(), std::int64_t{0});
  const auto counts = detail::allocate_counts(
      weights, caps, std::min(total, capacity));

  Rng rng = Rng::substream(cfg.seed, "synth");
  std::vector<Interaction> pairs;
  pairs.reserve(static_cast<std::size_t>(total));
  std::vector<UserId> pool;
  for (ItemId i = 0; i < cfg.n_items; ++i) {
    const auto want = counts[static_cast<std::size_t>(i)];
    if (want == 0) continue;
    if (i < head_size) {
      pool.resize(static_cast<std::size_t>(cfg.n_users));
      std::iota(pool.begin(), pool.end(), UserId{0});
    } else {
      pool = group_users[(i - head_size) % 2];
    }
    rng.shuffle(pool);
    for (std::int64_t k = 0; k < want; ++k) {
      pairs.emplace_back(pool[static_cast<std::size_t>(k)], i);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

/// Writes `user,item` lines; loaders densify the integer tokens back.
inline void write_interactions(const std::string& path,
                               const std::vector<Interaction>& pairs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write interaction file: " + path);
  for (const auto& [u, i] : pairs) out << u << ',' << i << '\n';
}

}  // namespace icmt
