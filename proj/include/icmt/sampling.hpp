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

#include <cstdint>
#include <iostream>
#include <optional>
#include <vector>

#include "icmt/dataset.hpp"
#include "icmt/rng.hpp"

namespace icmt {

struct TrainBatch {
  std::vector<Interaction> positives;
  std::vector<Interaction> negatives;
  std::int64_t ordinal = 0;
};

/// One epoch over the training positives: a seed-determined shuffle consumed
/// in batch_size chunks, with neg_ratio uniform negatives per positive drawn
/// by rejection against the full positive set.
class EpochSampler {
 public:
  EpochSampler(const DataSplit& split, const InteractionDataset& ds,
               std::int64_t batch_size, std::int64_t neg_ratio, Rng* rng)
      : ds_(ds),
        batch_size_(batch_size),
        neg_ratio_(neg_ratio),
        rng_(rng),
        order_(split.train) {
    if (order_.empty()) throw DataError("training split is empty");
    rng_->shuffle(order_);
  }

  std::optional<TrainBatch> next() {
    if (cursor_ >= order_.size()) return std::nullopt;
    TrainBatch batch;
    batch.ordinal = ordinal_++;
    while (cursor_ < order_.size() &&
           static_cast<std::int64_t>(batch.positives.size()) < batch_size_) {
      const auto [u, i] = order_[cursor_++];
      const auto& pos_items = ds_.user_items[static_cast<std::size_t>(u)];
      if (static_cast<std::int64_t>(pos_items.size()) >= ds_.n_items &&
          neg_ratio_ > 0) {
        if (!warned_full_user_) {
          std::cerr << "warning: user " << u
                    << " interacted with every item; skipping\n";
          warned_full_user_ = true;
        }
        continue;
      }
      batch.positives.emplace_back(u, i);
      for (std::int64_t k = 0; k < neg_ratio_; ++k) {
        ItemId j;
        do {
          j = static_cast<ItemId>(
              rng_->next_below(static_cast<std::uint64_t>(ds_.n_items)));
        } while (ds_.has_positive(u, j));
        batch.negatives.emplace_back(u, j);
      }
    }
    if (batch.positives.empty()) return std::nullopt;
    return batch;
  }

 private:
  const InteractionDataset& ds_;
  std::int64_t batch_size_;
  std::int64_t neg_ratio_;
  Rng* rng_;
  std::vector<Interaction> order_;
  std::size_t cursor_ = 0;
  std::int64_t ordinal_ = 0;
  bool warned_full_user_ = false;
};

}  // namespace icmt
