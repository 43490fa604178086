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

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "icmt/dataset.hpp"
#include "icmt/synth.hpp"
#include "oracles.hpp"

namespace {

std::string write_temp(const std::string& content) {
  static int counter = 0;
  const auto path = std::filesystem::temp_directory_path() /
                    ("icmt_ds_test_" + std::to_string(counter++) + ".txt");
  std::ofstream out(path);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("load counts popularity and densifies tokens") {
  const auto path = write_temp("a,x\na,y\nb,x\n");
  const auto ds = icmt::load_interactions(path, 1);
  CHECK(ds.n_users == 2);
  CHECK(ds.n_items == 2);
  // first-appearance order: x -> 0, y -> 1
  CHECK(ds.popularity[0] == 2);
  CHECK(ds.popularity[1] == 1);
  CHECK(ds.positives.size() == 3);
  std::remove(path.c_str());
}

TEST_CASE("load accepts tabs, comments and extra columns") {
  const auto path = write_temp("# comment\nu1\ti1\textra\nu2,i1,3,4\n\n");
  const auto ds = icmt::load_interactions(path, 1);
  CHECK(ds.n_users == 2);
  CHECK(ds.n_items == 1);
  std::remove(path.c_str());
}

TEST_CASE("malformed record reports its line number") {
  const auto path = write_temp("a,x\nbroken\n");
  try {
    icmt::load_interactions(path, 1);
    FAIL("expected DataError");
  } catch (const icmt::DataError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("k-core removal cascades") {
  // z appears once; dropping z leaves user a with one interaction, so a goes
  // too, and the cascade must settle with b, c, x, y surviving.
  const auto path = write_temp("a,x\na,z\nb,x\nb,y\nc,x\nc,y\n");
  const auto ds = icmt::load_interactions(path, 2);
  CHECK(ds.n_users == 2);
  CHECK(ds.n_items == 2);
  CHECK(ds.positives.size() == 4);
  for (const auto count : ds.popularity) CHECK(count >= 2);
  std::remove(path.c_str());
}

TEST_CASE("duplicate records collapse to one positive") {
  const auto path = write_temp("a,x\na,x\nb,x\nb,y\na,y\n");
  const auto ds = icmt::load_interactions(path, 1);
  CHECK(ds.positives.size() == 4);
  CHECK(ds.popularity[0] == 2);
  std::remove(path.c_str());
}

TEST_CASE("empty dataset after filtering raises") {
  const auto path = write_temp("a,x\n");
  CHECK_THROWS_AS(icmt::load_interactions(path, 5), icmt::DataError);
  std::remove(path.c_str());
}

TEST_CASE("k-core matches the brute-force pruning oracle on Zipf data") {
  icmt::SynthConfig cfg;
  cfg.n_users = 250;
  cfg.n_items = 500;
  cfg.zipf_exponent = 1.2;
  cfg.seed = 2024;
  cfg.interactions = 10000;
  const auto pairs = icmt::generate_synthetic(cfg);
  const auto path = std::filesystem::temp_directory_path() / "icmt_zipf.txt";
  icmt::write_interactions(path.string(), pairs);

  const auto ds = icmt::load_interactions(path.string(), 5);
  const auto ref = oracle::reference_kcore(pairs, 5);
  CHECK(ds.n_users == ref.users);
  CHECK(ds.n_items == ref.items);
  CHECK(static_cast<std::int64_t>(ds.positives.size()) == ref.pairs);
  std::remove(path.string().c_str());
}

TEST_CASE("split gives 8/1/1 per user and partitions the positives") {
  std::vector<icmt::Interaction> pairs;
  for (icmt::ItemId i = 0; i < 10; ++i) pairs.emplace_back(0, i);
  pairs.emplace_back(1, 0);  // single-positive user keeps its train item
  const auto ds = icmt::make_dataset(pairs, 2, 10);
  const auto split = icmt::split_dataset(ds, {0.8, 0.1, 0.1}, 5);

  auto count_user = [](const std::vector<icmt::Interaction>& v,
                       icmt::UserId u) {
    std::int64_t n = 0;
    for (const auto& [uu, ii] : v) {
      if (uu == u) ++n;
    }
    return n;
  };
  CHECK(count_user(split.train, 0) == 8);
  CHECK(count_user(split.validation, 0) == 1);
  CHECK(count_user(split.test, 0) == 1);
  CHECK(count_user(split.train, 1) == 1);
  CHECK(count_user(split.validation, 1) == 0);
  CHECK(count_user(split.test, 1) == 0);

  // set-algebraic partition check
  std::set<icmt::Interaction> all(split.train.begin(), split.train.end());
  CHECK(all.size() == split.train.size());
  for (const auto& p : split.validation) CHECK(all.insert(p).second);
  for (const auto& p : split.test) CHECK(all.insert(p).second);
  CHECK(all == std::set<icmt::Interaction>(ds.positives.begin(),
                                           ds.positives.end()));
}

TEST_CASE("split is seed-deterministic with stable per-user counts") {
  icmt::SynthConfig cfg;
  cfg.n_users = 40;
  cfg.n_items = 60;
  cfg.seed = 3;
  const auto ds = icmt::make_dataset(icmt::generate_synthetic(cfg), 40, 60);
  const auto a = icmt::split_dataset(ds, {0.8, 0.1, 0.1}, 11);
  const auto b = icmt::split_dataset(ds, {0.8, 0.1, 0.1}, 11);
  const auto c = icmt::split_dataset(ds, {0.8, 0.1, 0.1}, 12);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.test == b.test);
  CHECK(a.train != c.train);

  auto per_user_counts = [&](const std::vector<icmt::Interaction>& v) {
    std::vector<std::int64_t> counts(40, 0);
    for (const auto& [u, i] : v) ++counts[static_cast<std::size_t>(u)];
    return counts;
  };
  CHECK(per_user_counts(a.train) == per_user_counts(c.train));
  CHECK(per_user_counts(a.test) == per_user_counts(c.test));
}

TEST_CASE("bad ratios are rejected") {
  const auto ds = icmt::make_dataset({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, 2, 2);
  CHECK_THROWS_AS(icmt::split_dataset(ds, {0.8, 0.1, 0.2}, 1),
                  icmt::ConfigError);
}

TEST_CASE("head/tail sizes and tie-break") {
  SECTION("10 items -> 2 head") {
    std::vector<std::int64_t> pop{9, 8, 7, 6, 5, 4, 3, 2, 1, 0};
    const auto part = icmt::partition_head_tail(pop);
    CHECK(part.head_size == 2);
    CHECK(part.head(0));
    CHECK(part.head(1));
    CHECK(part.tail(2));
  }
  SECTION("1 item -> head") {
    const auto part = icmt::partition_head_tail(std::vector<std::int64_t>{5});
    CHECK(part.head_size == 1);
    CHECK(part.head(0));
  }
  SECTION("ties resolve to the lowest ids") {
    std::vector<std::int64_t> pop(10, 3);
    const auto part = icmt::partition_head_tail(pop);
    CHECK(part.head(0));
    CHECK(part.head(1));
    for (icmt::ItemId i = 2; i < 10; ++i) CHECK(part.tail(i));
  }
}

TEST_CASE("tail popularity never exceeds head popularity") {
  icmt::SynthConfig cfg;
  cfg.n_users = 60;
  cfg.n_items = 97;
  cfg.seed = 17;
  const auto ds = icmt::make_dataset(icmt::generate_synthetic(cfg), 60, 97);
  const auto part = icmt::partition_head_tail(ds.popularity);
  CHECK(part.head_size == static_cast<std::int64_t>(std::ceil(0.2 * 97)));
  std::int64_t min_head = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_tail = std::numeric_limits<std::int64_t>::min();
  for (icmt::ItemId i = 0; i < ds.n_items; ++i) {
    if (part.head(i)) {
      min_head = std::min(min_head, ds.popularity[static_cast<std::size_t>(i)]);
    } else {
      max_tail = std::max(max_tail, ds.popularity[static_cast<std::size_t>(i)]);
    }
  }
  CHECK(max_tail <= min_head);
}
