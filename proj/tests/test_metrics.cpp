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

#include "icmt/metrics.hpp"
#include "icmt/rng.hpp"
#include "oracles.hpp"

using Catch::Approx;

namespace {

Eigen::VectorXd scores_of(std::initializer_list<double> vals) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index k = 0;
  for (const double v : vals) s(k++) = v;
  return s;
}

}  // namespace

TEST_CASE("rank_top_n orders by score with id tie-break and exclusions") {
  CHECK(icmt::rank_top_n(scores_of({0.9, 0.1, 0.5}), 2, {}) ==
        std::vector<icmt::ItemId>{0, 2});
  CHECK(icmt::rank_top_n(scores_of({0.3, 0.3, 0.3, 0.3}), 3, {}) ==
        std::vector<icmt::ItemId>{0, 1, 2});
  // excluding the top item promotes the next one
  CHECK(icmt::rank_top_n(scores_of({0.9, 0.1, 0.5}), 2, {0}) ==
        std::vector<icmt::ItemId>{2, 1});
}

TEST_CASE("recall and ndcg on hand-ranked lists") {
  SECTION("perfect ranking") {
    CHECK(icmt::recall_at_n({0, 1, 2}, {0}) == 1.0);
    CHECK(icmt::ndcg_at_n({0, 1, 2}, {0}, 20) == 1.0);
  }
  SECTION("single truth at rank 3") {
    const std::vector<icmt::ItemId> list{7, 8, 0, 9, 10};
    CHECK(icmt::recall_at_n(list, {0}) == 1.0);
    CHECK(icmt::ndcg_at_n(list, {0}, 20) == Approx(0.5));  // 1/log2(4)
  }
  SECTION("two of four truths found") {
    CHECK(icmt::recall_at_n({0, 1}, {0, 1, 2, 3}) == Approx(0.5));
  }
}

TEST_CASE("ndcg is 1 exactly when the truths fill the top ranks") {
  CHECK(icmt::ndcg_at_n({3, 1, 9}, {1, 3}, 20) == 1.0);
  CHECK(icmt::ndcg_at_n({3, 9, 1}, {1, 3}, 20) < 1.0);
}

TEST_CASE("tail metrics restrict the truth and keep full-list ranks") {
  icmt::HeadTailPartition part;
  part.is_head = {1, 1, 0, 0, 0};  // items 0,1 head
  part.head_size = 2;
  part.tail_size = 3;

  double rt = 0.0, nt = 0.0;
  SECTION("all-head truth skips the user") {
    CHECK_FALSE(icmt::tail_metrics({0, 1, 2}, {0, 1}, part, 20, rt, nt));
  }
  SECTION("one tail truth at rank 2") {
    REQUIRE(icmt::tail_metrics({0, 3, 1}, {0, 3}, part, 20, rt, nt));
    CHECK(rt == 1.0);
    CHECK(nt == Approx(1.0 / std::log2(3.0)));
  }
  SECTION("degenerate all-tail partition reduces to overall metrics") {
    icmt::HeadTailPartition all_tail;
    all_tail.is_head = {0, 0, 0, 0, 0};
    all_tail.head_size = 0;
    all_tail.tail_size = 5;
    const std::vector<icmt::ItemId> list{4, 2, 0};
    const std::vector<icmt::ItemId> truth{0, 2};
    REQUIRE(icmt::tail_metrics(list, truth, all_tail, 20, rt, nt));
    CHECK(rt == icmt::recall_at_n(list, truth));
    CHECK(nt == icmt::ndcg_at_n(list, truth, 20));
  }
}

TEST_CASE("coverage and APT follow their definitions") {
  icmt::HeadTailPartition part;
  part.is_head.assign(10, 0);
  part.is_head[0] = part.is_head[1] = 1;
  part.head_size = 2;
  part.tail_size = 8;

  SECTION("union coverage") {
    const auto [cov, apt] =
        icmt::coverage_apt({{1, 2}, {2, 3}}, part, 10);
    CHECK(cov == Approx(0.3));
  }
  SECTION("APT averages per-list tail shares") {
    // lists of length 5 with 2 and 0 tail items
    const auto [cov, apt] =
        icmt::coverage_apt({{0, 1, 2, 3, 0}, {0, 1, 0, 1, 0}}, part, 10);
    (void)cov;
    CHECK(apt == Approx(0.2));
  }
  SECTION("identical all-head lists") {
    const auto [cov, apt] = icmt::coverage_apt({{0, 1}, {0, 1}}, part, 10);
    CHECK(apt == 0.0);
    CHECK(cov == Approx(2.0 / 10.0));
  }
  SECTION("duplicating a user changes neither metric") {
    const std::vector<std::vector<icmt::ItemId>> lists{{0, 2, 5}, {1, 3, 4}};
    const auto [cov1, apt1] = icmt::coverage_apt(lists, part, 10);
    std::vector<std::vector<icmt::ItemId>> doubled = lists;
    doubled.push_back(lists[0]);
    doubled.push_back(lists[1]);
    const auto [cov2, apt2] = icmt::coverage_apt(doubled, part, 10);
    CHECK(cov1 == cov2);
    CHECK(apt1 == Approx(apt2));
  }
}

TEST_CASE("evaluate_ranking agrees with the naive oracle on random scores") {
  // 3 users x 8 items, PMF scores derived from random embeddings.
  icmt::Rng rng(404);
  for (int trial = 0; trial < 25; ++trial) {
    icmt::ModelParams p;
    p.kind = icmt::ModelKind::pmf;
    p.lambda_p = 0.0;
    p.user_emb.resize(3, 4);
    p.item_emb.resize(8, 4);
    p.pop_emb = Eigen::RowVectorXd::Zero(4);
    for (Eigen::Index r = 0; r < 3; ++r) {
      for (Eigen::Index c = 0; c < 4; ++c) p.user_emb(r, c) = rng.next_normal(0, 1);
    }
    for (Eigen::Index r = 0; r < 8; ++r) {
      for (Eigen::Index c = 0; c < 4; ++c) p.item_emb(r, c) = rng.next_normal(0, 1);
    }

    icmt::HeadTailPartition part;
    part.is_head.assign(8, 0);
    part.is_head[0] = part.is_head[1] = 1;
    part.head_size = 2;
    part.tail_size = 6;

    std::vector<std::vector<icmt::ItemId>> truth(3), excl(3);
    for (icmt::UserId u = 0; u < 3; ++u) {
      for (icmt::ItemId i = 0; i < 8; ++i) {
        const auto roll = rng.next_below(4);
        if (roll == 0) truth[static_cast<std::size_t>(u)].push_back(i);
        if (roll == 1) excl[static_cast<std::size_t>(u)].push_back(i);
      }
    }

    const std::int64_t top_n = 3;
    const auto report =
        icmt::evaluate_ranking(p, nullptr, truth, excl, part, top_n);

    std::vector<std::vector<double>> raw_scores(3, std::vector<double>(8));
    for (icmt::UserId u = 0; u < 3; ++u) {
      for (icmt::ItemId i = 0; i < 8; ++i) {
        raw_scores[static_cast<std::size_t>(u)][static_cast<std::size_t>(i)] =
            p.user_emb.row(u).dot(p.item_emb.row(i));
      }
    }
    std::vector<bool> is_tail(8);
    for (icmt::ItemId i = 0; i < 8; ++i) is_tail[static_cast<std::size_t>(i)] = !part.head(i);
    const auto naive =
        oracle::naive_metrics(raw_scores, truth, excl, is_tail, top_n);

    CHECK(report.recall == Approx(naive.recall).margin(1e-12));
    CHECK(report.ndcg == Approx(naive.ndcg).margin(1e-12));
    CHECK(report.recall_tail == Approx(naive.recall_tail).margin(1e-12));
    CHECK(report.ndcg_tail == Approx(naive.ndcg_tail).margin(1e-12));
    CHECK(report.coverage == Approx(naive.coverage).margin(1e-12));
    CHECK(report.apt == Approx(naive.apt).margin(1e-12));
    CHECK(report.n_eval_users == naive.eval_users);
  }
}

TEST_CASE("all metric values live in [0, 1]") {
  icmt::Rng rng(7);
  icmt::ModelParams p;
  p.kind = icmt::ModelKind::pmf;
  p.lambda_p = 0.0;
  p.user_emb.resize(5, 3);
  p.item_emb.resize(12, 3);
  p.pop_emb = Eigen::RowVectorXd::Zero(3);
  for (Eigen::Index r = 0; r < 5; ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) p.user_emb(r, c) = rng.next_normal(0, 1);
  }
  for (Eigen::Index r = 0; r < 12; ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) p.item_emb(r, c) = rng.next_normal(0, 1);
  }
  icmt::HeadTailPartition part;
  part.is_head.assign(12, 0);
  part.is_head[0] = part.is_head[1] = part.is_head[2] = 1;
  part.head_size = 3;
  part.tail_size = 9;
  std::vector<std::vector<icmt::ItemId>> truth(5), excl(5);
  truth[0] = {0, 4};
  truth[2] = {5};
  truth[4] = {1, 7, 9};
  excl[0] = {2};
  const auto rep = icmt::evaluate_ranking(p, nullptr, truth, excl, part, 4);
  for (const double v : {rep.recall, rep.ndcg, rep.recall_tail, rep.ndcg_tail,
                         rep.coverage, rep.apt}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
