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

#include "icmt/model.hpp"
#include "oracles.hpp"

using Catch::Approx;

namespace {

icmt::ModelParams two_node_lgc(std::int64_t dim, std::int64_t n_layers) {
  icmt::ModelParams p =
      icmt::init_params(icmt::ModelKind::lgc, 1, 1, dim, n_layers, 2e-3, 7);
  return p;
}

icmt::NormalizedAdjacency two_node_graph() {
  return icmt::build_adjacency({{0, 0}}, 1, 1);
}

}  // namespace

TEST_CASE("init_params shapes, determinism and moments") {
  const auto p = icmt::init_params(icmt::ModelKind::pmf, 100, 160, 64, 3,
                                   2e-3, 42);
  CHECK(p.user_emb.cols() == 64);
  CHECK(p.item_emb.cols() == 64);
  CHECK(p.pop_emb.cols() == 64);

  const auto q = icmt::init_params(icmt::ModelKind::pmf, 100, 160, 64, 3,
                                   2e-3, 42);
  CHECK(p.user_emb == q.user_emb);
  CHECK(p.item_emb == q.item_emb);
  CHECK(p.pop_emb == q.pop_emb);

  const auto big =
      icmt::init_params(icmt::ModelKind::pmf, 10000, 6000, 64, 3, 0.0, 9);
  double sum = 0.0, sum_sq = 0.0;
  const double n =
      static_cast<double>(big.user_emb.size() + big.item_emb.size());
  sum = big.user_emb.sum() + big.item_emb.sum();
  sum_sq = big.user_emb.squaredNorm() + big.item_emb.squaredNorm();
  const double std_dev = std::sqrt(sum_sq / n - (sum / n) * (sum / n));
  CHECK(std_dev == Approx(0.01).epsilon(0.05));
}

TEST_CASE("PMF representations are table lookups") {
  const auto p =
      icmt::init_params(icmt::ModelKind::pmf, 4, 5, 8, 3, 2e-3, 1);
  CHECK(icmt::user_repr(p, nullptr, 2) == p.user_emb.row(2));
  CHECK(icmt::item_repr(p, nullptr, 3) == p.item_emb.row(3));
}

TEST_CASE("LGC single-edge graph averages the two endpoints at L=1") {
  auto p = two_node_lgc(6, 1);
  const auto adj = two_node_graph();
  const Eigen::RowVectorXd vu = icmt::user_repr(p, &adj, 0);
  const Eigen::RowVectorXd expected = (p.user_emb.row(0) + p.item_emb.row(0)) / 2.0;
  CHECK((vu - expected).norm() < 1e-15);
}

TEST_CASE("LGC with zero layers reduces to a lookup") {
  auto p = two_node_lgc(6, 0);
  const auto adj = two_node_graph();
  CHECK(icmt::user_repr(p, &adj, 0) == p.user_emb.row(0));
}

TEST_CASE("prediction combines interest and popularity terms") {
  icmt::ModelParams p;
  p.kind = icmt::ModelKind::pmf;
  p.lambda_p = 0.5;
  p.user_emb.resize(1, 2);
  p.user_emb << 1, 0;
  p.item_emb.resize(1, 2);
  p.item_emb << 1, 1;
  p.pop_emb.resize(2);
  p.pop_emb << 0, 1;

  CHECK(icmt::predict_icmt(p, nullptr, 0, 0) == Approx(1.5));
  CHECK(icmt::predict_inference(p, nullptr, 0, 0) == Approx(1.0));

  p.lambda_p = 0.0;
  CHECK(icmt::predict_icmt(p, nullptr, 0, 0) ==
        icmt::predict_inference(p, nullptr, 0, 0));
}

TEST_CASE("large lambda_p reorders training scores but not inference") {
  // three items; v' favors item 2 strongly
  icmt::ModelParams p;
  p.kind = icmt::ModelKind::pmf;
  p.lambda_p = 10.0;
  p.user_emb.resize(1, 2);
  p.user_emb << 1, 0;
  p.item_emb.resize(3, 2);
  p.item_emb << 0.9, 0.0,  // best by interest
      0.5, 0.0,            //
      0.1, 1.0;            // boosted by popularity
  p.pop_emb.resize(2);
  p.pop_emb << 0, 1;

  auto argmax_icmt = [&]() {
    double best = -1e30;
    int arg = -1;
    for (int i = 0; i < 3; ++i) {
      const double s = icmt::predict_icmt(p, nullptr, 0, i);
      if (s > best) {
        best = s;
        arg = i;
      }
    }
    return arg;
  };
  auto argmax_inf = [&]() {
    double best = -1e30;
    int arg = -1;
    for (int i = 0; i < 3; ++i) {
      const double s = icmt::predict_inference(p, nullptr, 0, i);
      if (s > best) {
        best = s;
        arg = i;
      }
    }
    return arg;
  };
  CHECK(argmax_icmt() == 2);
  CHECK(argmax_inf() == 0);
}

TEST_CASE("inference score ignores the popularity embedding") {
  auto p = icmt::init_params(icmt::ModelKind::pmf, 3, 4, 5, 3, 2e-3, 2);
  const double before = icmt::predict_inference(p, nullptr, 1, 2);
  p.pop_emb.setConstant(123.0);
  CHECK(icmt::predict_inference(p, nullptr, 1, 2) == before);

  auto q = icmt::init_params(icmt::ModelKind::lgc, 3, 4, 5, 2, 2e-3, 2);
  const auto adj = icmt::build_adjacency({{0, 0}, {1, 1}, {2, 2}, {0, 3}}, 3, 4);
  const double lgc_before = icmt::predict_inference(q, &adj, 0, 3);
  q.pop_emb.setConstant(-7.0);
  CHECK(icmt::predict_inference(q, &adj, 0, 3) == lgc_before);
}

TEST_CASE("LGC propagation is linear in the parameters") {
  auto p = icmt::init_params(icmt::ModelKind::lgc, 3, 4, 5, 3, 2e-3, 4);
  const auto adj =
      icmt::build_adjacency({{0, 0}, {0, 1}, {1, 1}, {2, 2}, {2, 3}}, 3, 4);
  const Eigen::RowVectorXd base = icmt::user_repr(p, &adj, 0);
  p.user_emb *= 2.5;
  p.item_emb *= 2.5;
  const Eigen::RowVectorXd scaled = icmt::user_repr(p, &adj, 0);
  CHECK((scaled - 2.5 * base).norm() < 1e-12);
}

TEST_CASE("repr_jacobians vanish for PMF") {
  const auto p = icmt::init_params(icmt::ModelKind::pmf, 3, 4, 5, 3, 2e-3, 6);
  const auto jac = icmt::repr_jacobians(p, nullptr, 1, 2);
  CHECK(jac.user_wrt_item == 0.0);
  CHECK(jac.item_wrt_pop == 0.0);
}

TEST_CASE("LGC single-edge Jacobian coefficient is 1/2") {
  auto p = two_node_lgc(64, 1);
  const auto adj = two_node_graph();
  const auto jac = icmt::repr_jacobians(p, &adj, 0, 0);
  CHECK(jac.user_wrt_item == Approx(0.5));
  CHECK(jac.item_wrt_pop == 0.0);
  const double frob_sq = jac.user_wrt_item * jac.user_wrt_item * 64.0;
  CHECK(frob_sq == Approx(16.0));
}

TEST_CASE("analytic Jacobians match finite differences on a small graph") {
  // 3 users, 4 items, 6 edges, L=2
  const std::vector<icmt::Interaction> edges{{0, 0}, {0, 1}, {1, 1},
                                             {1, 2}, {2, 2}, {2, 3}};
  const auto adj = icmt::build_adjacency(edges, 3, 4);
  auto p = icmt::init_params(icmt::ModelKind::lgc, 3, 4, 4, 2, 2e-3, 8);

  for (icmt::UserId u = 0; u < 3; ++u) {
    const Eigen::VectorXd coeffs = icmt::propagation_coeff_row(adj, 2, u);
    for (icmt::ItemId i = 0; i < 4; ++i) {
      // FD of v_u[0] w.r.t. item_emb(i, 0); off-diagonal terms are zero by
      // the identity structure, the diagonal carries the coefficient.
      const double fd = oracle::fd_partial(
          [&]() { return icmt::user_repr(p, &adj, u)(0); }, &p.item_emb(i, 0));
      CHECK(oracle::rel_error(fd, coeffs(i)) < 1e-6);
      const double fd_cross = oracle::fd_partial(
          [&]() { return icmt::user_repr(p, &adj, u)(1); }, &p.item_emb(i, 0));
      CHECK(std::fabs(fd_cross) < 1e-9);
    }
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const auto p = icmt::init_params(icmt::ModelKind::lgc, 7, 9, 6, 2, 1e-3, 3);
  const auto path =
      (std::filesystem::temp_directory_path() / "icmt_ckpt_test.bin").string();
  icmt::save_checkpoint(path, p, 321);
  const auto [loaded, seed] = icmt::load_checkpoint(path);
  CHECK(seed == 321);
  CHECK(loaded.kind == p.kind);
  CHECK(loaded.n_layers == p.n_layers);
  CHECK(loaded.lambda_p == p.lambda_p);
  CHECK(loaded.user_emb == p.user_emb);
  CHECK(loaded.item_emb == p.item_emb);
  CHECK(loaded.pop_emb == p.pop_emb);
  std::remove(path.c_str());
}
