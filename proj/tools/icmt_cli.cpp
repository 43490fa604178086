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

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "icmt/icmt.hpp"

namespace fs = std::filesystem;

namespace {

void cmd_prepare(const std::string& input, std::int64_t min_core,
                 std::uint64_t seed, const std::string& out) {
  const icmt::InteractionDataset ds = icmt::load_interactions(input, min_core);
  const icmt::DataSplit split =
      icmt::split_dataset(ds, {0.8, 0.1, 0.1}, seed);
  icmt::write_split(out, split, ds.n_users, ds.n_items);

  icmt::RunManifest manifest;
  manifest.config = {{"command", "prepare"},
                     {"input", input},
                     {"min_core", min_core},
                     {"seed", seed}};
  manifest.dataset_fingerprint = icmt::dataset_fingerprint(
      input, static_cast<std::int64_t>(ds.positives.size()));
  manifest.seed = seed;
  manifest.timestamps = {{"input", icmt::file_mtime_iso(input)}};
  icmt::write_manifest(out, manifest);
  std::cout << "prepared " << ds.positives.size() << " interactions ("
            << ds.n_users << " users, " << ds.n_items << " items) into " << out
            << "\n";
}

icmt::RunManifest data_manifest(const nlohmann::json& config,
                                const std::string& data_dir,
                                const icmt::PreparedData& data,
                                std::uint64_t seed) {
  icmt::RunManifest manifest;
  manifest.config = config;
  const std::string train_file = (fs::path(data_dir) / "train.txt").string();
  manifest.dataset_fingerprint = icmt::dataset_fingerprint(
      train_file, static_cast<std::int64_t>(data.ds.positives.size()));
  manifest.seed = seed;
  manifest.timestamps = {
      {"data", icmt::file_mtime_iso(
                   (fs::path(data_dir) / "header.json").string())}};
  return manifest;
}

void cmd_train(const std::string& config_path, const std::string& data_dir,
               const std::string& out, const std::string& pe_trace) {
  std::ifstream config_in(config_path);
  if (!config_in) throw icmt::ConfigError("cannot read config: " + config_path);
  nlohmann::json config_json;
  try {
    config_in >> config_json;
  } catch (const nlohmann::json::exception& e) {
    throw icmt::ConfigError(std::string("bad config JSON: ") + e.what());
  }
  const icmt::TrainConfig cfg = icmt::train_config_from_json(config_json);
  const icmt::PreparedData data = icmt::read_split(data_dir);

  std::ofstream trace_out;
  std::ostream* trace = nullptr;
  if (!pe_trace.empty()) {
    trace_out.open(pe_trace);
    if (!trace_out) throw icmt::DataError("cannot write PE trace: " + pe_trace);
    trace_out << "iteration,objective,gamma\n";
    trace = &trace_out;
  }

  const icmt::TrainResult result = icmt::train(cfg, data.split, data.ds, trace);

  fs::create_directories(out);
  icmt::save_checkpoint((fs::path(out) / "checkpoint.bin").string(),
                        result.params, cfg.seed);
  icmt::write_history_csv(fs::path(out) / "history.csv", result.history);
  icmt::RunManifest manifest =
      data_manifest(cfg.to_json(), data_dir, data, cfg.seed);
  icmt::write_manifest(out, manifest);
  std::cout << "trained " << icmt::to_string(cfg.method) << " for "
            << result.history.total_batches
            << " batches; best validation NDCG@" << cfg.eval_n << " = "
            << result.best_ndcg << "\n";
}

void cmd_eval(const std::string& checkpoint, const std::string& data_dir,
              std::int64_t n, const std::string& out) {
  const auto [params, seed] = icmt::load_checkpoint(checkpoint);
  const icmt::PreparedData data = icmt::read_split(data_dir);
  if (params.n_users() != data.ds.n_users ||
      params.n_items() != data.ds.n_items) {
    throw icmt::DataError("dimension mismatch between checkpoint and dataset");
  }
  if (n > data.ds.n_items) {
    throw icmt::ConfigError("N exceeds the number of items");
  }

  icmt::NormalizedAdjacency adj_store;
  const icmt::NormalizedAdjacency* adj = nullptr;
  if (params.kind == icmt::ModelKind::lgc) {
    adj_store = icmt::build_adjacency(data.split.train, data.ds.n_users,
                                      data.ds.n_items);
    adj = &adj_store;
  }
  const icmt::HeadTailPartition partition = icmt::partition_head_tail(
      icmt::train_popularity(data.split, data.ds.n_items));
  const auto truth = icmt::group_by_user(data.split.test, data.ds.n_users);
  auto exclusions = icmt::group_by_user(data.split.train, data.ds.n_users);
  for (const auto& [u, i] : data.split.validation) {
    exclusions[static_cast<std::size_t>(u)].push_back(i);
  }
  for (auto& items : exclusions) std::sort(items.begin(), items.end());

  const icmt::MetricsReport report =
      icmt::evaluate_ranking(params, adj, truth, exclusions, partition, n);
  const std::string dump = report.to_json().dump(2);
  std::cout << dump << "\n";
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream metrics_out(fs::path(out) / "metrics.json");
    if (!metrics_out) throw icmt::DataError("cannot write metrics in " + out);
    metrics_out << dump << '\n';
    icmt::RunManifest manifest = data_manifest(
        {{"command", "eval"}, {"checkpoint", checkpoint}, {"N", n}}, data_dir,
        data, seed);
    manifest.timestamps["checkpoint"] = icmt::file_mtime_iso(checkpoint);
    icmt::write_manifest(out, manifest);
  }
}

void cmd_analyze_gradients(const std::string& checkpoint,
                           const std::string& data_dir, std::int64_t top_pairs,
                           const std::string& out) {
  const auto [params, seed] = icmt::load_checkpoint(checkpoint);
  const icmt::PreparedData data = icmt::read_split(data_dir);
  if (params.n_users() != data.ds.n_users ||
      params.n_items() != data.ds.n_items) {
    throw icmt::DataError("dimension mismatch between checkpoint and dataset");
  }
  icmt::NormalizedAdjacency adj_store;
  const icmt::NormalizedAdjacency* adj = nullptr;
  if (params.kind == icmt::ModelKind::lgc) {
    adj_store = icmt::build_adjacency(data.split.train, data.ds.n_users,
                                      data.ds.n_items);
    adj = &adj_store;
  }
  const auto pop = icmt::train_popularity(data.split, data.ds.n_items);
  const icmt::HeadTailPartition partition = icmt::partition_head_tail(pop);
  const icmt::GradientReport report =
      icmt::analyze_gradients(params, adj, data.split, partition, top_pairs);
  const std::string dump = report.to_json(pop).dump(2);
  if (out.empty()) {
    std::cout << dump << "\n";
  } else {
    fs::create_directories(out);
    std::ofstream report_out(fs::path(out) / "gradient_report.json");
    if (!report_out) throw icmt::DataError("cannot write report in " + out);
    report_out << dump << '\n';
    icmt::RunManifest manifest = data_manifest(
        {{"command", "analyze-gradients"},
         {"checkpoint", checkpoint},
         {"top_pairs", top_pairs}},
        data_dir, data, seed);
    manifest.timestamps["checkpoint"] = icmt::file_mtime_iso(checkpoint);
    icmt::write_manifest(out, manifest);
  }
}

void cmd_inspect_clusters(const std::string& checkpoint,
                          const std::string& data_dir, int n_clusters,
                          std::uint64_t seed, const std::string& out) {
  const auto [params, ckpt_seed] = icmt::load_checkpoint(checkpoint);
  const icmt::PreparedData data = icmt::read_split(data_dir);
  if (params.n_items() != data.ds.n_items) {
    throw icmt::DataError("dimension mismatch between checkpoint and dataset");
  }
  icmt::NormalizedAdjacency adj_store;
  const icmt::NormalizedAdjacency* adj = nullptr;
  if (params.kind == icmt::ModelKind::lgc) {
    adj_store = icmt::build_adjacency(data.split.train, data.ds.n_users,
                                      data.ds.n_items);
    adj = &adj_store;
  }
  const icmt::Representations reps = icmt::compute_representations(params, adj);
  const Eigen::MatrixXd points = icmt::clustering_embeddings(params, reps);
  const icmt::ClusterAssignment clusters =
      icmt::kmeans(points, n_clusters, seed);
  const auto pop = icmt::train_popularity(data.split, data.ds.n_items);
  const icmt::HeadTailPartition partition = icmt::partition_head_tail(pop);

  std::ofstream csv(out);
  if (!csv) throw icmt::DataError("cannot write cluster dump: " + out);
  csv << "item_id,cluster_id,popularity,head_or_tail\n";
  for (icmt::ItemId i = 0; i < data.ds.n_items; ++i) {
    csv << i << ',' << clusters.assign[static_cast<std::size_t>(i)] << ','
        << pop[static_cast<std::size_t>(i)] << ','
        << (partition.head(i) ? "head" : "tail") << '\n';
  }
}

void cmd_synth(std::int64_t users, std::int64_t items, double zipf,
               std::uint64_t seed, std::int64_t interactions,
               const std::string& out) {
  icmt::SynthConfig cfg;
  cfg.n_users = users;
  cfg.n_items = items;
  cfg.zipf_exponent = zipf;
  cfg.seed = seed;
  cfg.interactions = interactions;
  icmt::write_interactions(out, icmt::generate_synthetic(cfg));
  std::cout << "wrote synthetic log to " << out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ICMT long-tail recommendation training framework"};
  app.require_subcommand(1);

  // prepare
  std::string prep_input, prep_out;
  std::int64_t prep_min_core = 10;
  std::uint64_t prep_seed = 42;
  auto* prepare = app.add_subcommand(
      "prepare", "Load interactions, k-core filter, write 8:1:1 split");
  prepare->add_option("--input", prep_input, "interaction file")->required();
  prepare->add_option("--min-core", prep_min_core, "k-core threshold");
  prepare->add_option("--seed", prep_seed, "split seed");
  prepare->add_option("--out", prep_out, "output directory")->required();

  // train
  std::string train_config, train_data, train_out, train_pe_trace;
  auto* train = app.add_subcommand("train", "Train a model on a prepared split");
  train->add_option("--config", train_config, "training config JSON")->required();
  train->add_option("--data", train_data, "prepared data directory")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--pe-trace", train_pe_trace,
                    "append per-iteration PE-solver trace CSV");

  // eval
  std::string eval_checkpoint, eval_data, eval_out;
  std::int64_t eval_n = 20;
  auto* eval = app.add_subcommand("eval", "Top-N evaluation on the test split");
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval->add_option("--data", eval_data, "prepared data directory")->required();
  eval->add_option("--n", eval_n, "ranking cutoff");
  eval->add_option("--out", eval_out, "output directory (metrics + manifest)");

  // analyze-gradients
  std::string ag_checkpoint, ag_data, ag_out;
  std::int64_t ag_top_pairs = 10;
  auto* analyze = app.add_subcommand(
      "analyze-gradients", "Per-item gradient norms and head-tail conflicts");
  analyze->add_option("--checkpoint", ag_checkpoint, "checkpoint file")->required();
  analyze->add_option("--data", ag_data, "prepared data directory")->required();
  analyze->add_option("--top-pairs", ag_top_pairs,
                      "head/tail items per side for cosine pairs");
  analyze->add_option("--out", ag_out, "output directory");

  // inspect-clusters
  std::string ic_checkpoint, ic_data, ic_out;
  int ic_clusters = 2;
  std::uint64_t ic_seed = 42;
  auto* inspect = app.add_subcommand("inspect-clusters",
                                     "Dump item cluster assignments as CSV");
  inspect->add_option("--checkpoint", ic_checkpoint, "checkpoint file")->required();
  inspect->add_option("--data", ic_data, "prepared data directory")->required();
  inspect->add_option("--clusters", ic_clusters, "cluster count K");
  inspect->add_option("--seed", ic_seed, "k-means seed");
  inspect->add_option("--out", ic_out, "output CSV file")->required();

  // synth
  std::int64_t sy_users = 200, sy_items = 300, sy_interactions = 0;
  double sy_zipf = 1.2;
  std::uint64_t sy_seed = 42;
  std::string sy_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic Zipf log");
  synth->add_option("--users", sy_users, "user count");
  synth->add_option("--items", sy_items, "item count");
  synth->add_option("--zipf", sy_zipf, "Zipf exponent");
  synth->add_option("--seed", sy_seed, "generator seed");
  synth->add_option("--interactions", sy_interactions,
                    "total interactions (default 40 per user)");
  synth->add_option("--out", sy_out, "output file")->required();

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(prepare)) {
      cmd_prepare(prep_input, prep_min_core, prep_seed, prep_out);
    } else if (app.got_subcommand(train)) {
      cmd_train(train_config, train_data, train_out, train_pe_trace);
    } else if (app.got_subcommand(eval)) {
      cmd_eval(eval_checkpoint, eval_data, eval_n, eval_out);
    } else if (app.got_subcommand(analyze)) {
      cmd_analyze_gradients(ag_checkpoint, ag_data, ag_top_pairs, ag_out);
    } else if (app.got_subcommand(inspect)) {
      cmd_inspect_clusters(ic_checkpoint, ic_data, ic_clusters, ic_seed, ic_out);
    } else if (app.got_subcommand(synth)) {
      cmd_synth(sy_users, sy_items, sy_zipf, sy_seed, sy_interactions, sy_out);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const icmt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const icmt::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const icmt::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
