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

#include <sys/stat.h>

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "icmt/dataset.hpp"
#include "icmt/errors.hpp"

namespace icmt {

inline constexpr const char* kVersion = "icmt 0.1.0";

/// FNV-1a over raw file bytes, hex encoded.
inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file for hashing: " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

/// ISO-8601 UTC of a file's mtime. Reruns with untouched inputs reproduce the
/// same string, which keeps manifests byte-stable.
inline std::string file_mtime_iso(const std::string& path) {
  struct stat st{};
  if (::stat(path.c_str(), &st) != 0) {
    throw DataError("cannot stat file: " + path);
  }
  std::tm tm_utc{};
  gmtime_r(&st.st_mtime, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

/// Per-run provenance record; one per output directory.
struct RunManifest {
  nlohmann::json config;
  std::string dataset_fingerprint;  // "<interaction count>:<content hash>"
  std::uint64_t seed = 0;
  std::string version = kVersion;
  nlohmann::json timestamps;  // input mtimes

  nlohmann::json to_json() const {
    return nlohmann::json{{"config", config},
                          {"dataset_fingerprint", dataset_fingerprint},
                          {"seed", seed},
                          {"version", version},
                          {"timestamps", timestamps}};
  }
};

inline void write_manifest(const std::filesystem::path& dir,
                           const RunManifest& manifest) {
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write manifest in " + dir.string());
  out << manifest.to_json().dump(2) << '\n';
}

inline std::string dataset_fingerprint(const std::string& path,
                                       std::int64_t interaction_count) {
  return std::to_string(interaction_count) + ":" + hash_file(path);
}

// --- split manifest ----------------------------------------------------------

namespace detail {

inline void write_pairs(const std::filesystem::path& path,
                        const std::vector<Interaction>& pairs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write split file: " + path.string());
  for (const auto& [u, i] : pairs) out << u << ',' << i << '\n';
}

inline std::vector<Interaction> read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read split file: " + path.string());
  std::vector<Interaction> pairs;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed split record");
    }
    pairs.emplace_back(std::stoll(line.substr(0, comma)),
                       std::stoll(line.substr(comma + 1)));
  }
  return pairs;
}

}  // namespace detail

/// Writes train.txt / validation.txt / test.txt plus header.json
/// {seed, ratios, n_users, n_items}.
inline void write_split(const std::filesystem::path& dir, const DataSplit& split,
                        std::int64_t n_users, std::int64_t n_items) {
  std::filesystem::create_directories(dir);
  detail::write_pairs(dir / "train.txt", split.train);
  detail::write_pairs(dir / "validation.txt", split.validation);
  detail::write_pairs(dir / "test.txt", split.test);
  std::ofstream out(dir / "header.json");
  if (!out) throw DataError("cannot write split header in " + dir.string());
  nlohmann::json header{
      {"seed", split.seed},
      {"ratios", {split.ratios[0], split.ratios[1], split.ratios[2]}},
      {"n_users", n_users},
      {"n_items", n_items}};
  out << header.dump(2) << '\n';
}

struct PreparedData {
  InteractionDataset ds;  // union of all three splits
  DataSplit split;
};

inline PreparedData read_split(const std::filesystem::path& dir) {
  std::ifstream in(dir / "header.json");
  if (!in) throw DataError("cannot read split header in " + dir.string());
  nlohmann::json header;
  try {
    in >> header;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad split header: ") + e.what());
  }
  PreparedData data;
  data.split.seed = header.at("seed").get<std::uint64_t>();
  const auto ratios = header.at("ratios");
  for (std::size_t k = 0; k < 3; ++k) data.split.ratios[k] = ratios.at(k).get<double>();
  data.split.train = detail::read_pairs(dir / "train.txt");
  data.split.validation = detail::read_pairs(dir / "validation.txt");
  data.split.test = detail::read_pairs(dir / "test.txt");
  std::vector<Interaction> all = data.split.train;
  all.insert(all.end(), data.split.validation.begin(), data.split.validation.end());
  all.insert(all.end(), data.split.test.begin(), data.split.test.end());
  data.ds = make_dataset(std::move(all), header.at("n_users").get<std::int64_t>(),
                         header.at("n_items").get<std::int64_t>());
  return data;
}

}  // namespace icmt
