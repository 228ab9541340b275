/*
 * Copyright 2026 The serfuse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Every CLI run writes a manifest beside its primary output: the resolved
// configuration, seed, tool version and content digests of all input and
// output files. Manifests carry no timestamps, so identical runs produce
// byte-identical manifests.

#ifndef SERFUSE_MANIFEST_HPP_
#define SERFUSE_MANIFEST_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "serfuse/csv_io.hpp"
#include "serfuse/digest.hpp"
#include "serfuse/version.hpp"

namespace serfuse {

struct RunManifest {
  std::string subcommand;
  nlohmann::json config;  // fully resolved flags
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  auto digest_list = [](const std::vector<std::filesystem::path>& paths) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& path : paths) {
      arr.push_back({{"path", path.generic_string()},
                     {"fnv1a64", file_digest_hex(path)}});
    }
    return arr;
  };
  return nlohmann::json{
      {"tool", "serfuse"},
      {"version", kVersion},
      {"subcommand", m.subcommand},
      {"seed", m.seed},
      {"config", m.config},
      {"inputs", digest_list(m.inputs)},
      {"outputs", digest_list(m.outputs)},
  };
}

/// Default manifest location: "<primary output>.manifest.json".
inline std::filesystem::path default_manifest_path(
    const std::filesystem::path& primary_output) {
  std::filesystem::path p = primary_output;
  p += ".manifest.json";
  return p;
}

inline void write_manifest(const RunManifest& m,
                           const std::filesystem::path& path) {
  detail::write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

}  // namespace serfuse

#endif  // SERFUSE_MANIFEST_HPP_
