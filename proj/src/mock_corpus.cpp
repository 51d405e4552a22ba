// Copyright (c) 2026 The pas Authors. All Rights Reserved
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "pas/embedding_index.hpp"
#include "pas/error.hpp"
#include "pas/io.hpp"
#include "pas/pipeline.hpp"

namespace pas::pipeline {

namespace {

using Json = nlohmann::json;

std::vector<float> Unit(std::vector<float> v) {
  double norm = 0.0;
  for (float x : v) norm += static_cast<double>(x) * x;
  norm = std::sqrt(norm);
  for (auto& x : v) x = static_cast<float>(x / norm);
  return v;
}

// unit(base) + scale * unit(noise), renormalized.
std::vector<float> Near(const std::vector<float>& base, std::string_view noise_key, double scale) {
  auto b = Unit(base);
  auto n = Unit(gateway::HashVector(noise_key, b.size()));
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<float>(b[i] + scale * n[i]);
  return Unit(std::move(b));
}

struct Table {
  std::vector<std::string> ids;
  std::vector<float> values;
  void Add(std::string id, const std::vector<float>& v) {
    ids.push_back(std::move(id));
    values.insert(values.end(), v.begin(), v.end());
  }
};

}  // namespace

MockCorpusInfo BuildMockCorpus(const std::filesystem::path& dir, const MockCorpusOptions& o) {
  if (o.images_per_concept < 3) throw Error(ErrorKind::kDomain, "images_per_concept must be >= 3");
  if (o.planted_leaks > o.protected_count) {
    throw Error(ErrorKind::kDomain, "planted_leaks exceeds protected_count");
  }
  std::filesystem::create_directories(dir);
  gateway::SyntheticDomainOptions chat_options;
  chat_options.vocabulary_size = o.vocabulary_size;
  gateway::SyntheticDomainChat world("corpus", chat_options);
  const std::string salt = std::to_string(o.seed);

  MockCorpusInfo info;
  Table images;
  Table copies;
  std::map<std::string, std::vector<float>> copy_of;

  auto copy_vector = [&](const std::string& uri) {
    auto v = Unit(gateway::HashVector("copy:" + salt + ":" + uri, o.copy_dim));
    copy_of[uri] = v;
    return v;
  };

  const auto& names = world.vocabulary();
  for (std::size_t c = 0; c < names.size(); ++c) {
    const auto concept_vec = gateway::HashVector(gateway::AsciiLower(names[c]), o.text_dim);
    std::string previous;
    for (std::size_t j = 0; j < o.images_per_concept; ++j) {
      const std::string uri = "mock://real/c" + std::to_string(c) + "/" + std::to_string(j) + ".jpg";
      images.Add(uri, Near(concept_vec, "plant:" + salt + ":" + uri, 0.6));
      // Every tenth image (offset 1) is a near copy of its predecessor.
      if (j % 10 == 1) {
        auto v = Near(copy_of.at(previous), "dup:" + salt + ":" + uri, 0.3);
        copy_of[uri] = v;
        copies.Add(uri, v);
        ++info.planted_duplicates;
      } else {
        copies.Add(uri, copy_vector(uri));
      }
      previous = uri;
    }
  }
  for (std::size_t j = 0; j < o.background; ++j) {
    const std::string uri = "mock://real/bg/" + std::to_string(j) + ".jpg";
    images.Add(uri, Unit(gateway::HashVector("bg:" + salt + ":" + uri, o.text_dim)));
    copies.Add(uri, copy_vector(uri));
  }

  Table protected_vectors;
  for (std::size_t k = 0; k < o.protected_count; ++k) {
    const std::string id = "test/" + std::to_string(k);
    if (k < o.planted_leaks && !names.empty()) {
      const std::string target = "mock://real/c" + std::to_string(k % names.size()) + "/" +
                                 std::to_string(2 + k / names.size()) + ".jpg";
      protected_vectors.Add(id, Near(copy_of.at(target), "leak:" + salt + ":" + id, 0.3));
      ++info.planted_leaks;
    } else {
      protected_vectors.Add(id, Unit(gateway::HashVector("protected:" + salt + ":" + id, o.copy_dim)));
    }
  }

  MockSettings mock;
  index::SaveStore(index::BuildStore(images.ids, images.values, o.text_dim, mock.text_model_tag),
                   dir / "images.emb");
  index::SaveStore(index::BuildStore(copies.ids, copies.values, o.copy_dim, mock.copy_model_tag),
                   dir / "copy.emb");
  index::SaveStore(index::BuildStore(protected_vectors.ids, protected_vectors.values, o.copy_dim,
                                     mock.copy_model_tag),
                   dir / "protected.emb");
  info.retrieval_vectors = images.ids.size();

  auto endpoint = [](const char* url, const char* model) {
    return Json{{"base_url", url}, {"model", model}, {"api_key", "${PAS_API_KEY}"}};
  };
  Json config = {
      {"domain", {{"name", "synthetic landscapes"}, {"description", "landscape feature types"}}},
      {"base_seed", o.seed},
      {"acquisition", {{"per_concept_real", o.images_per_concept}, {"n_cap", 2}, {"n_synth", 4}}},
      {"paths",
       {{"workspace", "workspace"},
        {"image_store", "images.emb"},
        {"copy_store", "copy.emb"},
        {"protected_stores", {"protected.emb"}}}},
      {"providers",
       {{"chat", endpoint("http://127.0.0.1:8000", "generator-model")},
        {"validator", endpoint("http://127.0.0.1:8000", "validator-model")},
        {"text_embed", endpoint("http://127.0.0.1:8001", mock.text_model_tag.c_str())},
        {"image_embed", endpoint("http://127.0.0.1:8001", mock.copy_model_tag.c_str())},
        {"image_gen", endpoint("http://127.0.0.1:8002", "image-model")},
        {"ood_prob", endpoint("http://127.0.0.1:8003", "ood-model")}}},
      {"mock",
       {{"vocabulary_size", o.vocabulary_size},
        {"text_dim", o.text_dim},
        {"copy_dim", o.copy_dim},
        {"text_model_tag", mock.text_model_tag},
        {"copy_model_tag", mock.copy_model_tag}}}};
  info.config = dir / "config.json";
  io::AtomicWrite(info.config, io::DumpPretty(config));
  return info;
}

}  // namespace pas::pipeline
