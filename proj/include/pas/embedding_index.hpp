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

#ifndef PAS_EMBEDDING_INDEX_HPP_
#define PAS_EMBEDDING_INDEX_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pas::index {

/// Immutable table of L2-normalized float rows keyed by unique string ids.
/// Copies share the underlying data.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  std::size_t dim() const { return data_ ? data_->dim : 0; }
  std::size_t size() const { return data_ ? data_->ids.size() : 0; }
  bool empty() const { return size() == 0; }
  const std::string& model_tag() const;
  const std::vector<std::string>& ids() const;
  const std::string& id(std::size_t row) const { return data_->ids[row]; }
  std::span<const float> row(std::size_t i) const {
    return {data_->values.data() + i * data_->dim, data_->dim};
  }
  std::span<const float> values() const;
  std::optional<std::size_t> find(std::string_view id) const;

  /// Sub-store over the given ids in the given order (rows copied verbatim,
  /// no renormalization).
  EmbeddingStore Select(std::span<const std::string> ids) const;

 private:
  struct Data {
    std::size_t dim = 0;
    std::vector<std::string> ids;
    std::vector<float> values;
    std::string model_tag;
    std::unordered_map<std::string, std::size_t> by_id;
  };
  explicit EmbeddingStore(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

  std::shared_ptr<const Data> data_;

  friend EmbeddingStore BuildStore(std::vector<std::string>, std::span<const float>, std::size_t,
                                   std::string);
  friend EmbeddingStore FromNormalized(std::vector<std::string>, std::vector<float>, std::size_t,
                                       std::string);
};

/// Normalizes each row of `raw` (row-major, `dim` columns) and builds a store.
/// Throws kDomain on zero-norm rows, duplicate ids or shape mismatch.
EmbeddingStore BuildStore(std::vector<std::string> ids, std::span<const float> raw,
                          std::size_t dim, std::string model_tag);

/// Wraps rows that are already unit-norm (within 1e-4); used by the loader.
EmbeddingStore FromNormalized(std::vector<std::string> ids, std::vector<float> values,
                              std::size_t dim, std::string model_tag);

/// u.v / (|u||v|) accumulated in double. Throws kDomain on zero vectors or
/// mismatched dimensions.
double CosineSimilarity(std::span<const float> u, std::span<const float> v);

/// Dot product of two equally sized float spans, accumulated in double.
double Dot(std::span<const float> a, std::span<const float> b);

struct Neighbor {
  std::string id;
  double similarity = 0.0;
};

struct NeighborList {
  std::string query_id;
  std::vector<Neighbor> neighbors;  // similarity desc, id asc on ties
};

/// Exact top-k by cosine similarity. `exclude` drops one id from the result.
NeighborList TopK(const EmbeddingStore& store, std::span<const float> query, std::size_t k,
                  std::optional<std::string_view> exclude = std::nullopt);

/// Top-k for a row that lives in the store; the row itself is excluded.
NeighborList TopKForRow(const EmbeddingStore& store, std::size_t row, std::size_t k);

struct Edge {
  std::size_t a = 0;  // row index, a < b
  std::size_t b = 0;
  double similarity = 0.0;
};

struct SimilarityGraph {
  std::vector<std::string> nodes;
  std::vector<Edge> edges;  // sorted by (a, b)
  double threshold = 0.0;
  std::size_t k = 0;
};

/// Per node, edges to its k nearest neighbours whose similarity strictly
/// exceeds `threshold`; an edge survives if either endpoint proposed it.
/// For n <= k + 1 this is the dense thresholded adjacency.
SimilarityGraph KnnGraph(const EmbeddingStore& store, std::size_t k, double threshold);

/// Connected components as row-index lists; members ascending by id, list
/// sorted by smallest member id.
std::vector<std::vector<std::size_t>> ConnectedComponentIndices(const SimilarityGraph& graph);

/// Same partition, materialized as id lists.
std::vector<std::vector<std::string>> ConnectedComponents(const SimilarityGraph& graph);

// Binary layout: "PASEMB1\0", u32 dim, u64 count, count*dim little-endian
// f32. Ids live in `<path>.ids` (one per line), model tag in `<path>.meta.json`.
void SaveStore(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore LoadStore(const std::filesystem::path& path);

/// Reads just the matrix of a PASEMB1 file without the norm check.
struct RawMatrix {
  std::size_t dim = 0;
  std::size_t count = 0;
  std::vector<float> values;
};
RawMatrix ReadMatrix(const std::filesystem::path& path);
void WriteMatrix(const std::filesystem::path& path, std::size_t dim, std::span<const float> values);

std::vector<std::string> ReadIds(const std::filesystem::path& path);

}  // namespace pas::index

#endif  // PAS_EMBEDDING_INDEX_HPP_
