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

#include "pas/embedding_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "pas/error.hpp"
#include "pas/io.hpp"
#include "pas/parallel.hpp"

namespace pas::index {

namespace {

constexpr char kMagic[8] = {'P', 'A', 'S', 'E', 'M', 'B', '1', '\0'};
constexpr std::size_t kHeaderSize = 8 + 4 + 8;
constexpr double kNormTolerance = 1e-4;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void PutLe(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

template <typename T>
T GetLe(const unsigned char* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(p[i]) << (8 * i);
  return value;
}


// Ranking used everywhere: similarity descending, id ascending on ties.
struct RankOrder {
  const std::vector<double>& sims;
  const std::vector<std::string>& ids;
  bool operator()(std::size_t a, std::size_t b) const {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return ids[a] < ids[b];
  }
};

std::vector<std::size_t> SelectTop(std::vector<std::size_t> candidates, std::size_t k,
                                   const RankOrder& order) {
  if (candidates.size() > k) {
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                      candidates.end(), order);
    candidates.resize(k);
  } else {
    std::sort(candidates.begin(), candidates.end(), order);
  }
  return candidates;
}

double ClampUnit(double x) { return std::clamp(x, -1.0, 1.0); }

}  // namespace

const std::string& EmbeddingStore::model_tag() const {
  static const std::string kEmpty;
  return data_ ? data_->model_tag : kEmpty;
}

const std::vector<std::string>& EmbeddingStore::ids() const {
  static const std::vector<std::string> kEmpty;
  return data_ ? data_->ids : kEmpty;
}

std::span<const float> EmbeddingStore::values() const {
  if (!data_) return {};
  return data_->values;
}

std::optional<std::size_t> EmbeddingStore::find(std::string_view id) const {
  if (!data_) return std::nullopt;
  auto it = data_->by_id.find(std::string(id));
  if (it == data_->by_id.end()) return std::nullopt;
  return it->second;
}

EmbeddingStore EmbeddingStore::Select(std::span<const std::string> ids) const {
  std::vector<float> values;
  values.reserve(ids.size() * dim());
  for (const auto& id : ids) {
    auto row_index = find(id);
    if (!row_index) throw Error(ErrorKind::kIntegrity, "id not in store: " + id);
    auto r = row(*row_index);
    values.insert(values.end(), r.begin(), r.end());
  }
  return FromNormalized({ids.begin(), ids.end()}, std::move(values), dim(), model_tag());
}

double Dot(std::span<const float> a, std::span<const float> b) {
  // Four independent accumulators in a fixed order: deterministic, symmetric
  // in (a, b), and roughly 4x faster than a single dependency chain.
  const std::size_t n = a.size();
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += static_cast<double>(a[i]) * b[i];
    s1 += static_cast<double>(a[i + 1]) * b[i + 1];
    s2 += static_cast<double>(a[i + 2]) * b[i + 2];
    s3 += static_cast<double>(a[i + 3]) * b[i + 3];
  }
  for (; i < n; ++i) s0 += static_cast<double>(a[i]) * b[i];
  return (s0 + s1) + (s2 + s3);
}

double CosineSimilarity(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::kDomain, "dimension mismatch " + std::to_string(u.size()) + " vs " +
                                        std::to_string(v.size()));
  }
  const double uu = Dot(u, u);
  const double vv = Dot(v, v);
  if (uu == 0.0 || vv == 0.0) throw Error(ErrorKind::kDomain, "cosine of a zero vector");
  return ClampUnit(Dot(u, v) / (std::sqrt(uu) * std::sqrt(vv)));
}

EmbeddingStore FromNormalized(std::vector<std::string> ids, std::vector<float> values,
                              std::size_t dim, std::string model_tag) {
  if (dim == 0) throw Error(ErrorKind::kDomain, "store dimension must be positive");
  if (values.size() != ids.size() * dim) {
    throw Error(ErrorKind::kDomain, "expected " + std::to_string(ids.size() * dim) +
                                        " values, got " + std::to_string(values.size()));
  }
  auto data = std::make_shared<EmbeddingStore::Data>();
  data->by_id.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!data->by_id.emplace(ids[i], i).second) {
      throw Error(ErrorKind::kDomain, "duplicate id: " + ids[i]);
    }
    std::span<const float> r(values.data() + i * dim, dim);
    const double norm = std::sqrt(Dot(r, r));
    if (std::abs(norm - 1.0) > kNormTolerance) {
      throw Error(ErrorKind::kDomain, "row " + std::to_string(i) + " (" + ids[i] +
                                          ") is not unit-norm: " + std::to_string(norm));
    }
  }
  data->dim = dim;
  data->ids = std::move(ids);
  data->values = std::move(values);
  data->model_tag = std::move(model_tag);
  return EmbeddingStore(std::move(data));
}

EmbeddingStore BuildStore(std::vector<std::string> ids, std::span<const float> raw,
                          std::size_t dim, std::string model_tag) {
  if (dim == 0) throw Error(ErrorKind::kDomain, "store dimension must be positive");
  if (raw.size() != ids.size() * dim) {
    throw Error(ErrorKind::kDomain, "raw matrix has " + std::to_string(raw.size()) +
                                        " values, expected " + std::to_string(ids.size() * dim));
  }
  std::vector<float> values(raw.begin(), raw.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::span<float> r(values.data() + i * dim, dim);
    const double norm = std::sqrt(Dot(r, r));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorKind::kDomain, "zero-norm or non-finite row for id " + ids[i]);
    }
    for (auto& x : r) x = static_cast<float>(x / norm);
  }
  return FromNormalized(std::move(ids), std::move(values), dim, std::move(model_tag));
}

NeighborList TopK(const EmbeddingStore& store, std::span<const float> query, std::size_t k,
                  std::optional<std::string_view> exclude) {
  if (store.empty()) throw Error(ErrorKind::kEmptyStore, "top-k on an empty store");
  if (query.size() != store.dim()) {
    throw Error(ErrorKind::kDomain, "query dimension " + std::to_string(query.size()) +
                                        " != store dimension " + std::to_string(store.dim()));
  }
  const double qnorm = std::sqrt(Dot(query, query));
  if (qnorm == 0.0) throw Error(ErrorKind::kDomain, "zero query vector");

  const auto& ids = store.ids();
  std::vector<double> sims(store.size());
  std::vector<std::size_t> candidates;
  candidates.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    sims[i] = ClampUnit(Dot(store.row(i), query) / qnorm);
    if (exclude && ids[i] == *exclude) continue;
    candidates.push_back(i);
  }
  NeighborList out;
  if (exclude) out.query_id = std::string(*exclude);
  for (auto i : SelectTop(std::move(candidates), k, RankOrder{sims, ids})) {
    out.neighbors.push_back({ids[i], sims[i]});
  }
  return out;
}

NeighborList TopKForRow(const EmbeddingStore& store, std::size_t row, std::size_t k) {
  return TopK(store, store.row(row), k, store.id(row));
}

SimilarityGraph KnnGraph(const EmbeddingStore& store, std::size_t k, double threshold) {
  if (store.empty()) throw Error(ErrorKind::kEmptyStore, "k-NN graph on an empty store");
  const std::size_t n = store.size();
  const auto& ids = store.ids();

  // Each worker proposes edges for a contiguous block of rows.
  const std::size_t workers = DefaultWorkers();
  const std::size_t block = (n + workers - 1) / workers;
  auto proposals = ParallelMap(workers, workers, [&](std::size_t w) {
    std::vector<Edge> edges;
    std::vector<double> sims(n);
    std::vector<std::size_t> above;
    const std::size_t begin = w * block;
    const std::size_t end = std::min(n, begin + block);
    for (std::size_t i = begin; i < end; ++i) {
      above.clear();
      auto ri = store.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        sims[j] = ClampUnit(Dot(ri, store.row(j)));
        if (sims[j] > threshold) above.push_back(j);
      }
      // Top-k restricted to above-threshold rows equals the above-threshold
      // part of the unrestricted top-k.
      for (auto j : SelectTop(std::move(above), k, RankOrder{sims, ids})) {
        edges.push_back({std::min(i, j), std::max(i, j), sims[j]});
      }
      above = {};
    }
    return edges;
  });

  SimilarityGraph graph;
  graph.nodes = ids;
  graph.threshold = threshold;
  graph.k = k;
  for (auto& part : proposals) {
    graph.edges.insert(graph.edges.end(), part.begin(), part.end());
  }
  std::sort(graph.edges.begin(), graph.edges.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  graph.edges.erase(std::unique(graph.edges.begin(), graph.edges.end(),
                                [](const Edge& x, const Edge& y) { return x.a == y.a && x.b == y.b; }),
                    graph.edges.end());
  return graph;
}

std::vector<std::vector<std::size_t>> ConnectedComponentIndices(const SimilarityGraph& graph) {
  const std::size_t n = graph.nodes.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& e : graph.edges) {
    auto ra = find(e.a);
    auto rb = find(e.b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::vector<std::size_t>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);

  std::vector<std::vector<std::size_t>> components;
  for (auto& g : groups) {
    if (g.empty()) continue;
    std::sort(g.begin(), g.end(),
              [&](std::size_t a, std::size_t b) { return graph.nodes[a] < graph.nodes[b]; });
    components.push_back(std::move(g));
  }
  std::sort(components.begin(), components.end(), [&](const auto& a, const auto& b) {
    return graph.nodes[a.front()] < graph.nodes[b.front()];
  });
  return components;
}

std::vector<std::vector<std::string>> ConnectedComponents(const SimilarityGraph& graph) {
  std::vector<std::vector<std::string>> out;
  for (const auto& comp : ConnectedComponentIndices(graph)) {
    auto& ids = out.emplace_back();
    for (auto i : comp) ids.push_back(graph.nodes[i]);
  }
  return out;
}

void WriteMatrix(const std::filesystem::path& path, std::size_t dim, std::span<const float> values) {
  if ((dim == 0 && !values.empty()) || (dim != 0 && values.size() % dim != 0)) {
    throw Error(ErrorKind::kDomain, "matrix shape does not match dimension");
  }
  std::string out(kMagic, sizeof(kMagic));
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  PutLe<std::uint64_t>(out, dim == 0 ? 0 : values.size() / dim);
  out.reserve(out.size() + values.size() * 4);
  for (float v : values) PutLe<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  io::AtomicWrite(path, out);
}

RawMatrix ReadMatrix(const std::filesystem::path& path) {
  const std::string bytes = io::ReadFile(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::string name = path.string();
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::kFormat, name + ": bad magic at offset 0");
  }
  if (bytes.size() < kHeaderSize) {
    throw Error(ErrorKind::kFormat, name + ": truncated header at offset " +
                                        std::to_string(bytes.size()));
  }
  RawMatrix m;
  m.dim = GetLe<std::uint32_t>(p + 8);
  m.count = GetLe<std::uint64_t>(p + 12);
  if (m.dim == 0) {
    // An empty store is the only valid zero-dimension file.
    if (m.count != 0 || bytes.size() != kHeaderSize) {
      throw Error(ErrorKind::kFormat, name + ": zero dimension at offset 8");
    }
    return m;
  }
  const std::size_t row_bytes = m.dim * 4;
  const std::size_t payload = bytes.size() - kHeaderSize;
  if (payload / row_bytes < m.count) {
    const std::size_t row = payload / row_bytes;
    throw Error(ErrorKind::kFormat, name + ": truncated in row " + std::to_string(row) +
                                        " at offset " + std::to_string(bytes.size()) +
                                        " (expected " + std::to_string(m.count) + " rows)");
  }
  if (payload != m.count * row_bytes) {
    throw Error(ErrorKind::kFormat, name + ": trailing bytes at offset " +
                                        std::to_string(kHeaderSize + m.count * row_bytes));
  }
  m.values.resize(m.count * m.dim);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    m.values[i] = std::bit_cast<float>(GetLe<std::uint32_t>(p + kHeaderSize + 4 * i));
  }
  return m;
}

std::vector<std::string> ReadIds(const std::filesystem::path& path) {
  std::vector<std::string> ids;
  const std::string text = io::ReadFile(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ids.push_back(std::move(line));
    pos = end + 1;
  }
  return ids;
}

void SaveStore(const EmbeddingStore& store, const std::filesystem::path& path) {
  WriteMatrix(path, store.dim(), store.values());
  std::string ids;
  for (const auto& id : store.ids()) {
    ids += id;
    ids.push_back('\n');
  }
  io::AtomicWrite(path.string() + ".ids", ids);
  io::AtomicWrite(path.string() + ".meta.json",
                  io::DumpPretty(nlohmann::json{{"model_tag", store.model_tag()}}));
}

EmbeddingStore LoadStore(const std::filesystem::path& path) {
  RawMatrix m = ReadMatrix(path);
  auto ids = ReadIds(path.string() + ".ids");
  if (m.count == 0 && ids.empty()) return {};
  if (ids.size() != m.count) {
    throw Error(ErrorKind::kFormat, path.string() + ": ids file has " + std::to_string(ids.size()) +
                                        " lines for " + std::to_string(m.count) + " rows");
  }
  std::string tag;
  const std::filesystem::path meta = path.string() + ".meta.json";
  if (std::filesystem::exists(meta)) {
    tag = nlohmann::json::parse(io::ReadFile(meta)).value("model_tag", "");
  }
  for (std::size_t i = 0; i < m.count; ++i) {
    std::span<const float> r(m.values.data() + i * m.dim, m.dim);
    const double norm = std::sqrt(Dot(r, r));
    if (std::abs(norm - 1.0) > kNormTolerance) {
      throw Error(ErrorKind::kFormat, path.string() + ": row " + std::to_string(i) +
                                          " at offset " +
                                          std::to_string(kHeaderSize + i * m.dim * 4) +
                                          " is not unit-norm");
    }
  }
  try {
    return FromNormalized(std::move(ids), std::move(m.values), m.dim, std::move(tag));
  } catch (const Error& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

}  // namespace pas::index
