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

#ifndef PAS_CURATION_HPP_
#define PAS_CURATION_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pas/acquisition.hpp"
#include "pas/embedding_index.hpp"
#include "pas/model_gateway.hpp"

namespace pas::curation {

using acquisition::ImageRecord;

// ---------------------------------------------------------------------------
// Deduplication

struct DedupConfig {
  double lambda_dup = 0.6;
  std::size_t k = 64;
  std::int64_t rng_seed = 0;
};

std::vector<std::string> Violations(const DedupConfig& config);

struct DedupResult {
  std::vector<ImageRecord> kept;     // input order
  std::vector<ImageRecord> removed;  // input order
  std::map<std::string, std::string> representative;  // member id -> kept id, multi-member only
  std::map<std::size_t, std::size_t> component_sizes;  // size -> count, multi-member only
};

/// Keeps one uniformly chosen member of every connected component of the
/// copy-detection similarity graph. Throws kIntegrity listing records
/// missing from `copy_store`.
DedupResult Dedup(const std::vector<ImageRecord>& records, const index::EmbeddingStore& copy_store,
                  const DedupConfig& config);

/// Index in [0, size) of the representative kept for a component whose
/// smallest id is `smallest_id`.
std::size_t PickRepresentative(std::int64_t rng_seed, std::string_view smallest_id,
                               std::size_t size);

// ---------------------------------------------------------------------------
// Leak filtering

struct LeakFilterConfig {
  double threshold = 0.45;
  std::size_t k = 32;
};

std::vector<std::string> Violations(const LeakFilterConfig& config);

struct LeakResult {
  std::vector<ImageRecord> kept;
  std::vector<ImageRecord> removed;
  std::map<std::string, double> max_similarity;  // removed id -> similarity
  std::vector<std::string> warnings;
};

/// Removes records whose best match in `protected_store` is strictly above
/// the threshold.
LeakResult LeakFilter(const std::vector<ImageRecord>& records,
                      const index::EmbeddingStore& copy_store,
                      const index::EmbeddingStore& protected_store,
                      const LeakFilterConfig& config);

// ---------------------------------------------------------------------------
// OOD assessment

/// 1 - sum_c (1 - p_no[c]) * p[c]. Throws kDomain on malformed rows.
double OodScore(std::span<const double> p, std::span<const double> p_no);

struct OODTriple {
  std::string image_id;
  double ood_primary = 0.0;
  double ood_general = 0.0;
  double ood_text_delta = 0.0;

  friend bool operator==(const OODTriple&, const OODTriple&) = default;
};

/// `blurred` is given only for images with detected text; otherwise the
/// text delta is exactly zero.
OODTriple MakeTriple(std::string image_id, const gateway::OODProbRow& bank,
                     const gateway::OODProbRow& general,
                     const std::optional<gateway::OODProbRow>& blurred);

/// a is removed before b: a >= b on every metric and > on at least one.
bool ParetoDominates(const OODTriple& a, const OODTriple& b);

struct ParetoAssignment {
  std::vector<std::vector<std::string>> fronts;  // front 0 first, ids ascending
  std::map<std::string, std::size_t> front_of;

  std::size_t size() const { return front_of.size(); }
};

ParetoAssignment PeelFronts(std::span<const OODTriple> triples);

/// Knee of the curve (xs strictly increasing) or nullopt. Direction and
/// concavity are detected from the data.
std::optional<double> Kneedle(std::span<const double> xs, std::span<const double> ys,
                              double sensitivity = 1.0);

enum class Metric { kPrimary = 0, kGeneral = 1, kTextDelta = 2 };
double MetricValue(const OODTriple& t, Metric m);
std::string_view ToString(Metric m);

struct HaltDecision {
  std::optional<std::size_t> halt_front;  // fronts 0..halt_front are removed
  std::optional<double> halt_x;
  std::array<std::optional<double>, 3> knees;
  std::vector<double> cumulative;  // x axis of the curves
  std::vector<std::string> warnings;
};

HaltDecision SelectHalt(const ParetoAssignment& assignment, std::span<const OODTriple> triples,
                        double sensitivity = 1.0);

/// Removes whole fronts in order, then trims the last touched front by
/// descending ood_primary (ties: id ascending) until exactly `target` remain.
/// Output keeps the input order.
std::vector<ImageRecord> PruneToSize(const ParetoAssignment& assignment,
                                     const std::vector<ImageRecord>& records,
                                     std::span<const OODTriple> triples, std::size_t target);

/// Records not in fronts 0..halt_front, input order.
std::vector<ImageRecord> RemoveFronts(const ParetoAssignment& assignment,
                                      const std::vector<ImageRecord>& records,
                                      std::optional<std::size_t> halt_front);

/// Queries the OOD provider for the bank, the general bank and (for images
/// with text) the blurred bank; returns triples in record order.
std::vector<OODTriple> ScoreRecords(const std::vector<ImageRecord>& records,
                                    const std::vector<std::string>& bank,
                                    const std::vector<std::string>& general_bank,
                                    gateway::OodProvider& provider, std::size_t batch_size);

// ---------------------------------------------------------------------------
// Report

struct StageCounts {
  std::size_t real = 0;
  std::size_t synthetic = 0;
  std::size_t total() const { return real + synthetic; }
};

StageCounts CountBySource(const std::vector<ImageRecord>& records);

struct CurationReport {
  StageCounts raw;
  StageCounts after_dedup;
  StageCounts after_leak;
  StageCounts after_pareto;
  std::size_t removed_dedup = 0;
  std::size_t removed_leak = 0;
  std::size_t removed_pareto = 0;
  std::size_t retained = 0;
  std::map<std::size_t, std::size_t> duplicate_component_sizes;
  std::size_t fronts = 0;
  std::array<std::optional<double>, 3> knees;
  std::optional<std::size_t> halt_front;
  std::string halt_mode = "none";  // "kneedle" | "target_size" | "none"
  std::optional<std::size_t> target_size;
  std::vector<std::string> warnings;
};

/// Accounting errors; empty when the counts reconcile.
std::vector<std::string> TelescopeViolations(const CurationReport& report);

nlohmann::json ToJson(const CurationReport& report);
CurationReport ReportFromJson(const nlohmann::json& j);

// Scores file: one {image_id, ood_primary, ood_general, ood_text_delta, front}
// object per line.
void WriteScores(const std::filesystem::path& path, std::span<const OODTriple> triples,
                 const ParetoAssignment& assignment);
struct ScoreTable {
  std::vector<OODTriple> triples;
  ParetoAssignment assignment;
};
ScoreTable ReadScores(const std::filesystem::path& path);

}  // namespace pas::curation

#endif  // PAS_CURATION_HPP_
