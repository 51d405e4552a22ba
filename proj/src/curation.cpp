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

#include "pas/curation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "pas/error.hpp"
#include "pas/hashing.hpp"
#include "pas/io.hpp"
#include "pas/log.hpp"
#include "pas/parallel.hpp"

namespace pas::curation {

using Json = nlohmann::json;

namespace {

std::vector<std::size_t> RowsFor(const std::vector<ImageRecord>& records,
                                 const index::EmbeddingStore& store, std::string_view what) {
  std::vector<std::size_t> rows;
  rows.reserve(records.size());
  std::vector<std::string> missing;
  for (const auto& r : records) {
    auto row = store.find(r.id);
    if (!row) {
      missing.push_back(r.id);
    } else {
      rows.push_back(*row);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 20) list += ", ...";
    throw Error(ErrorKind::kIntegrity, std::to_string(missing.size()) + " records missing from " +
                                           std::string(what) + ": " + list);
  }
  return rows;
}

}  // namespace

std::vector<std::string> Violations(const DedupConfig& config) {
  std::vector<std::string> out;
  if (!(config.lambda_dup > 0.0 && config.lambda_dup < 1.0)) {
    out.push_back("lambda_dup outside (0,1)");
  }
  if (config.k < 1) out.push_back("dedup k must be >= 1");
  return out;
}

std::vector<std::string> Violations(const LeakFilterConfig& config) {
  std::vector<std::string> out;
  if (!(config.threshold > 0.0 && config.threshold < 1.0)) {
    out.push_back("leak threshold outside (0,1)");
  }
  if (config.k < 1) out.push_back("leak k must be >= 1");
  return out;
}

std::size_t PickRepresentative(std::int64_t rng_seed, std::string_view smallest_id,
                               std::size_t size) {
  if (size == 0) throw Error(ErrorKind::kDomain, "empty component");
  std::mt19937_64 engine(HashFields({"dedup", std::to_string(rng_seed), smallest_id}));
  const std::uint64_t n = size;
  const std::uint64_t reject_below = (0 - n) % n;  // 2^64 mod n
  std::uint64_t r = engine();
  while (r < reject_below) r = engine();
  return static_cast<std::size_t>(r % n);
}

DedupResult Dedup(const std::vector<ImageRecord>& records, const index::EmbeddingStore& copy_store,
                  const DedupConfig& config) {
  if (auto v = Violations(config); !v.empty()) throw Error(ErrorKind::kDomain, v.front());
  RowsFor(records, copy_store, "the copy-detection store");
  DedupResult result;
  if (records.empty()) return result;

  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.id);
  const auto sub = copy_store.Select(ids);
  const auto graph = index::KnnGraph(sub, config.k, config.lambda_dup);

  std::vector<bool> keep(records.size(), true);
  for (const auto& members : index::ConnectedComponentIndices(graph)) {
    if (members.size() < 2) continue;
    ++result.component_sizes[members.size()];
    const std::string& smallest = ids[members.front()];
    const std::size_t chosen = members[PickRepresentative(config.rng_seed, smallest,
                                                          members.size())];
    for (auto m : members) {
      result.representative[ids[m]] = ids[chosen];
      if (m != chosen) keep[m] = false;
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    (keep[i] ? result.kept : result.removed).push_back(records[i]);
  }
  return result;
}

LeakResult LeakFilter(const std::vector<ImageRecord>& records,
                      const index::EmbeddingStore& copy_store,
                      const index::EmbeddingStore& protected_store,
                      const LeakFilterConfig& config) {
  if (auto v = Violations(config); !v.empty()) throw Error(ErrorKind::kDomain, v.front());
  LeakResult result;
  if (protected_store.empty()) {
    result.warnings.push_back("protected store is empty; leak filter skipped");
    Log()->warn("{}", result.warnings.back());
    result.kept = records;
    return result;
  }
  if (copy_store.dim() != protected_store.dim() && !records.empty()) {
    throw Error(ErrorKind::kDomain, "protected store dimension " +
                                        std::to_string(protected_store.dim()) +
                                        " differs from copy store dimension " +
                                        std::to_string(copy_store.dim()));
  }
  const auto rows = RowsFor(records, copy_store, "the copy-detection store");
  const std::size_t k = std::min(config.k, protected_store.size());
  auto best = ParallelMap(records.size(), DefaultWorkers(), [&](std::size_t i) {
    auto hits = index::TopK(protected_store, copy_store.row(rows[i]), k);
    return hits.neighbors.empty() ? -1.0 : hits.neighbors.front().similarity;
  });
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (best[i] > config.threshold) {
      result.max_similarity[records[i].id] = best[i];
      result.removed.push_back(records[i]);
    } else {
      result.kept.push_back(records[i]);
    }
  }
  return result;
}

double OodScore(std::span<const double> p, std::span<const double> p_no) {
  if (p.size() != p_no.size()) {
    throw Error(ErrorKind::kDomain, "p and p_no lengths differ: " + std::to_string(p.size()) +
                                        " vs " + std::to_string(p_no.size()));
  }
  if (p.empty()) throw Error(ErrorKind::kDomain, "empty probability row");
  double total = 0.0;
  double in_domain = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (!(p[c] >= 0.0 && p[c] <= 1.0) || !(p_no[c] >= 0.0 && p_no[c] <= 1.0)) {
      throw Error(ErrorKind::kDomain, "probability entry " + std::to_string(c) +
                                          " outside [0,1]");
    }
    total += p[c];
    in_domain += (1.0 - p_no[c]) * p[c];
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw Error(ErrorKind::kDomain, "p sums to " + std::to_string(total));
  }
  double score = 1.0 - in_domain;
  if (score < 0.0 && score >= -1e-9) score = 0.0;
  if (score > 1.0 && score <= 1.0 + 1e-9) score = 1.0;
  return score;
}

OODTriple MakeTriple(std::string image_id, const gateway::OODProbRow& bank,
                     const gateway::OODProbRow& general,
                     const std::optional<gateway::OODProbRow>& blurred) {
  OODTriple t;
  try {
    t.ood_primary = OodScore(bank.p, bank.p_no);
    t.ood_general = OodScore(general.p, general.p_no);
    if (blurred) t.ood_text_delta = OodScore(blurred->p, blurred->p_no) - t.ood_primary;
  } catch (const Error& e) {
    throw Error(e.kind(), "image " + image_id + ": " + e.what());
  }
  t.image_id = std::move(image_id);
  return t;
}

bool ParetoDominates(const OODTriple& a, const OODTriple& b) {
  const bool geq = a.ood_primary >= b.ood_primary && a.ood_general >= b.ood_general &&
                   a.ood_text_delta >= b.ood_text_delta;
  const bool strict = a.ood_primary > b.ood_primary || a.ood_general > b.ood_general ||
                      a.ood_text_delta > b.ood_text_delta;
  return geq && strict;
}

ParetoAssignment PeelFronts(std::span<const OODTriple> triples) {
  // After a lexicographic descending sort, anything that dominates a point
  // comes before it, so each point goes to the first front with no dominator.
  std::vector<std::size_t> order(triples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto& a = triples[x];
    const auto& b = triples[y];
    if (a.ood_primary != b.ood_primary) return a.ood_primary > b.ood_primary;
    if (a.ood_general != b.ood_general) return a.ood_general > b.ood_general;
    if (a.ood_text_delta != b.ood_text_delta) return a.ood_text_delta > b.ood_text_delta;
    return a.image_id < b.image_id;
  });

  std::vector<std::vector<std::size_t>> fronts;
  for (auto i : order) {
    std::size_t f = 0;
    for (; f < fronts.size(); ++f) {
      bool dominated = false;
      for (auto j : fronts[f]) {
        if (ParetoDominates(triples[j], triples[i])) {
          dominated = true;
          break;
        }
      }
      if (!dominated) break;
    }
    if (f == fronts.size()) fronts.emplace_back();
    fronts[f].push_back(i);
  }

  ParetoAssignment out;
  out.fronts.resize(fronts.size());
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    auto& ids = out.fronts[f];
    for (auto i : fronts[f]) {
      ids.push_back(triples[i].image_id);
      if (!out.front_of.emplace(triples[i].image_id, f).second) {
        throw Error(ErrorKind::kDomain, "duplicate image id in score table: " +
                                            triples[i].image_id);
      }
    }
    std::sort(ids.begin(), ids.end());
  }
  return out;
}

std::optional<double> Kneedle(std::span<const double> xs, std::span<const double> ys,
                              double sensitivity) {
  const std::size_t n = xs.size();
  if (n < 3 || ys.size() != n) {
    throw Error(ErrorKind::kDomain, "kneedle needs at least 3 points with matching lengths");
  }
  if (!(sensitivity > 0.0)) throw Error(ErrorKind::kDomain, "sensitivity must be positive");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(xs[i] > xs[i - 1])) throw Error(ErrorKind::kDomain, "xs must be strictly increasing");
  }
  const auto [ymin_it, ymax_it] = std::minmax_element(ys.begin(), ys.end());
  const double ymin = *ymin_it;
  const double yspan = *ymax_it - ymin;
  if (yspan == 0.0) return std::nullopt;
  const double xspan = xs[n - 1] - xs[0];

  std::vector<double> xn(n);
  std::vector<double> yn(n);
  for (std::size_t i = 0; i < n; ++i) {
    xn[i] = (xs[i] - xs[0]) / xspan;
    yn[i] = (ys[i] - ymin) / yspan;
  }

  const bool increasing = yn[n - 1] >= yn[0];
  double above_chord = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    above_chord += yn[i] - (yn[0] + (yn[n - 1] - yn[0]) * xn[i]);
  }
  const bool concave = above_chord >= 0.0;

  // Map every shape onto an increasing concave curve; flipped x means the
  // scan runs from the right end.
  const bool flip_y = !concave;
  const bool reverse = increasing != concave;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (reverse) std::reverse(order.begin(), order.end());

  std::vector<double> d(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    const double x = reverse ? 1.0 - xn[i] : xn[i];
    const double y = flip_y ? 1.0 - yn[i] : yn[i];
    d[k] = y - x;
    if (std::abs(d[k]) < 1e-12) d[k] = 0.0;
  }

  const double step = 1.0 / static_cast<double>(n - 1);  // mean spacing of normalized x
  std::vector<std::size_t> maxima;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (d[k] > d[k - 1] && d[k] >= d[k + 1]) maxima.push_back(k);
  }
  for (std::size_t m = 0; m < maxima.size(); ++m) {
    const std::size_t at = maxima[m];
    const double threshold = d[at] - sensitivity * step;
    const std::size_t stop = m + 1 < maxima.size() ? maxima[m + 1] : n;
    for (std::size_t j = at + 1; j < stop; ++j) {
      if (d[j] < threshold) return xs[order[at]];
    }
  }
  return std::nullopt;
}

double MetricValue(const OODTriple& t, Metric m) {
  switch (m) {
    case Metric::kPrimary: return t.ood_primary;
    case Metric::kGeneral: return t.ood_general;
    case Metric::kTextDelta: return t.ood_text_delta;
  }
  return 0.0;
}

std::string_view ToString(Metric m) {
  switch (m) {
    case Metric::kPrimary: return "ood_primary";
    case Metric::kGeneral: return "ood_general";
    case Metric::kTextDelta: return "ood_text_delta";
  }
  return "ood_primary";
}

HaltDecision SelectHalt(const ParetoAssignment& assignment, std::span<const OODTriple> triples,
                        double sensitivity) {
  HaltDecision decision;
  const std::size_t fronts = assignment.fronts.size();
  std::size_t running = 0;
  for (const auto& f : assignment.fronts) {
    running += f.size();
    decision.cumulative.push_back(static_cast<double>(running));
  }
  if (fronts < 3) {
    decision.warnings.push_back("fewer than 3 Pareto fronts; no pruning");
    return decision;
  }

  std::map<std::string_view, const OODTriple*> by_id;
  for (const auto& t : triples) by_id[t.image_id] = &t;

  for (auto metric : {Metric::kPrimary, Metric::kGeneral, Metric::kTextDelta}) {
    std::vector<double> ys;
    ys.reserve(fronts);
    for (const auto& f : assignment.fronts) {
      double sum = 0.0;
      for (const auto& id : f) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorKind::kDomain, "no scores for image " + id);
        sum += MetricValue(*it->second, metric);
      }
      ys.push_back(sum / static_cast<double>(f.size()));
    }
    decision.knees[static_cast<std::size_t>(metric)] =
        Kneedle(decision.cumulative, ys, sensitivity);
  }

  for (const auto& knee : decision.knees) {
    if (knee && (!decision.halt_x || *knee > *decision.halt_x)) decision.halt_x = knee;
  }
  if (!decision.halt_x) {
    decision.warnings.push_back("no knee found on any metric; no pruning");
    return decision;
  }
  for (std::size_t f = 0; f < fronts; ++f) {
    if (decision.cumulative[f] <= *decision.halt_x) decision.halt_front = f;
  }
  return decision;
}

std::vector<ImageRecord> PruneToSize(const ParetoAssignment& assignment,
                                     const std::vector<ImageRecord>& records,
                                     std::span<const OODTriple> triples, std::size_t target) {
  if (target > records.size()) {
    throw Error(ErrorKind::kDomain, "target size " + std::to_string(target) + " exceeds " +
                                        std::to_string(records.size()) + " records");
  }
  std::size_t to_remove = records.size() - target;
  std::set<std::string> removed;

  std::map<std::string_view, double> primary;
  for (const auto& t : triples) primary[t.image_id] = t.ood_primary;

  for (const auto& front : assignment.fronts) {
    if (to_remove == 0) break;
    if (front.size() <= to_remove) {
      removed.insert(front.begin(), front.end());
      to_remove -= front.size();
      continue;
    }
    std::vector<std::string> order = front;
    std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
      const double pa = primary.at(a);
      const double pb = primary.at(b);
      if (pa != pb) return pa > pb;
      return a < b;
    });
    removed.insert(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(to_remove));
    to_remove = 0;
  }
  if (to_remove != 0) {
    throw Error(ErrorKind::kDomain, "Pareto assignment does not cover the records");
  }
  std::vector<ImageRecord> kept;
  kept.reserve(target);
  for (const auto& r : records) {
    if (!removed.count(r.id)) kept.push_back(r);
  }
  if (kept.size() != target) {
    throw Error(ErrorKind::kDomain, "Pareto assignment ids do not match the records");
  }
  return kept;
}

std::vector<ImageRecord> RemoveFronts(const ParetoAssignment& assignment,
                                      const std::vector<ImageRecord>& records,
                                      std::optional<std::size_t> halt_front) {
  if (!halt_front) return records;
  std::vector<ImageRecord> kept;
  for (const auto& r : records) {
    auto it = assignment.front_of.find(r.id);
    if (it == assignment.front_of.end() || it->second > *halt_front) kept.push_back(r);
  }
  return kept;
}

std::vector<OODTriple> ScoreRecords(const std::vector<ImageRecord>& records,
                                    const std::vector<std::string>& bank,
                                    const std::vector<std::string>& general_bank,
                                    gateway::OodProvider& provider, std::size_t batch_size) {
  std::vector<OODTriple> out;
  if (records.empty()) return out;
  std::vector<std::string> uris;
  uris.reserve(records.size());
  for (const auto& r : records) uris.push_back(r.uri);

  const auto primary = gateway::OodProbabilities(provider, uris, bank, false, batch_size);
  const auto general = gateway::OodProbabilities(provider, uris, general_bank, false, batch_size);

  std::vector<std::size_t> with_text;
  std::vector<std::string> text_uris;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (primary[i].text_detected) {
      with_text.push_back(i);
      text_uris.push_back(uris[i]);
    }
  }
  std::vector<std::optional<gateway::OODProbRow>> blurred(records.size());
  if (!text_uris.empty()) {
    auto rows = gateway::OodProbabilities(provider, text_uris, bank, true, batch_size);
    for (std::size_t k = 0; k < with_text.size(); ++k) blurred[with_text[k]] = std::move(rows[k]);
  }

  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back(MakeTriple(records[i].id, primary[i], general[i], blurred[i]));
  }
  return out;
}

StageCounts CountBySource(const std::vector<ImageRecord>& records) {
  StageCounts c;
  for (const auto& r : records) {
    ++(r.source == acquisition::Source::kReal ? c.real : c.synthetic);
  }
  return c;
}

std::vector<std::string> TelescopeViolations(const CurationReport& r) {
  std::vector<std::string> out;
  auto check = [&](std::size_t before, std::size_t removed, std::size_t after,
                   std::string_view stage) {
    if (before < removed || before - removed != after) {
      out.push_back(std::string(stage) + ": " + std::to_string(before) + " - " +
                    std::to_string(removed) + " != " + std::to_string(after));
    }
  };
  check(r.raw.total(), r.removed_dedup, r.after_dedup.total(), "dedup");
  check(r.after_dedup.total(), r.removed_leak, r.after_leak.total(), "leak");
  check(r.after_leak.total(), r.removed_pareto, r.after_pareto.total(), "pareto");
  if (r.after_pareto.total() != r.retained) {
    out.push_back("retained " + std::to_string(r.retained) + " != after_pareto " +
                  std::to_string(r.after_pareto.total()));
  }
  if (r.raw.total() < r.removed_dedup + r.removed_leak + r.removed_pareto ||
      r.raw.total() - r.removed_dedup - r.removed_leak - r.removed_pareto != r.retained) {
    out.push_back("raw - removed != retained");
  }
  auto monotone = [&](const StageCounts& a, const StageCounts& b, std::string_view stage) {
    if (b.real > a.real || b.synthetic > a.synthetic) {
      out.push_back(std::string(stage) + " increased a per-source count");
    }
  };
  monotone(r.raw, r.after_dedup, "dedup");
  monotone(r.after_dedup, r.after_leak, "leak");
  monotone(r.after_leak, r.after_pareto, "pareto");
  return out;
}

namespace {

Json CountsJson(const StageCounts& c) {
  return Json{{"real", c.real}, {"synthetic", c.synthetic}, {"total", c.total()}};
}

StageCounts CountsFromJson(const Json& j) {
  StageCounts c;
  c.real = j.at("real").get<std::size_t>();
  c.synthetic = j.at("synthetic").get<std::size_t>();
  return c;
}

Json Optional(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json ToJson(const CurationReport& r) {
  Json sizes = Json::object();
  for (const auto& [size, count] : r.duplicate_component_sizes) {
    sizes[std::to_string(size)] = count;
  }
  Json knees = Json::object();
  for (auto m : {Metric::kPrimary, Metric::kGeneral, Metric::kTextDelta}) {
    knees[std::string(ToString(m))] = Optional(r.knees[static_cast<std::size_t>(m)]);
  }
  return Json{
      {"counts",
       {{"raw", CountsJson(r.raw)},
        {"after_dedup", CountsJson(r.after_dedup)},
        {"after_leak", CountsJson(r.after_leak)},
        {"after_pareto", CountsJson(r.after_pareto)}}},
      {"removed",
       {{"dedup", r.removed_dedup}, {"leak", r.removed_leak}, {"pareto", r.removed_pareto}}},
      {"retained", r.retained},
      {"duplicate_component_sizes", sizes},
      {"pareto",
       {{"fronts", r.fronts},
        {"knees", knees},
        {"halt_front", r.halt_front ? Json(*r.halt_front) : Json(nullptr)},
        {"halt_mode", r.halt_mode},
        {"target_size", r.target_size ? Json(*r.target_size) : Json(nullptr)}}},
      {"warnings", r.warnings}};
}

CurationReport ReportFromJson(const Json& j) {
  CurationReport r;
  try {
    const auto& counts = j.at("counts");
    r.raw = CountsFromJson(counts.at("raw"));
    r.after_dedup = CountsFromJson(counts.at("after_dedup"));
    r.after_leak = CountsFromJson(counts.at("after_leak"));
    r.after_pareto = CountsFromJson(counts.at("after_pareto"));
    r.removed_dedup = j.at("removed").at("dedup").get<std::size_t>();
    r.removed_leak = j.at("removed").at("leak").get<std::size_t>();
    r.removed_pareto = j.at("removed").at("pareto").get<std::size_t>();
    r.retained = j.at("retained").get<std::size_t>();
    for (const auto& [size, count] : j.at("duplicate_component_sizes").items()) {
      r.duplicate_component_sizes[std::stoul(size)] = count.get<std::size_t>();
    }
    const auto& pareto = j.at("pareto");
    r.fronts = pareto.at("fronts").get<std::size_t>();
    for (auto m : {Metric::kPrimary, Metric::kGeneral, Metric::kTextDelta}) {
      const auto& v = pareto.at("knees").at(std::string(ToString(m)));
      if (!v.is_null()) r.knees[static_cast<std::size_t>(m)] = v.get<double>();
    }
    if (!pareto.at("halt_front").is_null()) r.halt_front = pareto["halt_front"].get<std::size_t>();
    r.halt_mode = pareto.at("halt_mode").get<std::string>();
    if (!pareto.at("target_size").is_null()) {
      r.target_size = pareto["target_size"].get<std::size_t>();
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("bad curation report: ") + e.what());
  }
  return r;
}

void WriteScores(const std::filesystem::path& path, std::span<const OODTriple> triples,
                 const ParetoAssignment& assignment) {
  std::vector<Json> rows;
  rows.reserve(triples.size());
  for (const auto& t : triples) {
    auto it = assignment.front_of.find(t.image_id);
    rows.push_back({{"image_id", t.image_id},
                    {"ood_primary", t.ood_primary},
                    {"ood_general", t.ood_general},
                    {"ood_text_delta", t.ood_text_delta},
                    {"front", it == assignment.front_of.end() ? Json(nullptr) : Json(it->second)}});
  }
  io::WriteJsonl(path, rows);
}

ScoreTable ReadScores(const std::filesystem::path& path) {
  ScoreTable table;
  std::map<std::size_t, std::vector<std::string>> fronts;
  try {
    for (const auto& row : io::ReadJsonl(path)) {
      OODTriple t;
      t.image_id = row.at("image_id").get<std::string>();
      t.ood_primary = row.at("ood_primary").get<double>();
      t.ood_general = row.at("ood_general").get<double>();
      t.ood_text_delta = row.at("ood_text_delta").get<double>();
      if (row.contains("front") && !row["front"].is_null()) {
        const auto f = row["front"].get<std::size_t>();
        fronts[f].push_back(t.image_id);
        table.assignment.front_of[t.image_id] = f;
      }
      table.triples.push_back(std::move(t));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
  std::size_t expect = 0;
  for (auto& [f, ids] : fronts) {
    if (f != expect++) throw Error(ErrorKind::kFormat, path.string() + ": front indices have gaps");
    std::sort(ids.begin(), ids.end());
    table.assignment.fronts.push_back(std::move(ids));
  }
  return table;
}

}  // namespace pas::curation
