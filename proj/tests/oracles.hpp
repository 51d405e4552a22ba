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

// Brute-force reference implementations. Deliberately naive and written
// without reusing library code so that agreement means something.
#ifndef PAS_TESTS_ORACLES_HPP_
#define PAS_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <unistd.h>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Point {
  std::string id;
  double a = 0, b = 0, c = 0;
};

// a is removed before b.
inline bool Dominates(const Point& x, const Point& y) {
  const bool ge = x.a >= y.a && x.b >= y.b && x.c >= y.c;
  const bool gt = x.a > y.a || x.b > y.b || x.c > y.c;
  return ge && gt;
}

// Repeatedly extracts the set of points no remaining point dominates.
inline std::vector<std::set<std::string>> NonDominatedSort(const std::vector<Point>& pts) {
  std::vector<bool> gone(pts.size(), false);
  std::size_t left = pts.size();
  std::vector<std::set<std::string>> fronts;
  while (left > 0) {
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (gone[i]) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
        if (!gone[j] && j != i && Dominates(pts[j], pts[i])) dominated = true;
      }
      if (!dominated) front.push_back(i);
    }
    std::set<std::string> ids;
    for (auto i : front) {
      gone[i] = true;
      ids.insert(pts[i].id);
    }
    left -= front.size();
    fronts.push_back(std::move(ids));
  }
  return fronts;
}

inline double Cosine(const std::vector<float>& u, const std::vector<float>& v) {
  long double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += static_cast<long double>(u[i]) * v[i];
    uu += static_cast<long double>(u[i]) * u[i];
    vv += static_cast<long double>(v[i]) * v[i];
  }
  return static_cast<double>(uv / std::sqrt(uu * vv));
}

// Similarity of a stored row to a query. Stored rows are unit by
// construction, so only the query norm is divided out.
inline double StoredSimilarity(const std::vector<float>& row, const std::vector<float>& q) {
  long double rq = 0, qq = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    rq += static_cast<long double>(row[i]) * q[i];
    qq += static_cast<long double>(q[i]) * q[i];
  }
  return static_cast<double>(rq / std::sqrt(qq));
}

// Full argsort over stored rows: similarity descending, id ascending on
// exact ties.
inline std::vector<std::string> ArgsortTopK(const std::vector<std::string>& ids,
                                            const std::vector<std::vector<float>>& rows,
                                            const std::vector<float>& query, std::size_t k) {
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    all.push_back({StoredSimilarity(rows[i], query), ids[i]});
  }
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

// Connected components through the transitive closure of a boolean
// adjacency matrix (Warshall). Returned as a set of id sets.
inline std::set<std::set<std::string>> ClosureComponents(const std::vector<std::string>& ids,
                                                         std::vector<std::vector<bool>> adj) {
  const std::size_t n = ids.size();
  for (std::size_t i = 0; i < n; ++i) adj[i][i] = true;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!adj[i][k]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (adj[k][j]) adj[i][j] = true;
      }
    }
  }
  std::set<std::set<std::string>> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::string> c;
    for (std::size_t j = 0; j < n; ++j) {
      if (adj[i][j]) c.insert(ids[j]);
    }
    out.insert(c);
  }
  return out;
}

// Records whose best protected similarity is strictly above the threshold.
inline std::set<std::string> LeakAllPairs(const std::vector<std::string>& ids,
                                          const std::vector<std::vector<float>>& records,
                                          const std::vector<std::vector<float>>& protected_rows,
                                          double threshold) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    double best = -2.0;
    for (const auto& p : protected_rows) best = std::max(best, StoredSimilarity(p, records[i]));
    if (best > threshold) out.insert(ids[i]);
  }
  return out;
}

// 1 - sum (1 - p_no) p, summed in long double.
inline double OodSum(const std::vector<double>& p, const std::vector<double>& p_no) {
  long double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (1.0L - p_no[i]) * p[i];
  return static_cast<double>(1.0L - s);
}

// ---------------------------------------------------------------------------
// Fixture helpers

inline std::vector<float> Gaussian(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

inline std::vector<float> Normalized(std::vector<float> v) {
  double s = 0;
  for (float x : v) s += static_cast<double>(x) * x;
  s = std::sqrt(s);
  for (auto& x : v) x = static_cast<float>(x / s);
  return v;
}

inline std::vector<float> Flatten(const std::vector<std::vector<float>>& rows) {
  std::vector<float> out;
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

// Random probability row: softmax-like p and uniform p_no.
inline std::pair<std::vector<double>, std::vector<double>> RandomRow(std::mt19937_64& rng,
                                                                     std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n), p_no(n);
  double s = 0;
  for (auto& x : p) {
    x = std::exp(4.0 * u(rng));
    s += x;
  }
  for (auto& x : p) x /= s;
  for (auto& x : p_no) x = u(rng);
  return {p, p_no};
}

inline std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("pas_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle

#endif  // PAS_TESTS_ORACLES_HPP_
