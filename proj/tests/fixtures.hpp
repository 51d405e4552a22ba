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

// Constructed inputs with known answers, shared by the unit tests and the
// acceptance binary.
#ifndef PAS_TESTS_FIXTURES_HPP_
#define PAS_TESTS_FIXTURES_HPP_

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pas/curation.hpp"

namespace fixture {

struct PlantedVectors {
  std::vector<std::string> ids;
  std::vector<std::vector<float>> rows;  // unit length
  std::vector<std::vector<std::string>> clusters;
  std::vector<std::string> background;
};

// Clusters of [min_size, max_size] near-copies of a random centre plus
// unrelated background vectors. `spread` scales the unit noise added to the
// centre; 0.35 keeps members above 0.8 cosine of each other.
inline PlantedVectors PlantClusters(std::mt19937_64& rng, std::size_t clusters,
                                    std::size_t min_size, std::size_t max_size,
                                    std::size_t background, std::size_t dim,
                                    float spread = 0.35f) {
  PlantedVectors out;
  std::uniform_int_distribution<std::size_t> size(min_size, max_size);
  for (std::size_t c = 0; c < clusters; ++c) {
    const auto centre = oracle::Normalized(oracle::Gaussian(rng, dim));
    std::vector<std::string> members;
    const std::size_t n = size(rng);
    for (std::size_t m = 0; m < n; ++m) {
      auto noise = oracle::Normalized(oracle::Gaussian(rng, dim));
      std::vector<float> v(dim);
      for (std::size_t d = 0; d < dim; ++d) v[d] = centre[d] + spread * noise[d];
      members.push_back("c" + std::to_string(c) + "_" + std::to_string(m));
      out.ids.push_back(members.back());
      out.rows.push_back(oracle::Normalized(std::move(v)));
    }
    out.clusters.push_back(std::move(members));
  }
  for (std::size_t b = 0; b < background; ++b) {
    out.background.push_back("bg" + std::to_string(b));
    out.ids.push_back(out.background.back());
    out.rows.push_back(oracle::Normalized(oracle::Gaussian(rng, dim)));
  }
  return out;
}

// Random score triples. With levels > 0 every coordinate is snapped to a grid
// of that many steps so that ties and equal points occur.
inline std::vector<pas::curation::OODTriple> RandomTriples(std::mt19937_64& rng, std::size_t n,
                                                           int levels = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto snap = [&](double x) {
    return levels > 0 ? std::round(x * levels) / levels : x;
  };
  std::vector<pas::curation::OODTriple> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"img" + std::to_string(i), snap(u(rng)), snap(u(rng)),
                   snap(2.0 * u(rng) - 1.0)});
  }
  return out;
}

inline std::vector<oracle::Point> ToPoints(const std::vector<pas::curation::OODTriple>& triples) {
  std::vector<oracle::Point> pts;
  for (const auto& t : triples) pts.push_back({t.image_id, t.ood_primary, t.ood_general, t.ood_text_delta});
  return pts;
}

// Decreasing curve: falls steeply from 1 to `floor` over the first `junction`
// steps, then linearly to 0 over the rest.
inline std::vector<double> SteepThenFlat(std::size_t n, std::size_t junction, double floor = 0.1) {
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i <= junction) {
      ys[i] = 1.0 - (1.0 - floor) * static_cast<double>(i) / static_cast<double>(junction);
    } else {
      ys[i] = floor * (1.0 - static_cast<double>(i - junction) / static_cast<double>(n - 1 - junction));
    }
  }
  return ys;
}

// Fronts of the given sizes whose members all share one triple per front;
// metric m of front i is curves[m][i].
inline std::pair<pas::curation::ParetoAssignment, std::vector<pas::curation::OODTriple>>
FrontsWithCurves(const std::vector<std::size_t>& sizes,
                 const std::array<std::vector<double>, 3>& curves) {
  pas::curation::ParetoAssignment assignment;
  std::vector<pas::curation::OODTriple> triples;
  std::size_t next = 0;
  for (std::size_t f = 0; f < sizes.size(); ++f) {
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < sizes[f]; ++k) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "img%06zu", next++);
      ids.push_back(buf);
      assignment.front_of[buf] = f;
      triples.push_back({buf, curves[0][f], curves[1][f], curves[2][f]});
    }
    assignment.fronts.push_back(std::move(ids));
  }
  return {assignment, triples};
}

}  // namespace fixture

#endif  // PAS_TESTS_FIXTURES_HPP_
