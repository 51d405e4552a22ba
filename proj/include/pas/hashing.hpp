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

#ifndef PAS_HASHING_HPP_
#define PAS_HASHING_HPP_

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace pas {

// Stable 64-bit FNV-1a. Used for ids, seeds and mock fingerprints, so the
// value must never depend on platform or standard library.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t Fnv1a(std::string_view data, std::uint64_t state = kFnvOffset) {
  for (unsigned char c : data) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

/// Hashes several fields with a unit separator between them so that
/// ("ab", "c") and ("a", "bc") differ.
std::uint64_t HashFields(std::initializer_list<std::string_view> fields);

/// splitmix64 finalizer; mixes a seed with a salt into a well-spread value.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string Hex64(std::uint64_t value);

/// Lower-case hex SHA-256 of a byte string.
std::string Sha256Hex(std::string_view data);

}  // namespace pas

#endif  // PAS_HASHING_HPP_
