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

#ifndef PAS_ERROR_HPP_
#define PAS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace pas {

enum class ErrorKind {
  kDomain,        // precondition / invariant violated by an argument
  kFormat,        // malformed file on disk
  kIntegrity,     // inconsistent records (id collisions, missing embeddings)
  kTransport,     // provider unreachable after retries
  kProtocol,      // provider answered with something we cannot accept
  kEmptyStore,
  kEmptyDomain,
  kInvalidConcept,
  kConfig,
  kStage,
  kCorruption,
  kMockScript,    // scripted mock asked for a fingerprint it does not know
  kIo,
};

std::string_view ToString(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ToString(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Provider answered with a non-accepted HTTP status.
class ProtocolError : public Error {
 public:
  ProtocolError(int status, const std::string& message)
      : Error(ErrorKind::kProtocol, message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace pas

#endif  // PAS_ERROR_HPP_
