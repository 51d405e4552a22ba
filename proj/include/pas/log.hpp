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

#ifndef PAS_LOG_HPP_
#define PAS_LOG_HPP_

#include <memory>

#include <spdlog/spdlog.h>

namespace pas {

/// Process-wide logger writing to stderr. Level comes from PAS_LOG
/// (trace|debug|info|warn|error|off), default "warn".
std::shared_ptr<spdlog::logger> Log();

}  // namespace pas

#endif  // PAS_LOG_HPP_
