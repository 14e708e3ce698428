// Copyright 2026 The Duet Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace duet {

// Error categories surface as distinct CLI exit codes, so keep values stable.
enum class ErrorCode : int {
  InvalidArgument = 2,
  NonFinite = 3,
  BadMagic = 4,
  Truncated = 5,
  DimensionMismatch = 6,
  UnsupportedSkeleton = 7,
  Io = 8,
  ConfigSchema = 9,
  MissingCheckpoint = 10,
  CheckpointMismatch = 11,
  ModeMismatch = 12,
  Divergence = 13,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace duet
