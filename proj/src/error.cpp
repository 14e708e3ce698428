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

#include "duet/error.hpp"

namespace duet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnsupportedSkeleton: return "UnsupportedSkeleton";
    case ErrorCode::Io: return "Io";
    case ErrorCode::ConfigSchema: return "ConfigSchema";
    case ErrorCode::MissingCheckpoint: return "MissingCheckpoint";
    case ErrorCode::CheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::Divergence: return "Divergence";
  }
  return "Unknown";
}

}  // namespace duet
