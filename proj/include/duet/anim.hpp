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

#include <filesystem>
#include <string>

#include "duet/motion.hpp"

namespace duet::anim {

enum class Format { Csv, Html };

Format format_from_string(const std::string& name);

// csv: a header line, then one row per frame with the frame index followed by
// x, y, z of every joint of person a and then person b.
// html: standalone page that plays both skeletons back on a canvas.
std::string render_csv(const motion::MotionSequence& a, const motion::MotionSequence& b);
std::string render_html(const motion::MotionSequence& a, const motion::MotionSequence& b, const std::string& title);

void export_anim(const motion::MotionSequence& a, const motion::MotionSequence& b, const std::filesystem::path& path,
                 Format format);

}  // namespace duet::anim
