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

#include "duet/anim.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "duet/error.hpp"

namespace duet::anim {
namespace {

void append_number(std::string& out, double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  out += buf;
}

// [[x,y,z]*J]*N as a compact JSON array.
std::string positions_json(const motion::MotionSequence& m) {
  const auto p = m.positions();
  std::string out = "[";
  for (int f = 0; f < p.frames(); ++f) {
    if (f) out += ',';
    out += '[';
    for (int j = 0; j < p.joints(); ++j) {
      if (j) out += ',';
      for (int c = 0; c < 3; ++c) {
        if (c) out += ',';
        append_number(out, p.at(f, j)[c]);
      }
    }
    out += ']';
  }
  return out + "]";
}

std::string parents_json(const motion::Skeleton& s) {
  std::string out = "[";
  for (std::size_t j = 0; j < s.parents.size(); ++j) {
    if (j) out += ',';
    out += std::to_string(s.parents[j]);
  }
  return out + "]";
}

std::string escape_html(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPage = R"HTML(<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>@TITLE@</title>
<style>
body { font-family: sans-serif; background: #fafafa; margin: 16px; }
canvas { background: #fff; border: 1px solid #ccc; }
.a { color: #1f77b4; } .b { color: #d62728; }
</style>
</head>
<body>
<h3>@TITLE@</h3>
<p><span class="a">&#9632; person a</span> &nbsp; <span class="b">&#9632; person b</span> &nbsp; @FRAMES@ frames at @FPS@ fps</p>
<canvas id="view" width="720" height="480"></canvas><br>
<input id="scrub" type="range" min="0" max="@LAST@" value="0" style="width:720px">
<button id="play">pause</button>
<script>
const parents = @PARENTS@;
const motionA = @MOTION_A@;
const motionB = @MOTION_B@;
const fps = @FPS@;
const canvas = document.getElementById('view');
const ctx = canvas.getContext('2d');
const scrub = document.getElementById('scrub');
const button = document.getElementById('play');
let playing = true;
let frame = 0;
let bounds = [Infinity, -Infinity, Infinity, -Infinity];
for (const m of [motionA, motionB]) for (const pose of m) for (let j = 0; j < pose.length; j += 3) {
  const x = pose[j] - 0.5 * pose[j + 2], y = pose[j + 1] + 0.3 * pose[j + 2];
  bounds = [Math.min(bounds[0], x), Math.max(bounds[1], x), Math.min(bounds[2], y), Math.max(bounds[3], y)];
}
const scale = 0.8 * Math.min(canvas.width / (bounds[1] - bounds[0] + 1e-6), canvas.height / (bounds[3] - bounds[2] + 1e-6));
function project(pose, j) {
  const x = pose[3 * j] - 0.5 * pose[3 * j + 2], y = pose[3 * j + 1] + 0.3 * pose[3 * j + 2];
  return [canvas.width / 2 + (x - (bounds[0] + bounds[1]) / 2) * scale,
          canvas.height / 2 - (y - (bounds[2] + bounds[3]) / 2) * scale];
}
function drawSkeleton(pose, color) {
  ctx.strokeStyle = color; ctx.fillStyle = color; ctx.lineWidth = 3;
  for (let j = 0; j < parents.length; ++j) {
    const [x, y] = project(pose, j);
    ctx.beginPath(); ctx.arc(x, y, 4, 0, 2 * Math.PI); ctx.fill();
    if (parents[j] < 0) continue;
    const [px, py] = project(pose, parents[j]);
    ctx.beginPath(); ctx.moveTo(px, py); ctx.lineTo(x, y); ctx.stroke();
  }
}
function draw() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  drawSkeleton(motionA[frame], '#1f77b4');
  drawSkeleton(motionB[frame], '#d62728');
  scrub.value = frame;
}
scrub.oninput = () => { frame = Number(scrub.value); draw(); };
button.onclick = () => { playing = !playing; button.textContent = playing ? 'pause' : 'play'; };
setInterval(() => { if (playing) { frame = (frame + 1) % motionA.length; draw(); } }, 1000 / fps);
draw();
</script>
</body>
</html>
)HTML";

void replace_all(std::string& text, const std::string& key, const std::string& value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
}

void check_pair(const motion::MotionSequence& a, const motion::MotionSequence& b) {
  a.validate();
  b.validate();
  require(a.frames() == b.frames() && a.joints() == b.joints(), ErrorCode::DimensionMismatch,
          "animation export needs two motions of equal shape");
  require(motion::has_positions(a.layout()) && motion::has_positions(b.layout()), ErrorCode::InvalidArgument,
          "animation export needs position channels");
}

}  // namespace

Format format_from_string(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "html") return Format::Html;
  throw Error(ErrorCode::InvalidArgument, "unsupported animation format '" + name + "'");
}

std::string render_csv(const motion::MotionSequence& a, const motion::MotionSequence& b) {
  check_pair(a, b);
  std::string out = "frame";
  for (const char person : {'a', 'b'}) {
    for (int j = 0; j < a.joints(); ++j) {
      for (const char axis : {'x', 'y', 'z'}) {
        out += ',';
        out += person;
        out += std::to_string(j);
        out += '_';
        out += axis;
      }
    }
  }
  out += '\n';
  const auto pa = a.positions();
  const auto pb = b.positions();
  for (int f = 0; f < a.frames(); ++f) {
    out += std::to_string(f);
    for (const auto* p : {&pa, &pb}) {
      for (int j = 0; j < a.joints(); ++j) {
        for (int c = 0; c < 3; ++c) {
          out += ',';
          append_number(out, p->at(f, j)[c]);
        }
      }
    }
    out += '\n';
  }
  return out;
}

std::string render_html(const motion::MotionSequence& a, const motion::MotionSequence& b, const std::string& title) {
  check_pair(a, b);
  std::string page = kPage;
  replace_all(page, "@TITLE@", escape_html(title));
  replace_all(page, "@FRAMES@", std::to_string(a.frames()));
  replace_all(page, "@LAST@", std::to_string(a.frames() - 1));
  char fps[32];
  std::snprintf(fps, sizeof(fps), "%g", static_cast<double>(a.fps()));
  replace_all(page, "@FPS@", fps);
  replace_all(page, "@PARENTS@", parents_json(a.skeleton()));
  replace_all(page, "@MOTION_A@", positions_json(a));
  replace_all(page, "@MOTION_B@", positions_json(b));
  return page;
}

void export_anim(const motion::MotionSequence& a, const motion::MotionSequence& b, const std::filesystem::path& path,
                 Format format) {
  const std::string body =
      format == Format::Csv ? render_csv(a, b) : render_html(a, b, path.stem().string());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(file), ErrorCode::Io, "cannot open " + path.string() + " for writing");
  file << body;
}

}  // namespace duet::anim
