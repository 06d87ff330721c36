// Copyright 2026 The hatlab Authors. All Rights Reserved.
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

#include "hat/lattice.hpp"

#include <algorithm>
#include <string>

namespace hat {

Alphabet::Alphabet(int num_labels) : num_labels_(num_labels) {
  if (num_labels < 1) throw ArgumentError("alphabet needs at least one label");
}

void check_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError("shape mismatch: " + what);
}

LabelSeq collapse(const AlignmentPath& path) {
  LabelSeq out;
  for (Symbol s : path)
    if (s != kBlank) out.push_back(s);
  return out;
}

LabelSeq ctc_collapse(const std::vector<Symbol>& frames) {
  LabelSeq out;
  Symbol prev = kBlank;
  for (Symbol s : frames) {
    if (s != kBlank && s != prev) out.push_back(s);
    prev = s;
  }
  return out;
}

LatticePos position(const AlignmentPath& prefix) {
  LatticePos pos;
  for (Symbol s : prefix) {
    if (s == kBlank)
      ++pos.t;
    else
      ++pos.u;
  }
  return pos;
}

bool is_valid_path(const AlignmentPath& path, LatticeDims dims) {
  if (dims.frames < 1 || dims.label_len < 0) return false;
  if (path.size() != static_cast<std::size_t>(dims.frames + dims.label_len - 1))
    return false;
  int blanks = 0, labels = 0;
  for (Symbol s : path) {
    if (s < 0) return false;
    (s == kBlank ? blanks : labels)++;
    if (blanks > dims.frames - 1 || labels > dims.label_len) return false;
  }
  return true;
}

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

namespace {

void extend_paths(int blanks_left, const LabelSeq& labels, std::size_t next,
                  AlignmentPath& prefix, std::vector<AlignmentPath>& out) {
  if (blanks_left == 0 && next == labels.size()) {
    out.push_back(prefix);
    return;
  }
  if (blanks_left > 0) {
    prefix.push_back(kBlank);
    extend_paths(blanks_left - 1, labels, next, prefix, out);
    prefix.pop_back();
  }
  if (next < labels.size()) {
    prefix.push_back(labels[next]);
    extend_paths(blanks_left, labels, next + 1, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<AlignmentPath> enumerate_paths(LatticeDims dims,
                                           const LabelSeq& labels,
                                           std::size_t max_edges) {
  if (dims.frames < 1) throw ArgumentError("lattice needs at least one frame");
  if (labels.size() != static_cast<std::size_t>(dims.label_len))
    throw ShapeError("label count does not match lattice height");
  const std::size_t edges = dims.frames + dims.label_len - 1;
  if (edges > max_edges)
    throw EnumerationTooLarge("path enumeration of " + std::to_string(edges) +
                              " edges exceeds cap " + std::to_string(max_edges));
  std::vector<AlignmentPath> out;
  out.reserve(binomial(edges, dims.label_len));
  AlignmentPath prefix;
  extend_paths(dims.frames - 1, labels, 0, prefix, out);
  return out;
}

int min_ctc_frames(const LabelSeq& labels) {
  int n = static_cast<int>(labels.size());
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] == labels[i - 1]) ++n;
  return n;
}

namespace {

// `matched` labels have been emitted; `last` is the previous frame symbol.
void extend_ctc(int frames_left, const LabelSeq& labels, std::size_t matched,
                Symbol last, std::vector<Symbol>& prefix,
                std::vector<std::vector<Symbol>>& out) {
  const LabelSeq rest(labels.begin() + matched, labels.end());
  int needed = min_ctc_frames(rest);
  if (matched > 0 && !rest.empty() && rest.front() == last) ++needed;
  if (needed > frames_left) return;
  if (frames_left == 0) {
    out.push_back(prefix);
    return;
  }
  auto step = [&](Symbol s, std::size_t m) {
    prefix.push_back(s);
    extend_ctc(frames_left - 1, labels, m, s, prefix, out);
    prefix.pop_back();
  };
  step(kBlank, matched);
  // Candidates in ascending id order: repeating `last`, or the next label.
  Symbol repeat = (last != kBlank) ? last : -1;
  Symbol advance = matched < labels.size() ? labels[matched] : -1;
  if (advance == repeat) advance = -1;  // same id after no blank: not new
  if (repeat > 0 && advance > 0 && advance < repeat) {
    step(advance, matched + 1);
    step(repeat, matched);
  } else {
    if (repeat > 0) step(repeat, matched);
    if (advance > 0) step(advance, matched + 1);
  }
}

}  // namespace

std::vector<std::vector<Symbol>> enumerate_ctc_paths(int frames,
                                                     const LabelSeq& labels,
                                                     std::size_t max_frames) {
  if (frames < 1) throw ArgumentError("CTC enumeration needs at least one frame");
  if (static_cast<std::size_t>(frames) > max_frames)
    throw EnumerationTooLarge("CTC enumeration of " + std::to_string(frames) +
                              " frames exceeds cap " + std::to_string(max_frames));
  std::vector<std::vector<Symbol>> out;
  std::vector<Symbol> prefix;
  extend_ctc(frames, labels, 0, kBlank, prefix, out);
  return out;
}

}  // namespace hat
