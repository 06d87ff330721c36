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

// Alignment lattice shared by the transducer models.
//
// A path starts at node (t=1, u=0) and ends at node (T, U). Blank edges are
// horizontal (t -> t+1), label edges are vertical (u -> u+1), so every path
// has exactly T-1 blanks and U labels. There is no terminal blank edge.

#pragma once

#include "hat/core.hpp"

#include <cstddef>
#include <vector>

namespace hat {

using AlignmentPath = std::vector<Symbol>;

struct LatticeDims {
  int frames = 1;     // T
  int label_len = 0;  // U
};

struct LatticePos {
  int t = 1;
  int u = 0;
  friend bool operator==(const LatticePos&, const LatticePos&) = default;
};

inline constexpr std::size_t kDefaultPathCap = 24;
inline constexpr std::size_t kDefaultCtcFrameCap = 12;

// Removes blank edges. For transducer paths this is the collapse map.
LabelSeq collapse(const AlignmentPath& path);

// Blank removal followed by merging of consecutive repeats.
LabelSeq ctc_collapse(const std::vector<Symbol>& frames);

LatticePos position(const AlignmentPath& prefix);

bool is_valid_path(const AlignmentPath& path, LatticeDims dims);

// Every interleaving of T-1 blanks with the labels, in lexicographic order of
// symbol ids. Throws EnumerationTooLarge if T+U-1 exceeds `max_edges`.
std::vector<AlignmentPath> enumerate_paths(LatticeDims dims,
                                           const LabelSeq& labels,
                                           std::size_t max_edges = kDefaultPathCap);

// Every length-T frame sequence whose ctc_collapse equals `labels`.
std::vector<std::vector<Symbol>> enumerate_ctc_paths(
    int frames, const LabelSeq& labels,
    std::size_t max_frames = kDefaultCtcFrameCap);

// Fewest frames CTC needs: one per label plus one blank between repeats.
int min_ctc_frames(const LabelSeq& labels);

std::size_t binomial(std::size_t n, std::size_t k);

}  // namespace hat
