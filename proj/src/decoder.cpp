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

#include "hat/decoder.hpp"

#include "hat/ilm.hpp"
#include "hat/loss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

namespace hat {

void DecodeConfig::validate() const {
  if (beam_width < 1) throw ConfigError("decode.beam must be >= 1");
  if (max_labels_per_frame < 1)
    throw ConfigError("decode.max_labels_per_frame must be >= 1");
  if (max_output_labels < 0) throw ConfigError("decode.max_output_labels must be >= 0");
  if (nbest < 1) throw ConfigError("decode.nbest must be >= 1");
  if (!(blank_scale > 0)) throw ConfigError("decode.blank_scale must be > 0");
  if (!std::isfinite(lambda1) || !std::isfinite(lambda2) || !std::isfinite(coverage))
    throw ConfigError("decode weights must be finite");
}

// Lexicon ------------------------------------------------------------------

LexiconTrie::LexiconTrie() : nodes_(1) {}

int LexiconTrie::add_word(const std::string& word, const LabelSeq& pron) {
  if (pron.empty()) throw ArgumentError("word '" + word + "' has an empty pronunciation");
  if (word_index_.count(word)) throw ArgumentError("duplicate lexicon word '" + word + "'");
  int node = 0;
  for (Symbol y : pron) {
    if (y < 1) throw VocabularyError("pronunciation of '" + word + "' has a non-label");
    auto it = nodes_[node].children.find(y);
    if (it == nodes_[node].children.end()) {
      const int next = static_cast<int>(nodes_.size());
      nodes_[node].children.emplace(y, next);
      nodes_.emplace_back();
      node = next;
    } else {
      node = it->second;
    }
  }
  const int id = static_cast<int>(words_.size());
  nodes_[node].words.push_back(id);
  words_.push_back(word);
  prons_.push_back(pron);
  word_index_.emplace(word, id);
  return id;
}

int LexiconTrie::child(int node, Symbol label) const {
  const auto& c = nodes_.at(node).children;
  auto it = c.find(label);
  return it == c.end() ? -1 : it->second;
}

int LexiconTrie::find_word(const std::string& word) const {
  auto it = word_index_.find(word);
  return it == word_index_.end() ? -1 : it->second;
}

LmBinding LmBinding::for_labels(const NGramModel& model,
                                const std::vector<std::string>& label_names) {
  LmBinding b{&model, {}};
  for (const auto& n : label_names) b.tokens.push_back(model.id(n));
  return b;
}

LmBinding LmBinding::for_words(const NGramModel& model, const LexiconTrie& lexicon) {
  LmBinding b{&model, {}};
  for (int w = 0; w < lexicon.num_words(); ++w) b.tokens.push_back(model.id(lexicon.word(w)));
  return b;
}

// Hypotheses ---------------------------------------------------------------

double Hypothesis::combined(const DecodeConfig& cfg, GridKind kind) const {
  if (kind == GridKind::kHat)
    return cfg.lambda1 * score_posterior - cfg.lambda2 * score_ilm + score_lm;
  return cfg.lambda1 * score_posterior + score_lm +
         cfg.coverage * static_cast<double>(labels.size());
}

bool better(const Hypothesis& a, const Hypothesis& b, const DecodeConfig& cfg,
            GridKind kind) {
  const double sa = a.combined(cfg, kind), sb = b.combined(cfg, kind);
  if (sa != sb) return sa > sb;
  if (a.labels != b.labels) return a.labels < b.labels;
  return a.words < b.words;
}

namespace {

using HypKey = std::tuple<LabelSeq, std::vector<int>, int>;

HypKey key_of(const Hypothesis& h) { return {h.labels, h.words, h.lex_node}; }

double merge_scores(double a, double b, MergeMode mode) {
  return mode == MergeMode::kMax ? std::max(a, b) : log_add(a, b);
}

double lm_score(const LmBinding& lm, LmState& state, int unit) {
  if (!lm.model) return 0.0;
  auto [lp, next] = lm.model->score(state, lm.tokens.at(unit));
  state = std::move(next);
  return lp;
}

double lm_final(const LmBinding& lm, const LmState& state) {
  if (!lm.model || lm.model->end_id() < 0) return 0.0;
  return lm.model->score(state, lm.model->end_id()).first;
}

using Pool = std::map<HypKey, Hypothesis>;

void merge_into(Pool& pool, Hypothesis h, MergeMode mode) {
  auto key = key_of(h);
  auto it = pool.find(key);
  if (it == pool.end()) {
    pool.emplace(std::move(key), std::move(h));
    return;
  }
  Hypothesis& kept = it->second;
  kept.score_posterior = merge_scores(kept.score_posterior, h.score_posterior, mode);
  kept.emitted_this_frame = std::min(kept.emitted_this_frame, h.emitted_this_frame);
}

void prune(Pool& pool, const DecodeConfig& cfg, GridKind kind) {
  if (static_cast<int>(pool.size()) <= cfg.beam_width) return;
  std::vector<const Hypothesis*> order;
  order.reserve(pool.size());
  for (const auto& [k, h] : pool) order.push_back(&h);
  std::nth_element(order.begin(), order.begin() + cfg.beam_width - 1, order.end(),
                   [&](const Hypothesis* a, const Hypothesis* b) {
                     return better(*a, *b, cfg, kind);
                   });
  Pool kept;
  for (int i = 0; i < cfg.beam_width; ++i) {
    const Hypothesis& h = *order[i];
    kept.emplace(key_of(h), h);
  }
  pool = std::move(kept);
}

std::vector<Hypothesis> finish(Pool& pool, const LmBinding& lm,
                               const DecodeConfig& cfg, GridKind kind,
                               bool word_mode) {
  std::vector<Hypothesis> out;
  for (auto& [k, h] : pool) {
    if (word_mode && h.lex_node != 0) continue;  // unfinished word
    h.score_lm += lm_final(lm, h.lm);
    if (!std::isfinite(h.combined(cfg, kind))) continue;
    out.push_back(std::move(h));
  }
  if (out.empty()) throw DecodeFailure("no hypothesis with finite score survived");
  std::sort(out.begin(), out.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    return better(a, b, cfg, kind);
  });
  if (static_cast<int>(out.size()) > cfg.nbest) out.resize(cfg.nbest);
  return out;
}

// Shared frame-synchronous transducer search for HAT and fused RNNT.
std::vector<Hypothesis> transducer_search(GridKind kind, const Matrix& features,
                                          const ModelParams& params,
                                          const LmBinding& lm,
                                          const LexiconTrie* lexicon,
                                          const DecodeConfig& cfg) {
  cfg.validate();
  const bool word_mode = cfg.mode == LmMode::kWord;
  if (word_mode && !lexicon) throw ConfigError("word_lm mode requires a lexicon");
  const bool use_ilm = kind == GridKind::kHat;
  const Matrix enc = encode(features, params);
  const int T = static_cast<int>(enc.rows());
  const int V = params.config.vocab;

  auto cell_at = [&](const Hypothesis& h, int t) {
    const Vector f = enc.row(t).transpose();
    if (kind == GridKind::kHat) return hat_cell(f, h.dec.output, params);
    CellPosterior c = rnnt_cell(f, h.dec.output, params);
    if (cfg.blank_scale != 1.0) {
      const double lb = c.log_blank + std::log(cfg.blank_scale);
      const double z = log_add(lb, log_sum_exp(c.log_label_edges));
      c.log_blank = lb - z;
      c.log_label_edges.array() -= z;
    }
    return c;
  };

  Hypothesis root;
  root.dec = initial_decoder_state(params);
  if (use_ilm) root.ilm_log = ilm_local_log(root.dec.output, params);
  if (lm.model) root.lm = lm.model->start_state();
  Pool pool;
  pool.emplace(key_of(root), root);

  for (int t = 0; t < T; ++t) {
    std::map<HypKey, CellPosterior> cells;
    auto cell_for = [&](const Hypothesis& h) -> const CellPosterior& {
      auto key = key_of(h);
      auto it = cells.find(key);
      if (it == cells.end()) it = cells.emplace(key, cell_at(h, t)).first;
      return it->second;
    };

    // Expand shortest histories first so each is complete before it grows.
    std::size_t len = pool.begin()->second.labels.size();
    for (const auto& [k, h] : pool) len = std::min(len, h.labels.size());
    while (true) {
      std::vector<Hypothesis> level;
      std::size_t longest = 0;
      for (const auto& [k, h] : pool) {
        longest = std::max(longest, h.labels.size());
        if (h.labels.size() == len) level.push_back(h);
      }
      if (len > longest) break;
      for (const Hypothesis& h : level) {
        if (h.emitted_this_frame >= cfg.max_labels_per_frame) continue;
        if (cfg.max_output_labels > 0 &&
            static_cast<int>(h.labels.size()) >= cfg.max_output_labels)
          continue;
        const CellPosterior& cell = cell_for(h);
        for (int k = 0; k < V; ++k) {
          const Symbol y = Alphabet::label_at(k);
          int lex_next = -1;
          if (word_mode) {
            lex_next = lexicon->child(h.lex_node, y);
            if (lex_next < 0) continue;
          }
          const double edge = cell.log_label_edges(k);
          if (edge == log_zero<double>()) continue;
          Hypothesis c;
          c.labels = h.labels;
          c.labels.push_back(y);
          c.words = h.words;
          c.frame = t + 1;
          c.score_posterior = h.score_posterior + edge;
          c.score_ilm = h.score_ilm + (use_ilm ? h.ilm_log(k) : 0.0);
          c.score_lm = h.score_lm;
          c.lm = h.lm;
          c.emitted_this_frame = h.emitted_this_frame + 1;
          c.dec = advance_decoder(h.dec, y, params);
          if (use_ilm) c.ilm_log = ilm_local_log(c.dec.output, params);
          if (!word_mode) {
            c.score_lm += lm_score(lm, c.lm, k);
            merge_into(pool, std::move(c), cfg.merge);
            continue;
          }
          const auto& node = lexicon->node(lex_next);
          for (int w : node.words) {
            Hypothesis e = c;
            e.words.push_back(w);
            e.score_lm += lm_score(lm, e.lm, w);
            e.lex_node = 0;
            if (std::isfinite(e.score_lm)) merge_into(pool, std::move(e), cfg.merge);
          }
          if (!node.children.empty()) {
            c.lex_node = lex_next;
            merge_into(pool, std::move(c), cfg.merge);
          }
        }
      }
      prune(pool, cfg, kind);
      ++len;
    }

    if (t == T - 1) break;
    Pool next;
    for (auto& [k, h] : pool) {
      const double lb = cell_for(h).log_blank;
      if (lb == log_zero<double>()) continue;
      Hypothesis c = h;
      c.score_posterior += lb;
      c.frame = t + 2;
      c.emitted_this_frame = 0;
      next.emplace(k, std::move(c));
    }
    if (next.empty()) throw DecodeFailure("beam emptied at frame " + std::to_string(t + 1));
    pool = std::move(next);
    prune(pool, cfg, kind);
  }
  return finish(pool, lm, cfg, kind, word_mode);
}

// Prefix search over CTC frame posteriors.
std::vector<Hypothesis> ctc_prefix_search(const Matrix& features,
                                          const ModelParams& params,
                                          const LmBinding& lm,
                                          const DecodeConfig& cfg) {
  cfg.validate();
  if (cfg.mode == LmMode::kWord)
    throw ConfigError("CTC decoding supports the label-level LM only");
  const Matrix enc = encode(features, params);
  auto grid = rescale_blank(ctc_grid(enc, params), cfg.blank_scale);
  const int T = grid.frames(), V = grid.vocab();
  const GridKind kind = GridKind::kCtc;
  constexpr double kZero = log_zero<double>();

  Hypothesis root;
  root.blank_prob_log = 0.0;
  root.label_prob_log = kZero;
  if (lm.model) root.lm = lm.model->start_state();
  Pool pool;
  pool.emplace(key_of(root), root);

  auto add = [&](Pool& into, const Hypothesis& proto, double blank_part,
                 double label_part) {
    auto key = key_of(proto);
    auto it = into.find(key);
    if (it == into.end()) {
      Hypothesis h = proto;
      h.blank_prob_log = blank_part;
      h.label_prob_log = label_part;
      it = into.emplace(std::move(key), std::move(h)).first;
    } else {
      it->second.blank_prob_log = merge_scores(it->second.blank_prob_log, blank_part, cfg.merge);
      it->second.label_prob_log = merge_scores(it->second.label_prob_log, label_part, cfg.merge);
    }
    Hypothesis& h = it->second;
    h.score_posterior = merge_scores(h.blank_prob_log, h.label_prob_log, cfg.merge);
  };

  for (int t = 0; t < T; ++t) {
    Pool next;
    for (const auto& [k, h] : pool) {
      const double total = merge_scores(h.blank_prob_log, h.label_prob_log, cfg.merge);
      Hypothesis same = h;
      same.frame = t + 1;
      add(next, same, total + grid.blank_edge(t, 0), kZero);
      if (!h.labels.empty())
        add(next, same, kZero,
            h.label_prob_log + grid.label_edge(t, 0, h.labels.back()));
      if (cfg.max_output_labels > 0 &&
          static_cast<int>(h.labels.size()) >= cfg.max_output_labels)
        continue;
      for (int c = 0; c < V; ++c) {
        const Symbol y = Alphabet::label_at(c);
        Hypothesis ext = same;
        ext.labels.push_back(y);
        ext.score_lm += lm_score(lm, ext.lm, c);
        if (!std::isfinite(ext.score_lm)) continue;
        const double from =
            (!h.labels.empty() && h.labels.back() == y) ? h.blank_prob_log : total;
        add(next, ext, kZero, from + grid.label_edge(t, 0, y));
      }
    }
    // Drop prefixes without mass before pruning.
    for (auto it = next.begin(); it != next.end();)
      it = it->second.score_posterior == kZero ? next.erase(it) : std::next(it);
    if (next.empty()) throw DecodeFailure("beam emptied at frame " + std::to_string(t + 1));
    pool = std::move(next);
    prune(pool, cfg, kind);
  }
  return finish(pool, lm, cfg, kind, /*word_mode=*/false);
}

}  // namespace

std::vector<Hypothesis> beam_decode_hat(const Matrix& features,
                                        const ModelParams& params,
                                        const LmBinding& lm,
                                        const LexiconTrie* lexicon,
                                        const DecodeConfig& cfg) {
  return transducer_search(GridKind::kHat, features, params, lm, lexicon, cfg);
}

std::vector<Hypothesis> beam_decode_fused(GridKind kind, const Matrix& features,
                                          const ModelParams& params,
                                          const LmBinding& lm,
                                          const DecodeConfig& cfg) {
  if (kind == GridKind::kCtc) return ctc_prefix_search(features, params, lm, cfg);
  if (kind == GridKind::kRnnt)
    return transducer_search(kind, features, params, lm, nullptr, cfg);
  throw ArgumentError("fused decoding applies to CTC and RNNT models");
}

std::vector<Hypothesis> beam_decode(GridKind kind, const Matrix& features,
                                    const ModelParams& params,
                                    const LmBinding& lm,
                                    const LexiconTrie* lexicon,
                                    const DecodeConfig& cfg) {
  if (kind == GridKind::kHat)
    return beam_decode_hat(features, params, lm, lexicon, cfg);
  if (kind == GridKind::kRnnt)
    return transducer_search(kind, features, params, lm, lexicon, cfg);
  return ctc_prefix_search(features, params, lm, cfg);
}

// Exhaustive oracle --------------------------------------------------------

namespace {

void all_sequences(int vocab, int max_len, LabelSeq& prefix,
                   std::vector<LabelSeq>& out) {
  out.push_back(prefix);
  if (static_cast<int>(prefix.size()) == max_len) return;
  for (Symbol y = 1; y <= vocab; ++y) {
    prefix.push_back(y);
    all_sequences(vocab, max_len, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<Hypothesis> exhaustive_search(GridKind kind, const Matrix& features,
                                          const ModelParams& params,
                                          const LmBinding& lm,
                                          const DecodeConfig& cfg,
                                          const ExhaustiveCaps& caps) {
  if (cfg.mode == LmMode::kWord)
    throw ConfigError("exhaustive search scores label-level LMs only");
  if (features.rows() > caps.max_frames || params.config.vocab > caps.max_vocab)
    throw EnumerationTooLarge("exhaustive search beyond caps (T=" +
                              std::to_string(features.rows()) + ", |V|=" +
                              std::to_string(params.config.vocab) + ")");
  const Matrix enc = encode(features, params);
  std::vector<LabelSeq> candidates;
  LabelSeq prefix;
  all_sequences(params.config.vocab, caps.max_labels, prefix, candidates);

  std::vector<Hypothesis> out;
  for (const LabelSeq& y : candidates) {
    Hypothesis h;
    h.labels = y;
    h.frame = static_cast<int>(enc.rows());
    if (kind == GridKind::kCtc) {
      if (min_ctc_frames(y) > enc.rows()) continue;
      const auto grid = rescale_blank(ctc_grid(enc, params), cfg.blank_scale);
      h.score_posterior = cfg.merge == MergeMode::kMax
                              ? sequence_log_posterior<MaxSemiring>(grid, y)
                              : sequence_log_posterior(grid, y);
    } else {
      const Activations acts{enc, decode_history(y, params)};
      auto grid = make_grid(kind, acts, params);
      if (kind == GridKind::kRnnt) grid = rescale_blank(grid, cfg.blank_scale);
      h.score_posterior = cfg.merge == MergeMode::kMax
                              ? sequence_log_posterior<MaxSemiring>(grid, y)
                              : sequence_log_posterior(grid, y);
      if (kind == GridKind::kHat) h.score_ilm = ilm_sequence(y, params);
    }
    if (lm.model) {
      LmState s = lm.model->start_state();
      for (Symbol l : y) h.score_lm += lm_score(lm, s, Alphabet::index_of(l));
      h.score_lm += lm_final(lm, s);
    }
    if (!std::isfinite(h.combined(cfg, kind))) continue;
    out.push_back(std::move(h));
  }
  if (out.empty()) throw DecodeFailure("no label sequence has finite score");
  std::sort(out.begin(), out.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    return better(a, b, cfg, kind);
  });
  return out;
}

Hypothesis exhaustive_decode(GridKind kind, const Matrix& features,
                             const ModelParams& params, const LmBinding& lm,
                             const DecodeConfig& cfg, const ExhaustiveCaps& caps) {
  return exhaustive_search(kind, features, params, lm, cfg, caps).front();
}

// WER ------------------------------------------------------------------------

WerStats& WerStats::operator+=(const WerStats& o) {
  ref_words += o.ref_words;
  errors += o.errors;
  deletions += o.deletions;
  insertions += o.insertions;
  substitutions += o.substitutions;
  return *this;
}

WerStats wer(const std::vector<std::string>& ref,
             const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1),
                          d[i][j - 1] + 1, d[i - 1][j] + 1});
  WerStats s;
  s.ref_words = static_cast<int>(n);
  s.errors = d[n][m];
  // Backtrace preferring match/substitution, then insertion, then deletion.
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++s.substitutions;
      --i;
      --j;
    } else if (j > 0 && d[i][j] == d[i][j - 1] + 1) {
      ++s.insertions;
      --j;
    } else {
      ++s.deletions;
      --i;
    }
  }
  return s;
}

void write_nbest(std::ostream& os, const std::string& utt_id,
                 const std::vector<Hypothesis>& nbest, const DecodeConfig& cfg,
                 GridKind kind, const std::vector<std::string>& texts) {
  char buf[256];
  for (std::size_t r = 0; r < nbest.size(); ++r) {
    const Hypothesis& h = nbest[r];
    const double post = cfg.lambda1 * h.score_posterior;
    const double ilm = kind == GridKind::kHat ? -cfg.lambda2 * h.score_ilm : 0.0;
    const double cov = kind == GridKind::kHat
                           ? 0.0
                           : cfg.coverage * static_cast<double>(h.labels.size());
    std::snprintf(buf, sizeof buf, "%zu\t%.9f\t%.9f\t%.9f\t%.9f\t%.9f", r + 1,
                  h.combined(cfg, kind), post, ilm, h.score_lm, cov);
    os << utt_id << '\t' << buf << '\t' << (r < texts.size() ? texts[r] : "")
       << '\n';
  }
}

}  // namespace hat
