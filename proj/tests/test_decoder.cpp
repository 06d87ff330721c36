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
#include "hat/loss.hpp"
#include "hat/selftest.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <random>
#include <sstream>

using namespace hat;

namespace {

using Gen = std::mt19937_64;

int pick(Gen& gen, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }

const std::vector<std::string> kNames = {"a", "b", "c"};

std::vector<std::string> names(int V) { return {kNames.begin(), kNames.begin() + V}; }

NGramModel label_lm(Gen& gen, int V) {
  std::vector<Sentence> corpus;
  for (int s = 0; s < 15; ++s) {
    Sentence sent;
    for (Symbol l : random_labels(gen, pick(gen, 1, 4), V)) sent.push_back(kNames[l - 1]);
    corpus.push_back(sent);
  }
  return train_ngram(corpus, {2, 0.5, true});
}

DecodeConfig exhaustive_beam(double lambda1, double lambda2) {
  DecodeConfig cfg;
  cfg.lambda1 = lambda1;
  cfg.lambda2 = lambda2;
  cfg.beam_width = 100000;
  cfg.max_labels_per_frame = 3;
  cfg.max_output_labels = 3;
  cfg.nbest = 100000;
  return cfg;
}

std::vector<LabelSeq> all_outputs(int V, int max_len) {
  std::vector<LabelSeq> out = {{}};
  for (std::size_t i = 0; i < out.size(); ++i)
    if (static_cast<int>(out[i].size()) < max_len)
      for (Symbol s = 1; s <= V; ++s) {
        LabelSeq y = out[i];
        y.push_back(s);
        out.push_back(y);
      }
  return out;
}

double lm_log_prob(const NGramModel* lm, const LabelSeq& y) {
  if (!lm) return 0.0;
  Sentence s;
  for (Symbol l : y) s.push_back(kNames[l - 1]);
  return lm->sentence_log_prob(s);
}

/// Argmax of the HAT decoding objective over all outputs up to three labels,
/// scored with the reference implementations.
LabelSeq oracle_hat_argmax(const Matrix& x, const ModelParams& p, const NGramModel* lm,
                           const DecodeConfig& cfg) {
  LabelSeq best;
  double best_score = log_zero<double>();
  for (const LabelSeq& y : all_outputs(p.config.vocab, cfg.max_output_labels)) {
    const double s = cfg.lambda1 * std::log(oracle::transducer_prob(GridKind::kHat, x, y, p)) -
                     cfg.lambda2 * oracle::ilm_log_prob(y, p) + lm_log_prob(lm, y);
    if (s > best_score || (s == best_score && y < best)) {
      best_score = s;
      best = y;
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("decoder") {

TEST_CASE("WER examples") {
  CHECK(wer({"a", "b"}, {"a", "b"}).errors == 0);
  const WerStats d = wer({"a", "b", "c"}, {"a", "c"});
  CHECK(d.errors == 1);
  CHECK(d.deletions == 1);
  CHECK(d.rate() == doctest::Approx(1.0 / 3.0));
  CHECK(wer({"a", "b"}, {"b", "a"}).errors == oracle::edit_distance({"a", "b"}, {"b", "a"}));
  CHECK(wer({"a", "b"}, {"b", "a"}).errors == 2);
  CHECK(wer({}, {}).rate() == 0.0);
  CHECK(wer({}, {"x"}).insertions == 1);
}

TEST_CASE("property: WER equals the minimal edit distance") {
  Gen gen(61);
  const std::vector<std::string> tok = {"a", "b", "c"};
  for (int i = 0; i < 300; ++i) {
    std::vector<std::string> r(pick(gen, 0, 5)), h(pick(gen, 0, 5));
    for (auto& w : r) w = tok[pick(gen, 0, 2)];
    for (auto& w : h) w = tok[pick(gen, 0, 2)];
    const WerStats s = wer(r, h);
    CHECK(s.errors == oracle::edit_distance(r, h));
    CHECK(s.errors == s.deletions + s.insertions + s.substitutions);
    CHECK(s.ref_words == static_cast<int>(r.size()));
    CHECK(static_cast<int>(h.size()) == s.ref_words - s.deletions + s.insertions);
  }
}

TEST_CASE("lexicon trie") {
  LexiconTrie lex;
  CHECK(lex.add_word("ab", {1, 2}) == 0);
  CHECK(lex.add_word("abc", {1, 2, 3}) == 1);
  CHECK(lex.add_word("c", {3}) == 2);
  const int n = lex.child(lex.child(0, 1), 2);
  REQUIRE(n > 0);
  CHECK(lex.node(n).words == std::vector<int>{0});
  CHECK(lex.child(0, 2) == -1);
  CHECK(lex.find_word("abc") == 1);
  CHECK(lex.find_word("zz") == -1);
  CHECK_THROWS_AS(lex.add_word("e", {}), ArgumentError);
  CHECK_THROWS_AS(lex.add_word("ab", {2}), ArgumentError);
  CHECK_THROWS_AS(lex.add_word("z", {0}), VocabularyError);
}

TEST_CASE("decode configuration errors") {
  const ModelParams p = random_small_model(1, 3);
  Gen gen(1);
  const Matrix x = random_features(gen, 3, 3);
  DecodeConfig cfg;
  cfg.beam_width = 0;
  CHECK_THROWS_AS(beam_decode_hat(x, p, {}, nullptr, cfg), ConfigError);
  cfg = DecodeConfig{};
  cfg.mode = LmMode::kWord;
  CHECK_THROWS_AS(beam_decode_hat(x, p, {}, nullptr, cfg), ConfigError);
  CHECK_THROWS_AS(beam_decode_fused(GridKind::kHat, x, p, {}, DecodeConfig{}), ArgumentError);
  ModelParams broken = p;
  broken.blank_bias = std::numeric_limits<double>::quiet_NaN();
  broken.joint_bias.setConstant(std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(beam_decode_hat(x, broken, {}, nullptr, DecodeConfig{}), DecodeFailure);
}

TEST_CASE("a blank-saturated model emits nothing") {
  ModelParams p = random_small_model(2, 3);
  p.blank_bias = 60.0;
  Gen gen(2);
  const auto hyps = beam_decode_hat(random_features(gen, 4, 3), p, {}, nullptr, DecodeConfig{});
  CHECK(hyps.front().labels.empty());
}

TEST_CASE("single-frame CTC picks the best of |V|+1 outcomes") {
  Gen gen(3);
  for (int i = 0; i < 10; ++i) {
    const ModelParams p = random_small_model(gen(), 3, 3, kInfiniteContext, 2.0);
    const Matrix x = random_features(gen, 1, 3);
    const auto f = oracle::encoder(x, p);
    const auto probs = oracle::cell(GridKind::kRnnt, f[0], std::vector<double>(f[0].size(), 0.0), p);
    const int best = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    DecodeConfig cfg = exhaustive_beam(1.0, 0.0);
    const auto h = beam_decode_fused(GridKind::kCtc, x, p, {}, cfg).front();
    CHECK(h.labels == (best == 0 ? LabelSeq{} : LabelSeq{best}));
  }
}

TEST_CASE("pure-posterior HAT search matches the reference argmax") {
  Gen gen(4);
  for (int i = 0; i < 20; ++i) {
    const int V = pick(gen, 1, 3), T = pick(gen, 1, 4);
    const ModelParams p = random_small_model(gen(), V, 3, kInfiniteContext, 1.5);
    const Matrix x = random_features(gen, T, 3);
    const DecodeConfig cfg = exhaustive_beam(1.0, 0.0);
    const auto beam = beam_decode_hat(x, p, {}, nullptr, cfg).front();
    CHECK(beam.labels == oracle_hat_argmax(x, p, nullptr, cfg));
    CHECK(beam.labels == exhaustive_decode(GridKind::kHat, x, p, {}, cfg).labels);
  }
}

TEST_CASE("HAT search with ILM and LM terms matches the reference argmax") {
  Gen gen(5);
  for (int i = 0; i < 20; ++i) {
    const int V = pick(gen, 1, 3), T = pick(gen, 1, 4);
    const ModelParams p = random_small_model(gen(), V, 3, kInfiniteContext, 1.5);
    const Matrix x = random_features(gen, T, 3);
    const NGramModel lm = label_lm(gen, V);
    const DecodeConfig cfg = exhaustive_beam(2.5, 0.95);
    const auto beam = beam_decode_hat(x, p, LmBinding::for_labels(lm, names(V)), nullptr, cfg).front();
    CHECK(beam.labels == oracle_hat_argmax(x, p, &lm, cfg));
  }
}

TEST_CASE("fused search with unit blank scale equals the exhaustive fused search") {
  Gen gen(6);
  for (GridKind kind : {GridKind::kRnnt, GridKind::kCtc})
    for (int i = 0; i < 15; ++i) {
      const int V = pick(gen, 1, 3), T = pick(gen, 1, 4);
      const ModelParams p = random_small_model(gen(), V, 3, kInfiniteContext, 1.5);
      const Matrix x = random_features(gen, T, 3);
      const NGramModel lm = label_lm(gen, V);
      const LmBinding binding = LmBinding::for_labels(lm, names(V));
      DecodeConfig cfg = exhaustive_beam(2.5, 0.0);
      const auto beam = beam_decode_fused(kind, x, p, binding, cfg).front();
      CHECK(beam.labels == exhaustive_decode(kind, x, p, binding, cfg).labels);
    }
}

TEST_CASE("lowering the blank scale never shortens the output on a fixed grid") {
  const ModelParams p = random_small_model(47, 2, 3, kInfiniteContext, 1.0);
  Gen gen(47);
  const Matrix x = random_features(gen, 3, 3);
  for (GridKind kind : {GridKind::kRnnt, GridKind::kCtc}) {
    std::size_t previous = 0;
    for (double beta : {4.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.03, 0.01, 1e-3, 1e-5}) {
      DecodeConfig cfg = exhaustive_beam(1.0, 0.0);
      cfg.blank_scale = beta;
      const Hypothesis h = exhaustive_decode(kind, x, p, {}, cfg);
      CAPTURE(beta);
      CHECK(h.labels.size() >= previous);
      CHECK(beam_decode_fused(kind, x, p, {}, cfg).front().labels == h.labels);
      previous = h.labels.size();
    }
    CHECK(previous > 0);
  }
}

TEST_CASE("a large coverage reward selects the longest feasible output") {
  Gen gen(7);
  for (int i = 0; i < 10; ++i) {
    const ModelParams p = random_small_model(gen(), 2);
    const int T = pick(gen, 1, 4);
    const Matrix x = random_features(gen, T, 3);
    DecodeConfig cfg = exhaustive_beam(1.0, 0.0);
    cfg.coverage = 1000.0;
    CHECK(beam_decode_fused(GridKind::kRnnt, x, p, {}, cfg).front().labels.size() == 3);
    const auto ctc = beam_decode_fused(GridKind::kCtc, x, p, {}, cfg).front();
    CHECK(static_cast<int>(ctc.labels.size()) == std::min(T, 3));
  }
}

TEST_CASE("the ILM weight moves the argmax at the computed crossover") {
  Gen gen(8);
  int crossings = 0;
  for (int i = 0; i < 20; ++i) {
    const ModelParams p = random_small_model(gen(), 3, 3, kInfiniteContext, 1.5);
    const Matrix x = random_features(gen, 3, 3);
    const DecodeConfig base = exhaustive_beam(1.0, 0.0);
    const auto all = exhaustive_search(GridKind::kHat, x, p, {}, base);
    const Hypothesis& a = all.front();
    double crossover = std::numeric_limits<double>::infinity();
    LabelSeq winner;
    for (const Hypothesis& b : all) {
      if (b.score_ilm >= a.score_ilm) continue;
      const double at = (b.score_posterior - a.score_posterior) * base.lambda1 /
                        (b.score_ilm - a.score_ilm);
      if (at < crossover) {
        crossover = at;
        winner = b.labels;
      }
    }
    if (!std::isfinite(crossover) || crossover > 5.0) continue;
    ++crossings;
    DecodeConfig before = base, after = base;
    before.lambda2 = crossover * (1 - 1e-6);
    after.lambda2 = crossover * (1 + 1e-6);
    CHECK(exhaustive_decode(GridKind::kHat, x, p, {}, before).labels == a.labels);
    CHECK(exhaustive_decode(GridKind::kHat, x, p, {}, after).labels == winner);
  }
  CHECK(crossings > 0);
}

TEST_CASE("word mode emits whole words only") {
  ModelParams p = random_small_model(9, 3);
  Gen gen(9);
  LexiconTrie lex;
  lex.add_word("ab", {1, 2});
  lex.add_word("c", {3});
  const NGramModel lm = train_ngram({{"ab", "c"}, {"c"}}, {2, 0.5, true});
  DecodeConfig cfg;
  cfg.mode = LmMode::kWord;
  for (int i = 0; i < 5; ++i) {
    const auto hyps =
        beam_decode_hat(random_features(gen, 5, 3), p, LmBinding::for_words(lm, lex), &lex, cfg);
    for (const auto& h : hyps) {
      LabelSeq spelled;
      for (int w : h.words) {
        const LabelSeq& pron = lex.pronunciation(w);
        spelled.insert(spelled.end(), pron.begin(), pron.end());
      }
      CHECK(spelled == h.labels);
    }
  }
}

TEST_CASE("n-best output lists ranked hypotheses") {
  const ModelParams p = random_small_model(10, 2);
  Gen gen(10);
  DecodeConfig cfg;
  cfg.nbest = 3;
  const auto hyps = beam_decode_hat(random_features(gen, 3, 3), p, {}, nullptr, cfg);
  CHECK(hyps.size() <= 3);
  std::vector<std::string> texts(hyps.size(), "x");
  std::ostringstream os;
  write_nbest(os, "utt", hyps, cfg, GridKind::kHat, texts);
  CHECK(os.str().rfind("utt\t1\t", 0) == 0);
}

TEST_CASE("property: stored components recombine to the combined score") {
  Gen gen(71);
  for (int i = 0; i < 20; ++i) {
    const int V = pick(gen, 1, 3), T = pick(gen, 1, 4);
    const ModelParams p = random_small_model(gen(), V, 3, kInfiniteContext, 1.5);
    const Matrix x = random_features(gen, T, 3);
    const NGramModel lm = label_lm(gen, V);
    DecodeConfig cfg = exhaustive_beam(2.5, 0.95);
    cfg.nbest = 10;
    for (const auto& h : beam_decode_hat(x, p, LmBinding::for_labels(lm, names(V)), nullptr, cfg)) {
      const double post = std::log(oracle::transducer_prob(GridKind::kHat, x, h.labels, p));
      const double ilm = oracle::ilm_log_prob(h.labels, p);
      const double lmv = lm_log_prob(&lm, h.labels);
      CHECK(std::abs(h.score_posterior - post) <= 1e-9);
      CHECK(std::abs(h.score_ilm - ilm) <= 1e-9);
      CHECK(std::abs(h.score_lm - lmv) <= 1e-9);
      CHECK(std::abs(h.combined(cfg, GridKind::kHat) - (2.5 * post - 0.95 * ilm + lmv)) <= 1e-9);
    }
  }
}

TEST_CASE("property: with no ILM weight and no LM the argmax ignores lambda1") {
  Gen gen(72);
  for (int i = 0; i < 20; ++i) {
    const int V = pick(gen, 1, 3), T = pick(gen, 1, 4);
    const ModelParams p = random_small_model(gen(), V, 3, kInfiniteContext, 1.5);
    const Matrix x = random_features(gen, T, 3);
    const LabelSeq ref = beam_decode_hat(x, p, {}, nullptr, exhaustive_beam(1.0, 0.0)).front().labels;
    for (double l1 : {0.1, 0.5, 2.5, 10.0})
      CHECK(beam_decode_hat(x, p, {}, nullptr, exhaustive_beam(l1, 0.0)).front().labels == ref);
  }
}

TEST_CASE("property: merging by max never exceeds the marginal") {
  Gen gen(73);
  for (int i = 0; i < 20; ++i) {
    const int V = pick(gen, 1, 3), T = pick(gen, 1, 4);
    const ModelParams p = random_small_model(gen(), V, 3, kInfiniteContext, 1.5);
    const Matrix x = random_features(gen, T, 3);
    DecodeConfig cfg = exhaustive_beam(1.0, 0.0);
    cfg.merge = MergeMode::kMax;
    for (const auto& h : beam_decode_hat(x, p, {}, nullptr, cfg)) {
      const Activations acts = forward(x, h.labels, p);
      const double marginal = -hat_loss(hat_grid(acts, p), h.labels).neg_log_posterior;
      const double best_path = sequence_log_posterior<MaxSemiring>(hat_grid(acts, p), h.labels);
      CHECK(h.score_posterior <= marginal + 1e-12);
      CHECK(std::abs(h.score_posterior - best_path) <= 1e-9);
    }
  }
}

TEST_CASE("property: decoding is deterministic") {
  Gen gen(74);
  const ModelParams p = random_small_model(gen(), 3);
  const Matrix x = random_features(gen, 6, 3);
  const NGramModel lm = label_lm(gen, 3);
  const LmBinding binding = LmBinding::for_labels(lm, names(3));
  DecodeConfig cfg;
  const auto a = beam_decode_hat(x, p, binding, nullptr, cfg);
  const auto b = beam_decode_hat(x, p, binding, nullptr, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].labels == b[i].labels);
    CHECK(a[i].score_posterior == b[i].score_posterior);
    CHECK(a[i].score_ilm == b[i].score_ilm);
    CHECK(a[i].score_lm == b[i].score_lm);
  }
}

}  // TEST_SUITE
