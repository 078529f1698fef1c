#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "socratic/agents.hpp"
#include "socratic/backend.hpp"
#include "socratic/text.hpp"

namespace socratic {

/// Learner replies of turns 1..upto_turn joined by single spaces. The
/// scripted opener is not part of it. Throws PreconditionError when
/// upto_turn is outside 1..turns.size().
std::string cumulative_learner_text(const Transcript& transcript, int upto_turn);

/// Sentence BLEU-4 on a 0..100 scale with uniform weights, clipped n-gram
/// precisions and the brevity penalty exp(1 - r/c) for c < r. A zero
/// numerator at order n is replaced by 1 / (2^k * denominator), k counting
/// the zero orders seen so far from 1. Orders longer than the candidate
/// have no n-grams at all and are left out of the geometric mean.
/// Empty candidate scores 0. Throws PreconditionError on an empty reference.
double bleu(const TokenSequence& candidate, const TokenSequence& reference);

/// LCS-based F1 in [0, 1]. Throws PreconditionError on an empty reference.
double rouge_l(const TokenSequence& candidate, const TokenSequence& reference);

struct MeteorOptions {
  /// Partial alignments kept per candidate position.
  std::size_t beam_width = 32;
  /// Target positions tried per candidate token in addition to the one
  /// that extends the current chunk.
  std::size_t max_branches = 8;
};

struct MeteorDetail {
  int matches = 0;
  int exact_matches = 0;
  int stem_matches = 0;
  int chunks = 0;
  double precision = 0.0;
  double recall = 0.0;
  double fmean = 0.0;
  double penalty = 0.0;
  double score = 0.0;
};

/// METEOR with an exact stage followed by a Porter-stem stage. Each stage
/// matches as many tokens as possible; among those alignments a beam search
/// picks one with few chunks. Fmean = 10PR / (R + 9P) and the fragmentation
/// penalty is 0.5 (chunks / m)^3. Throws PreconditionError on an empty
/// reference.
MeteorDetail meteor_detail(const TokenSequence& candidate, const TokenSequence& reference,
                           const MeteorOptions& options = {});

double meteor(const TokenSequence& candidate, const TokenSequence& reference, const MeteorOptions& options = {});

struct BertScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Greedy cosine matching without IDF weighting or baseline rescaling.
/// F1 is the harmonic mean of P and R when they share a sign, else 0.
/// Throws PreconditionError on empty input or mismatched dimensions and
/// DataError on a zero-norm vector.
BertScore bertscore_from_embeddings(const TokenEmbeddings& candidate, const TokenEmbeddings& reference);

/// Embeds both texts and scores them. Throws PreconditionError on empty
/// text; embedder errors propagate.
BertScore bertscore(std::string_view candidate_text, std::string_view reference_text, Embedder& embedder);

}  // namespace socratic
