#pragma once

// Deliberately naive reference implementations used only to cross-check
// the library. They share no code with core/.

#include <string>
#include <vector>

namespace socratic::oracle {

using Tokens = std::vector<std::string>;

/// Sentence BLEU-4 by direct n-gram enumeration, same smoothing rule.
double bleu(const Tokens& candidate, const Tokens& reference);

/// LCS length by trying every subsequence of the shorter side.
int lcs_brute_force(const Tokens& a, const Tokens& b);
double rouge_l(const Tokens& candidate, const Tokens& reference);

struct MeteorResult {
  int exact = 0;
  int stem = 0;
  int chunks = 0;
  double score = 0.0;
};

/// Exhaustive METEOR: every alignment is enumerated and the best one
/// maximizes exact matches, then stem matches, then minimizes chunks.
/// `stems` holds the stem of each token (same order as the inputs).
MeteorResult meteor_exhaustive(const Tokens& candidate, const Tokens& reference, const Tokens& cand_stems,
                               const Tokens& ref_stems);

/// Welch t-test through Boost.Math's Student-t distribution.
struct Welch {
  double t;
  double df;
  double p;
};
Welch welch(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace socratic::oracle
