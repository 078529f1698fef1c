#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "socratic/error.hpp"
#include "socratic/metrics.hpp"
#include "socratic/util.hpp"

namespace socratic {

namespace {

// Counting view of a staged alignment problem. Exact stage: word w gets
// exactly E[w] = min(cand count, ref count) pairs. Stem stage: the tokens
// left over by the exact stage pair up by stem, S[s] pairs per stem class.
// Which side has leftovers is fixed per word, so both totals are fixed and
// the search only decides positions.
struct Problem {
  std::vector<int> cw, rw;  // word ids
  std::vector<int> cs, rs;  // stem ids
  std::vector<int> cand_count, ref_count, exact_quota;
  std::vector<int> cand_left;  // candidate tokens per word that skip the exact stage
  std::vector<int> ref_spare;  // reference tokens per word the exact stage leaves over
  std::vector<int> stem_quota;
  std::vector<int> occurrences_before;  // per candidate position, same-word tokens to its left
  std::vector<std::vector<int>> ref_by_word, ref_by_stem;

  // Slots into State::counters.
  std::vector<int> word_slot;   // words with 0 < ref count < cand count: non-exact tokens used
  std::vector<int> stem_slot;   // stems with S > 0: [stem pairs, remaining potential]
  std::vector<int> spare_slot;  // spare reference words in an active stem: stem pairs taken
  int n_word_slots = 0;
  int n_stem_slots = 0;
  int n_spare_slots = 0;
  std::vector<int> initial_potential;  // per stem slot
};

Problem build_problem(const TokenSequence& candidate, const TokenSequence& reference) {
  Problem p;
  std::unordered_map<std::string_view, int> word_ids;
  std::unordered_map<std::string, int> stem_ids;
  std::vector<int> word_stem;
  auto intern = [&](const std::string& token) {
    auto [it, fresh] = word_ids.emplace(token, static_cast<int>(word_ids.size()));
    if (fresh) {
      auto [sit, sfresh] = stem_ids.emplace(porter_stem(token), static_cast<int>(stem_ids.size()));
      (void)sfresh;
      word_stem.push_back(sit->second);
    }
    return it->second;
  };
  for (const auto& t : candidate) p.cw.push_back(intern(t));
  for (const auto& t : reference) p.rw.push_back(intern(t));
  const std::size_t n_words = word_ids.size();
  const std::size_t n_stems = stem_ids.size();
  for (int w : p.cw) p.cs.push_back(word_stem[static_cast<std::size_t>(w)]);
  for (int w : p.rw) p.rs.push_back(word_stem[static_cast<std::size_t>(w)]);

  p.cand_count.assign(n_words, 0);
  p.ref_count.assign(n_words, 0);
  p.occurrences_before.resize(p.cw.size());
  for (std::size_t i = 0; i < p.cw.size(); ++i) p.occurrences_before[i] = p.cand_count[static_cast<std::size_t>(p.cw[i])]++;
  p.ref_by_word.resize(n_words);
  p.ref_by_stem.resize(n_stems);
  for (std::size_t j = 0; j < p.rw.size(); ++j) {
    ++p.ref_count[static_cast<std::size_t>(p.rw[j])];
    p.ref_by_word[static_cast<std::size_t>(p.rw[j])].push_back(static_cast<int>(j));
    p.ref_by_stem[static_cast<std::size_t>(p.rs[j])].push_back(static_cast<int>(j));
  }

  p.exact_quota.resize(n_words);
  p.cand_left.resize(n_words);
  p.ref_spare.resize(n_words);
  std::vector<int> cand_left_by_stem(n_stems, 0), ref_spare_by_stem(n_stems, 0);
  for (std::size_t w = 0; w < n_words; ++w) {
    p.exact_quota[w] = std::min(p.cand_count[w], p.ref_count[w]);
    p.cand_left[w] = p.cand_count[w] - p.exact_quota[w];
    p.ref_spare[w] = p.ref_count[w] - p.exact_quota[w];
    cand_left_by_stem[static_cast<std::size_t>(word_stem[w])] += p.cand_left[w];
    ref_spare_by_stem[static_cast<std::size_t>(word_stem[w])] += p.ref_spare[w];
  }
  p.stem_quota.resize(n_stems);
  for (std::size_t s = 0; s < n_stems; ++s) p.stem_quota[s] = std::min(cand_left_by_stem[s], ref_spare_by_stem[s]);

  p.word_slot.assign(n_words, -1);
  p.spare_slot.assign(n_words, -1);
  p.stem_slot.assign(n_stems, -1);
  for (std::size_t w = 0; w < n_words; ++w) {
    if (p.ref_count[w] > 0 && p.cand_left[w] > 0) p.word_slot[w] = p.n_word_slots++;
  }
  for (std::size_t s = 0; s < n_stems; ++s) {
    if (p.stem_quota[s] > 0) {
      p.stem_slot[s] = p.n_stem_slots++;
      p.initial_potential.push_back(cand_left_by_stem[s]);
    }
  }
  for (std::size_t w = 0; w < n_words; ++w) {
    if (p.ref_spare[w] > 0 && p.stem_slot[static_cast<std::size_t>(word_stem[w])] >= 0)
      p.spare_slot[w] = p.n_spare_slots++;
  }
  return p;
}

struct State {
  std::vector<std::uint64_t> used;  // reference positions taken
  std::vector<int> counters;
  int prev = -1;  // reference position matched by the previous candidate token
  int chunks = 0;
  int exact = 0;
  int stem = 0;

  bool is_used(int j) const { return (used[static_cast<std::size_t>(j) / 64] >> (j % 64)) & 1U; }
  void take(int j) { used[static_cast<std::size_t>(j) / 64] |= std::uint64_t{1} << (j % 64); }

  std::uint64_t key() const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(prev + 1);
    auto mix = [&h](std::uint64_t v) {
      std::uint64_t s = h ^ v;
      h = splitmix64(s);
    };
    for (auto u : used) mix(u);
    for (int c : counters) mix(static_cast<std::uint64_t>(c));
    return h;
  }
  bool same_position(const State& o) const { return prev == o.prev && used == o.used && counters == o.counters; }
};

class Search {
 public:
  Search(const Problem& p, const MeteorOptions& o) : p_(p), o_(o) {}

  State run() {
    State start;
    start.used.assign((p_.rw.size() + 63) / 64, 0);
    start.counters.assign(static_cast<std::size_t>(p_.n_word_slots + 2 * p_.n_stem_slots + p_.n_spare_slots), 0);
    for (int s = 0; s < p_.n_stem_slots; ++s) potential(start, s) = p_.initial_potential[static_cast<std::size_t>(s)];

    std::vector<State> beam{std::move(start)};
    for (std::size_t i = 0; i < p_.cw.size(); ++i) {
      next_.clear();
      index_.clear();
      for (const State& st : beam) expand(st, i);
      std::stable_sort(next_.begin(), next_.end(),
                       [](const State& a, const State& b) { return a.chunks < b.chunks; });
      if (next_.size() > o_.beam_width) next_.resize(o_.beam_width);
      beam.swap(next_);
    }
    return beam.front();
  }

 private:
  std::size_t nonexact_index(int word_slot) const { return static_cast<std::size_t>(word_slot); }
  std::size_t stem_index(int slot) const { return static_cast<std::size_t>(p_.n_word_slots + 2 * slot); }
  std::size_t spare_index(int slot) const {
    return static_cast<std::size_t>(p_.n_word_slots + 2 * p_.n_stem_slots + slot);
  }

  int& nonexact_used(State& st, int word_slot) const { return st.counters[nonexact_index(word_slot)]; }
  int& stem_used(State& st, int slot) const { return st.counters[stem_index(slot)]; }
  int& potential(State& st, int slot) const { return st.counters[stem_index(slot) + 1]; }
  int& spare_used(State& st, int slot) const { return st.counters[spare_index(slot)]; }
  int nonexact_used(const State& st, int word_slot) const { return st.counters[nonexact_index(word_slot)]; }
  int stem_used(const State& st, int slot) const { return st.counters[stem_index(slot)]; }
  int potential(const State& st, int slot) const { return st.counters[stem_index(slot) + 1]; }
  int spare_used(const State& st, int slot) const { return st.counters[spare_index(slot)]; }

  void push(State&& st) {
    const std::uint64_t k = st.key();
    auto [it, fresh] = index_.emplace(k, next_.size());
    if (fresh) {
      next_.push_back(std::move(st));
      return;
    }
    State& old = next_[it->second];
    if (old.same_position(st)) {
      if (st.chunks < old.chunks) old = std::move(st);
    } else {
      next_.push_back(std::move(st));
    }
  }

  void add_match(const State& st, int j, bool exact, std::size_t i) {
    State nx = st;
    nx.take(j);
    if (!(st.prev >= 0 && j == st.prev + 1)) ++nx.chunks;
    nx.prev = j;
    if (exact) {
      ++nx.exact;
    } else {
      ++nx.stem;
      const int w = p_.cw[i];
      const int sslot = p_.stem_slot[static_cast<std::size_t>(p_.cs[i])];
      ++stem_used(nx, sslot);
      --potential(nx, sslot);
      if (p_.word_slot[static_cast<std::size_t>(w)] >= 0) ++nonexact_used(nx, p_.word_slot[static_cast<std::size_t>(w)]);
      ++spare_used(nx, p_.spare_slot[static_cast<std::size_t>(p_.rw[static_cast<std::size_t>(j)])]);
    }
    push(std::move(nx));
  }

  // Picks which reference positions to branch on: the chunk-extending one
  // first, then positions whose successor could extend a chunk with the
  // next candidate token, then the rest, capped at max_branches.
  std::vector<int> choose(const State& st, std::vector<int>& valid, std::size_t i) const {
    std::vector<int> out;
    auto it = std::find(valid.begin(), valid.end(), st.prev + 1);
    if (st.prev >= 0 && it != valid.end()) {
      out.push_back(*it);
      valid.erase(it);
    }
    if (valid.size() <= o_.max_branches) {
      out.insert(out.end(), valid.begin(), valid.end());
      return out;
    }
    std::vector<int> rest;
    const bool has_next = i + 1 < p_.cw.size();
    for (int j : valid) {
      const std::size_t nj = static_cast<std::size_t>(j) + 1;
      const bool extendable = has_next && nj < p_.rw.size() && !st.is_used(static_cast<int>(nj)) &&
                              (p_.rw[nj] == p_.cw[i + 1] || p_.rs[nj] == p_.cs[i + 1]);
      if (extendable && out.size() < o_.max_branches) {
        out.push_back(j);
      } else {
        rest.push_back(j);
      }
    }
    for (int j : rest) {
      if (out.size() >= o_.max_branches + 1) break;
      out.push_back(j);
    }
    return out;
  }

  void expand(const State& st, std::size_t i) {
    const auto w = static_cast<std::size_t>(p_.cw[i]);
    const auto s = static_cast<std::size_t>(p_.cs[i]);
    const int wslot = p_.word_slot[w];

    bool exact_allowed = p_.ref_count[w] > 0;
    bool nonexact_allowed = p_.cand_left[w] > 0;
    if (wslot >= 0) {
      const int ne = nonexact_used(st, wslot);
      const int exact_used = p_.occurrences_before[i] - ne;
      exact_allowed = exact_used < p_.exact_quota[w];
      nonexact_allowed = ne < p_.cand_left[w];
    }

    if (exact_allowed) {
      std::vector<int> valid;
      for (int j : p_.ref_by_word[w]) {
        if (!st.is_used(j)) valid.push_back(j);
      }
      for (int j : choose(st, valid, i)) add_match(st, j, true, i);
    }
    if (!nonexact_allowed) return;

    const int sslot = p_.stem_slot[s];
    if (sslot < 0) {
      State nx = st;
      nx.prev = -1;
      if (wslot >= 0) ++nonexact_used(nx, wslot);
      push(std::move(nx));
      return;
    }
    if (stem_used(st, sslot) < p_.stem_quota[s]) {
      std::vector<int> valid;
      for (int j : p_.ref_by_stem[s]) {
        const auto rwj = static_cast<std::size_t>(p_.rw[static_cast<std::size_t>(j)]);
        const int spare = p_.spare_slot[rwj];
        if (spare >= 0 && spare_used(st, spare) < p_.ref_spare[rwj] && !st.is_used(j)) valid.push_back(j);
      }
      for (int j : choose(st, valid, i)) add_match(st, j, false, i);
    }
    // Leaving the token unmatched is only allowed while the remaining
    // candidates can still fill the stem quota.
    if (stem_used(st, sslot) + potential(st, sslot) - 1 >= p_.stem_quota[s]) {
      State nx = st;
      nx.prev = -1;
      --potential(nx, sslot);
      if (wslot >= 0) ++nonexact_used(nx, wslot);
      push(std::move(nx));
    }
  }

  const Problem& p_;
  const MeteorOptions& o_;
  std::vector<State> next_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

}  // namespace

MeteorDetail meteor_detail(const TokenSequence& candidate, const TokenSequence& reference,
                           const MeteorOptions& options) {
  if (reference.empty()) throw PreconditionError("meteor: reference is empty");
  if (options.beam_width < 1) throw PreconditionError("meteor: beam_width must be >= 1");
  MeteorDetail d;
  if (candidate.empty()) return d;

  const Problem p = build_problem(candidate, reference);
  int total = 0;
  for (int q : p.exact_quota) total += q;
  for (int q : p.stem_quota) total += q;
  if (total == 0) return d;

  const State best = Search(p, options).run();
  d.exact_matches = best.exact;
  d.stem_matches = best.stem;
  d.matches = best.exact + best.stem;
  d.chunks = best.chunks;
  const double m = d.matches;
  d.precision = m / static_cast<double>(candidate.size());
  d.recall = m / static_cast<double>(reference.size());
  d.fmean = 10.0 * d.precision * d.recall / (d.recall + 9.0 * d.precision);
  d.penalty = 0.5 * std::pow(d.chunks / m, 3.0);
  d.score = d.fmean * (1.0 - d.penalty);
  return d;
}

double meteor(const TokenSequence& candidate, const TokenSequence& reference, const MeteorOptions& options) {
  return meteor_detail(candidate, reference, options).score;
}

}  // namespace socratic
