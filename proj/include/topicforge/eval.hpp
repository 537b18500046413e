#ifndef TOPICFORGE_EVAL_HPP
#define TOPICFORGE_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "topicforge/corpus.hpp"
#include "topicforge/defaults.hpp"
#include "topicforge/error.hpp"
#include "topicforge/lda.hpp"
#include "topicforge/parallel.hpp"
#include "topicforge/random.hpp"

namespace topicforge {

struct CoherenceConfig {
  std::size_t top_n = defaults::kTopWords;
  std::size_t window_size = defaults::kCoherenceWindow;
  /// Joint probabilities below this are treated as zero (NPMI = -1).
  double npmi_epsilon = 1e-12;

  void validate() const {
    if (top_n < 2) throw UsageError("coherence top_n must be at least 2");
    if (window_size < 2) throw UsageError("coherence window size must be at least 2");
    if (!(npmi_epsilon > 0.0)) throw UsageError("npmi epsilon must be positive");
  }
};

// ---------------------------------------------------------------------------
// Sliding-window co-occurrence

/// Window counts for a subset of terms. Local index i refers to words[i].
class WindowCounts {
 public:
  WindowCounts() = default;
  WindowCounts(std::vector<std::uint32_t> words, std::size_t dense_limit)
      : words_(std::move(words)), single_(words_.size(), 0) {
    dense_ = words_.size() <= dense_limit;
    if (dense_) dense_pairs_.assign(words_.size() * words_.size(), 0);
  }

  const std::vector<std::uint32_t>& words() const { return words_; }
  std::uint64_t total_windows() const { return total_; }
  std::uint64_t word_windows(std::size_t i) const { return single_[i]; }
  std::uint64_t pair_windows(std::size_t i, std::size_t j) const {
    if (i == j) return single_[i];
    if (i > j) std::swap(i, j);
    if (dense_) return dense_pairs_[i * words_.size() + j];
    auto it = sparse_pairs_.find(key(i, j));
    return it == sparse_pairs_.end() ? 0 : it->second;
  }

  double probability(std::size_t i) const {
    return total_ ? static_cast<double>(single_[i]) / static_cast<double>(total_) : 0.0;
  }
  double joint_probability(std::size_t i, std::size_t j) const {
    return total_ ? static_cast<double>(pair_windows(i, j)) / static_cast<double>(total_) : 0.0;
  }

  /// Visits every pair (i < j) with a nonzero count.
  template <typename Fn>
  void for_each_pair(Fn&& fn) const {
    const std::size_t m = words_.size();
    if (dense_) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
          if (auto c = dense_pairs_[i * m + j]) fn(i, j, c);
    } else {
      for (const auto& [k, c] : sparse_pairs_) fn(k >> 32, k & 0xffffffffULL, c);
    }
  }

  void add_windows(std::uint64_t n) { total_ += n; }
  void add_word(std::size_t i, std::uint64_t n) { single_[i] += n; }
  void add_pair(std::size_t i, std::size_t j, std::uint64_t n) {
    if (n == 0) return;
    if (i > j) std::swap(i, j);
    if (dense_)
      dense_pairs_[i * words_.size() + j] += n;
    else
      sparse_pairs_[key(i, j)] += n;
  }

  void merge(const WindowCounts& other) {
    total_ += other.total_;
    for (std::size_t i = 0; i < single_.size(); ++i) single_[i] += other.single_[i];
    other.for_each_pair([&](std::size_t i, std::size_t j, std::uint64_t c) { add_pair(i, j, c); });
  }

 private:
  static std::uint64_t key(std::size_t i, std::size_t j) {
    return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
  }

  std::vector<std::uint32_t> words_;
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> single_;
  bool dense_ = true;
  std::vector<std::uint64_t> dense_pairs_;
  std::unordered_map<std::uint64_t, std::uint64_t> sparse_pairs_;
};

namespace detail {

// Counts one document. Rather than rescanning each window, it tracks when
// every word's current run of presence began; a word (or pair) is credited
// with the number of windows it spanned when it drops out.
inline void count_document_windows(std::span<const std::uint32_t> tokens,
                                   std::span<const std::int32_t> local_of,
                                   std::size_t window, WindowCounts& out,
                                   std::vector<std::uint32_t>& count,
                                   std::vector<std::uint64_t>& enter,
                                   std::vector<std::int32_t>& present,
                                   std::vector<std::int32_t>& slot) {
  const std::size_t n = tokens.size();
  if (n == 0) return;
  const std::uint64_t windows = n <= window ? 1 : n - window + 1;
  auto local = [&](std::size_t pos) -> std::int32_t {
    const auto t = tokens[pos];
    return t < local_of.size() ? local_of[t] : -1;
  };
  auto add = [&](std::int32_t x, std::uint64_t t) {
    if (x < 0) return;
    if (count[x]++ == 0) {
      enter[x] = t;
      slot[x] = static_cast<std::int32_t>(present.size());
      present.push_back(x);
    }
  };
  auto remove = [&](std::int32_t x, std::uint64_t t) {
    if (x < 0) return;
    if (--count[x] != 0) return;
    out.add_word(x, t - enter[x]);
    for (auto y : present)
      if (y != x) out.add_pair(x, y, t - std::max(enter[x], enter[y]));
    const auto pos = slot[x];
    present[pos] = present.back();
    slot[present[pos]] = pos;
    present.pop_back();
  };

  for (std::size_t p = 0; p < std::min(n, window); ++p) add(local(p), 0);
  for (std::uint64_t s = 1; s < windows; ++s) {
    add(local(s + window - 1), s);
    remove(local(s - 1), s);
  }
  for (std::size_t a = 0; a < present.size(); ++a) {
    const auto x = present[a];
    out.add_word(x, windows - enter[x]);
    for (std::size_t b = a + 1; b < present.size(); ++b) {
      const auto y = present[b];
      out.add_pair(x, y, windows - std::max(enter[x], enter[y]));
    }
    count[x] = 0;
  }
  present.clear();
  out.add_windows(windows);
}

}  // namespace detail

/// Boolean sliding-window counts over the token streams for the given words.
///
/// Windows advance one token at a time; a document shorter than the window
/// forms a single window and an empty document contributes none.
inline WindowCounts window_counts(const TokenStreams& docs, std::span<const std::uint32_t> words,
                                  std::size_t window_size, unsigned threads = 1,
                                  std::size_t dense_limit = 2048) {
  if (window_size < 2) throw UsageError("window size must be at least 2");
  if (docs.empty()) throw DataError("window counts need a nonempty reference corpus");
  std::vector<std::uint32_t> unique(words.begin(), words.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<std::uint32_t> ordered;
  {
    std::unordered_set<std::uint32_t> seen;
    for (auto w : words)
      if (seen.insert(w).second) ordered.push_back(w);
  }
  const std::size_t limit = unique.empty() ? 0 : unique.back() + 1;
  std::vector<std::int32_t> local_of(limit, -1);
  for (std::size_t i = 0; i < ordered.size(); ++i)
    local_of[ordered[i]] = static_cast<std::int32_t>(i);

  const std::size_t m = ordered.size();
  const unsigned chunks = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(docs.size())));
  std::vector<WindowCounts> partial(chunks, WindowCounts(ordered, dense_limit));
  const std::size_t per = (docs.size() + chunks - 1) / chunks;
  parallel_for(chunks, chunks, [&](std::size_t c) {
    std::vector<std::uint32_t> count(m, 0);
    std::vector<std::uint64_t> enter(m, 0);
    std::vector<std::int32_t> present, slot(m, -1);
    for (std::size_t d = c * per; d < std::min(docs.size(), (c + 1) * per); ++d)
      detail::count_document_windows(docs[d], local_of, window_size, partial[c], count, enter,
                                     present, slot);
  });
  for (std::size_t c = 1; c < chunks; ++c) partial[0].merge(partial[c]);
  return std::move(partial[0]);
}

/// Normalized pointwise mutual information, clamped to [-1, 1]. Returns
/// nullopt when either marginal is zero. A joint probability below epsilon
/// gives -1; a pair that occurs exactly as often as each of its words gives 1.
inline std::optional<double> npmi(double p_i, double p_j, double p_ij, double epsilon = 1e-12) {
  if (p_i <= 0.0 || p_j <= 0.0) return std::nullopt;
  if (p_ij < epsilon) return -1.0;
  if (p_ij == p_i && p_ij == p_j) return 1.0;
  const double denom = -std::log(p_ij);
  if (denom <= 0.0) return 1.0;  // p_ij == 1 forces p_i == p_j == 1
  const double value = std::log(p_ij / (p_i * p_j)) / denom;
  return std::clamp(value, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Coherence and similarity

struct TopicCoherence {
  std::vector<std::optional<double>> scores;  // nullopt when skipped
  double mean = std::numeric_limits<double>::quiet_NaN();
  std::size_t skipped = 0;
};

namespace detail {
inline double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}
}  // namespace detail

/// Score of one word set from precomputed window counts (local indices).
/// Each word gets a context vector of NPMI values against the set; the score
/// is the mean cosine between those vectors and their sum.
inline std::optional<double> word_set_coherence(const WindowCounts& counts,
                                                std::span<const std::size_t> local,
                                                double epsilon) {
  std::vector<std::size_t> usable;
  for (auto i : local)
    if (counts.word_windows(i) > 0) usable.push_back(i);
  const std::size_t n = usable.size();
  if (n < 2) return std::nullopt;
  std::vector<double> vectors(n * n);
  std::vector<double> total(n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const double v = a == b ? 1.0
                              : *npmi(counts.probability(usable[a]), counts.probability(usable[b]),
                                      counts.joint_probability(usable[a], usable[b]), epsilon);
      vectors[a * n + b] = v;
      total[b] += v;
    }
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    sum += detail::cosine(std::span(vectors).subspan(a * n, n), total);
  return sum / static_cast<double>(n);
}

/// Coherence of each topic (given as term ids) against the reference streams.
inline TopicCoherence topic_coherence(const std::vector<std::vector<std::uint32_t>>& topics,
                                      const TokenStreams& reference,
                                      const CoherenceConfig& config, unsigned threads = 1) {
  config.validate();
  std::vector<std::uint32_t> all;
  for (const auto& t : topics) {
    const std::size_t take = std::min(config.top_n, t.size());
    all.insert(all.end(), t.begin(), t.begin() + static_cast<std::ptrdiff_t>(take));
  }
  const auto counts = window_counts(reference, all, config.window_size, threads);
  std::unordered_map<std::uint32_t, std::size_t> local;
  for (std::size_t i = 0; i < counts.words().size(); ++i) local[counts.words()[i]] = i;

  TopicCoherence out;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < topics.size(); ++k) {
    std::vector<std::size_t> ids;
    const std::size_t take = std::min(config.top_n, topics[k].size());
    for (std::size_t i = 0; i < take; ++i) ids.push_back(local.at(topics[k][i]));
    auto score = word_set_coherence(counts, ids, config.npmi_epsilon);
    if (!score) {
      ++out.skipped;
      warn("topic " + std::to_string(k) + " has fewer than 2 words seen in the reference corpus; skipped");
    } else {
      sum += *score;
      ++used;
    }
    out.scores.push_back(score);
  }
  if (used) out.mean = sum / static_cast<double>(used);
  return out;
}

/// Word-string overload; words missing from the vocabulary are dropped.
inline TopicCoherence topic_coherence(const std::vector<std::vector<std::string>>& topics,
                                      const Vocabulary& vocab, const TokenStreams& reference,
                                      const CoherenceConfig& config, unsigned threads = 1) {
  std::vector<std::vector<std::uint32_t>> ids(topics.size());
  for (std::size_t k = 0; k < topics.size(); ++k)
    for (const auto& w : topics[k]) {
      if (auto id = vocab.find(w))
        ids[k].push_back(*id);
      else
        warn("coherence: word '" + w + "' not in the reference vocabulary; dropped");
    }
  return topic_coherence(ids, reference, config, threads);
}

inline TopicCoherence topic_coherence(const LdaModel& model, const TokenStreams& reference,
                                      const CoherenceConfig& config, unsigned threads = 1) {
  std::vector<std::vector<std::uint32_t>> ids;
  for (std::size_t k = 0; k < model.num_topics(); ++k)
    ids.push_back(top_word_ids(model, k, config.top_n));
  return topic_coherence(ids, reference, config, threads);
}

/// |A intersect B| / |A union B|; two empty sets count as identical.
template <typename T>
double jaccard(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> x(a), y(b);
  std::sort(x.begin(), x.end());
  x.erase(std::unique(x.begin(), x.end()), x.end());
  std::sort(y.begin(), y.end());
  y.erase(std::unique(y.begin(), y.end()), y.end());
  if (x.empty() && y.empty()) return 1.0;
  std::vector<T> common;
  std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(common));
  const double inter = static_cast<double>(common.size());
  return inter / (static_cast<double>(x.size() + y.size()) - inter);
}

enum class SimilarityAggregate { kMean, kMax };

/// Mean (or max) Jaccard similarity over unordered pairs of topic word sets.
template <typename T>
double topic_similarity(const std::vector<std::vector<T>>& topics,
                        SimilarityAggregate how = SimilarityAggregate::kMean) {
  if (topics.size() < 2) throw DataError("topic similarity needs at least two topics");
  double sum = 0.0, best = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < topics.size(); ++a)
    for (std::size_t b = a + 1; b < topics.size(); ++b) {
      const double j = jaccard(topics[a], topics[b]);
      sum += j;
      best = std::max(best, j);
      ++pairs;
    }
  return how == SimilarityAggregate::kMax ? best : sum / static_cast<double>(pairs);
}

inline double topic_similarity(const LdaModel& model, std::size_t top_n,
                               SimilarityAggregate how = SimilarityAggregate::kMean) {
  std::vector<std::vector<std::uint32_t>> ids;
  for (std::size_t k = 0; k < model.num_topics(); ++k) ids.push_back(top_word_ids(model, k, top_n));
  return topic_similarity(ids, how);
}

// ---------------------------------------------------------------------------
// Choosing the number of topics

struct KSelectionRun {
  std::size_t k = 0;
  double coherence = 0.0;
  double similarity = 0.0;
  std::size_t rank_coherence = 0;  // 1 = highest coherence
  std::size_t rank_similarity = 0; // 1 = lowest similarity
  std::size_t rank_sum() const { return rank_coherence + rank_similarity; }
};

struct KSelection {
  std::size_t chosen_k = 0;
  std::vector<KSelectionRun> runs;  // ascending k
};

/// Ranks a sweep table and picks the candidate with the smallest rank sum.
/// Ranking is standard competition ("1224"): equal values share the best
/// rank. The final tie on rank sum goes to the smaller K, so candidate order
/// never matters. A NaN coherence or similarity ranks last.
inline KSelection rank_sweep(std::vector<KSelectionRun> runs) {
  if (runs.empty()) throw DataError("no candidates to rank");
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].k == runs[i - 1].k) throw UsageError("duplicate candidate K");
  const auto key_c = [](double c) {
    return std::isnan(c) ? std::numeric_limits<double>::infinity() : -c;
  };
  const auto key_s = [](double s) {
    return std::isnan(s) ? std::numeric_limits<double>::infinity() : s;
  };
  // rank = 1 + number of candidates strictly better
  for (auto& r : runs) {
    r.rank_coherence = 1;
    r.rank_similarity = 1;
    for (const auto& o : runs) {
      if (key_c(o.coherence) < key_c(r.coherence)) ++r.rank_coherence;
      if (key_s(o.similarity) < key_s(r.similarity)) ++r.rank_similarity;
    }
  }

  KSelection out;
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].rank_sum() < runs[best].rank_sum()) best = i;
  out.chosen_k = runs[best].k;
  out.runs = std::move(runs);
  return out;
}

struct SelectKOptions {
  /// Models fitted per candidate; coherence and similarity are averaged.
  std::size_t repeats = 1;
  SimilarityAggregate similarity = SimilarityAggregate::kMean;
  /// Threads spread across candidates (each fit then runs single-threaded).
  unsigned threads = 1;
};

/// Candidates 10..50, the default sweep.
inline std::vector<std::size_t> default_k_candidates() {
  std::vector<std::size_t> ks;
  for (std::size_t k = defaults::kMinTopics; k <= defaults::kMaxTopics; ++k) ks.push_back(k);
  return ks;
}

/// Seed for repeat r of candidate k; independent of sweep order and threads.
inline std::uint64_t candidate_seed(std::uint64_t base, std::size_t k, std::size_t repeat) {
  const auto s = derive_seed(base, k);
  return repeat == 0 ? s : derive_seed(s, repeat);
}

/// Fits one model per candidate K, scores coherence and similarity on the
/// top words, and ranks the sweep. Candidates whose fit fails are dropped.
inline KSelection select_k(const DocTermMatrix& matrix, const TokenStreams& reference,
                           std::vector<std::size_t> candidates, const LdaConfig& base,
                           const CoherenceConfig& coherence, const SelectKOptions& options = {}) {
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.size() < 2) throw UsageError("select_k needs at least two candidate K values");
  if (options.repeats == 0) throw UsageError("repeats must be at least 1");
  coherence.validate();

  std::vector<std::optional<KSelectionRun>> results(candidates.size());
  parallel_for(candidates.size(), options.threads, [&](std::size_t i) {
    const std::size_t k = candidates[i];
    KSelectionRun run;
    run.k = k;
    double c_sum = 0.0, s_sum = 0.0;
    std::size_t c_used = 0;
    try {
      for (std::size_t r = 0; r < options.repeats; ++r) {
        LdaConfig cfg = base;
        cfg.num_topics = k;
        cfg.seed = candidate_seed(base.seed, k, r);
        if (options.threads > 1) cfg.threads = 1;
        const auto model = fit(matrix, cfg);
        const auto c = topic_coherence(model, reference, coherence, 1);
        if (!std::isnan(c.mean)) {
          c_sum += c.mean;
          ++c_used;
        }
        s_sum += topic_similarity(model, coherence.top_n, options.similarity);
      }
    } catch (const Error& e) {
      warn("candidate K = " + std::to_string(k) + " failed: " + e.what());
      return;
    }
    run.coherence = c_used ? c_sum / static_cast<double>(c_used)
                           : std::numeric_limits<double>::quiet_NaN();
    run.similarity = s_sum / static_cast<double>(options.repeats);
    results[i] = run;
  });
  std::vector<KSelectionRun> runs;
  for (auto& r : results)
    if (r) runs.push_back(*r);
  if (runs.empty()) throw DataError("every candidate K failed to fit");
  return rank_sweep(std::move(runs));
}

}  // namespace topicforge

#endif  // TOPICFORGE_EVAL_HPP
