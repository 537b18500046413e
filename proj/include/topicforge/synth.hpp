#ifndef TOPICFORGE_SYNTH_HPP
#define TOPICFORGE_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "topicforge/corpus.hpp"
#include "topicforge/error.hpp"
#include "topicforge/parallel.hpp"
#include "topicforge/random.hpp"

namespace topicforge {

enum class TopicStructure { kDirichlet, kBlock };

/// Ground-truth LDA model to sample a corpus from.
struct SynthSpec {
  std::size_t num_topics = 10;
  std::size_t vocab_size = 500;
  std::size_t docs = 2000;
  std::size_t min_tokens = 100;
  std::size_t max_tokens = 100;
  double alpha = 0.1;
  double eta = 0.05;
  TopicStructure structure = TopicStructure::kBlock;
  /// Block mode: probability mass a topic puts outside its own block.
  double p_leak = 0.05;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  void validate() const {
    if (num_topics == 0) throw UsageError("synthetic corpus needs at least one topic");
    if (vocab_size == 0 || docs == 0) throw UsageError("synthetic corpus needs words and documents");
    if (min_tokens > max_tokens) throw UsageError("min_tokens exceeds max_tokens");
    if (!(alpha > 0.0) || !(eta > 0.0)) throw UsageError("synthetic priors must be positive");
    if (structure == TopicStructure::kBlock) {
      if (vocab_size < num_topics) throw UsageError("block topics need vocab_size >= num_topics");
      if (!(p_leak >= 0.0 && p_leak < 1.0)) throw UsageError("p_leak must lie in [0, 1)");
    }
  }
};

struct SynthCorpus {
  DocTermMatrix matrix;
  TokenStreams tokens;
  std::vector<double> true_beta;   // K x V
  std::vector<double> true_theta;  // D x K
  std::size_t num_topics = 0;
};

/// Zero-padded names so lexicographic order equals id order.
inline std::vector<std::string> synthetic_terms(std::size_t v) {
  const int width = static_cast<int>(std::to_string(v == 0 ? 0 : v - 1).size());
  std::vector<std::string> terms;
  terms.reserve(v);
  char buf[32];
  for (std::size_t i = 0; i < v; ++i) {
    std::snprintf(buf, sizeof buf, "w%0*zu", width, i);
    terms.emplace_back(buf);
  }
  return terms;
}

/// Half-open word range of topic k's block.
inline std::pair<std::size_t, std::size_t> topic_block(std::size_t k, std::size_t K, std::size_t V) {
  return {k * V / K, (k + 1) * V / K};
}

inline std::vector<double> make_true_beta(const SynthSpec& spec) {
  const std::size_t K = spec.num_topics, V = spec.vocab_size;
  std::vector<double> beta(K * V, 0.0);
  if (spec.structure == TopicStructure::kDirichlet) {
    Rng rng(derive_seed(spec.seed, 0x62657461ULL));
    for (std::size_t k = 0; k < K; ++k) {
      const auto row = rng.dirichlet(V, spec.eta);
      std::copy(row.begin(), row.end(), beta.begin() + static_cast<std::ptrdiff_t>(k * V));
    }
    return beta;
  }
  for (std::size_t k = 0; k < K; ++k) {
    const auto [lo, hi] = topic_block(k, K, V);
    const std::size_t inside = hi - lo, outside = V - inside;
    const double leak = outside ? spec.p_leak : 0.0;
    for (std::size_t w = 0; w < V; ++w) {
      const bool in = w >= lo && w < hi;
      beta[k * V + w] = in ? (1.0 - leak) / static_cast<double>(inside)
                           : leak / static_cast<double>(outside);
    }
  }
  return beta;
}

/// Samples a corpus: theta_d ~ Dirichlet(alpha), then per token a topic from
/// theta_d and a word from that topic. Document d uses its own derived seed.
inline SynthCorpus generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t K = spec.num_topics, V = spec.vocab_size, D = spec.docs;
  SynthCorpus out;
  out.num_topics = K;
  out.true_beta = make_true_beta(spec);
  out.true_theta.assign(D * K, 0.0);
  out.tokens.resize(D);

  std::vector<CumulativeSampler> word_samplers;
  word_samplers.reserve(K);
  for (std::size_t k = 0; k < K; ++k)
    word_samplers.emplace_back(std::span(out.true_beta).subspan(k * V, V));

  parallel_for(D, spec.threads, [&](std::size_t d) {
    Rng rng(derive_seed(spec.seed, 0x646f63000000ULL + d));
    std::vector<double> theta = K == 1 ? std::vector<double>{1.0} : rng.dirichlet(K, spec.alpha);
    std::copy(theta.begin(), theta.end(), out.true_theta.begin() + static_cast<std::ptrdiff_t>(d * K));
    const std::size_t len =
        spec.min_tokens + rng.below(spec.max_tokens - spec.min_tokens + 1);
    const CumulativeSampler topic_sampler(theta);
    auto& toks = out.tokens[d];
    toks.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t z = topic_sampler.sample(rng);
      toks.push_back(static_cast<std::uint32_t>(word_samplers[z].sample(rng)));
    }
  });

  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> rows(D);
  std::vector<std::uint32_t> df(V, 0);
  for (std::size_t d = 0; d < D; ++d) {
    std::vector<std::uint32_t> counts(V, 0);
    for (auto w : out.tokens[d]) ++counts[w];
    for (std::uint32_t w = 0; w < V; ++w)
      if (counts[w]) {
        rows[d].emplace_back(w, counts[w]);
        ++df[w];
      }
  }
  out.matrix = DocTermMatrix(Vocabulary(synthetic_terms(V), std::move(df)), rows);
  return out;
}

struct TopicMatching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (learned, true)
  std::vector<double> cosines;
  double mean_cosine = 0.0;
  std::size_t unmatched = 0;
};

/// Greedy bipartite matching on cosine similarity: the most similar
/// remaining (learned, true) pair is taken first. Approximate, not optimal.
inline TopicMatching match_topics(std::span<const double> learned, std::size_t learned_k,
                                  std::span<const double> truth, std::size_t true_k) {
  if (learned_k == 0 || true_k == 0) throw DataError("match_topics needs topics on both sides");
  if (learned.size() % learned_k != 0 || truth.size() % true_k != 0 ||
      learned.size() / learned_k != truth.size() / true_k)
    throw DataError("match_topics: topic matrices disagree on vocabulary size");
  const std::size_t V = learned.size() / learned_k;
  auto norm = [&](std::span<const double> m, std::size_t k) {
    double s = 0.0;
    for (std::size_t w = 0; w < V; ++w) s += m[k * V + w] * m[k * V + w];
    return std::sqrt(s);
  };
  struct Candidate {
    double cosine;
    std::size_t a, b;
  };
  std::vector<Candidate> cands;
  cands.reserve(learned_k * true_k);
  for (std::size_t a = 0; a < learned_k; ++a) {
    const double na = norm(learned, a);
    for (std::size_t b = 0; b < true_k; ++b) {
      double dot = 0.0;
      for (std::size_t w = 0; w < V; ++w) dot += learned[a * V + w] * truth[b * V + w];
      const double denom = na * norm(truth, b);
      cands.push_back({denom > 0.0 ? dot / denom : 0.0, a, b});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
    if (x.cosine != y.cosine) return x.cosine > y.cosine;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  std::vector<bool> used_a(learned_k, false), used_b(true_k, false);
  TopicMatching out;
  for (const auto& c : cands) {
    if (used_a[c.a] || used_b[c.b]) continue;
    used_a[c.a] = used_b[c.b] = true;
    out.pairs.emplace_back(c.a, c.b);
    out.cosines.push_back(c.cosine);
  }
  out.mean_cosine = std::accumulate(out.cosines.begin(), out.cosines.end(), 0.0) /
                    static_cast<double>(out.cosines.size());
  out.unmatched = std::max(learned_k, true_k) - out.pairs.size();
  return out;
}

/// Dense CSV with a header row "id,<col names>".
inline void write_dense_csv(std::ostream& out, std::span<const double> values, std::size_t rows,
                            std::size_t cols, const std::vector<std::string>& col_names,
                            const std::string& row_prefix) {
  out << "id";
  for (const auto& c : col_names) out << ',' << c;
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < rows; ++r) {
    out << row_prefix << r;
    for (std::size_t c = 0; c < cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", values[r * cols + c]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace topicforge

#endif  // TOPICFORGE_SYNTH_HPP
