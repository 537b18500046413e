#ifndef TOPICFORGE_LDA_HPP
#define TOPICFORGE_LDA_HPP

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "topicforge/corpus.hpp"
#include "topicforge/defaults.hpp"
#include "topicforge/error.hpp"
#include "topicforge/parallel.hpp"
#include "topicforge/random.hpp"
#include "topicforge/special.hpp"

namespace topicforge {

/// Settings for the online variational Bayes estimator. A negative alpha or
/// eta means "1 / num_topics".
struct LdaConfig {
  std::size_t num_topics = 10;
  double alpha = -1.0;
  double eta = -1.0;
  double tau0 = 1.0;
  double kappa = 0.7;
  std::size_t batch_size = 2048;
  std::size_t e_step_max_iters = 100;
  double e_step_tol = 1e-3;
  std::size_t passes = 10;
  std::uint64_t seed = 0;
  /// Full-batch coordinate ascent: one batch holding the whole corpus, step
  /// size fixed at 1 and document posteriors warm-started across iterations.
  bool batch_mode = false;
  unsigned threads = 1;

  double resolved_alpha() const {
    return alpha > 0.0 ? alpha : 1.0 / static_cast<double>(num_topics);
  }
  double resolved_eta() const {
    return eta > 0.0 ? eta : 1.0 / static_cast<double>(num_topics);
  }

  void validate() const {
    if (num_topics < 2) throw UsageError("num_topics must be at least 2");
    if (!(kappa > 0.5 && kappa <= 1.0)) throw UsageError("kappa must lie in (0.5, 1]");
    if (!(tau0 >= 0.0)) throw UsageError("tau0 must be nonnegative");
    if (batch_size == 0) throw UsageError("batch_size must be positive");
    if (e_step_max_iters == 0) throw UsageError("e_step_max_iters must be positive");
    if (!(e_step_tol > 0.0)) throw UsageError("e_step_tol must be positive");
    if (alpha == 0.0 || eta == 0.0) throw UsageError("priors must be positive");
  }
};

/// Per-document posterior: Dirichlet parameters and their normalization.
struct DocTopics {
  std::vector<double> gamma;
  std::vector<double> theta;
};

class LdaModel {
 public:
  LdaModel() = default;

  /// Lambda initialized with Gamma(100, 1/100) draws from the config seed.
  LdaModel(LdaConfig config, Vocabulary vocabulary)
      : config_(std::move(config)), vocabulary_(std::move(vocabulary)) {
    const std::size_t K = config_.num_topics, V = vocabulary_.size();
    if (K == 0 || V == 0) throw DataError("model needs at least one topic and one term");
    lambda_.resize(K * V);
    Rng rng(derive_seed(config_.seed, 0x6c616d626461ULL));
    for (auto& x : lambda_) x = rng.gamma(100.0, 0.01);
    refresh();
  }

  /// Model with explicit topic-word parameters (K x V, row-major).
  LdaModel(LdaConfig config, Vocabulary vocabulary, std::vector<double> lambda)
      : config_(std::move(config)), vocabulary_(std::move(vocabulary)),
        lambda_(std::move(lambda)) {
    if (lambda_.size() != config_.num_topics * vocabulary_.size())
      throw DataError("lambda has the wrong shape");
    refresh();
  }

  std::size_t num_topics() const { return config_.num_topics; }
  std::size_t vocab_size() const { return vocabulary_.size(); }
  const LdaConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  const std::vector<double>& lambda() const { return lambda_; }
  std::span<const double> lambda_row(std::size_t k) const {
    return std::span(lambda_).subspan(k * vocab_size(), vocab_size());
  }
  std::uint64_t updates() const { return updates_; }
  double docs_seen() const { return docs_seen_; }
  const std::vector<double>& elbo_history() const { return elbo_history_; }

  /// E_q[log beta_kw], K x V.
  const std::vector<double>& expected_log_beta() const { return elog_beta_; }
  /// exp(E_q[log beta_kw] - max_k E_q[log beta_kw]); every column peaks at 1.
  const std::vector<double>& scaled_exp_log_beta() const { return scaled_beta_; }
  const std::vector<double>& column_log_scale() const { return column_max_; }

  /// lambda_kw / sum_w lambda_kw.
  std::vector<double> expected_beta() const {
    const std::size_t K = num_topics(), V = vocab_size();
    std::vector<double> beta(K * V);
    for (std::size_t k = 0; k < K; ++k) {
      const auto row = lambda_row(k);
      const double total = std::accumulate(row.begin(), row.end(), 0.0);
      for (std::size_t w = 0; w < V; ++w) beta[k * V + w] = row[w] / total;
    }
    return beta;
  }

  // Mutators used by the training loop and the model loader.
  std::vector<double>& mutable_lambda() { return lambda_; }
  void set_progress(std::uint64_t updates, double docs_seen) {
    updates_ = updates;
    docs_seen_ = docs_seen;
  }
  void set_elbo_history(std::vector<double> h) { elbo_history_ = std::move(h); }
  void set_threads(unsigned threads) { config_.threads = threads; }

  /// Recomputes the expectation caches from lambda.
  void refresh() {
    const std::size_t K = num_topics(), V = vocab_size();
    elog_beta_.assign(K * V, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      const auto e = dirichlet_expectation(lambda_row(k));
      std::copy(e.begin(), e.end(), elog_beta_.begin() + static_cast<std::ptrdiff_t>(k * V));
    }
    column_max_.assign(V, -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t w = 0; w < V; ++w)
        column_max_[w] = std::max(column_max_[w], elog_beta_[k * V + w]);
    scaled_beta_.resize(K * V);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t w = 0; w < V; ++w)
        scaled_beta_[k * V + w] = std::exp(elog_beta_[k * V + w] - column_max_[w]);
  }

 private:
  LdaConfig config_;
  Vocabulary vocabulary_;
  std::vector<double> lambda_;
  std::uint64_t updates_ = 0;
  double docs_seen_ = 0.0;
  std::vector<double> elbo_history_;
  std::vector<double> elog_beta_;
  std::vector<double> scaled_beta_;
  std::vector<double> column_max_;
};

struct EStepOptions {
  /// Starting gammas (docs x K); random Gamma(100, 1/100) draws when empty.
  std::span<const double> initial_gamma;
  /// Also accumulate the per-document part of the variational bound.
  bool compute_bound = false;
};

struct EStepResult {
  std::size_t docs = 0;
  std::vector<double> gamma;   // docs x K
  std::vector<double> sstats;  // K x V, sum_d n_dw phi_dwk
  double doc_bound = 0.0;
};

namespace detail {

// Documents per reduction block. Blocks are summed in order, so the result
// does not depend on how many threads processed them.
inline constexpr std::size_t kReductionBlock = 256;

struct DocScratch {
  std::vector<double> elog_theta, theta_scaled, contrib, last_gamma, log_phi;
};

// exp(E[log theta] - max) for the current gamma; returns the max.
inline double scaled_theta(std::span<const double> gamma, DocScratch& s) {
  const std::size_t K = gamma.size();
  double total = 0.0;
  for (double g : gamma) total += g;
  const double psi_total = digamma(total);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    s.elog_theta[k] = digamma(gamma[k]) - psi_total;
    top = std::max(top, s.elog_theta[k]);
  }
  for (std::size_t k = 0; k < K; ++k) s.theta_scaled[k] = std::exp(s.elog_theta[k] - top);
  return top;
}

inline constexpr double kTinyNorm = 1e-250;

// Adds sum_w n_w phi_wk into `out` (length K) for the current theta.
// phi_wk is proportional to theta_scaled_k * B_kw; words whose normalizer
// underflows are redone in log space. Returns sum_w n_w log(sum_k
// exp(Elog theta_k + Elog beta_kw)) when `log_norm` is requested.
template <typename Sink>
double accumulate_phi(const LdaModel& model, const SparseRow& doc, DocScratch& s,
                      double theta_shift, Sink&& sink) {
  const std::size_t K = model.num_topics(), V = model.vocab_size();
  const auto& B = model.scaled_exp_log_beta();
  const auto& colmax = model.column_log_scale();
  const auto& elog_beta = model.expected_log_beta();
  double log_norm_total = 0.0;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::size_t w = doc.terms[i];
    const double n = doc.counts[i];
    double norm = 0.0;
    for (std::size_t k = 0; k < K; ++k) norm += s.theta_scaled[k] * B[k * V + w];
    if (norm > kTinyNorm) {
      const double scale = n / norm;
      for (std::size_t k = 0; k < K; ++k) sink(i, k, scale * s.theta_scaled[k] * B[k * V + w]);
      log_norm_total += n * (std::log(norm) + theta_shift + colmax[w]);
    } else {
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < K; ++k) {
        s.log_phi[k] = s.elog_theta[k] + elog_beta[k * V + w];
        top = std::max(top, s.log_phi[k]);
      }
      double sum = 0.0;
      for (std::size_t k = 0; k < K; ++k) sum += std::exp(s.log_phi[k] - top);
      const double lse = top + std::log(sum);
      for (std::size_t k = 0; k < K; ++k) sink(i, k, n * std::exp(s.log_phi[k] - lse));
      log_norm_total += n * lse;
    }
  }
  return log_norm_total;
}

}  // namespace detail

/// Variational E-step over a mini-batch with lambda held fixed.
///
/// Per document, alternates phi_dwk ~ exp(E[log theta_dk] + E[log beta_kw])
/// and gamma_dk = alpha + sum_w n_dw phi_dwk until the mean absolute change
/// of gamma falls below the configured tolerance. Documents with no tokens
/// keep the prior gamma = alpha.
inline EStepResult e_step(const LdaModel& model, std::span<const SparseRow> docs,
                          std::uint64_t seed, const EStepOptions& options = {}) {
  const std::size_t K = model.num_topics(), V = model.vocab_size();
  const auto& cfg = model.config();
  const double alpha = cfg.resolved_alpha();
  EStepResult result;
  result.docs = docs.size();
  result.gamma.assign(docs.size() * K, alpha);
  result.sstats.assign(K * V, 0.0);
  if (!options.initial_gamma.empty() && options.initial_gamma.size() != docs.size() * K)
    throw DataError("e_step: warm-start gamma has the wrong shape");
  for (const auto& d : docs)
    for (auto t : d.terms)
      if (t >= V) throw DataError("e_step: document term id exceeds vocabulary size");

  const std::size_t blocks = (docs.size() + detail::kReductionBlock - 1) / detail::kReductionBlock;
  struct BlockOut {
    std::vector<std::uint32_t> terms;  // distinct terms touched, ascending
    std::vector<double> partial;       // K x terms.size()
    double bound = 0.0;
  };
  std::vector<BlockOut> block_out(blocks);

  const double lgamma_alpha = std::lgamma(alpha);
  const double lgamma_k_alpha = std::lgamma(alpha * static_cast<double>(K));

  parallel_for(blocks, cfg.threads, [&](std::size_t b) {
    const std::size_t begin = b * detail::kReductionBlock;
    const std::size_t end = std::min(docs.size(), begin + detail::kReductionBlock);
    BlockOut& out = block_out[b];
    for (std::size_t d = begin; d < end; ++d)
      out.terms.insert(out.terms.end(), docs[d].terms.begin(), docs[d].terms.end());
    std::sort(out.terms.begin(), out.terms.end());
    out.terms.erase(std::unique(out.terms.begin(), out.terms.end()), out.terms.end());
    const std::size_t U = out.terms.size();
    out.partial.assign(K * U, 0.0);

    detail::DocScratch s;
    s.elog_theta.resize(K);
    s.theta_scaled.resize(K);
    s.contrib.resize(K);
    s.last_gamma.resize(K);
    s.log_phi.resize(K);
    std::vector<std::size_t> slot;

    for (std::size_t d = begin; d < end; ++d) {
      const SparseRow& doc = docs[d];
      std::span<double> gamma(result.gamma.data() + d * K, K);
      // gamma = alpha contributes exactly zero to the bound.
      if (doc.size() == 0) continue;
      if (!options.initial_gamma.empty()) {
        std::copy_n(options.initial_gamma.begin() + static_cast<std::ptrdiff_t>(d * K), K,
                    gamma.begin());
      } else {
        Rng rng(derive_seed(seed, d));
        for (auto& g : gamma) g = rng.gamma(100.0, 0.01);
      }

      double shift = detail::scaled_theta(gamma, s);
      for (std::size_t it = 0; it < cfg.e_step_max_iters; ++it) {
        std::copy(gamma.begin(), gamma.end(), s.last_gamma.begin());
        std::fill(s.contrib.begin(), s.contrib.end(), 0.0);
        detail::accumulate_phi(model, doc, s, shift,
                               [&](std::size_t, std::size_t k, double v) { s.contrib[k] += v; });
        double change = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          gamma[k] = alpha + s.contrib[k];
          change += std::fabs(gamma[k] - s.last_gamma[k]);
        }
        shift = detail::scaled_theta(gamma, s);
        if (change / static_cast<double>(K) < cfg.e_step_tol) break;
      }

      slot.resize(doc.size());
      for (std::size_t i = 0; i < doc.size(); ++i)
        slot[i] = static_cast<std::size_t>(
            std::lower_bound(out.terms.begin(), out.terms.end(), doc.terms[i]) -
            out.terms.begin());
      const double log_norm = detail::accumulate_phi(
          model, doc, s, shift,
          [&](std::size_t i, std::size_t k, double v) { out.partial[k * U + slot[i]] += v; });

      if (options.compute_bound) {
        double gamma_total = 0.0;
        double bound = log_norm + lgamma_k_alpha;
        for (std::size_t k = 0; k < K; ++k) {
          bound += (alpha - gamma[k]) * s.elog_theta[k] + std::lgamma(gamma[k]) - lgamma_alpha;
          gamma_total += gamma[k];
        }
        bound -= std::lgamma(gamma_total);
        out.bound += bound;
      }
    }
  });

  for (const auto& out : block_out) {
    const std::size_t U = out.terms.size();
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t u = 0; u < U; ++u)
        result.sstats[k * V + out.terms[u]] += out.partial[k * U + u];
    result.doc_bound += out.bound;
  }
  return result;
}

/// Step size (tau0 + t)^-kappa for update number t.
inline double learning_rate(const LdaConfig& cfg, std::uint64_t t) {
  if (cfg.batch_mode) return 1.0;
  return std::pow(cfg.tau0 + static_cast<double>(t), -cfg.kappa);
}

/// lambda <- (1 - rho) lambda + rho (eta + (D_hat / batch_docs) sstats).
inline void m_step_update(LdaModel& model, std::span<const double> sstats,
                          std::size_t batch_docs) {
  if (batch_docs == 0) {
    warn("m_step_update called with an empty batch; model unchanged");
    return;
  }
  if (sstats.size() != model.lambda().size()) throw DataError("sstats has the wrong shape");
  const auto& cfg = model.config();
  const double rho = learning_rate(cfg, model.updates());
  const double eta = cfg.resolved_eta();
  const double scale = model.docs_seen() / static_cast<double>(batch_docs);
  auto& lambda = model.mutable_lambda();
  for (std::size_t i = 0; i < lambda.size(); ++i)
    lambda[i] = (1.0 - rho) * lambda[i] + rho * (eta + scale * sstats[i]);
  model.set_progress(model.updates() + 1, model.docs_seen());
  model.refresh();
}

/// Topic-word part of the variational bound:
/// sum_k [sum_w (eta - lambda_kw) Elog beta_kw + lgamma(lambda_kw) - lgamma(eta)]
///       + lgamma(V eta) - lgamma(sum_w lambda_kw).
inline double topic_bound(const LdaModel& model) {
  const std::size_t K = model.num_topics(), V = model.vocab_size();
  const double eta = model.config().resolved_eta();
  const auto& elog = model.expected_log_beta();
  const double lg_eta = std::lgamma(eta);
  const double lg_v_eta = std::lgamma(eta * static_cast<double>(V));
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto row = model.lambda_row(k);
    double row_sum = 0.0;
    for (std::size_t w = 0; w < V; ++w) {
      total += (eta - row[w]) * elog[k * V + w] + std::lgamma(row[w]) - lg_eta;
      row_sum += row[w];
    }
    total += lg_v_eta - std::lgamma(row_sum);
  }
  return total;
}

namespace detail {
inline bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}
inline std::vector<SparseRow> rows_of(const DocTermMatrix& m, std::span<const std::size_t> ids) {
  std::vector<SparseRow> rows;
  rows.reserve(ids.size());
  for (auto d : ids) rows.push_back(m.row(d));
  return rows;
}
}  // namespace detail

/// Trains a model on the matrix.
///
/// Each pass shuffles the documents with the model seed and performs one
/// update per mini-batch. The per-pass bound adds each batch's document
/// terms (under the lambda that batch saw) to the topic terms of the lambda
/// used by the final batch; in batch mode this is the exact bound.
inline LdaModel fit(const DocTermMatrix& matrix, const LdaConfig& config) {
  config.validate();
  if (matrix.rows() == 0) throw DataError("cannot fit a model on an empty matrix");
  if (matrix.cols() < config.num_topics)
    warn("vocabulary size " + std::to_string(matrix.cols()) + " is smaller than K = " +
         std::to_string(config.num_topics));

  LdaModel model(config, matrix.vocabulary());
  const std::size_t D = matrix.rows();
  model.set_progress(0, static_cast<double>(D));
  const std::size_t batch = config.batch_mode ? D : std::min(config.batch_size, D);

  std::vector<std::size_t> order(D);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffler(derive_seed(config.seed, 0x73687566666c65ULL));
  std::vector<double> warm;  // batch mode only
  std::vector<double> history;

  for (std::size_t pass = 0; pass < config.passes; ++pass) {
    if (!config.batch_mode) shuffler.shuffle(std::span(order));
    double doc_bound = 0.0;
    double last_topic_bound = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < D; start += batch, ++batch_index) {
      const std::size_t stop = std::min(D, start + batch);
      const auto ids = std::span(order).subspan(start, stop - start);
      const auto rows = detail::rows_of(matrix, ids);
      EStepOptions opts;
      opts.compute_bound = true;
      if (config.batch_mode && !warm.empty()) opts.initial_gamma = warm;
      auto estep = e_step(model, rows, derive_seed(config.seed, 0x100000 + model.updates()), opts);
      doc_bound += estep.doc_bound;
      if (stop >= D) last_topic_bound = topic_bound(model);
      m_step_update(model, estep.sstats, rows.size());
      if (!detail::all_finite(model.lambda()) || !std::isfinite(doc_bound)) {
        throw NumericError("non-finite value in lambda or bound at pass " +
                           std::to_string(pass) + ", batch " + std::to_string(batch_index));
      }
      if (config.batch_mode) warm = std::move(estep.gamma);
    }
    history.push_back(doc_bound + last_topic_bound);
  }
  model.set_elbo_history(std::move(history));
  return model;
}

/// Posterior over topics for one document with lambda frozen.
inline DocTopics transform(const LdaModel& model, const SparseRow& doc) {
  const SparseRow docs[] = {doc};
  auto r = e_step(model, docs, derive_seed(model.config().seed, 0x7472616e73ULL));
  DocTopics out;
  out.gamma = std::move(r.gamma);
  const double total = std::accumulate(out.gamma.begin(), out.gamma.end(), 0.0);
  out.theta.resize(out.gamma.size());
  for (std::size_t k = 0; k < out.gamma.size(); ++k) out.theta[k] = out.gamma[k] / total;
  return out;
}

/// Normalized topic proportions for every row, D x K.
inline std::vector<double> transform_all(const LdaModel& model, const DocTermMatrix& matrix) {
  const std::size_t K = model.num_topics();
  std::vector<double> theta(matrix.rows() * K);
  parallel_for(matrix.rows(), model.config().threads, [&](std::size_t d) {
    auto t = transform(model, matrix.row(d));
    std::copy(t.theta.begin(), t.theta.end(), theta.begin() + static_cast<std::ptrdiff_t>(d * K));
  });
  return theta;
}

/// Term ids of the n most probable words of a topic; ties by term string.
inline std::vector<std::uint32_t> top_word_ids(const LdaModel& model, std::size_t topic,
                                               std::size_t n) {
  if (topic >= model.num_topics()) throw DataError("topic id out of range");
  const auto row = model.lambda_row(topic);
  const auto& vocab = model.vocabulary();
  std::vector<std::uint32_t> ids(model.vocab_size());
  std::iota(ids.begin(), ids.end(), 0u);
  n = std::min(n, ids.size());
  // Ranking by lambda equals ranking by expected beta within one row.
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (row[a] != row[b]) return row[a] > row[b];
                      return vocab.term(a) < vocab.term(b);
                    });
  ids.resize(n);
  return ids;
}

inline std::vector<std::string> top_words(const LdaModel& model, std::size_t topic,
                                          std::size_t n = defaults::kTopWords) {
  std::vector<std::string> words;
  for (auto id : top_word_ids(model, topic, n)) words.push_back(model.vocabulary().term(id));
  return words;
}

/// Top-n word lists for every topic.
inline std::vector<std::vector<std::string>> all_top_words(const LdaModel& model,
                                                           std::size_t n = defaults::kTopWords) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t k = 0; k < model.num_topics(); ++k) out.push_back(top_words(model, k, n));
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace detail {
inline std::string hexfloat(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}
inline double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw DataError("model file: bad number '" + s + "'");
  return v;
}
inline std::uint64_t parse_u64(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 0);
  if (end == s.c_str() || *end != '\0') throw DataError("model file: bad integer '" + s + "'");
  return v;
}
}  // namespace detail

inline constexpr int kModelFormatVersion = 1;

/// Text model file. Reals are written as C99 hexadecimal floats so a
/// save/load round trip is bit-exact on any platform.
inline void save_model(std::ostream& out, const LdaModel& model) {
  const auto& c = model.config();
  out << "topicforge-lda-model " << kModelFormatVersion << '\n'
      << "precision float64\n"
      << "encoding hexfloat\n"
      << "byteorder little\n"
      << "num_topics " << model.num_topics() << '\n'
      << "vocab_size " << model.vocab_size() << '\n';
  char hash[32];
  std::snprintf(hash, sizeof hash, "0x%016" PRIx64, model.vocabulary().hash());
  out << "vocab_hash " << hash << '\n'
      << "alpha " << detail::hexfloat(c.resolved_alpha()) << '\n'
      << "eta " << detail::hexfloat(c.resolved_eta()) << '\n'
      << "tau0 " << detail::hexfloat(c.tau0) << '\n'
      << "kappa " << detail::hexfloat(c.kappa) << '\n'
      << "batch_size " << c.batch_size << '\n'
      << "e_step_max_iters " << c.e_step_max_iters << '\n'
      << "e_step_tol " << detail::hexfloat(c.e_step_tol) << '\n'
      << "passes " << c.passes << '\n'
      << "seed " << c.seed << '\n'
      << "batch_mode " << (c.batch_mode ? 1 : 0) << '\n'
      << "updates " << model.updates() << '\n'
      << "docs_seen " << detail::hexfloat(model.docs_seen()) << '\n'
      << "lambda\n";
  const std::size_t V = model.vocab_size();
  for (std::size_t k = 0; k < model.num_topics(); ++k) {
    const auto row = model.lambda_row(k);
    for (std::size_t w = 0; w < V; ++w) out << (w ? " " : "") << detail::hexfloat(row[w]);
    out << '\n';
  }
  out << "end\n";
}

/// Loads a model written by save_model, checking it was trained on `vocabulary`.
inline LdaModel load_model(std::istream& in, const Vocabulary& vocabulary) {
  if (!in) throw DataError("unreadable model stream");
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "topicforge-lda-model")
    throw DataError("not a topicforge model file");
  if (version != kModelFormatVersion)
    throw DataError("unsupported model format version " + std::to_string(version));
  std::map<std::string, std::string> header;
  std::string key, value;
  while (in >> key && key != "lambda") {
    if (!(in >> value)) throw DataError("model file: truncated header");
    header[key] = value;
  }
  auto field = [&](const char* k) -> const std::string& {
    auto it = header.find(k);
    if (it == header.end()) throw DataError(std::string("model file: missing field ") + k);
    return it->second;
  };
  if (field("precision") != "float64" || field("encoding") != "hexfloat")
    throw DataError("model file: unsupported number encoding");
  const std::size_t K = detail::parse_u64(field("num_topics"));
  const std::size_t V = detail::parse_u64(field("vocab_size"));
  if (V != vocabulary.size() || detail::parse_u64(field("vocab_hash")) != vocabulary.hash())
    throw DataError("model file was trained on a different vocabulary");

  LdaConfig c;
  c.num_topics = K;
  c.alpha = detail::parse_double(field("alpha"));
  c.eta = detail::parse_double(field("eta"));
  c.tau0 = detail::parse_double(field("tau0"));
  c.kappa = detail::parse_double(field("kappa"));
  c.batch_size = detail::parse_u64(field("batch_size"));
  c.e_step_max_iters = detail::parse_u64(field("e_step_max_iters"));
  c.e_step_tol = detail::parse_double(field("e_step_tol"));
  c.passes = detail::parse_u64(field("passes"));
  c.seed = detail::parse_u64(field("seed"));
  c.batch_mode = detail::parse_u64(field("batch_mode")) != 0;

  std::vector<double> lambda(K * V);
  std::string token;
  for (auto& x : lambda) {
    if (!(in >> token)) throw DataError("model file: truncated lambda");
    x = detail::parse_double(token);
    if (!(x > 0.0) || !std::isfinite(x)) throw DataError("model file: nonpositive lambda entry");
  }
  if (!(in >> token) || token != "end") throw DataError("model file: missing end marker");
  LdaModel model(c, vocabulary, std::move(lambda));
  model.set_progress(detail::parse_u64(field("updates")), detail::parse_double(field("docs_seen")));
  return model;
}

}  // namespace topicforge

#endif  // TOPICFORGE_LDA_HPP
