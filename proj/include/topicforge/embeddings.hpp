#ifndef TOPICFORGE_EMBEDDINGS_HPP
#define TOPICFORGE_EMBEDDINGS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "topicforge/corpus.hpp"
#include "topicforge/error.hpp"
#include "topicforge/eval.hpp"
#include "topicforge/random.hpp"

namespace topicforge {

/// Compressed sparse row real matrix.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  static SparseMatrix from_dense(std::span<const double> dense, std::size_t rows, std::size_t cols) {
    SparseMatrix m;
    m.rows = rows;
    m.cols = cols;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c)
        if (dense[r * cols + c] != 0.0) {
          m.indices.push_back(static_cast<std::uint32_t>(c));
          m.values.push_back(dense[r * cols + c]);
        }
      m.offsets.push_back(m.indices.size());
    }
    return m;
  }

  double frobenius_squared() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }

  // y (rows x l) = A x (cols x l), row-major dense blocks.
  void multiply(std::span<const double> x, std::size_t l, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t p = offsets[r]; p < offsets[r + 1]; ++p) {
        const double v = values[p];
        const double* src = x.data() + indices[p] * l;
        double* dst = y.data() + r * l;
        for (std::size_t j = 0; j < l; ++j) dst[j] += v * src[j];
      }
  }

  // y (cols x l) = A^T x (rows x l).
  void multiply_transposed(std::span<const double> x, std::size_t l, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t p = offsets[r]; p < offsets[r + 1]; ++p) {
        const double v = values[p];
        const double* src = x.data() + r * l;
        double* dst = y.data() + indices[p] * l;
        for (std::size_t j = 0; j < l; ++j) dst[j] += v * src[j];
      }
  }
};

struct SvdResult {
  std::size_t rank = 0;
  std::vector<double> singular_values;  // descending
  std::vector<double> left;             // rows x rank
  std::vector<double> right;            // cols x rank
};

namespace detail {

// Orthonormalizes the columns of q (n x l) in place with two rounds of
// modified Gram-Schmidt; degenerate columns are replaced by random ones.
inline void orthonormalize(std::vector<double>& q, std::size_t n, std::size_t l, Rng& rng) {
  for (std::size_t j = 0; j < l; ++j) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      for (int round = 0; round < 2; ++round)
        for (std::size_t i = 0; i < j; ++i) {
          double dot = 0.0;
          for (std::size_t r = 0; r < n; ++r) dot += q[r * l + i] * q[r * l + j];
          for (std::size_t r = 0; r < n; ++r) q[r * l + j] -= dot * q[r * l + i];
        }
      double norm = 0.0;
      for (std::size_t r = 0; r < n; ++r) norm += q[r * l + j] * q[r * l + j];
      norm = std::sqrt(norm);
      if (norm > 1e-12) {
        for (std::size_t r = 0; r < n; ++r) q[r * l + j] /= norm;
        break;
      }
      for (std::size_t r = 0; r < n; ++r) q[r * l + j] = rng.normal();
    }
  }
}

// Cyclic Jacobi eigendecomposition of a symmetric l x l matrix. Returns
// eigenvalues in descending order; vectors are columns of `vecs`.
inline std::vector<double> symmetric_eigen(std::vector<double> a, std::size_t l,
                                           std::vector<double>& vecs) {
  vecs.assign(l * l, 0.0);
  for (std::size_t i = 0; i < l; ++i) vecs[i * l + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < l; ++p)
      for (std::size_t q = p + 1; q < l; ++q) off += a[p * l + q] * a[p * l + q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < l; ++p)
      for (std::size_t q = p + 1; q < l; ++q) {
        const double apq = a[p * l + q];
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = (a[q * l + q] - a[p * l + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < l; ++k) {
          const double akp = a[k * l + p], akq = a[k * l + q];
          a[k * l + p] = c * akp - s * akq;
          a[k * l + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < l; ++k) {
          const double apk = a[p * l + k], aqk = a[q * l + k];
          a[p * l + k] = c * apk - s * aqk;
          a[q * l + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < l; ++k) {
          const double vkp = vecs[k * l + p], vkq = vecs[k * l + q];
          vecs[k * l + p] = c * vkp - s * vkq;
          vecs[k * l + q] = s * vkp + c * vkq;
        }
      }
  }
  std::vector<std::size_t> order(l);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a[x * l + x] > a[y * l + y]; });
  std::vector<double> values(l), sorted(l * l);
  for (std::size_t j = 0; j < l; ++j) {
    values[j] = a[order[j] * l + order[j]];
    for (std::size_t k = 0; k < l; ++k) sorted[k * l + j] = vecs[k * l + order[j]];
  }
  vecs = std::move(sorted);
  return values;
}

}  // namespace detail

/// Rank-r truncated SVD by randomized subspace (power) iteration.
inline SvdResult truncated_svd(const SparseMatrix& a, std::size_t rank, std::uint64_t seed,
                               std::size_t iterations = 12) {
  const std::size_t m = a.rows, n = a.cols;
  rank = std::min({rank, m, n});
  SvdResult out;
  out.rank = rank;
  if (rank == 0) return out;
  const std::size_t l = std::min({m, n, rank + 10});
  Rng rng(seed);
  std::vector<double> omega(n * l);
  for (auto& x : omega) x = rng.normal();
  std::vector<double> q(m * l), z(n * l);
  a.multiply(omega, l, q);
  detail::orthonormalize(q, m, l, rng);
  for (std::size_t it = 0; it < iterations; ++it) {
    a.multiply_transposed(q, l, z);
    detail::orthonormalize(z, n, l, rng);
    a.multiply(z, l, q);
    detail::orthonormalize(q, m, l, rng);
  }
  // B^T = A^T Q (n x l); C = B B^T = (A^T Q)^T (A^T Q).
  a.multiply_transposed(q, l, z);
  std::vector<double> c(l * l, 0.0);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = i; j < l; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += z[r * l + i] * z[r * l + j];
      c[i * l + j] = c[j * l + i] = s;
    }
  std::vector<double> w;
  const auto eig = detail::symmetric_eigen(std::move(c), l, w);
  out.singular_values.resize(rank);
  out.left.assign(m * rank, 0.0);
  out.right.assign(n * rank, 0.0);
  for (std::size_t j = 0; j < rank; ++j) {
    const double sigma = std::sqrt(std::max(0.0, eig[j]));
    out.singular_values[j] = sigma;
    for (std::size_t r = 0; r < m; ++r) {
      double s = 0.0;
      for (std::size_t i = 0; i < l; ++i) s += q[r * l + i] * w[i * l + j];
      out.left[r * rank + j] = s;
    }
    if (sigma > 0.0)
      for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < l; ++i) s += z[r * l + i] * w[i * l + j];
        out.right[r * rank + j] = s / sigma;
      }
  }
  return out;
}

/// Word vectors keyed by word. Zero vectors count as missing.
class WordEmbeddings {
 public:
  WordEmbeddings() = default;
  explicit WordEmbeddings(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  void add(std::string word, std::span<const double> vec) {
    if (vec.size() != dimension_)
      throw DataError("embedding for '" + word + "' has dimension " + std::to_string(vec.size()) +
                      ", expected " + std::to_string(dimension_));
    if (index_.contains(word)) throw DataError("duplicate embedding for '" + word + "'");
    double norm = 0.0;
    for (double x : vec) norm += x * x;
    index_.emplace(word, words_.size());
    words_.push_back(std::move(word));
    data_.insert(data_.end(), vec.begin(), vec.end());
    norms_.push_back(std::sqrt(norm));
  }

  /// Vector for a word, or nullopt when absent or zero.
  std::optional<std::span<const double>> vector(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end() || norms_[it->second] == 0.0) return std::nullopt;
    return std::span(data_).subspan(it->second * dimension_, dimension_);
  }

  std::optional<double> cosine(std::string_view a, std::string_view b) const {
    auto ia = index_.find(std::string(a));
    auto ib = index_.find(std::string(b));
    if (ia == index_.end() || ib == index_.end()) return std::nullopt;
    return cosine_by_index(ia->second, ib->second);
  }

  /// The n words most cosine-similar to `word` (excluding itself); ties by word.
  std::vector<std::pair<std::string, double>> nearest(std::string_view word, std::size_t n) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end() || norms_[it->second] == 0.0) return {};
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t j = 0; j < words_.size(); ++j) {
      if (j == it->second || norms_[j] == 0.0) continue;
      out.emplace_back(words_[j], *cosine_by_index(it->second, j));
    }
    n = std::min(n, out.size());
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n), out.end(),
                      [](const auto& x, const auto& y) {
                        if (x.second != y.second) return x.second > y.second;
                        return x.first < y.first;
                      });
    out.resize(n);
    return out;
  }

 private:
  std::optional<double> cosine_by_index(std::size_t i, std::size_t j) const {
    if (norms_[i] == 0.0 || norms_[j] == 0.0) return std::nullopt;
    double dot = 0.0;
    for (std::size_t d = 0; d < dimension_; ++d)
      dot += data_[i * dimension_ + d] * data_[j * dimension_ + d];
    return dot / (norms_[i] * norms_[j]);
  }

  std::size_t dimension_ = 0;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Text format: header "vocab_size dimension", then "word v1 ... vd" lines.
inline WordEmbeddings read_embeddings(std::istream& in) {
  if (!in) throw DataError("unreadable embedding stream");
  std::size_t count = 0, dim = 0;
  std::string header;
  if (!std::getline(in, header)) throw DataError("embeddings: missing header");
  std::istringstream hs(header);
  if (!(hs >> count >> dim) || dim == 0) throw DataError("embeddings: bad header line");
  WordEmbeddings emb(dim);
  std::string line;
  std::vector<double> vec(dim);
  std::size_t line_no = 1;
  while (emb.size() < count && std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    for (auto& x : vec)
      if (!(ls >> x)) throw DataError("embeddings: short vector on line " + std::to_string(line_no));
    emb.add(word, vec);
  }
  if (emb.size() != count)
    throw DataError("embeddings: header promised " + std::to_string(count) + " vectors, found " +
                    std::to_string(emb.size()));
  return emb;
}

inline void write_embeddings(std::ostream& out, const WordEmbeddings& emb) {
  out << emb.size() << ' ' << emb.dimension() << '\n';
  char buf[40];
  for (const auto& w : emb.words()) {
    out << w;
    auto v = emb.vector(w);
    for (std::size_t d = 0; d < emb.dimension(); ++d) {
      std::snprintf(buf, sizeof buf, " %.9g", v ? (*v)[d] : 0.0);
      out << buf;
    }
    out << '\n';
  }
}

/// Positive PMI word-word matrix from sliding-window co-occurrence.
inline SparseMatrix ppmi_matrix(const TokenStreams& docs, std::size_t vocab_size,
                                std::size_t window_size, unsigned threads = 1) {
  std::vector<std::uint32_t> all(vocab_size);
  std::iota(all.begin(), all.end(), 0u);
  const auto counts = window_counts(docs, all, window_size, threads);
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(vocab_size);
  counts.for_each_pair([&](std::size_t i, std::size_t j, std::uint64_t) {
    const double pmi = std::log(counts.joint_probability(i, j) /
                                (counts.probability(i) * counts.probability(j)));
    if (pmi > 0.0) {
      rows[i].emplace_back(static_cast<std::uint32_t>(j), pmi);
      rows[j].emplace_back(static_cast<std::uint32_t>(i), pmi);
    }
  });
  SparseMatrix m;
  m.rows = m.cols = vocab_size;
  for (auto& r : rows) {
    std::sort(r.begin(), r.end());
    for (const auto& [c, v] : r) {
      m.indices.push_back(c);
      m.values.push_back(v);
    }
    m.offsets.push_back(m.indices.size());
  }
  return m;
}

/// Corpus-trained embeddings: PPMI co-occurrence factorized by truncated SVD,
/// word vector = left singular vector row scaled by sqrt(singular value).
inline WordEmbeddings train_fallback_embeddings(const TokenStreams& docs, const Vocabulary& vocab,
                                                std::size_t dimension, std::size_t window_size,
                                                std::uint64_t seed = 0, unsigned threads = 1) {
  if (docs.empty()) throw DataError("cannot train embeddings on an empty corpus");
  if (dimension == 0) throw UsageError("embedding dimension must be positive");
  if (dimension > vocab.size()) {
    warn("embedding dimension " + std::to_string(dimension) + " exceeds vocabulary size; clamped to " +
         std::to_string(vocab.size()));
    dimension = vocab.size();
  }
  const auto ppmi = ppmi_matrix(docs, vocab.size(), window_size, threads);
  const auto svd = truncated_svd(ppmi, dimension, seed);
  WordEmbeddings emb(svd.rank);
  std::vector<double> vec(svd.rank);
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    for (std::size_t j = 0; j < svd.rank; ++j)
      vec[j] = svd.left[w * svd.rank + j] * std::sqrt(svd.singular_values[j]);
    emb.add(vocab.term(w), vec);
  }
  return emb;
}

}  // namespace topicforge

#endif  // TOPICFORGE_EMBEDDINGS_HPP
