#ifndef TOPICFORGE_STATS_HPP
#define TOPICFORGE_STATS_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topicforge/corpus.hpp"
#include "topicforge/error.hpp"
#include "topicforge/special.hpp"

namespace topicforge {

/// One class id per document row.
struct ClassLabeling {
  std::vector<std::uint32_t> labels;
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return class_names.size(); }

  std::vector<std::size_t> class_sizes() const {
    std::vector<std::size_t> sizes(class_names.size(), 0);
    for (auto c : labels) ++sizes.at(c);
    return sizes;
  }
};

struct Chi2Result {
  std::vector<double> statistic;
  std::vector<double> p_value;
  int degrees_of_freedom = 0;
};

/// Per-term chi-squared test of term counts against the class split.
///
/// Observed counts are term totals per class; expected counts spread the
/// term total over classes in proportion to class document counts.
inline Chi2Result chi2(const DocTermMatrix& matrix, const ClassLabeling& labeling) {
  const std::size_t classes = labeling.num_classes();
  if (classes < 2) throw DataError("chi2 needs at least two classes");
  if (labeling.labels.size() != matrix.rows())
    throw DataError("chi2: label count does not match matrix rows");
  const auto sizes = labeling.class_sizes();
  for (std::size_t c = 0; c < classes; ++c)
    if (sizes[c] == 0)
      throw DataError("chi2: class '" + labeling.class_names[c] + "' has no documents");

  const std::size_t V = matrix.cols();
  std::vector<double> observed(classes * V, 0.0);
  for (std::size_t d = 0; d < matrix.rows(); ++d) {
    const auto r = matrix.row(d);
    double* dst = observed.data() + labeling.labels[d] * V;
    for (std::size_t i = 0; i < r.size(); ++i) dst[r.terms[i]] += r.counts[i];
  }
  const double n = static_cast<double>(matrix.rows());
  Chi2Result result;
  result.degrees_of_freedom = static_cast<int>(classes) - 1;
  result.statistic.assign(V, 0.0);
  result.p_value.assign(V, 1.0);
  for (std::size_t f = 0; f < V; ++f) {
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) total += observed[c * V + f];
    if (total == 0.0) continue;
    double stat = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double expected = total * (static_cast<double>(sizes[c]) / n);
      if (expected <= 0.0) continue;
      const double diff = observed[c * V + f] - expected;
      stat += diff * diff / expected;
    }
    result.statistic[f] = stat;
    result.p_value[f] = chi2_survival(stat, result.degrees_of_freedom);
  }
  return result;
}

/// Terms present in more than `max_document_fraction` of the documents.
inline WordSet frequent_word_blocklist(const DocTermMatrix& matrix,
                                       double max_document_fraction = 0.5) {
  WordSet out;
  const double limit = max_document_fraction * static_cast<double>(matrix.rows());
  std::vector<std::size_t> df(matrix.cols(), 0);
  for (const auto& e : matrix.entries()) ++df[e.term];
  for (std::size_t t = 0; t < matrix.cols(); ++t)
    if (static_cast<double>(df[t]) > limit) out.insert(matrix.vocabulary().term(t));
  return out;
}

struct RankedWord {
  std::uint32_t term = 0;
  std::string word;
  double statistic = 0.0;
  double p_value = 1.0;
};

struct TopWords {
  std::vector<RankedWord> words;
  /// Fewer than k terms were enriched in the class.
  bool incomplete = false;
};

/// The k terms most significantly over-represented in `class_id` compared to
/// all other documents, skipping `exclusions`.
inline TopWords one_vs_rest_top_words(const DocTermMatrix& matrix,
                                      const ClassLabeling& labeling,
                                      std::uint32_t class_id, std::size_t k,
                                      const WordSet& exclusions = {}) {
  if (class_id >= labeling.num_classes()) throw DataError("invalid class id");
  if (k == 0) throw UsageError("top-word count must be at least 1");
  ClassLabeling binary;
  binary.class_names = {labeling.class_names[class_id], "rest"};
  binary.labels.reserve(labeling.labels.size());
  for (auto c : labeling.labels) binary.labels.push_back(c == class_id ? 0 : 1);
  const auto result = chi2(matrix, binary);

  const std::size_t V = matrix.cols();
  std::vector<double> in_class(V, 0.0), total(V, 0.0);
  for (std::size_t d = 0; d < matrix.rows(); ++d) {
    const auto r = matrix.row(d);
    for (std::size_t i = 0; i < r.size(); ++i) {
      total[r.terms[i]] += r.counts[i];
      if (binary.labels[d] == 0) in_class[r.terms[i]] += r.counts[i];
    }
  }
  const double share = static_cast<double>(binary.class_sizes()[0]) /
                       static_cast<double>(matrix.rows());

  TopWords out;
  for (std::uint32_t t = 0; t < V; ++t) {
    const auto& word = matrix.vocabulary().term(t);
    if (exclusions.contains(word)) continue;
    if (!(in_class[t] > total[t] * share)) continue;
    out.words.push_back({t, word, result.statistic[t], result.p_value[t]});
  }
  std::sort(out.words.begin(), out.words.end(), [](const RankedWord& a, const RankedWord& b) {
    if (a.p_value != b.p_value) return a.p_value < b.p_value;
    if (a.statistic != b.statistic) return a.statistic > b.statistic;
    return a.word < b.word;
  });
  if (out.words.size() < k) {
    out.incomplete = true;
    warn("class '" + labeling.class_names[class_id] + "' has only " +
         std::to_string(out.words.size()) + " enriched terms (wanted " +
         std::to_string(k) + ")");
  } else {
    out.words.resize(k);
  }
  return out;
}

/// Dense row-major table with labelled rows and columns.
struct ProportionTable {
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values.at(r * col_names.size() + c); }
  double& at(std::size_t r, std::size_t c) { return values.at(r * col_names.size() + c); }
};

/// Entry (c, w) = count of w in class c / all tokens in class c.
inline ProportionTable word_frequency_table(const DocTermMatrix& matrix,
                                            const ClassLabeling& labeling,
                                            std::span<const std::string> words) {
  if (labeling.labels.size() != matrix.rows())
    throw DataError("label count does not match matrix rows");
  std::vector<std::uint32_t> ids;
  for (const auto& w : words) {
    auto id = matrix.vocabulary().find(w);
    if (!id) throw DataError("word '" + w + "' is not in the vocabulary");
    ids.push_back(*id);
  }
  const std::size_t C = labeling.num_classes();
  std::vector<double> class_total(C, 0.0);
  std::vector<double> term_class(C * matrix.cols(), 0.0);
  for (std::size_t d = 0; d < matrix.rows(); ++d) {
    const auto r = matrix.row(d);
    const auto c = labeling.labels[d];
    for (std::size_t i = 0; i < r.size(); ++i) {
      class_total[c] += r.counts[i];
      term_class[c * matrix.cols() + r.terms[i]] += r.counts[i];
    }
  }
  ProportionTable table;
  table.row_names = labeling.class_names;
  table.col_names.assign(words.begin(), words.end());
  table.values.assign(C * ids.size(), 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    if (class_total[c] == 0.0) {
      warn("class '" + labeling.class_names[c] + "' has no tokens; row left at zero");
      continue;
    }
    for (std::size_t j = 0; j < ids.size(); ++j)
      table.at(c, j) = term_class[c * matrix.cols() + ids[j]] / class_total[c];
  }
  return table;
}

// ---------------------------------------------------------------------------
// ICD-10 chapters

struct Icd10Chapter {
  std::string_view start;
  std::string_view end;
  std::string_view name;

  std::string display() const {
    return std::string(start) + "-" + std::string(end) + " " + std::string(name);
  }
  bool contains(std::string_view key) const { return start <= key && key <= end; }
};

/// The 22 ICD-10 chapters, keyed by three-character code prefix.
inline constexpr std::array<Icd10Chapter, 22> kIcd10Chapters{{
    {"A00", "B99", "Certain infectious and parasitic diseases"},
    {"C00", "D49", "Neoplasms"},
    {"D50", "D89",
     "Diseases of the blood and blood-forming organs and certain disorders "
     "involving the immune mechanism"},
    {"E00", "E89", "Endocrine, nutritional and metabolic diseases"},
    {"F01", "F99", "Mental, Behavioral and Neurodevelopmental disorders"},
    {"G00", "G99", "Diseases of the nervous system"},
    {"H00", "H59", "Diseases of the eye and adnexa"},
    {"H60", "H95", "Diseases of the ear and mastoid process"},
    {"I00", "I99", "Diseases of the circulatory system"},
    {"J00", "J99", "Diseases of the respiratory system"},
    {"K00", "K95", "Diseases of the digestive system"},
    {"L00", "L99", "Diseases of the skin and subcutaneous tissue"},
    {"M00", "M99", "Diseases of the musculoskeletal system and connective tissue"},
    {"N00", "N99", "Diseases of the genitourinary system"},
    {"O00", "O9A", "Pregnancy, childbirth and the puerperium"},
    {"P00", "P96", "Certain conditions originating in the perinatal period"},
    {"Q00", "Q99", "Congenital malformations, deformations and chromosomal abnormalities"},
    {"R00", "R99",
     "Symptoms, signs and abnormal clinical and laboratory findings, not "
     "elsewhere classified"},
    {"S00", "T88", "Injury, poisoning and certain other consequences of external causes"},
    {"U00", "U85", "Codes for special purposes"},
    {"V00", "Y99", "External causes of morbidity"},
    {"Z00", "Z99", "Factors influencing health status and contact with health services"},
}};

/// Range starts of the ten chapters used for the per-chapter word analysis.
inline constexpr std::array<std::string_view, 10> kAnalysisChapterStarts{
    "G00", "I00", "J00", "K00", "M00", "N00", "O00", "Q00", "C00", "D50"};

namespace detail {
inline bool icd10_chapters_disjoint() {
  for (std::size_t i = 0; i < kIcd10Chapters.size(); ++i) {
    if (kIcd10Chapters[i].start > kIcd10Chapters[i].end) return false;
    for (std::size_t j = i + 1; j < kIcd10Chapters.size(); ++j) {
      const auto& a = kIcd10Chapters[i];
      const auto& b = kIcd10Chapters[j];
      if (!(a.end < b.start || b.end < a.start)) return false;
    }
  }
  return true;
}
inline const bool kIcd10TableChecked = [] {
  if (!icd10_chapters_disjoint()) throw std::logic_error("ICD-10 chapter ranges overlap");
  return true;
}();
}  // namespace detail

/// Uppercased first three characters when they form letter-digit-alnum.
inline std::optional<std::string> icd10_prefix(std::string_view code) {
  std::string key;
  for (char c : code) {
    if (c == '.' || is_space(c)) continue;
    key.push_back(c >= 'a' && c <= 'z' ? static_cast<char>(c - 'a' + 'A') : c);
    if (key.size() == 3) break;
  }
  if (key.size() < 3) return std::nullopt;
  const bool ok = key[0] >= 'A' && key[0] <= 'Z' && key[1] >= '0' && key[1] <= '9' &&
                  ((key[2] >= '0' && key[2] <= '9') || (key[2] >= 'A' && key[2] <= 'Z'));
  if (!ok) return std::nullopt;
  return key;
}

/// Index into kIcd10Chapters of the chapter containing `code`.
inline std::optional<std::size_t> icd10_chapter_index(std::string_view code) {
  const auto key = icd10_prefix(code);
  if (!key) {
    warn("invalid ICD-10 code '" + std::string(code) + "'");
    return std::nullopt;
  }
  for (std::size_t i = 0; i < kIcd10Chapters.size(); ++i)
    if (kIcd10Chapters[i].contains(*key)) return i;
  return std::nullopt;
}

/// Display name ("K00-K95 Diseases of the digestive system") or nullopt.
inline std::optional<std::string> icd10_chapter(std::string_view code) {
  auto i = icd10_chapter_index(code);
  if (!i) return std::nullopt;
  return kIcd10Chapters[*i].display();
}

inline std::vector<std::size_t> analysis_chapter_indices() {
  std::vector<std::size_t> out;
  for (auto start : kAnalysisChapterStarts)
    for (std::size_t i = 0; i < kIcd10Chapters.size(); ++i)
      if (kIcd10Chapters[i].start == start) out.push_back(i);
  return out;
}

/// Documents expanded so each (note, chapter) pair is its own row.
struct ChapterExpansion {
  std::vector<std::size_t> source_rows;
  ClassLabeling labeling;
};

/// Maps each note's codes to the chapters in `chapters` (indices into
/// kIcd10Chapters). A note mapping to several chapters appears once per
/// chapter; notes with no matching chapter are dropped. Only chapters with
/// at least one note become classes, in the order given.
inline ChapterExpansion expand_by_chapter(std::span<const Note> notes,
                                          std::span<const std::size_t> chapters) {
  std::vector<std::vector<std::size_t>> per_note(notes.size());
  std::vector<std::size_t> chapter_count(kIcd10Chapters.size(), 0);
  for (std::size_t d = 0; d < notes.size(); ++d) {
    for (const auto& code : notes[d].icd10_codes) {
      auto idx = icd10_chapter_index(code);
      if (!idx) continue;
      if (std::find(chapters.begin(), chapters.end(), *idx) == chapters.end()) continue;
      auto& mine = per_note[d];
      if (std::find(mine.begin(), mine.end(), *idx) == mine.end()) mine.push_back(*idx);
    }
    for (auto idx : per_note[d]) ++chapter_count[idx];
  }
  std::vector<std::int64_t> class_of(kIcd10Chapters.size(), -1);
  ChapterExpansion out;
  for (auto idx : chapters)
    if (chapter_count[idx] > 0 && class_of[idx] < 0) {
      class_of[idx] = static_cast<std::int64_t>(out.labeling.class_names.size());
      out.labeling.class_names.push_back(kIcd10Chapters[idx].display());
    }
  for (std::size_t d = 0; d < notes.size(); ++d) {
    auto mine = per_note[d];
    std::sort(mine.begin(), mine.end(),
              [&](std::size_t a, std::size_t b) { return class_of[a] < class_of[b]; });
    for (auto idx : mine) {
      out.source_rows.push_back(d);
      out.labeling.labels.push_back(static_cast<std::uint32_t>(class_of[idx]));
    }
  }
  return out;
}

}  // namespace topicforge

#endif  // TOPICFORGE_STATS_HPP
