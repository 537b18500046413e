#ifndef TOPICFORGE_CORPUS_HPP
#define TOPICFORGE_CORPUS_HPP

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "topicforge/error.hpp"
#include "topicforge/parallel.hpp"
#include "topicforge/stopwords.hpp"

namespace topicforge {

struct Note {
  std::string note_id;
  std::string patient_id;
  std::string text;
  std::string note_type;
  std::string encounter_dept;
  std::string dept_specialty;
  std::string provider_type;
  std::vector<std::string> icd10_codes;

  bool operator==(const Note&) const = default;
};

/// Counts recorded as a corpus moves through ingestion and filtering.
struct Provenance {
  std::size_t records_in = 0;
  std::size_t rejected_malformed = 0;
  std::size_t rejected_duplicate_id = 0;
  std::size_t after_metadata_filter = 0;
  std::size_t removed_short = 0;
  std::size_t removed_duplicate_text = 0;
  std::string keyword;
  bool keyword_filter = false;
  std::optional<std::size_t> min_len;

  bool operator==(const Provenance&) const = default;
};

struct Corpus {
  std::vector<Note> notes;
  Provenance provenance;

  std::size_t size() const { return notes.size(); }
  bool empty() const { return notes.empty(); }
};

/// A note record as read from disk, before validation. Absent fields stay
/// empty optionals; `malformed` marks lines that could not be parsed at all.
struct RawRecord {
  std::optional<std::string> note_id;
  std::optional<std::string> patient_id;
  std::optional<std::string> text;
  std::optional<std::string> note_type;
  std::optional<std::string> encounter_dept;
  std::optional<std::string> dept_specialty;
  std::optional<std::string> provider_type;
  std::vector<std::string> icd10_codes;
  bool malformed = false;
  std::size_t line = 0;
};

/// Case-insensitive keyword match on the four metadata fields.
struct MetadataFilter {
  std::string keyword = "social";
  bool enabled = true;
};

// ---------------------------------------------------------------------------
// Text helpers

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

inline bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

/// Number of UTF-8 code points (continuation bytes are not counted).
inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

/// Whitespace runs collapsed to one space, leading/trailing space removed.
inline std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Record readers

namespace detail {

inline std::optional<std::string> json_string(const nlohmann::json& obj,
                                              const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    parts.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// Reads one RFC 4180 record; returns false at end of input.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (!any) return false;
  if (!field.empty() && field.back() == '\r') field.pop_back();
  fields.push_back(std::move(field));
  return true;
}

}  // namespace detail

/// One JSON object per line. Lines that are not JSON objects become
/// malformed records so ingestion can report and skip them.
inline std::vector<RawRecord> read_jsonl_records(std::istream& in) {
  if (!in) throw DataError("unreadable note stream");
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    RawRecord rec;
    rec.line = line_no;
    try {
      const auto obj = nlohmann::json::parse(line);
      if (!obj.is_object()) throw std::runtime_error("not an object");
      rec.note_id = detail::json_string(obj, "note_id");
      rec.patient_id = detail::json_string(obj, "patient_id");
      rec.note_type = detail::json_string(obj, "note_type");
      rec.encounter_dept = detail::json_string(obj, "encounter_dept");
      rec.dept_specialty = detail::json_string(obj, "dept_specialty");
      rec.provider_type = detail::json_string(obj, "provider_type");
      if (auto it = obj.find("text"); it != obj.end() && it->is_string())
        rec.text = it->get<std::string>();
      if (auto it = obj.find("icd10_codes"); it != obj.end() && it->is_array())
        for (const auto& code : *it)
          if (code.is_string()) rec.icd10_codes.push_back(code.get<std::string>());
    } catch (const std::exception&) {
      rec.malformed = true;
    }
    records.push_back(std::move(rec));
  }
  if (in.bad()) throw DataError("read error on note stream");
  return records;
}

/// CSV with a header row naming the same keys as the JSON-lines format.
/// icd10_codes holds codes separated by ';'.
inline std::vector<RawRecord> read_csv_records(std::istream& in) {
  if (!in) throw DataError("unreadable note stream");
  std::vector<std::string> header;
  if (!detail::read_csv_record(in, header)) return {};
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i)
    column[detail::trim(header[i])] = i;

  std::vector<RawRecord> records;
  std::vector<std::string> fields;
  std::size_t line_no = 1;
  while (detail::read_csv_record(in, fields)) {
    ++line_no;
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;
    RawRecord rec;
    rec.line = line_no;
    auto get = [&](const char* key) -> std::optional<std::string> {
      auto it = column.find(key);
      if (it == column.end() || it->second >= fields.size()) return std::nullopt;
      return fields[it->second];
    };
    rec.note_id = get("note_id");
    rec.patient_id = get("patient_id");
    rec.text = get("text");
    rec.note_type = get("note_type");
    rec.encounter_dept = get("encounter_dept");
    rec.dept_specialty = get("dept_specialty");
    rec.provider_type = get("provider_type");
    if (auto codes = get("icd10_codes"))
      for (auto& code : detail::split(*codes, ';'))
        if (auto t = detail::trim(code); !t.empty()) rec.icd10_codes.push_back(t);
    if (!column.contains("text")) rec.malformed = true;
    records.push_back(std::move(rec));
  }
  if (in.bad()) throw DataError("read error on note stream");
  return records;
}

// ---------------------------------------------------------------------------
// Ingestion and filters

inline bool metadata_matches(const Note& note, const MetadataFilter& filter) {
  if (!filter.enabled) return true;
  const std::string key = ascii_lower(filter.keyword);
  for (const std::string* field : {&note.note_type, &note.encounter_dept,
                                   &note.dept_specialty, &note.provider_type})
    if (ascii_lower(*field).find(key) != std::string::npos) return true;
  return false;
}

/// Validates raw records and keeps those whose metadata carries the filter
/// keyword. Records without text are rejected with a warning; a repeated
/// note_id keeps the first occurrence.
inline Corpus ingest(std::span<const RawRecord> records,
                     const MetadataFilter& filter = {}) {
  if (filter.enabled && filter.keyword.empty())
    throw UsageError("metadata filter keyword must be nonempty");
  Corpus corpus;
  auto& prov = corpus.provenance;
  prov.records_in = records.size();
  prov.keyword = filter.keyword;
  prov.keyword_filter = filter.enabled;

  std::unordered_set<std::string> seen_ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RawRecord& rec = records[i];
    if (rec.malformed || !rec.text) {
      ++prov.rejected_malformed;
      warn("record at line " + std::to_string(rec.line) +
           (rec.malformed ? " is not a valid record" : " has no text field") +
           "; skipped");
      continue;
    }
    Note note;
    note.note_id = rec.note_id.value_or("#" + std::to_string(rec.line));
    note.patient_id = rec.patient_id.value_or("");
    note.text = *rec.text;
    note.note_type = rec.note_type.value_or("");
    note.encounter_dept = rec.encounter_dept.value_or("");
    note.dept_specialty = rec.dept_specialty.value_or("");
    note.provider_type = rec.provider_type.value_or("");
    note.icd10_codes = rec.icd10_codes;
    if (!metadata_matches(note, filter)) continue;
    if (!seen_ids.insert(note.note_id).second) {
      ++prov.rejected_duplicate_id;
      warn("duplicate note_id '" + note.note_id + "' at line " +
           std::to_string(rec.line) + "; skipped");
      continue;
    }
    corpus.notes.push_back(std::move(note));
  }
  prov.after_metadata_filter = corpus.notes.size();
  return corpus;
}

inline Corpus ingest(std::istream& in, bool csv, const MetadataFilter& filter = {}) {
  const auto records = csv ? read_csv_records(in) : read_jsonl_records(in);
  return ingest(records, filter);
}

/// Drops notes shorter than min_len code points, then keeps only the first
/// note of each group sharing whitespace-normalized text.
inline Corpus filter_short_and_dedup(const Corpus& corpus, std::size_t min_len) {
  Corpus out;
  out.provenance = corpus.provenance;
  out.provenance.min_len = min_len;
  std::unordered_set<std::string> seen;
  for (const Note& note : corpus.notes) {
    if (utf8_length(note.text) < min_len) {
      ++out.provenance.removed_short;
      continue;
    }
    if (!seen.insert(normalize_whitespace(note.text)).second) {
      ++out.provenance.removed_duplicate_text;
      continue;
    }
    out.notes.push_back(note);
  }
  return out;
}

/// Lowercased maximal ASCII-alphabetic runs of length >= 2, minus stopwords.
/// Every other byte (digits, punctuation, whitespace, non-ASCII) separates.
inline std::vector<std::string> preprocess(std::string_view text,
                                          const WordSet& stopwords) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2 && !stopwords.contains(current))
      tokens.push_back(current);
    current.clear();
  };
  for (char c : text) {
    if (is_ascii_alpha(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

// ---------------------------------------------------------------------------
// Vocabulary and sparse matrix

class Vocabulary {
 public:
  Vocabulary() = default;

  /// Terms must be unique; document frequencies default to zero.
  explicit Vocabulary(std::vector<std::string> terms,
                      std::vector<std::uint32_t> document_frequency = {})
      : terms_(std::move(terms)), document_frequency_(std::move(document_frequency)) {
    if (document_frequency_.empty()) document_frequency_.assign(terms_.size(), 0);
    if (document_frequency_.size() != terms_.size())
      throw DataError("vocabulary: frequency table size mismatch");
    index_.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i)
      if (!index_.emplace(terms_[i], static_cast<std::uint32_t>(i)).second)
        throw DataError("vocabulary: duplicate term '" + terms_[i] + "'");
  }

  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const std::string& term(std::size_t id) const { return terms_.at(id); }
  const std::vector<std::string>& terms() const { return terms_; }
  std::uint32_t document_frequency(std::size_t id) const {
    return document_frequency_.at(id);
  }
  const std::vector<std::uint32_t>& document_frequencies() const {
    return document_frequency_;
  }

  std::optional<std::uint32_t> find(std::string_view term) const {
    auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view term) const { return find(term).has_value(); }

  /// FNV-1a over the terms in column order; identifies a vocabulary in
  /// model files.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](unsigned char c) {
      h ^= c;
      h *= 0x100000001b3ULL;
    };
    for (const auto& t : terms_) {
      for (unsigned char c : t) mix(c);
      mix('\n');
    }
    return h;
  }

  bool operator==(const Vocabulary& other) const { return terms_ == other.terms_; }

 private:
  std::vector<std::string> terms_;
  std::vector<std::uint32_t> document_frequency_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Nonzero entries of one document, sorted by term id.
struct SparseRow {
  std::span<const std::uint32_t> terms;
  std::span<const std::uint32_t> counts;

  std::size_t size() const { return terms.size(); }
  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

struct Entry {
  std::uint32_t doc;
  std::uint32_t term;
  std::uint32_t count;
};

/// Compressed sparse row document-term count matrix.
class DocTermMatrix {
 public:
  DocTermMatrix() : row_offsets_{0} {}

  /// Builds from per-document (term, count) lists. Terms within a row may
  /// repeat and come in any order; zero counts are dropped.
  DocTermMatrix(Vocabulary vocabulary,
                const std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>>& rows)
      : vocabulary_(std::move(vocabulary)) {
    row_offsets_.reserve(rows.size() + 1);
    row_offsets_.push_back(0);
    for (auto row : rows) {
      std::sort(row.begin(), row.end());
      for (std::size_t i = 0; i < row.size();) {
        std::uint64_t total = 0;
        const std::uint32_t term = row[i].first;
        if (term >= vocabulary_.size())
          throw DataError("matrix entry term id " + std::to_string(term) +
                          " out of range");
        for (; i < row.size() && row[i].first == term; ++i) total += row[i].second;
        if (total == 0) continue;
        terms_.push_back(term);
        counts_.push_back(static_cast<std::uint32_t>(total));
      }
      row_offsets_.push_back(terms_.size());
    }
  }

  std::size_t rows() const { return row_offsets_.size() - 1; }
  std::size_t cols() const { return vocabulary_.size(); }
  std::size_t nnz() const { return terms_.size(); }
  const Vocabulary& vocabulary() const { return vocabulary_; }

  SparseRow row(std::size_t d) const {
    const std::size_t b = row_offsets_.at(d), e = row_offsets_.at(d + 1);
    return {std::span(terms_).subspan(b, e - b), std::span(counts_).subspan(b, e - b)};
  }

  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    out.reserve(nnz());
    for (std::size_t d = 0; d < rows(); ++d) {
      auto r = row(d);
      for (std::size_t i = 0; i < r.size(); ++i)
        out.push_back({static_cast<std::uint32_t>(d), r.terms[i], r.counts[i]});
    }
    return out;
  }

  /// Matrix restricted to the given rows, in the given order.
  DocTermMatrix select_rows(std::span<const std::size_t> docs) const {
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> rows_out;
    rows_out.reserve(docs.size());
    for (std::size_t d : docs) {
      auto r = row(d);
      auto& dst = rows_out.emplace_back();
      for (std::size_t i = 0; i < r.size(); ++i) dst.emplace_back(r.terms[i], r.counts[i]);
    }
    return DocTermMatrix(vocabulary_, rows_out);
  }

  /// Total count per column.
  std::vector<std::uint64_t> column_totals() const {
    std::vector<std::uint64_t> totals(cols(), 0);
    for (std::size_t i = 0; i < terms_.size(); ++i) totals[terms_[i]] += counts_[i];
    return totals;
  }

  bool operator==(const DocTermMatrix& o) const {
    return vocabulary_ == o.vocabulary_ && row_offsets_ == o.row_offsets_ &&
           terms_ == o.terms_ && counts_ == o.counts_;
  }

 private:
  Vocabulary vocabulary_;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::uint32_t> terms_;
  std::vector<std::uint32_t> counts_;
};

/// Per-document term-id sequences in text order (out-of-vocabulary tokens
/// dropped). Sliding-window statistics run over these.
using TokenStreams = std::vector<std::vector<std::uint32_t>>;

inline std::vector<std::vector<std::string>> tokenize_corpus(
    const Corpus& corpus, const WordSet& stopwords, unsigned threads = 1) {
  std::vector<std::vector<std::string>> docs(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    docs[i] = preprocess(corpus.notes[i].text, stopwords);
  });
  return docs;
}

/// Vocabulary = tokens present in >= min_df documents, lexicographic order.
inline DocTermMatrix build_matrix_from_tokens(
    const std::vector<std::vector<std::string>>& docs, std::size_t min_df) {
  if (docs.empty()) throw DataError("cannot build a matrix from an empty corpus");
  std::map<std::string, std::uint32_t> df;
  std::size_t total_tokens = 0;
  for (const auto& doc : docs) {
    total_tokens += doc.size();
    std::unordered_set<std::string_view> seen;
    for (const auto& tok : doc)
      if (seen.insert(tok).second) ++df[tok];
  }
  std::vector<std::string> terms;
  std::vector<std::uint32_t> freqs;
  for (const auto& [term, n] : df)
    if (n >= min_df) {
      terms.push_back(term);
      freqs.push_back(n);
    }
  if (terms.empty()) {
    std::ostringstream msg;
    msg << "empty vocabulary after filtering: " << docs.size() << " documents, "
        << total_tokens << " tokens, " << df.size() << " distinct terms, none in >= "
        << min_df << " documents";
    throw DataError(msg.str());
  }
  Vocabulary vocab(std::move(terms), std::move(freqs));
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> rows(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (const auto& tok : docs[d])
      if (auto id = vocab.find(tok)) rows[d].emplace_back(*id, 1);
  return DocTermMatrix(std::move(vocab), rows);
}

inline DocTermMatrix build_matrix(const Corpus& corpus, const WordSet& stopwords,
                                  std::size_t min_df, unsigned threads = 1) {
  if (corpus.empty()) throw DataError("cannot build a matrix from an empty corpus");
  return build_matrix_from_tokens(tokenize_corpus(corpus, stopwords, threads), min_df);
}

inline TokenStreams to_token_streams(const std::vector<std::vector<std::string>>& docs,
                                     const Vocabulary& vocab) {
  TokenStreams streams(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (const auto& tok : docs[d])
      if (auto id = vocab.find(tok)) streams[d].push_back(*id);
  return streams;
}

/// Bag-of-words fallback when token order is unavailable: each document's
/// terms laid out in column order, repeated by count.
inline TokenStreams token_streams_from_matrix(const DocTermMatrix& m) {
  TokenStreams streams(m.rows());
  for (std::size_t d = 0; d < m.rows(); ++d) {
    auto r = m.row(d);
    for (std::size_t i = 0; i < r.size(); ++i)
      streams[d].insert(streams[d].end(), r.counts[i], r.terms[i]);
  }
  return streams;
}

// ---------------------------------------------------------------------------
// File formats

/// "rows cols nnz" header, then one "doc term count" triple per line.
inline void write_matrix(std::ostream& out, const DocTermMatrix& m) {
  out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  for (const auto& e : m.entries()) out << e.doc << ' ' << e.term << ' ' << e.count << '\n';
}

/// One term per line; line number (from 0) is the column id.
inline void write_vocabulary(std::ostream& out, const Vocabulary& v) {
  for (const auto& t : v.terms()) out << t << '\n';
}

inline Vocabulary read_vocabulary(std::istream& in) {
  if (!in) throw DataError("unreadable vocabulary stream");
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    terms.push_back(line);
  }
  while (!terms.empty() && terms.back().empty()) terms.pop_back();
  return Vocabulary(std::move(terms));
}

/// Reads the sparse triple format; document frequencies are recomputed.
inline DocTermMatrix read_matrix(std::istream& in, const Vocabulary& vocab) {
  if (!in) throw DataError("unreadable matrix stream");
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz)) throw DataError("matrix: bad header line");
  if (cols != vocab.size())
    throw DataError("matrix has " + std::to_string(cols) +
                    " columns but vocabulary has " + std::to_string(vocab.size()) +
                    " terms");
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> entries(rows);
  std::vector<std::uint32_t> df(cols, 0);
  for (std::size_t i = 0; i < nnz; ++i) {
    std::uint64_t d, t, c;
    if (!(in >> d >> t >> c)) throw DataError("matrix: truncated entry list");
    if (d >= rows || t >= cols || c == 0)
      throw DataError("matrix: invalid entry on data line " + std::to_string(i + 1));
    entries[d].emplace_back(static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(c));
  }
  DocTermMatrix tmp(vocab, entries);
  for (const auto& e : tmp.entries()) ++df[e.term];
  return DocTermMatrix(Vocabulary(vocab.terms(), df), entries);
}

/// One line per document: the term ids of its token stream in text order.
inline void write_token_streams(std::ostream& out, const TokenStreams& streams) {
  for (const auto& doc : streams) {
    for (std::size_t i = 0; i < doc.size(); ++i) out << (i ? " " : "") << doc[i];
    out << '\n';
  }
}

inline TokenStreams read_token_streams(std::istream& in, std::size_t vocab_size) {
  if (!in) throw DataError("unreadable token stream file");
  TokenStreams streams;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    auto& doc = streams.emplace_back();
    std::uint64_t id;
    while (ls >> id) {
      if (id >= vocab_size)
        throw DataError("token file line " + std::to_string(streams.size()) +
                        ": term id out of range");
      doc.push_back(static_cast<std::uint32_t>(id));
    }
    if (!ls.eof()) throw DataError("token file line " + std::to_string(streams.size()) + ": bad id");
  }
  return streams;
}

inline nlohmann::json note_to_json(const Note& n) {
  return nlohmann::json{{"note_id", n.note_id},
                        {"patient_id", n.patient_id},
                        {"text", n.text},
                        {"note_type", n.note_type},
                        {"encounter_dept", n.encounter_dept},
                        {"dept_specialty", n.dept_specialty},
                        {"provider_type", n.provider_type},
                        {"icd10_codes", n.icd10_codes}};
}

inline void write_corpus_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& n : corpus.notes) out << note_to_json(n).dump() << '\n';
}

/// Reads notes written by write_corpus_jsonl; no filters are applied.
inline Corpus read_corpus_jsonl(std::istream& in) {
  const auto records = read_jsonl_records(in);
  MetadataFilter none;
  none.enabled = false;
  return ingest(records, none);
}

}  // namespace topicforge

#endif  // TOPICFORGE_CORPUS_HPP
