#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "topicforge/corpus.hpp"

using namespace topicforge;

namespace {

RawRecord raw(std::string id, std::string text, std::string dept, std::string provider = "Nurse") {
  RawRecord r;
  r.note_id = id;
  r.patient_id = "p1";
  r.text = text;
  r.note_type = "Progress Notes";
  r.encounter_dept = dept;
  r.dept_specialty = "General";
  r.provider_type = provider;
  return r;
}

Corpus corpus_of(std::vector<std::string> texts) {
  Corpus c;
  for (std::size_t i = 0; i < texts.size(); ++i)
    c.notes.push_back(testutil::make_note("n" + std::to_string(i), texts[i]));
  return c;
}

}  // namespace

TEST(Ingest, KeepsSocialWorkDepartment) {
  const std::vector<RawRecord> recs{raw("a", "text", "Social Work")};
  EXPECT_EQ(ingest(recs).size(), 1u);
}

TEST(Ingest, DropsRecordWithNoMatchingField) {
  RawRecord r = raw("a", "text", "Oncology", "Oncology");
  r.note_type = r.dept_specialty = "Oncology";
  const std::vector<RawRecord> recs{r};
  EXPECT_EQ(ingest(recs).size(), 0u);
}

TEST(Ingest, MatchesProviderTypeCaseInsensitively) {
  std::vector<RawRecord> recs{raw("a", "x", "Oncology"), raw("b", "y", "Cardiology", "SOCIAL WORKER"),
                              raw("c", "z", "Dermatology")};
  const auto c = ingest(recs);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.notes[0].note_id, "b");
  EXPECT_EQ(c.provenance.records_in, 3u);
  EXPECT_EQ(c.provenance.after_metadata_filter, 1u);
}

TEST(Ingest, MalformedRecordsAreSkippedWithWarning) {
  std::istringstream in(
      "{\"note_id\":\"a\",\"text\":\"hello\",\"encounter_dept\":\"Social\"}\n"
      "not json\n"
      "{\"note_id\":\"b\",\"encounter_dept\":\"Social\"}\n"
      "{\"note_id\":\"c\",\"text\":\"again\",\"provider_type\":\"social worker\"}\n");
  ScopedWarningCapture cap;
  const auto c = ingest(in, false);
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(c.provenance.rejected_malformed, 2u);
  EXPECT_EQ(cap.messages().size(), 2u);
}

TEST(Ingest, UnreadableStreamIsFatal) {
  std::ifstream missing("/nonexistent/notes.jsonl");
  EXPECT_THROW(ingest(missing, false), DataError);
}

TEST(Ingest, DuplicateNoteIdKeepsFirst) {
  std::vector<RawRecord> recs{raw("a", "first", "Social"), raw("a", "second", "Social")};
  ScopedWarningCapture cap;
  const auto c = ingest(recs);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.notes[0].text, "first");
  EXPECT_EQ(c.provenance.rejected_duplicate_id, 1u);
}

TEST(Ingest, EmptyKeywordIsRejected) {
  std::vector<RawRecord> recs;
  EXPECT_THROW(ingest(recs, MetadataFilter{"", true}), UsageError);
}

TEST(Ingest, CsvWithQuotedFieldsAndCodeList) {
  std::istringstream in(
      "note_id,patient_id,text,note_type,encounter_dept,dept_specialty,provider_type,icd10_codes\n"
      "n1,p1,\"Lives alone, \"\"no\"\" support\nsecond line\",Progress,Social Work,SW,LCSW,F32.9;Z59.0\n");
  const auto c = ingest(in, true);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.notes[0].text, "Lives alone, \"no\" support\nsecond line");
  EXPECT_EQ(c.notes[0].icd10_codes, (std::vector<std::string>{"F32.9", "Z59.0"}));
}

TEST(Ingest, JsonRoundTrip) {
  Corpus c = corpus_of({"first note text", "second note text"});
  c.notes[1].icd10_codes = {"K52.9"};
  std::stringstream ss;
  write_corpus_jsonl(ss, c);
  EXPECT_EQ(read_corpus_jsonl(ss).notes, c.notes);
}

TEST(Filter, ShortAndDuplicateNotes) {
  const std::string a = "Patient lives alone and needs a ride to clinic.";  // 40+ chars
  const auto out = filter_short_and_dedup(corpus_of({"hi", a, a}), 30);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.notes[0].text, a);
  EXPECT_EQ(out.notes[0].note_id, "n1");
  EXPECT_EQ(out.provenance.removed_short, 1u);
  EXPECT_EQ(out.provenance.removed_duplicate_text, 1u);
}

TEST(Filter, WhitespaceVariantsAreDuplicates) {
  const auto out = filter_short_and_dedup(corpus_of({"a  b\tc", " a b c ", "a b  d"}), 0);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.notes[1].text, "a b  d");
}

TEST(Filter, LengthCountsCharactersNotBytes) {
  // 10 two-byte characters
  const std::string s = "\xc3\xa9\xc3\xa9\xc3\xa9\xc3\xa9\xc3\xa9\xc3\xa9\xc3\xa9\xc3\xa9\xc3\xa9\xc3\xa9";
  EXPECT_EQ(filter_short_and_dedup(corpus_of({s}), 11).size(), 0u);
  EXPECT_EQ(filter_short_and_dedup(corpus_of({s}), 10).size(), 1u);
}

TEST(Filter, ZeroMinimumOnUniqueCorpusIsNoOp) {
  const auto c = corpus_of({"one", "two", "three"});
  EXPECT_EQ(filter_short_and_dedup(c, 0).notes, c.notes);
}

TEST(FilterProperty, IdempotentAndMonotone) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> texts;
    const auto n = rng.below(12);
    for (std::size_t i = 0; i < n; ++i) {
      if (!texts.empty() && rng.uniform() < 0.3)
        texts.push_back(texts[rng.below(texts.size())]);
      else
        texts.push_back(testutil::random_text(rng, rng.below(10)));
    }
    const auto c = corpus_of(texts);
    const std::size_t len = rng.below(40);
    const auto once = filter_short_and_dedup(c, len);
    const auto twice = filter_short_and_dedup(once, len);
    EXPECT_EQ(once.notes, twice.notes);
    for (const auto& note : once.notes) EXPECT_GE(utf8_length(note.text), len);
    EXPECT_LE(filter_short_and_dedup(c, len + 5).size(), once.size());
  }
}

TEST(Preprocess, TabsNewlinesAndStopwords) {
  EXPECT_EQ(preprocess("The\tpatient  lives\nalone", default_stopwords()),
            (std::vector<std::string>{"patient", "lives", "alone"}));
}

TEST(Preprocess, EmptyAndAllRemoved) {
  EXPECT_TRUE(preprocess("", default_stopwords()).empty());
  EXPECT_TRUE(preprocess("a I of", default_stopwords()).empty());
}

TEST(Preprocess, DigitsAndPunctuationSplitTokens) {
  EXPECT_EQ(preprocess("B12-deficiency, re-check x2 \\s", WordSet{}),
            (std::vector<std::string>{"deficiency", "re", "check"}));
}

TEST(Stopwords, BundledListHasExpectedSizeAndMatchesFile) {
  const auto words = default_stopwords();
  EXPECT_EQ(words.size(), 179u);
  EXPECT_TRUE(words.contains("the"));
  EXPECT_EQ(load_word_list(testutil::data_dir() + "/stopwords_en.txt"), words);
}

TEST(BuildMatrix, HandCounts) {
  const auto m = build_matrix(corpus_of({"cat dog", "dog dog"}), {}, 1);
  ASSERT_EQ(m.vocabulary().terms(), (std::vector<std::string>{"cat", "dog"}));
  EXPECT_EQ(m.rows(), 2u);
  const auto r0 = m.row(0), r1 = m.row(1);
  ASSERT_EQ(r0.size(), 2u);
  EXPECT_EQ(r0.counts[0], 1u);
  EXPECT_EQ(r0.counts[1], 1u);
  ASSERT_EQ(r1.size(), 1u);
  EXPECT_EQ(r1.terms[0], 1u);
  EXPECT_EQ(r1.counts[0], 2u);
  EXPECT_EQ(m.vocabulary().document_frequency(1), 2u);
}

TEST(BuildMatrix, MinDfAboveCorpusSizeIsFatal) {
  try {
    build_matrix(corpus_of({"cat dog", "dog dog"}), {}, 3);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("2 documents"), std::string::npos);
  }
}

TEST(BuildMatrix, SingleTermCorpus) {
  const auto m = build_matrix(corpus_of({"dog dog dog"}), {}, 1);
  EXPECT_EQ(m.cols(), 1u);
  EXPECT_EQ(m.row(0).total(), 3u);
}

TEST(BuildMatrix, EmptyCorpusIsFatal) {
  EXPECT_THROW(build_matrix(Corpus{}, {}, 1), DataError);
}

TEST(BuildMatrixProperty, RowSumsVocabularyAndDeterminism) {
  Rng rng(5);
  const auto stop = default_stopwords();
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> texts;
    const auto n = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) texts.push_back(testutil::random_text(rng, 1 + rng.below(15)));
    const auto c = corpus_of(texts);
    const std::size_t min_df = 1 + rng.below(2);
    DocTermMatrix m;
    try {
      m = build_matrix(c, stop, min_df);
    } catch (const DataError&) {
      continue;
    }
    const auto& v = m.vocabulary();
    EXPECT_TRUE(std::is_sorted(v.terms().begin(), v.terms().end()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_EQ(v.find(v.term(i)), i);
      EXPECT_FALSE(stop.contains(v.term(i)));
    }
    for (std::size_t d = 0; d < n; ++d) {
      std::uint64_t expected = 0;
      for (const auto& tok : preprocess(texts[d], stop)) expected += v.contains(tok);
      EXPECT_EQ(m.row(d).total(), expected);
      for (auto count : m.row(d).counts) EXPECT_GE(count, 1u);
    }
    EXPECT_TRUE(m == build_matrix(c, stop, min_df, 3));
    try {
      EXPECT_LE(build_matrix(c, stop, min_df + 1).cols(), m.cols());
    } catch (const DataError&) {
    }
  }
}

TEST(MatrixFiles, RoundTrip) {
  Rng rng(3);
  const auto m = testutil::random_matrix(rng, 7, 5, 4);
  std::stringstream ms, vs;
  write_matrix(ms, m);
  write_vocabulary(vs, m.vocabulary());
  const auto vocab = read_vocabulary(vs);
  const auto back = read_matrix(ms, vocab);
  EXPECT_TRUE(back == m);
  std::istringstream header(ms.str());
  std::size_t rows, cols, nnz;
  header >> rows >> cols >> nnz;
  EXPECT_EQ(rows, 7u);
  EXPECT_EQ(nnz, m.nnz());
}

TEST(MatrixFiles, ColumnMismatchIsRejected) {
  std::istringstream ms("1 3 1\n0 0 1\n");
  EXPECT_THROW(read_matrix(ms, Vocabulary({"a", "b"})), DataError);
}

TEST(TokenStreamFiles, RoundTripIncludingEmptyDocuments) {
  const TokenStreams s{{0, 2, 2}, {}, {1}};
  std::stringstream ss;
  write_token_streams(ss, s);
  EXPECT_EQ(read_token_streams(ss, 3), s);
  std::istringstream bad("0 5\n");
  EXPECT_THROW(read_token_streams(bad, 3), DataError);
}

TEST(Corpus, TokenStreamsAgreeWithMatrixRows) {
  const auto c = corpus_of({"housing shelter housing", "phone call shelter"});
  const auto docs = tokenize_corpus(c, default_stopwords());
  const auto m = build_matrix_from_tokens(docs, 1);
  const auto streams = to_token_streams(docs, m.vocabulary());
  for (std::size_t d = 0; d < m.rows(); ++d) EXPECT_EQ(streams[d].size(), m.row(d).total());
}
