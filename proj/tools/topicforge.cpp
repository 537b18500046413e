// topicforge command line front end.

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "topicforge/corpus.hpp"
#include "topicforge/defaults.hpp"
#include "topicforge/embeddings.hpp"
#include "topicforge/error.hpp"
#include "topicforge/eval.hpp"
#include "topicforge/label.hpp"
#include "topicforge/lda.hpp"
#include "topicforge/report.hpp"
#include "topicforge/stats.hpp"
#include "topicforge/synth.hpp"

namespace fs = std::filesystem;
using namespace topicforge;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string to_setting(const std::string& s) { return s; }
std::string to_setting(bool b) { return b ? "true" : "false"; }
// shortest text that parses back to x
std::string to_setting(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, r.ptr};
}
std::string to_setting(std::size_t x) { return std::to_string(x); }
std::string to_setting(unsigned x) { return std::to_string(x); }

struct Setting {
  std::string name;
  std::function<std::string()> value;
};

// Everything a command touched, for the manifest.
struct Run {
  std::string command;
  fs::path out_dir;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string read_input(Run& run, const fs::path& path) {
  auto bytes = read_file(path);
  run.inputs.push_back(path.string());
  return bytes;
}

void write_output(Run& run, const std::string& name, const std::string& content) {
  std::error_code ec;
  fs::create_directories(run.out_dir, ec);
  const fs::path path = run.out_dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw DataError("cannot write " + path.string());
  run.outputs.push_back(path.string());
}

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream ss;
  fn(ss);
  return ss.str();
}

std::vector<std::size_t> parse_k_range(const std::string& spec) {
  std::vector<std::size_t> ks;
  auto number = [&](const std::string& s) -> std::size_t {
    try {
      std::size_t used = 0;
      const auto v = std::stoul(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError("bad K value '" + s + "' in --k-range");
    }
  };
  if (auto dots = spec.find(".."); dots != std::string::npos) {
    const auto lo = number(spec.substr(0, dots)), hi = number(spec.substr(dots + 2));
    if (lo > hi) throw UsageError("--k-range lower bound exceeds upper bound");
    for (auto k = lo; k <= hi; ++k) ks.push_back(k);
  } else {
    for (const auto& part : detail::split(spec, ',')) ks.push_back(number(detail::trim(part)));
  }
  for (auto k : ks)
    if (k < 2) throw UsageError("every candidate K must be at least 2");
  return ks;
}

// ---------------------------------------------------------------------------
// Data directories: matrix.txt, vocab.txt, tokens.txt and optionally corpus.jsonl

struct Dataset {
  DocTermMatrix matrix;
  TokenStreams tokens;
  std::optional<Corpus> corpus;
};

Dataset load_dataset(Run& run, const fs::path& dir) {
  if (dir.empty()) throw UsageError("--data is required");
  Dataset ds;
  std::istringstream vin(read_input(run, dir / "vocab.txt"));
  const auto vocab = read_vocabulary(vin);
  std::istringstream min(read_input(run, dir / "matrix.txt"));
  ds.matrix = read_matrix(min, vocab);
  if (fs::exists(dir / "tokens.txt")) {
    std::istringstream tin(read_input(run, dir / "tokens.txt"));
    ds.tokens = read_token_streams(tin, vocab.size());
    if (ds.tokens.size() != ds.matrix.rows())
      throw DataError("tokens.txt and matrix.txt disagree on the document count");
  } else {
    warn("no tokens.txt in " + dir.string() + "; coherence windows use bag-of-words order");
    ds.tokens = token_streams_from_matrix(ds.matrix);
  }
  if (fs::exists(dir / "corpus.jsonl")) {
    std::istringstream cin(read_input(run, dir / "corpus.jsonl"));
    ds.corpus = read_corpus_jsonl(cin);
    if (ds.corpus->size() != ds.matrix.rows())
      throw DataError("corpus.jsonl and matrix.txt disagree on the document count");
  }
  return ds;
}

void write_dataset(Run& run, const DocTermMatrix& m, const TokenStreams& tokens) {
  write_output(run, "matrix.txt", render([&](std::ostream& o) { write_matrix(o, m); }));
  write_output(run, "vocab.txt", render([&](std::ostream& o) { write_vocabulary(o, m.vocabulary()); }));
  write_output(run, "tokens.txt", render([&](std::ostream& o) { write_token_streams(o, tokens); }));
}

LdaModel load_model_file(Run& run, const fs::path& path, const Vocabulary& vocab) {
  if (path.empty()) throw UsageError("--model is required");
  std::istringstream in(read_input(run, path));
  return load_model(in, vocab);
}

// Named document groups for proportions and label studies.
std::vector<DocumentSubset> make_groups(Run& run, const Dataset& ds, const std::string& group_by,
                                        const fs::path& groups_file) {
  std::vector<DocumentSubset> out;
  auto add = [&](const std::string& name, std::size_t row) {
    auto it = std::find_if(out.begin(), out.end(), [&](auto& g) { return g.name == name; });
    if (it == out.end()) {
      out.push_back({name, {}});
      it = out.end() - 1;
    }
    it->rows.push_back(row);
  };
  if (!groups_file.empty()) {
    std::istringstream in(read_input(run, groups_file));
    const auto rows = read_csv(in);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() < 2) throw DataError("groups file row " + std::to_string(i) + " is short");
      const auto row = std::stoul(rows[i][0]);
      if (row >= ds.matrix.rows()) throw DataError("groups file refers to a missing document");
      add(rows[i][1], row);
    }
    return out;
  }
  if (!ds.corpus) throw DataError("grouping by '" + group_by + "' needs corpus.jsonl in the data directory");
  if (group_by == "note_type") {
    for (std::size_t d = 0; d < ds.corpus->size(); ++d) add(ds.corpus->notes[d].note_type, d);
  } else if (group_by == "chapter") {
    const auto chapters = analysis_chapter_indices();
    const auto exp = expand_by_chapter(ds.corpus->notes, chapters);
    for (const auto& name : exp.labeling.class_names) out.push_back({name, {}});
    for (std::size_t i = 0; i < exp.source_rows.size(); ++i)
      out[exp.labeling.labels[i]].rows.push_back(exp.source_rows[i]);
  } else {
    throw UsageError("--group-by must be note_type or chapter");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Options shared by several commands

struct LdaOptions {
  std::size_t k = 10;
  double alpha = -1.0, eta = -1.0, tau0 = 1.0, kappa = 0.7, tol = 1e-3;
  std::size_t batch_size = 2048, max_iters = 100, passes = 10;
  std::uint64_t seed = 0;
  bool batch_mode = false;

  LdaConfig config(unsigned threads) const {
    LdaConfig c;
    c.num_topics = k;
    c.alpha = alpha;
    c.eta = eta;
    c.tau0 = tau0;
    c.kappa = kappa;
    c.batch_size = batch_size;
    c.e_step_max_iters = max_iters;
    c.e_step_tol = tol;
    c.passes = passes;
    c.seed = seed;
    c.batch_mode = batch_mode;
    c.threads = threads;
    return c;
  }
};

struct CoherenceOptions {
  std::size_t top_n = defaults::kTopWords, window = defaults::kCoherenceWindow;
  double epsilon = 1e-12;
  std::string similarity = "mean";

  CoherenceConfig config() const { return {top_n, window, epsilon}; }
  SimilarityAggregate aggregate() const {
    if (similarity == "mean") return SimilarityAggregate::kMean;
    if (similarity == "max") return SimilarityAggregate::kMax;
    throw UsageError("--similarity must be mean or max");
  }
};

struct Options {
  unsigned threads = default_thread_count();
  bool deterministic = false;
  std::string config_file;
  bool dry_run = false;

  std::string out = ".";
  std::string data, model, input, stopwords, labels, groups, group_by = "note_type";

  // ingest
  bool csv = false, no_metadata_filter = false;
  std::string keyword{defaults::kMetadataKeyword};
  std::size_t min_len = defaults::kMinNoteLength, min_df = defaults::kMinDocumentFrequency;
  // freq
  std::size_t top_k = defaults::kTopEnrichedWords;
  double frequent_fraction = defaults::kFrequentWordFraction;
  bool all_chapters = false;
  // select-k / label study
  std::string k_range = std::to_string(defaults::kMinTopics) + ".." + std::to_string(defaults::kMaxTopics);
  std::size_t sweep_repeats = 1;
  std::size_t repeats = defaults::kStudyRepeats;
  // fit
  std::size_t top_words = defaults::kTopWords;
  LdaOptions lda;
  CoherenceOptions coh;
  // label
  std::string dictionary, embeddings, blocklist;
  bool train_embeddings = false, study = false;
  std::size_t neighbors = defaults::kNeighbors, embedding_dim = 50, embedding_window = 10;
  double min_enrichment = 0.0;
  // proportions
  bool dominant = false;
  // synth
  std::size_t synth_k = 10, synth_vocab = 500, synth_docs = 2000, min_tokens = 100, max_tokens = 100;
  double synth_alpha = 0.1, synth_eta = 0.05, p_leak = 0.05;
  std::string structure = "block";
  std::uint64_t synth_seed = 1;
  // report
  std::string sweep, table, kind = "heatmap", title;
  // rerun
  std::string manifest;
};

class Cli {
 public:
  explicit Cli(Options& o) : o_(o), app_("topicforge: topic discovery for clinical note corpora") {
    app_.set_version_flag("--version", kVersion);
    app_.require_subcommand(1);
    app_.fallthrough();
    app_.option_defaults()->always_capture_default();
    global(app_.add_option("--threads", o_.threads, "worker threads (env TOPICFORGE_THREADS)"), "threads",
           o_.threads);
    global(app_.add_flag("--deterministic", o_.deterministic,
                         "bit-reproducible results (always honored; recorded in the manifest)"),
           "deterministic", o_.deterministic);
    app_.add_option("--config", o_.config_file, "key=value defaults file; flags take precedence");
    app_.add_flag("--dry-run", o_.dry_run, "print the resolved configuration and exit");

    auto* s = sub("ingest", "read notes, apply filters, build the document-term matrix");
    add(s, "input", o_.input, "notes file (JSON lines, or CSV with --csv)")->required();
    add(s, "csv", o_.csv, "input is CSV");
    add(s, "keyword", o_.keyword, "metadata keyword to keep");
    add(s, "no-metadata-filter", o_.no_metadata_filter, "keep notes regardless of metadata");
    add(s, "min-len", o_.min_len, "minimum note length in characters");
    add(s, "min-df", o_.min_df, "minimum document frequency of a term");
    add(s, "stopwords", o_.stopwords, "stopword file (default: bundled English list)");
    add_out(s);

    s = sub("synth", "sample a corpus from a known topic model");
    add(s, "k", o_.synth_k, "true number of topics");
    add(s, "vocab", o_.synth_vocab, "vocabulary size");
    add(s, "docs", o_.synth_docs, "number of documents");
    add(s, "min-tokens", o_.min_tokens, "fewest tokens per document");
    add(s, "max-tokens", o_.max_tokens, "most tokens per document");
    add(s, "alpha", o_.synth_alpha, "document-topic concentration");
    add(s, "eta", o_.synth_eta, "topic-word concentration (dirichlet structure)");
    add(s, "structure", o_.structure, "block or dirichlet");
    add(s, "p-leak", o_.p_leak, "block mass outside the topic's own words");
    add(s, "seed", o_.synth_seed, "random seed");
    add_out(s);

    s = sub("freq", "enriched words per ICD-10 chapter and the proportion heatmap");
    add_data(s);
    add(s, "top-k", o_.top_k, "enriched words per chapter");
    add(s, "frequent-fraction", o_.frequent_fraction, "drop words in more than this share of notes");
    add(s, "all-chapters", o_.all_chapters, "use all 22 chapters instead of the 10 analysis chapters");
    add_out(s);

    s = sub("select-k", "sweep the number of topics by coherence and similarity");
    add_data(s);
    add(s, "k-range", o_.k_range, "candidates as lo..hi or a comma list");
    add(s, "sweep-repeats", o_.sweep_repeats, "models per candidate");
    add_lda(s, false);
    add_coherence(s);
    add_out(s);

    s = sub("fit", "fit an LDA model");
    add_data(s);
    add_lda(s, true);
    add(s, "top-words", o_.top_words, "words listed per topic");
    add_out(s);

    s = sub("transform", "infer topic proportions for every document");
    add_data(s);
    add(s, "model", o_.model, "model file")->required();
    add_out(s);

    s = sub("coherence", "coherence and similarity of a fitted model");
    add_data(s);
    add(s, "model", o_.model, "model file")->required();
    add_coherence(s);
    add_out(s);

    s = sub("label", "name topics with the dictionary heuristic");
    add_data(s);
    add(s, "model", o_.model, "model file (omit with --study)");
    add(s, "dictionary", o_.dictionary, "dictionary file (default: bundled eleven topics)");
    add(s, "embeddings", o_.embeddings, "word vectors, text format 'count dim' then 'word v...'");
    add(s, "train-embeddings", o_.train_embeddings, "expand with PPMI+SVD vectors trained on the corpus");
    add(s, "embedding-dim", o_.embedding_dim, "dimension of trained vectors");
    add(s, "embedding-window", o_.embedding_window, "co-occurrence window for trained vectors");
    add(s, "neighbors", o_.neighbors, "nearest neighbours added per seed word");
    add(s, "blocklist", o_.blocklist, "words never added by expansion (default: stopwords + generic terms)");
    add(s, "min-enrichment", o_.min_enrichment, "below this a cluster stays Unlabeled");
    add(s, "top-words", o_.top_words, "words per cluster");
    add(s, "study", o_.study, "repeated study over document groups");
    add(s, "group-by", o_.group_by, "note_type or chapter");
    add(s, "groups", o_.groups, "CSV of row,group overriding --group-by");
    add(s, "repeats", o_.repeats, "models per group in a study");
    add(s, "k-range", o_.k_range, "candidates for each group's K");
    add_lda(s, false);
    add_coherence(s);
    add_out(s);

    s = sub("proportions", "topic proportions per document group");
    add_data(s);
    add(s, "model", o_.model, "model file")->required();
    add(s, "labels", o_.labels, "labels.csv from the label command (default: topic numbers)");
    add(s, "group-by", o_.group_by, "note_type or chapter");
    add(s, "groups", o_.groups, "CSV of row,group overriding --group-by");
    add(s, "dominant", o_.dominant, "count each document's dominant topic instead of mean theta");
    add_out(s);

    s = sub("report", "redraw an SVG from a CSV table");
    add(s, "sweep", o_.sweep, "sweep table from select-k");
    add(s, "table", o_.table, "proportion table CSV");
    add(s, "kind", o_.kind, "heatmap or bubble (for --table)");
    add(s, "title", o_.title, "chart title");
    add_out(s);

    s = sub("rerun", "repeat a run from its manifest");
    s->add_option("manifest", o_.manifest, "manifest.json")->required();
    s->add_option("--out", o_.out, "output directory (default: the recorded one)");
  }

  CLI::App& app() { return app_; }
  const std::vector<Setting>& globals() const { return globals_; }
  const std::vector<Setting>& settings(CLI::App* s) { return settings_[s]; }

 private:
  CLI::App* sub(const char* name, const char* desc) { return app_.add_subcommand(name, desc); }

  template <typename T>
  CLI::Option* add(CLI::App* s, const std::string& name, T& var, const std::string& desc) {
    CLI::Option* opt;
    if constexpr (std::is_same_v<T, bool>)
      opt = s->add_flag("--" + name, var, desc);
    else
      opt = s->add_option("--" + name, var, desc);
    settings_[s].push_back({name, [&var] { return to_setting(var); }});
    return opt;
  }
  template <typename T>
  void global(CLI::Option*, const std::string& name, T& var) {
    globals_.push_back({name, [&var] { return to_setting(var); }});
  }
  void add_out(CLI::App* s) { add(s, "out", o_.out, "output directory"); }
  void add_data(CLI::App* s) {
    add(s, "data", o_.data, "data directory from ingest or synth")->required();
  }
  void add_lda(CLI::App* s, bool with_k) {
    if (with_k) add(s, "k", o_.lda.k, "number of topics");
    add(s, "alpha", o_.lda.alpha, "document-topic prior (<= 0: 1/K)");
    add(s, "eta", o_.lda.eta, "topic-word prior (<= 0: 1/K)");
    add(s, "tau0", o_.lda.tau0, "learning-rate offset");
    add(s, "kappa", o_.lda.kappa, "learning-rate decay in (0.5, 1]");
    add(s, "batch-size", o_.lda.batch_size, "documents per update");
    add(s, "max-iters", o_.lda.max_iters, "E-step iteration cap");
    add(s, "tol", o_.lda.tol, "E-step tolerance on mean gamma change");
    add(s, "passes", o_.lda.passes, "passes over the corpus");
    add(s, "seed", o_.lda.seed, "random seed");
    add(s, "batch-mode", o_.lda.batch_mode, "full-batch variational Bayes");
  }
  void add_coherence(CLI::App* s) {
    add(s, "top-n", o_.coh.top_n, "top words per topic for coherence and similarity");
    add(s, "window", o_.coh.window, "coherence sliding window");
    add(s, "epsilon", o_.coh.epsilon, "joint probability treated as zero below this");
    add(s, "similarity", o_.coh.similarity, "mean or max pairwise Jaccard");
  }

  Options& o_;
  CLI::App app_;
  std::vector<Setting> globals_;
  std::map<CLI::App*, std::vector<Setting>> settings_;
};

// Config file values fill options the command line left unset.
void apply_config_file(CLI::App& app, CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
    const auto key = detail::trim(t.substr(0, eq));
    const auto value = detail::trim(t.substr(eq + 1));
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt) opt = app.get_option_no_throw("--" + key);
    if (!opt || key == "config")
      throw UsageError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    opt->clear();
    opt->add_result(value);
    opt->run_callback();
  }
}

// ---------------------------------------------------------------------------
// Commands

int cmd_ingest(Run& run, const Options& o) {
  std::istringstream in(read_input(run, o.input));
  MetadataFilter filter{o.keyword, !o.no_metadata_filter};
  const Corpus raw = ingest(in, o.csv, filter);
  const Corpus corpus = filter_short_and_dedup(raw, o.min_len);
  const auto& p = corpus.provenance;
  const std::size_t mismatched =
      p.records_in - p.rejected_malformed - p.rejected_duplicate_id - p.after_metadata_filter;
  write_output(run, "corpus.jsonl", render([&](std::ostream& os) { write_corpus_jsonl(os, corpus); }));
  ordered_json prov{{"records_in", p.records_in},
                    {"rejected_malformed", p.rejected_malformed},
                    {"rejected_duplicate_id", p.rejected_duplicate_id},
                    {"metadata_mismatch", mismatched},
                    {"after_metadata_filter", p.after_metadata_filter},
                    {"removed_short", p.removed_short},
                    {"removed_duplicate_text", p.removed_duplicate_text},
                    {"notes_out", corpus.size()},
                    {"keyword", p.keyword},
                    {"metadata_filter", p.keyword_filter},
                    {"min_len", o.min_len}};
  write_output(run, "provenance.json", prov.dump(2) + "\n");
  std::cout << p.records_in << " in, " << corpus.size() << " after filters ("
            << p.rejected_malformed << " malformed, " << mismatched << " metadata mismatch, "
            << p.removed_short << " short, " << p.removed_duplicate_text << " duplicate text)\n";
  if (corpus.empty()) {
    warn("no notes survived the filters; matrix files not written");
    return 0;
  }
  const WordSet stop = o.stopwords.empty() ? default_stopwords() : load_word_list(o.stopwords);
  if (!o.stopwords.empty()) run.inputs.push_back(o.stopwords);
  const auto docs = tokenize_corpus(corpus, stop, o.threads);
  const auto matrix = build_matrix_from_tokens(docs, o.min_df);
  write_dataset(run, matrix, to_token_streams(docs, matrix.vocabulary()));
  return 0;
}

int cmd_synth(Run& run, const Options& o) {
  SynthSpec spec;
  spec.num_topics = o.synth_k;
  spec.vocab_size = o.synth_vocab;
  spec.docs = o.synth_docs;
  spec.min_tokens = o.min_tokens;
  spec.max_tokens = o.max_tokens;
  spec.alpha = o.synth_alpha;
  spec.eta = o.synth_eta;
  spec.p_leak = o.p_leak;
  spec.seed = o.synth_seed;
  spec.threads = o.threads;
  if (o.structure == "block")
    spec.structure = TopicStructure::kBlock;
  else if (o.structure == "dirichlet")
    spec.structure = TopicStructure::kDirichlet;
  else
    throw UsageError("--structure must be block or dirichlet");
  const auto sc = generate(spec);
  write_dataset(run, sc.matrix, sc.tokens);
  std::vector<std::string> topic_names;
  for (std::size_t k = 0; k < sc.num_topics; ++k) topic_names.push_back("topic_" + std::to_string(k));
  write_output(run, "true_beta.csv", render([&](std::ostream& os) {
                 write_dense_csv(os, sc.true_beta, sc.num_topics, spec.vocab_size,
                                 sc.matrix.vocabulary().terms(), "topic_");
               }));
  write_output(run, "true_theta.csv", render([&](std::ostream& os) {
                 write_dense_csv(os, sc.true_theta, spec.docs, sc.num_topics, topic_names, "doc_");
               }));
  return 0;
}

int cmd_freq(Run& run, const Options& o) {
  const auto ds = load_dataset(run, o.data);
  if (!ds.corpus) throw DataError("freq needs corpus.jsonl (with ICD-10 codes) in the data directory");
  std::vector<std::size_t> chapters;
  if (o.all_chapters)
    for (std::size_t i = 0; i < kIcd10Chapters.size(); ++i) chapters.push_back(i);
  else
    chapters = analysis_chapter_indices();
  const auto exp = expand_by_chapter(ds.corpus->notes, chapters);
  if (exp.labeling.num_classes() < 2)
    throw DataError("freq needs notes from at least 2 ICD-10 chapters; found " +
                    std::to_string(exp.labeling.num_classes()));
  const auto matrix = ds.matrix.select_rows(exp.source_rows);
  const auto blocked = frequent_word_blocklist(matrix, o.frequent_fraction);
  std::vector<TopWords> per_class;
  std::vector<std::string> words;
  for (std::uint32_t c = 0; c < exp.labeling.num_classes(); ++c) {
    per_class.push_back(one_vs_rest_top_words(matrix, exp.labeling, c, o.top_k, blocked));
    for (const auto& w : per_class.back().words)
      if (std::find(words.begin(), words.end(), w.word) == words.end()) words.push_back(w.word);
  }
  write_output(run, "top_words.csv", render([&](std::ostream& os) {
                 write_top_words_csv(os, exp.labeling.class_names, per_class);
               }));
  const auto table = word_frequency_table(matrix, exp.labeling, words);
  write_output(run, "heatmap.csv", render([&](std::ostream& os) { write_table_csv(os, table, "chapter"); }));
  write_output(run, "heatmap.svg", heatmap_svg(table, "Proportion of enriched words by ICD-10 chapter"));
  return 0;
}

int cmd_select_k(Run& run, const Options& o) {
  const auto ds = load_dataset(run, o.data);
  SelectKOptions opts;
  opts.repeats = o.sweep_repeats;
  opts.similarity = o.coh.aggregate();
  opts.threads = o.threads;
  const auto sel = select_k(ds.matrix, ds.tokens, parse_k_range(o.k_range), o.lda.config(1),
                            o.coh.config(), opts);
  write_output(run, "sweep.csv", render([&](std::ostream& os) { write_sweep_csv(os, sel); }));
  write_output(run, "sweep.svg", sweep_chart_svg(sel, "Coherence (C) and similarity (S) by K"));
  std::cout << "chosen K = " << sel.chosen_k << '\n';
  return 0;
}

std::string topics_csv(const LdaModel& model, std::size_t n) {
  std::ostringstream os;
  os << "topic,words\n";
  for (std::size_t k = 0; k < model.num_topics(); ++k) {
    std::string words;
    for (const auto& w : top_words(model, k, n)) words += (words.empty() ? "" : " ") + w;
    os << k << ',' << csv_field(words) << '\n';
  }
  return os.str();
}

int cmd_fit(Run& run, const Options& o) {
  const auto ds = load_dataset(run, o.data);
  const auto model = fit(ds.matrix, o.lda.config(o.threads));
  write_output(run, "model.txt", render([&](std::ostream& os) { save_model(os, model); }));
  write_output(run, "topics.csv", topics_csv(model, o.top_words));
  write_output(run, "elbo.csv", render([&](std::ostream& os) {
                 os << "pass,elbo\n";
                 const auto& h = model.elbo_history();
                 for (std::size_t i = 0; i < h.size(); ++i) os << i + 1 << ',' << format_real(h[i]) << '\n';
               }));
  return 0;
}

int cmd_transform(Run& run, const Options& o) {
  const auto ds = load_dataset(run, o.data);
  auto model = load_model_file(run, o.model, ds.matrix.vocabulary());
  model.set_threads(o.threads);
  const auto theta = transform_all(model, ds.matrix);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < model.num_topics(); ++k) names.push_back("topic_" + std::to_string(k));
  write_output(run, "theta.csv", render([&](std::ostream& os) {
                 write_dense_csv(os, theta, ds.matrix.rows(), model.num_topics(), names, "doc_");
               }));
  return 0;
}

int cmd_coherence(Run& run, const Options& o) {
  const auto ds = load_dataset(run, o.data);
  const auto model = load_model_file(run, o.model, ds.matrix.vocabulary());
  const auto coh = topic_coherence(model, ds.tokens, o.coh.config(), o.threads);
  const double s = topic_similarity(model, o.coh.top_n, o.coh.aggregate());
  std::ostringstream os;
  os << "topic,coherence\n";
  for (std::size_t k = 0; k < coh.scores.size(); ++k)
    os << k << ',' << (coh.scores[k] ? format_real(*coh.scores[k]) : std::string("nan")) << '\n';
  os << "mean," << format_real(coh.mean) << '\n' << "similarity," << format_real(s) << '\n';
  write_output(run, "coherence.csv", os.str());
  std::cout << "C = " << format_real(coh.mean) << "  S = " << format_real(s) << '\n';
  return 0;
}

LabelDictionary prepare_dictionary(Run& run, const Options& o, const Dataset& ds) {
  LabelDictionary dict;
  if (o.dictionary.empty()) {
    dict = default_label_dictionary();
  } else {
    std::istringstream in(read_input(run, o.dictionary));
    dict = read_label_dictionary(in);
  }
  if (o.embeddings.empty() && !o.train_embeddings) return dict;
  if (!o.embeddings.empty() && o.train_embeddings)
    throw UsageError("use either --embeddings or --train-embeddings");
  WordEmbeddings emb;
  if (!o.embeddings.empty()) {
    std::istringstream in(read_input(run, o.embeddings));
    emb = read_embeddings(in);
  } else {
    emb = train_fallback_embeddings(ds.tokens, ds.matrix.vocabulary(), o.embedding_dim,
                                    o.embedding_window, o.lda.seed, o.threads);
  }
  WordSet block;
  if (o.blocklist.empty()) {
    block = default_label_blocklist();
  } else {
    block = load_word_list(o.blocklist);
    run.inputs.push_back(o.blocklist);
  }
  auto expanded = expand_dictionary(dict, emb, o.neighbors, block);
  write_output(run, "dictionary_expanded.tsv",
               render([&](std::ostream& os) { write_label_dictionary(os, expanded); }));
  return expanded;
}

int cmd_label(Run& run, const Options& o) {
  const auto ds = load_dataset(run, o.data);
  const auto dict = prepare_dictionary(run, o, ds);
  if (o.study) {
    const auto groups = make_groups(run, ds, o.group_by, o.groups);
    LabelStudyConfig cfg;
    cfg.k_candidates = parse_k_range(o.k_range);
    cfg.lda = o.lda.config(1);
    cfg.coherence = o.coh.config();
    cfg.select.similarity = o.coh.aggregate();
    cfg.select.threads = o.threads;
    cfg.repeats = o.repeats;
    cfg.words_per_cluster = o.top_words;
    cfg.min_enrichment = o.min_enrichment;
    const auto study = label_study(ds.matrix, ds.tokens, groups, dict, cfg);
    write_output(run, "study.csv", render([&](std::ostream& os) { write_study_csv(os, study); }));
    write_output(run, "stability.csv", render([&](std::ostream& os) { write_stability_csv(os, study); }));
    std::cout << study.clusters.size() << " labeled clusters, " << study.failures.size()
              << " failures\n";
    return 0;
  }
  if (o.model.empty()) throw UsageError("label needs --model, or --study to fit its own models");
  const auto model = load_model_file(run, o.model, ds.matrix.vocabulary());
  const auto clusters = all_top_words(model, o.top_words);
  const auto labels = assign_labels(clusters, dict, o.min_enrichment);
  write_output(run, "labels.csv",
               render([&](std::ostream& os) { write_assignments_csv(os, labels, clusters); }));
  return 0;
}

std::vector<std::string> read_topic_labels(Run& run, const fs::path& path, std::size_t K) {
  std::vector<std::string> names(K);
  for (std::size_t k = 0; k < K; ++k) names[k] = "topic_" + std::to_string(k);
  if (path.empty()) return names;
  std::istringstream in(read_input(run, path));
  const auto rows = read_csv(in);
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "cluster_id" || rows[0][1] != "label")
    throw DataError("labels file must start with cluster_id,label");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto k = std::stoul(rows[i].at(0));
    if (k >= K) throw DataError("labels file names a topic the model does not have");
    names[k] = rows[i].at(1);
  }
  return names;
}

int cmd_proportions(Run& run, const Options& o) {
  const auto ds = load_dataset(run, o.data);
  auto model = load_model_file(run, o.model, ds.matrix.vocabulary());
  model.set_threads(o.threads);
  const auto names = read_topic_labels(run, o.labels, model.num_topics());
  const auto groups = make_groups(run, ds, o.group_by, o.groups);
  const auto theta = transform_all(model, ds.matrix);
  const auto table = topic_proportions(theta, model.num_topics(), groups, names,
                                       o.dominant ? ProportionMode::kDominantTopic
                                                  : ProportionMode::kMeanTheta);
  write_output(run, "proportions.csv", render([&](std::ostream& os) { write_table_csv(os, table); }));
  write_output(run, "proportions.svg", bubble_grid_svg(table, "Topic proportion by group"));
  return 0;
}

int cmd_report(Run& run, const Options& o) {
  if (o.sweep.empty() == o.table.empty()) throw UsageError("give exactly one of --sweep or --table");
  if (!o.sweep.empty()) {
    std::istringstream in(read_input(run, o.sweep));
    const auto sel = rank_sweep(read_sweep_csv(in));
    write_output(run, "sweep.svg",
                 sweep_chart_svg(sel, o.title.empty() ? "Coherence (C) and similarity (S) by K" : o.title));
    return 0;
  }
  std::istringstream in(read_input(run, o.table));
  const auto table = read_table_csv(in);
  if (o.kind == "heatmap")
    write_output(run, "heatmap.svg", heatmap_svg(table, o.title));
  else if (o.kind == "bubble")
    write_output(run, "bubble.svg", bubble_grid_svg(table, o.title));
  else
    throw UsageError("--kind must be heatmap or bubble");
  return 0;
}

int run_main(std::vector<std::string> args);

int cmd_rerun(const Options& o, bool out_given) {
  std::ifstream in(o.manifest);
  if (!in) throw DataError("cannot read manifest " + o.manifest);
  ordered_json m;
  try {
    m = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw DataError("manifest is not valid JSON: " + std::string(e.what()));
  }
  std::vector<std::string> args{"topicforge"};
  for (const auto& [key, value] : m.at("globals").items())
    args.push_back("--" + key + "=" + value.get<std::string>());
  args.push_back(m.at("command").get<std::string>());
  for (const auto& [key, value] : m.at("config").items()) {
    std::string v = value.get<std::string>();
    if (key == "out" && out_given) v = o.out;
    if (v.empty()) continue;
    args.push_back("--" + key + "=" + v);
  }
  return run_main(args);
}

int dispatch(const std::string& name, Run& run, const Options& o) {
  if (name == "ingest") return cmd_ingest(run, o);
  if (name == "synth") return cmd_synth(run, o);
  if (name == "freq") return cmd_freq(run, o);
  if (name == "select-k") return cmd_select_k(run, o);
  if (name == "fit") return cmd_fit(run, o);
  if (name == "transform") return cmd_transform(run, o);
  if (name == "coherence") return cmd_coherence(run, o);
  if (name == "label") return cmd_label(run, o);
  if (name == "proportions") return cmd_proportions(run, o);
  if (name == "report") return cmd_report(run, o);
  throw UsageError("unknown command " + name);
}

std::string file_digest(const std::string& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return "";
  return hex64(fnv1a(read_file(path)));
}

int run_main(std::vector<std::string> args) {
  Options o;
  Cli cli(o);
  auto& app = cli.app();
  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }
  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  if (name == "rerun") return cmd_rerun(o, sub->get_option("--out")->count() > 0);
  if (!o.config_file.empty()) apply_config_file(app, sub, o.config_file);
  if (o.threads == 0) throw UsageError("--threads must be at least 1");

  ordered_json globals, config;
  for (const auto& s : cli.globals()) globals[s.name] = s.value();
  for (const auto& s : cli.settings(sub)) config[s.name] = s.value();
  if (o.dry_run) {
    std::cout << ordered_json{{"command", name}, {"globals", globals}, {"config", config}}.dump(2)
              << '\n';
    return 0;
  }

  Run run;
  run.command = name;
  run.out_dir = o.out;
  const auto start = std::chrono::steady_clock::now();
  const int code = dispatch(name, run, o);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ordered_json manifest;
  manifest["tool"] = "topicforge";
  manifest["version"] = kVersion;
  manifest["command"] = name;
  manifest["globals"] = globals;
  manifest["config"] = config;
  if (config.contains("seed")) manifest["seed"] = config["seed"];
  manifest["inputs"] = ordered_json::array();
  for (const auto& p : run.inputs)
    manifest["inputs"].push_back({{"path", p}, {"fnv1a64", file_digest(p)}});
  manifest["outputs"] = ordered_json::array();
  for (const auto& p : run.outputs)
    manifest["outputs"].push_back({{"path", p}, {"fnv1a64", file_digest(p)}});
  manifest["timings"] = {{"wall_seconds", seconds}};
  write_output(run, "manifest.json", manifest.dump(2) + "\n");
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  set_warning_sink([](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; });
  try {
    return run_main(std::vector<std::string>(argv, argv + argc));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kUsage);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  }
}
