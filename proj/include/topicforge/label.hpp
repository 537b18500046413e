#ifndef TOPICFORGE_LABEL_HPP
#define TOPICFORGE_LABEL_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "topicforge/corpus.hpp"
#include "topicforge/embeddings.hpp"
#include "topicforge/error.hpp"
#include "topicforge/eval.hpp"
#include "topicforge/lda.hpp"

namespace topicforge {

inline constexpr std::string_view kUnlabeled = "Unlabeled";

struct DictionaryEntry {
  std::string name;
  std::vector<std::string> seed_words;      // sorted, unique
  std::vector<std::string> expanded_words;  // sorted, unique, disjoint from seeds

  std::vector<std::string> words() const {
    std::vector<std::string> all;
    std::set_union(seed_words.begin(), seed_words.end(), expanded_words.begin(),
                   expanded_words.end(), std::back_inserter(all));
    return all;
  }
  bool is_expanded(std::string_view w) const {
    return std::binary_search(expanded_words.begin(), expanded_words.end(), w);
  }
};

/// Topic names with their defining word sets, in file order.
class LabelDictionary {
 public:
  LabelDictionary() = default;

  void add(std::string name, std::vector<std::string> seeds,
           std::vector<std::string> expanded = {}) {
    for (const auto& e : entries_)
      if (e.name == name) throw DataError("duplicate dictionary topic '" + name + "'");
    auto tidy = [&](std::vector<std::string>& ws) {
      for (auto& w : ws) {
        w = ascii_lower(detail::trim(w));
        if (w.empty()) throw DataError("empty word in dictionary topic '" + name + "'");
      }
      std::sort(ws.begin(), ws.end());
      ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
    };
    tidy(seeds);
    tidy(expanded);
    if (seeds.empty()) throw DataError("dictionary topic '" + name + "' has no words");
    std::vector<std::string> extra;
    std::set_difference(expanded.begin(), expanded.end(), seeds.begin(), seeds.end(),
                        std::back_inserter(extra));
    entries_.push_back({std::move(name), std::move(seeds), std::move(extra)});
  }

  const std::vector<DictionaryEntry>& entries() const { return entries_; }
  std::vector<DictionaryEntry>& mutable_entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }

  const DictionaryEntry* find(std::string_view name) const {
    for (const auto& e : entries_)
      if (e.name == name) return &e;
    return nullptr;
  }

 private:
  std::vector<DictionaryEntry> entries_;
};

/// The eleven topics and keyword sets used for automatic labeling.
inline LabelDictionary default_label_dictionary() {
  LabelDictionary d;
  d.add("Mental health", {"mental", "depression", "anxiety", "mood", "psychological", "physical",
                          "cognitive", "emotional", "mind", "psychiatric"});
  d.add("Family", {"family", "parent", "father", "mother", "child", "children", "sister", "parents",
                   "relatives", "clan", "childhood", "friends"});
  d.add("Consultation/Appointment",
        {"appointment", "consultation", "consult", "questionnaire", "question", "advice",
         "biographical", "wikipedia", "relevant", "questions", "know", "documentation"});
  d.add("Group session", {"group", "intervention", "session", "interpers", "community", "class",
                          "organization", "together", "part", "organization"});
  d.add("Risk of death", {"suicide", "suicidal", "risk", "crisis", "homicide", "murder", "commit",
                          "bombing", "murdered", "murders", "bomber", "killing", "convicted",
                          "victims"});
  d.add("Clinician/Hospital/Medication",
        {"patient", "medication", "hospital", "medical", "clinic", "clinician", "treatment",
         "therapy", "surgery", "symptoms", "patients", "drugs", "diagnosis", "treatments",
         "prescribed"});
  d.add("Living condition/Lifestyle",
        {"shelter", "housing", "house", "living", "sleep", "bedtime", "building", "buildings",
         "urban", "employment", "suburban", "campus", "acres"});
  d.add("Social support", {"social", "service", "support", "referral", "recommendation",
                           "recommend", "worker", "resource", "supports", "provide", "supporting",
                           "supported", "allow", "providing", "assistance", "benefit", "help"});
  d.add("TelephoneEncounter/Online communication",
        {"telehealth", "phone", "call", "video", "telephone", "mobile", "wireless", "gsm",
         "cellular", "dial", "email", "calling", "networks", "calls", "messages", "telephones",
         "internet"});
  d.add("Abuse history", {"abuse", "history", "addiction", "alcohol", "drugs", "allegations",
                          "victim", "violence", "sexual", "rape", "dependence"});
  d.add("Insurance/Income", {"insurance", "income", "coverage", "financial", "contracts",
                             "banking", "finance", "liability", "private", "pay"});
  return d;
}

/// Words that carry no topical meaning in clinical notes; never added by
/// dictionary expansion.
inline WordSet generic_clinical_words() {
  return {"also",  "able",   "date",  "day",    "information", "name",   "note",
          "noted", "number", "per",   "plan",   "pt",          "report", "reported",
          "reports", "said", "stated", "states", "time",       "today",  "well",
          "would", "could",  "one",   "two",    "year",        "week",   "yes"};
}

inline WordSet default_label_blocklist() {
  WordSet out = default_stopwords();
  for (auto& w : generic_clinical_words()) out.insert(w);
  return out;
}

/// One entry per line: "TopicName<TAB>word1,word2,...". Words written with a
/// leading '+' were added by expansion.
inline LabelDictionary read_label_dictionary(std::istream& in) {
  if (!in) throw DataError("unreadable dictionary stream");
  LabelDictionary dict;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("dictionary line " + std::to_string(line_no) + " has no tab separator");
    std::vector<std::string> seeds, expanded;
    for (auto& w : detail::split(std::string_view(line).substr(tab + 1), ',')) {
      auto t = detail::trim(w);
      if (t.empty()) continue;
      if (t[0] == '+')
        expanded.push_back(t.substr(1));
      else
        seeds.push_back(t);
    }
    dict.add(detail::trim(line.substr(0, tab)), std::move(seeds), std::move(expanded));
  }
  return dict;
}

inline void write_label_dictionary(std::ostream& out, const LabelDictionary& dict) {
  for (const auto& e : dict.entries()) {
    out << e.name << '\t';
    bool first = true;
    for (const auto& w : e.seed_words) {
      out << (first ? "" : ",") << w;
      first = false;
    }
    for (const auto& w : e.expanded_words) out << ",+" << w;
    out << '\n';
  }
}

/// Adds, for every seed word, its n nearest embedding neighbours that are
/// not blocklisted. Seed words are never removed; words missing from the
/// embeddings are kept but not expanded.
inline LabelDictionary expand_dictionary(const LabelDictionary& dict, const WordEmbeddings& emb,
                                         std::size_t n_neighbors = defaults::kNeighbors,
                                         const WordSet& blocklist = default_label_blocklist()) {
  if (n_neighbors == 0) throw UsageError("n_neighbors must be at least 1");
  LabelDictionary out;
  std::vector<std::string> missing;
  std::size_t seeds = 0;
  for (const auto& e : dict.entries()) {
    std::set<std::string> added(e.expanded_words.begin(), e.expanded_words.end());
    for (const auto& seed : e.seed_words) {
      ++seeds;
      if (!emb.vector(seed)) {
        missing.push_back(seed);
        continue;
      }
      for (const auto& [word, cos] : emb.nearest(seed, n_neighbors)) {
        (void)cos;
        if (blocklist.contains(word)) continue;
        if (std::binary_search(e.seed_words.begin(), e.seed_words.end(), word)) continue;
        added.insert(word);
      }
    }
    out.add(e.name, e.seed_words, {added.begin(), added.end()});
  }
  if (!missing.empty() && emb.size() > 0) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(5, missing.size()); ++i)
      list += (i ? ", " : "") + missing[i];
    if (missing.size() > 5) list += ", ...";
    warn(std::to_string(missing.size()) + " of " + std::to_string(seeds) +
         " seed words have no embedding and were not expanded (" + list + ")");
  }
  return out;
}

struct TopicAssignment {
  std::size_t cluster_id = 0;
  std::string label;
  double enrichment = 0.0;
  std::size_t overlap = 0;
  std::string runner_up;
  double runner_up_enrichment = 0.0;
};

/// |cluster intersect entry| and |cluster union entry| on deduplicated sets.
inline std::pair<std::size_t, std::size_t> overlap_and_union(std::vector<std::string> cluster,
                                                             const std::vector<std::string>& entry) {
  std::sort(cluster.begin(), cluster.end());
  cluster.erase(std::unique(cluster.begin(), cluster.end()), cluster.end());
  std::vector<std::string> common;
  std::set_intersection(cluster.begin(), cluster.end(), entry.begin(), entry.end(),
                        std::back_inserter(common));
  return {common.size(), cluster.size() + entry.size() - common.size()};
}

/// Names each cluster with the dictionary topic of highest intersection
/// over union. Ties prefer the larger intersection, then the smaller name.
/// Clusters scoring below min_enrichment are "Unlabeled".
inline std::vector<TopicAssignment> assign_labels(const std::vector<std::vector<std::string>>& clusters,
                                                  const LabelDictionary& dict,
                                                  double min_enrichment = 0.0) {
  struct Score {
    double enrichment;
    std::size_t overlap;
    const std::string* name;
  };
  std::vector<std::vector<std::string>> entry_words;
  for (const auto& e : dict.entries()) entry_words.push_back(e.words());

  std::vector<TopicAssignment> out;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    std::vector<Score> scores;
    for (std::size_t h = 0; h < dict.size(); ++h) {
      const auto [inter, uni] = overlap_and_union(clusters[k], entry_words[h]);
      const double e = uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
      scores.push_back({e, inter, &dict.entries()[h].name});
    }
    std::sort(scores.begin(), scores.end(), [](const Score& a, const Score& b) {
      if (a.enrichment != b.enrichment) return a.enrichment > b.enrichment;
      if (a.overlap != b.overlap) return a.overlap > b.overlap;
      return *a.name < *b.name;
    });
    TopicAssignment t;
    t.cluster_id = k;
    if (!scores.empty()) {
      t.label = *scores[0].name;
      t.enrichment = scores[0].enrichment;
      t.overlap = scores[0].overlap;
      if (scores.size() > 1) {
        t.runner_up = *scores[1].name;
        t.runner_up_enrichment = scores[1].enrichment;
      }
    }
    if (scores.empty() || t.enrichment < min_enrichment) t.label = std::string(kUnlabeled);
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Repeated labeling study over document subsets

struct DocumentSubset {
  std::string name;
  std::vector<std::size_t> rows;
};

struct LabelStudyConfig {
  std::vector<std::size_t> k_candidates = default_k_candidates();
  LdaConfig lda;
  CoherenceConfig coherence;
  SelectKOptions select;
  std::size_t repeats = defaults::kStudyRepeats;
  std::size_t words_per_cluster = defaults::kTopWords;
  double min_enrichment = 0.0;
};

struct LabeledCluster {
  std::string subset;
  std::size_t run = 0;
  std::size_t k = 0;
  TopicAssignment assignment;
};

struct StabilityRow {
  std::string subset;
  std::string label;
  std::size_t clusters = 0;       // over all runs
  std::size_t runs_with_label = 0;
  double mean_share = 0.0;        // mean over runs of (clusters with label / K)
};

struct LabelStudyResult {
  std::vector<LabeledCluster> clusters;
  std::map<std::string, std::size_t> chosen_k;
  std::vector<std::string> failures;
  std::vector<StabilityRow> stability;
};

inline std::uint64_t study_seed(std::uint64_t base, std::size_t subset, std::size_t run) {
  return derive_seed(derive_seed(base, 0x7374756479ULL + subset), run);
}

/// For each subset: choose K, fit `repeats` independently seeded models,
/// label every cluster, and tabulate how often each label appears.
inline LabelStudyResult label_study(const DocTermMatrix& matrix, const TokenStreams& streams,
                                    std::span<const DocumentSubset> subsets,
                                    const LabelDictionary& dict, const LabelStudyConfig& config) {
  if (subsets.empty()) throw UsageError("label study needs at least one subset");
  if (config.repeats == 0) throw UsageError("repeats must be at least 1");
  LabelStudyResult result;
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    const auto& subset = subsets[s];
    if (subset.rows.empty()) {
      result.failures.push_back(subset.name + ": empty subset");
      warn("subset '" + subset.name + "' is empty; skipped");
      continue;
    }
    const auto sub = matrix.select_rows(subset.rows);
    TokenStreams sub_streams;
    for (auto r : subset.rows) sub_streams.push_back(streams.at(r));

    std::size_t k = 0;
    try {
      if (config.k_candidates.size() == 1) {
        k = config.k_candidates.front();
      } else {
        LdaConfig base = config.lda;
        base.seed = derive_seed(config.lda.seed, s);
        k = select_k(sub, sub_streams, config.k_candidates, base, config.coherence, config.select)
                .chosen_k;
      }
    } catch (const Error& e) {
      result.failures.push_back(subset.name + ": " + e.what());
      warn("subset '" + subset.name + "': K selection failed: " + e.what());
      continue;
    }
    result.chosen_k[subset.name] = k;

    std::map<std::string, StabilityRow> stats;
    std::size_t ok_runs = 0;
    for (std::size_t run = 0; run < config.repeats; ++run) {
      try {
        LdaConfig cfg = config.lda;
        cfg.num_topics = k;
        cfg.seed = study_seed(config.lda.seed, s, run);
        const auto model = fit(sub, cfg);
        const auto assignments =
            assign_labels(all_top_words(model, config.words_per_cluster), dict, config.min_enrichment);
        std::map<std::string, std::size_t> in_run;
        for (const auto& a : assignments) {
          result.clusters.push_back({subset.name, run, k, a});
          ++in_run[a.label];
        }
        for (const auto& [label, n] : in_run) {
          auto& row = stats[label];
          row.clusters += n;
          row.runs_with_label += 1;
          row.mean_share += static_cast<double>(n) / static_cast<double>(k);
        }
        ++ok_runs;
      } catch (const Error& e) {
        result.failures.push_back(subset.name + " run " + std::to_string(run) + ": " + e.what());
        warn("subset '" + subset.name + "' run " + std::to_string(run) + " failed: " + e.what());
      }
    }
    for (auto& [label, row] : stats) {
      row.subset = subset.name;
      row.label = label;
      if (ok_runs) row.mean_share /= static_cast<double>(ok_runs);
      result.stability.push_back(row);
    }
  }
  return result;
}

}  // namespace topicforge

#endif  // TOPICFORGE_LABEL_HPP
