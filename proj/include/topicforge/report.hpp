#ifndef TOPICFORGE_REPORT_HPP
#define TOPICFORGE_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <regex>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "topicforge/corpus.hpp"
#include "topicforge/error.hpp"
#include "topicforge/eval.hpp"
#include "topicforge/label.hpp"
#include "topicforge/stats.hpp"

namespace topicforge {

// ---------------------------------------------------------------------------
// CSV

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> fields;
  while (detail::read_csv_record(in, fields)) rows.push_back(fields);
  return rows;
}

namespace detail {
inline double csv_real(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw DataError("bad number in CSV: '" + s + "'");
  return v;
}
}  // namespace detail

/// Header "K,C,S,rank_i,rank_j,rank_sum", one row per candidate.
inline void write_sweep_csv(std::ostream& out, const KSelection& sel) {
  out << "K,C,S,rank_i,rank_j,rank_sum\n";
  for (const auto& r : sel.runs)
    out << r.k << ',' << format_real(r.coherence) << ',' << format_real(r.similarity) << ','
        << r.rank_coherence << ',' << r.rank_similarity << ',' << r.rank_sum() << '\n';
}

inline std::vector<KSelectionRun> read_sweep_csv(std::istream& in) {
  const auto rows = read_csv(in);
  if (rows.empty() || rows[0].size() < 3 || rows[0][0] != "K")
    throw DataError("sweep table must start with a K,C,S header");
  std::vector<KSelectionRun> runs;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() < 3) throw DataError("sweep table row " + std::to_string(i) + " is short");
    KSelectionRun r;
    r.k = static_cast<std::size_t>(std::stoul(rows[i][0]));
    r.coherence = detail::csv_real(rows[i][1]);
    r.similarity = detail::csv_real(rows[i][2]);
    runs.push_back(r);
  }
  return runs;
}

/// First column holds row names under `corner`; values at full precision.
inline void write_table_csv(std::ostream& out, const ProportionTable& t,
                            std::string_view corner = "group") {
  out << csv_field(corner);
  for (const auto& c : t.col_names) out << ',' << csv_field(c);
  out << '\n';
  for (std::size_t r = 0; r < t.row_names.size(); ++r) {
    out << csv_field(t.row_names[r]);
    for (std::size_t c = 0; c < t.col_names.size(); ++c) out << ',' << format_real(t.at(r, c));
    out << '\n';
  }
}

inline ProportionTable read_table_csv(std::istream& in) {
  const auto rows = read_csv(in);
  if (rows.empty()) throw DataError("empty table");
  ProportionTable t;
  t.col_names.assign(rows[0].begin() + 1, rows[0].end());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw DataError("table row " + std::to_string(i) + " has the wrong width");
    t.row_names.push_back(rows[i][0]);
    for (std::size_t c = 1; c < rows[i].size(); ++c) t.values.push_back(detail::csv_real(rows[i][c]));
  }
  return t;
}

/// One row per class and rank: class,rank,word,statistic,p_value.
inline void write_top_words_csv(std::ostream& out, const std::vector<std::string>& classes,
                                const std::vector<TopWords>& words) {
  out << "class,rank,word,statistic,p_value\n";
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (std::size_t i = 0; i < words[c].words.size(); ++i) {
      const auto& w = words[c].words[i];
      out << csv_field(classes[c]) << ',' << i + 1 << ',' << csv_field(w.word) << ','
          << format_real(w.statistic) << ',' << format_real(w.p_value) << '\n';
    }
}

inline void write_assignments_csv(std::ostream& out, const std::vector<TopicAssignment>& labels,
                                  const std::vector<std::vector<std::string>>& clusters) {
  out << "cluster_id,label,enrichment,overlap,runner_up,runner_up_enrichment,words\n";
  for (const auto& a : labels) {
    std::string words;
    for (const auto& w : clusters.at(a.cluster_id)) words += (words.empty() ? "" : " ") + w;
    out << a.cluster_id << ',' << csv_field(a.label) << ',' << format_real(a.enrichment) << ','
        << a.overlap << ',' << csv_field(a.runner_up) << ',' << format_real(a.runner_up_enrichment)
        << ',' << csv_field(words) << '\n';
  }
}

inline void write_study_csv(std::ostream& out, const LabelStudyResult& study) {
  out << "subset,run,k,cluster_id,label,enrichment\n";
  for (const auto& c : study.clusters)
    out << csv_field(c.subset) << ',' << c.run << ',' << c.k << ',' << c.assignment.cluster_id
        << ',' << csv_field(c.assignment.label) << ',' << format_real(c.assignment.enrichment)
        << '\n';
}

inline void write_stability_csv(std::ostream& out, const LabelStudyResult& study) {
  out << "subset,label,clusters,runs_with_label,mean_share\n";
  for (const auto& s : study.stability)
    out << csv_field(s.subset) << ',' << csv_field(s.label) << ',' << s.clusters << ','
        << s.runs_with_label << ',' << format_real(s.mean_share) << '\n';
}

// ---------------------------------------------------------------------------
// Topic proportions per document group

enum class ProportionMode { kMeanTheta, kDominantTopic };

/// Rows are groups, columns the distinct topic labels in order of first
/// appearance. Each row is the mean over its documents of theta (or of the
/// one-hot dominant topic), with topics sharing a label summed, so every
/// row sums to 1. Groups without documents are omitted with a warning.
inline ProportionTable topic_proportions(std::span<const double> theta, std::size_t num_topics,
                                         std::span<const DocumentSubset> groups,
                                         const std::vector<std::string>& topic_labels,
                                         ProportionMode mode = ProportionMode::kMeanTheta) {
  if (num_topics == 0 || theta.size() % num_topics != 0)
    throw DataError("theta does not have num_topics columns");
  if (topic_labels.size() != num_topics) throw DataError("one label per topic is required");
  const std::size_t D = theta.size() / num_topics;
  ProportionTable t;
  std::vector<std::size_t> column_of(num_topics);
  for (std::size_t k = 0; k < num_topics; ++k) {
    auto it = std::find(t.col_names.begin(), t.col_names.end(), topic_labels[k]);
    column_of[k] = static_cast<std::size_t>(it - t.col_names.begin());
    if (it == t.col_names.end()) t.col_names.push_back(topic_labels[k]);
  }
  const std::size_t C = t.col_names.size();
  for (const auto& g : groups) {
    if (g.rows.empty()) {
      warn("group '" + g.name + "' has no documents; row omitted");
      continue;
    }
    std::vector<double> row(C, 0.0);
    for (auto d : g.rows) {
      if (d >= D) throw DataError("group '" + g.name + "' refers to a missing document");
      const auto th = theta.subspan(d * num_topics, num_topics);
      if (mode == ProportionMode::kMeanTheta) {
        for (std::size_t k = 0; k < num_topics; ++k) row[column_of[k]] += th[k];
      } else {
        const auto top = static_cast<std::size_t>(std::max_element(th.begin(), th.end()) - th.begin());
        row[column_of[top]] += 1.0;
      }
    }
    for (auto& v : row) v /= static_cast<double>(g.rows.size());
    t.row_names.push_back(g.name);
    t.values.insert(t.values.end(), row.begin(), row.end());
  }
  return t;
}

// ---------------------------------------------------------------------------
// SVG
//
// Every plotted number carries a data-value attribute at full precision so
// the drawing can be checked against its CSV.

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// White to dark blue.
inline std::string ramp_color(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(247 + (8 - 247) * t));
  const int g = static_cast<int>(std::lround(251 + (48 - 251) * t));
  const int b = static_cast<int>(std::lround(255 + (107 - 255) * t));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

inline std::string fmt(const char* f, double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

inline double table_max(const ProportionTable& t) {
  double m = 0.0;
  for (double v : t.values)
    if (std::isfinite(v)) m = std::max(m, v);
  return m;
}

}  // namespace detail

/// Class x word heatmap with fixed-size annotated cells.
inline std::string heatmap_svg(const ProportionTable& t, std::string_view title) {
  const int cell_w = 56, cell_h = 26, left = 330, top = 120;
  const int width = left + cell_w * static_cast<int>(t.col_names.size()) + 20;
  const int height = top + cell_h * static_cast<int>(t.row_names.size()) + 20;
  const double vmax = detail::table_max(t);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<text x=\"10\" y=\"20\" font-size=\"14\">" << detail::xml_escape(title) << "</text>\n";
  for (std::size_t c = 0; c < t.col_names.size(); ++c) {
    const int x = left + cell_w * static_cast<int>(c) + cell_w / 2;
    s << "<text transform=\"translate(" << x << ',' << top - 6 << ") rotate(-60)\">"
      << detail::xml_escape(t.col_names[c]) << "</text>\n";
  }
  for (std::size_t r = 0; r < t.row_names.size(); ++r) {
    const int y = top + cell_h * static_cast<int>(r);
    s << "<text x=\"" << left - 6 << "\" y=\"" << y + cell_h / 2 + 4
      << "\" text-anchor=\"end\">" << detail::xml_escape(t.row_names[r]) << "</text>\n";
    for (std::size_t c = 0; c < t.col_names.size(); ++c) {
      const double v = t.at(r, c);
      const double shade = vmax > 0.0 ? v / vmax : 0.0;
      const int x = left + cell_w * static_cast<int>(c);
      s << "<g class=\"cell\" data-row=\"" << r << "\" data-col=\"" << c << "\" data-value=\""
        << format_real(v) << "\"><rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w
        << "\" height=\"" << cell_h << "\" fill=\"" << detail::ramp_color(shade)
        << "\" stroke=\"#ffffff\"/><text x=\"" << x + cell_w / 2 << "\" y=\"" << y + cell_h / 2 + 4
        << "\" text-anchor=\"middle\" fill=\"" << (shade > 0.55 ? "#ffffff" : "#000000") << "\">"
        << detail::fmt("%.4f", v) << "</text></g>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

/// Group x topic bubble grid; circle area and color scale with the value.
inline std::string bubble_grid_svg(const ProportionTable& t, std::string_view title) {
  const int cell = 60, left = 300, top = 170;
  const int width = left + cell * static_cast<int>(t.col_names.size()) + 20;
  const int height = top + cell * static_cast<int>(t.row_names.size()) + 20;
  const double vmax = detail::table_max(t);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<text x=\"10\" y=\"20\" font-size=\"14\">" << detail::xml_escape(title) << "</text>\n";
  for (std::size_t c = 0; c < t.col_names.size(); ++c) {
    const int x = left + cell * static_cast<int>(c) + cell / 2;
    s << "<text transform=\"translate(" << x << ',' << top - 8 << ") rotate(-60)\">"
      << detail::xml_escape(t.col_names[c]) << "</text>\n";
  }
  for (std::size_t r = 0; r < t.row_names.size(); ++r) {
    const int cy = top + cell * static_cast<int>(r) + cell / 2;
    s << "<text x=\"" << left - 8 << "\" y=\"" << cy + 4 << "\" text-anchor=\"end\">"
      << detail::xml_escape(t.row_names[r]) << "</text>\n";
    for (std::size_t c = 0; c < t.col_names.size(); ++c) {
      const double v = t.at(r, c);
      const double shade = vmax > 0.0 ? v / vmax : 0.0;
      const double radius = 0.46 * cell * std::sqrt(std::max(0.0, shade));
      const int cx = left + cell * static_cast<int>(c) + cell / 2;
      s << "<g class=\"bubble\" data-row=\"" << r << "\" data-col=\"" << c << "\" data-value=\""
        << format_real(v) << "\"><circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\""
        << detail::fmt("%.2f", radius) << "\" fill=\"" << detail::ramp_color(shade)
        << "\" stroke=\"#08306b\" stroke-width=\"0.5\"/><title>" << detail::fmt("%.3f", v)
        << "</title></g>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

/// Two stacked panels: coherence against K, then similarity against K.
inline std::string sweep_chart_svg(const KSelection& sel, std::string_view title) {
  const int width = 640, panel_h = 220, left = 70, right = 20, top = 40, gap = 60;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
    << top + 2 * panel_h + gap + 40 << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<text x=\"10\" y=\"20\" font-size=\"14\">" << detail::xml_escape(title) << "</text>\n";
  if (sel.runs.empty()) {
    s << "</svg>\n";
    return s.str();
  }
  const double kmin = static_cast<double>(sel.runs.front().k);
  const double kmax = static_cast<double>(sel.runs.back().k);
  auto xpos = [&](double k) {
    return left + (kmax > kmin ? (k - kmin) / (kmax - kmin) : 0.5) * (width - left - right);
  };
  auto panel = [&](int y0, const char* name, auto value) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : sel.runs)
      if (std::isfinite(value(r))) {
        lo = std::min(lo, value(r));
        hi = std::max(hi, value(r));
      }
    if (!std::isfinite(lo)) lo = hi = 0.0;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    auto ypos = [&](double v) { return y0 + panel_h - (v - lo) / (hi - lo) * panel_h; };
    s << "<g class=\"panel\" data-series=\"" << name << "\">\n"
      << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << width - left - right
      << "\" height=\"" << panel_h << "\" fill=\"none\" stroke=\"#999999\"/>\n"
      << "<text x=\"12\" y=\"" << y0 + panel_h / 2 << "\">" << name << "</text>\n"
      << "<text x=\"" << left - 4 << "\" y=\"" << y0 + 10 << "\" text-anchor=\"end\">"
      << detail::fmt("%.3f", hi) << "</text>\n"
      << "<text x=\"" << left - 4 << "\" y=\"" << y0 + panel_h << "\" text-anchor=\"end\">"
      << detail::fmt("%.3f", lo) << "</text>\n<polyline fill=\"none\" stroke=\"#2171b5\" points=\"";
    for (const auto& r : sel.runs)
      if (std::isfinite(value(r)))
        s << detail::fmt("%.1f", xpos(static_cast<double>(r.k))) << ','
          << detail::fmt("%.1f", ypos(value(r))) << ' ';
    s << "\"/>\n";
    for (const auto& r : sel.runs) {
      const double v = value(r);
      const double y = std::isfinite(v) ? ypos(v) : y0 + panel_h;
      s << "<circle class=\"point\" data-k=\"" << r.k << "\" data-value=\"" << format_real(v)
        << "\" cx=\"" << detail::fmt("%.1f", xpos(static_cast<double>(r.k))) << "\" cy=\""
        << detail::fmt("%.1f", y) << "\" r=\"" << (r.k == sel.chosen_k ? 5 : 3)
        << "\" fill=\"" << (r.k == sel.chosen_k ? "#cb181d" : "#2171b5") << "\"/>\n";
    }
    for (const auto& r : sel.runs)
      s << "<text x=\"" << detail::fmt("%.1f", xpos(static_cast<double>(r.k))) << "\" y=\""
        << y0 + panel_h + 14 << "\" text-anchor=\"middle\">" << r.k << "</text>\n";
    s << "</g>\n";
  };
  panel(top, "C", [](const KSelectionRun& r) { return r.coherence; });
  panel(top + panel_h + gap, "S", [](const KSelectionRun& r) { return r.similarity; });
  s << "</svg>\n";
  return s.str();
}

/// Every data-value attribute in document order.
inline std::vector<double> svg_data_values(const std::string& svg) {
  static const std::regex re("data-value=\"([^\"]*)\"");
  std::vector<double> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back(detail::csv_real((*it)[1].str()));
  return out;
}

}  // namespace topicforge

#endif  // TOPICFORGE_REPORT_HPP
