#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "autorank/analyze.hpp"
#include "autorank/errors.hpp"
#include "autorank/model.hpp"

namespace autorank::report {

enum class Format { TSV, JSON, Markdown };

using Json = nlohmann::ordered_json;

// Fixed-point text with round-half-away-from-zero applied to the exact binary
// value (not to a pre-rounded decimal approximation).
inline std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) return value != value ? "nan" : (value > 0 ? "inf" : "-inf");
  // 1100 fractional digits represent any double exactly.
  std::string buf(1500, '\0');
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), std::fabs(value),
                                 std::chars_format::fixed, 1100);
  buf.resize(static_cast<std::size_t>(res.ptr - buf.data()));
  const auto dot = buf.find('.');
  std::string digits = buf.substr(0, dot) + buf.substr(dot + 1, static_cast<std::size_t>(decimals));
  const bool round_up = buf[dot + 1 + static_cast<std::size_t>(decimals)] >= '5';
  if (round_up) {
    auto i = digits.size();
    while (i > 0) {
      --i;
      if (digits[i] == '9') {
        digits[i] = '0';
      } else {
        ++digits[i];
        break;
      }
      if (i == 0) digits.insert(digits.begin(), '1');
    }
  }
  const auto int_len = digits.size() - static_cast<std::size_t>(decimals);
  std::string out = digits.substr(0, int_len);
  if (decimals > 0) out += "." + digits.substr(int_len);
  const bool zero = std::all_of(digits.begin(), digits.end(), [](char c) { return c == '0'; });
  return (std::signbit(value) && !zero) ? "-" + out : out;
}

// Display precision: COMET-family metrics use three decimals, everything
// else (MetricX, GEMBA, chrF++, AutoRank) one.
inline int metric_decimals(std::string_view metric_id) {
  std::string lower(metric_id);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.find("comet") != std::string::npos ? 3 : 1;
}

// Position of `value` within the column range on a 0..100 scale. A column
// where every value is equal maps to 100.
inline double render_gradient_cell(double value, double column_min, double column_max) {
  if (column_max < column_min) {
    throw Error(Errc::InvalidArgument, "column_max", "column_max < column_min");
  }
  if (column_max == column_min) return 100.0;
  const double t = (value - column_min) / (column_max - column_min);
  return std::clamp(100.0 * t, 0.0, 100.0);
}

namespace detail {

inline std::string tri(std::optional<bool> v) { return !v ? "?" : (*v ? "yes" : "no"); }

inline std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string params_text(const std::optional<ParameterCount>& p) {
  if (!p) return "?";
  return (p->upper_bound ? "<" : "") + shortest(p->billions);
}

inline const SystemMeta* find_meta(std::span<const SystemMeta> meta, std::string_view id) {
  const auto it = std::find_if(meta.begin(), meta.end(),
                               [&](const auto& m) { return m.system_id() == id; });
  return it == meta.end() ? nullptr : &*it;
}

struct ColumnRange {
  double lo = 0.0;
  double hi = 0.0;
};

// Gradient ranges per column; AutoRank is negated so that rank 1 scores 100.
inline std::map<std::string, ColumnRange, std::less<>> column_ranges(const RankingResult& r) {
  std::map<std::string, ColumnRange, std::less<>> out;
  auto widen = [&](const std::string& col, double v, bool first) {
    auto& c = out[col];
    if (first) {
      c = {v, v};
    } else {
      c.lo = std::min(c.lo, v);
      c.hi = std::max(c.hi, v);
    }
  };
  bool first = true;
  for (const auto& s : r.systems()) {
    widen("AutoRank", -s.autorank, first);
    for (const auto& m : r.metric_ids()) widen(m, s.system_scores.at(m), first);
    first = false;
  }
  return out;
}

inline std::string escape_markdown(std::string_view s) {
  std::string out;
  for (const char c : s) {
    if (c == '|' || c == '*' || c == '_' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

inline Json ranking_to_json(const RankingResult& r, std::span<const SystemMeta> meta = {},
                            const SelectionResult* selection = nullptr) {
  Json j;
  j["lang_pair"] = r.lang_pair();
  j["n_systems"] = r.n_systems();
  j["epsilon"] = r.epsilon();
  j["metrics"] = r.metric_ids();
  Json stats = Json::object();
  for (const auto& m : r.metric_ids()) {
    const auto& s = r.per_metric_stats().at(m);
    stats[m] = {{"median", s.median}, {"q25", s.q25}, {"q100", s.q100}, {"spread", s.spread}};
  }
  j["per_metric_stats"] = std::move(stats);
  const auto ranges = detail::column_ranges(r);
  Json systems = Json::array();
  for (const auto& s : r.systems()) {
    Json row;
    row["system"] = s.system_id;
    row["autorank"] = s.autorank;
    row["mean_robust"] = s.mean_robust;
    Json scores = Json::object(), robust = Json::object(), gradient = Json::object();
    const auto& ar = ranges.at("AutoRank");
    gradient["AutoRank"] = render_gradient_cell(-s.autorank, ar.lo, ar.hi);
    for (const auto& m : r.metric_ids()) {
      scores[m] = s.system_scores.at(m);
      robust[m] = s.robust_scores.at(m);
      const auto& c = ranges.at(m);
      gradient[m] = render_gradient_cell(s.system_scores.at(m), c.lo, c.hi);
    }
    row["system_scores"] = std::move(scores);
    row["robust_scores"] = std::move(robust);
    row["gradient"] = std::move(gradient);
    if (const auto* m = detail::find_meta(meta, s.system_id)) {
      Json mj;
      mj["constrained"] = m->constrained();
      mj["params_b"] = m->params() ? Json(detail::params_text(m->params())) : Json(nullptr);
      const auto sup = m->lp_supported(r.lang_pair());
      mj["lp_supported"] = sup ? Json(*sup) : Json(nullptr);
      mj["organizer_collected"] = m->organizer_collected();
      row["meta"] = std::move(mj);
    }
    if (selection) row["humeval"] = selection->contains(s.system_id);
    systems.push_back(std::move(row));
  }
  j["systems"] = std::move(systems);
  return j;
}

// Reads back the output of ranking_to_json. Derived fields (gradient, meta,
// humeval) are ignored.
inline RankingResult ranking_from_json(const Json& j) {
  try {
    std::vector<std::string> metrics = j.at("metrics").get<std::vector<std::string>>();
    RankingResult::Stats stats;
    for (const auto& m : metrics) {
      const auto& s = j.at("per_metric_stats").at(m);
      stats.emplace(m, RobustStats{s.at("median").get<double>(), s.at("q25").get<double>(),
                                   s.at("q100").get<double>(), s.at("spread").get<double>()});
    }
    std::vector<SystemRanking> rows;
    for (const auto& row : j.at("systems")) {
      SystemRanking s;
      s.system_id = row.at("system").get<std::string>();
      s.autorank = row.at("autorank").get<double>();
      s.mean_robust = row.at("mean_robust").get<double>();
      for (const auto& m : metrics) {
        s.system_scores.emplace(m, row.at("system_scores").at(m).get<double>());
        s.robust_scores.emplace(m, row.at("robust_scores").at(m).get<double>());
      }
      rows.push_back(std::move(s));
    }
    return RankingResult(j.at("lang_pair").get<std::string>(), std::move(metrics),
                         j.at("epsilon").get<double>(), std::move(rows), std::move(stats));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedRow, "ranking", e.what());
  }
}

// One table per ranking, rows by ascending AutoRank. The Humeval column is
// present only when a selection is supplied.
inline std::string render_ranking(const RankingResult& r, std::span<const SystemMeta> meta,
                                  Format format, const SelectionResult* selection = nullptr) {
  if (format == Format::JSON) return ranking_to_json(r, meta, selection).dump(2) + "\n";

  std::vector<std::string> header{"System", "LP Supported", "Params (B)"};
  if (selection) header.emplace_back("Humeval");
  header.emplace_back("AutoRank");
  for (const auto& m : r.metric_ids()) header.push_back(m);

  std::vector<std::vector<std::string>> rows;
  for (const auto& s : r.systems()) {
    const auto* m = detail::find_meta(meta, s.system_id);
    std::vector<std::string> row;
    if (format == Format::Markdown) {
      std::string name = detail::escape_markdown(s.system_id);
      if (m && m->organizer_collected()) name = "▲ " + name;
      if (m && !m->constrained()) name = "_" + name + "_";
      row.push_back(name);
    } else {
      row.push_back(s.system_id);
    }
    row.push_back(m ? detail::tri(m->lp_supported(r.lang_pair())) : "?");
    row.push_back(m ? detail::params_text(m->params()) : "?");
    if (selection) row.emplace_back(selection->contains(s.system_id) ? "yes" : "");
    row.push_back(format_fixed(s.autorank, 1));
    for (const auto& id : r.metric_ids()) {
      row.push_back(format_fixed(s.system_scores.at(id), metric_decimals(id)));
    }
    rows.push_back(std::move(row));
  }

  std::string out;
  if (format == Format::TSV) {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "\t" : "") + cells[i];
      out += "\n";
    };
    line(header);
    for (const auto& row : rows) line(row);
    return out;
  }

  for (auto& h : header) {
    if (h == "AutoRank") h += " ↓";
    else if (h != "System" && h != "LP Supported" && h != "Params (B)" && h != "Humeval") h = detail::escape_markdown(h) + " ↑";
  }
  out += "## " + r.lang_pair() + "\n\n";
  auto line = [&](const std::vector<std::string>& cells) {
    out += "|";
    for (const auto& c : cells) out += " " + c + " |";
    out += "\n";
  };
  line(header);
  out += "|";
  for (std::size_t i = 0; i < header.size(); ++i) out += i == 0 ? " :--- |" : " ---: |";
  out += "\n";
  for (const auto& row : rows) line(row);
  out += "\n▲ organizer-collected system; _italic_ unconstrained system.\n";
  return out;
}

// Several rankings, ordered as given. JSON yields one array; TSV separates
// tables with a "# lang_pair<TAB>..." line; Markdown uses one section each.
inline std::string render_rankings(std::span<const RankingResult> results,
                                   std::span<const SystemMeta> meta, Format format,
                                   std::span<const SelectionResult> selections = {}) {
  auto selection_for = [&](const RankingResult& r) -> const SelectionResult* {
    const auto it = std::find_if(selections.begin(), selections.end(),
                                 [&](const auto& s) { return s.lang_pair() == r.lang_pair(); });
    return it == selections.end() ? nullptr : &*it;
  };
  if (format == Format::JSON) {
    Json all = Json::array();
    for (const auto& r : results) all.push_back(ranking_to_json(r, meta, selection_for(r)));
    return all.dump(2) + "\n";
  }
  std::string out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (i) out += "\n";
    if (format == Format::TSV) out += "# lang_pair\t" + results[i].lang_pair() + "\n";
    out += render_ranking(results[i], meta, format, selection_for(results[i]));
  }
  return out;
}

inline Json selection_to_json(const SelectionResult& s) {
  Json j;
  j["lang_pair"] = s.lang_pair();
  j["k_constrained"] = s.k_constrained();
  j["total"] = s.total();
  j["n_candidates"] = s.n_candidates();
  Json sel = Json::array();
  for (const auto& x : s.selected()) {
    sel.push_back({{"system", x.system_id}, {"reason", std::string(to_string(x.reason))}});
  }
  j["selected"] = std::move(sel);
  return j;
}

// JSON, or a two-column listing (system, reason) for TSV and Markdown.
inline std::string render_selections(std::span<const SelectionResult> selections, Format format) {
  if (format == Format::JSON) {
    Json all = Json::array();
    for (const auto& s : selections) all.push_back(selection_to_json(s));
    return all.dump(2) + "\n";
  }
  std::string out;
  for (std::size_t i = 0; i < selections.size(); ++i) {
    if (i) out += "\n";
    out += "# lang_pair\t" + selections[i].lang_pair() + "\n";
    out += "system\treason\n";
    for (const auto& x : selections[i].selected()) {
      out += x.system_id + "\t" + std::string(to_string(x.reason)) + "\n";
    }
  }
  return out;
}

inline Json correlation_to_json(const analyze::CorrelationMatrix& c) {
  Json j;
  j["lang_pair"] = c.lang_pair;
  j["metrics"] = c.metric_ids;
  Json rows = Json::array();
  for (const auto& row : c.values) {
    Json r = Json::array();
    for (const auto& v : row) r.push_back(v ? Json(*v) : Json(nullptr));
    rows.push_back(std::move(r));
  }
  j["matrix"] = std::move(rows);
  j["matched"] = c.matched;
  j["unmatched"] = c.unmatched;
  return j;
}

// CSV with metric ids as header row and first column; absent cells are empty.
inline std::string correlation_to_csv(const analyze::CorrelationMatrix& c) {
  auto field = [](std::string_view s) {
    if (s.find_first_of(",\"") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (const char ch : s) {
      if (ch == '"') out += '"';
      out += ch;
    }
    return out + "\"";
  };
  std::string out = "metric";
  for (const auto& m : c.metric_ids) out += "," + field(m);
  out += "\n";
  for (std::size_t i = 0; i < c.metric_ids.size(); ++i) {
    out += field(c.metric_ids[i]);
    for (const auto& v : c.values[i]) out += "," + (v ? detail::shortest(*v) : std::string());
    out += "\n";
  }
  return out;
}

inline std::string render_correlations(std::span<const analyze::CorrelationMatrix> matrices,
                                       Format format) {
  if (format == Format::JSON) {
    Json all = Json::array();
    for (const auto& c : matrices) all.push_back(correlation_to_json(c));
    return all.dump(2) + "\n";
  }
  std::string out;
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    if (i) out += "\n";
    out += "# lang_pair," + matrices[i].lang_pair + "\n";
    out += correlation_to_csv(matrices[i]);
  }
  return out;
}

}  // namespace autorank::report
