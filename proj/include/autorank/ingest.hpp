#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "autorank/errors.hpp"
#include "autorank/model.hpp"

namespace autorank::ingest {

enum class ScoreFormat { CSV, TSV, JSONL };

namespace detail {

using autorank::detail::trim;

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
  });
  return out;
}

// Rejects overlong encodings, surrogates and code points above U+10FFFF.
inline void require_utf8(std::string_view text) {
  std::size_t line = 1;
  std::size_t i = 0;
  const auto n = text.size();
  auto at = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  auto fail = [&] {
    throw Error(Errc::InvalidEncoding, "", "input is not valid UTF-8", line);
  };
  while (i < n) {
    const unsigned char c = at(i);
    if (c == '\n') ++line;
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c >= 0xC2 && c <= 0xDF) {
      len = 2;
      cp = c & 0x1F;
    } else if (c >= 0xE0 && c <= 0xEF) {
      len = 3;
      cp = c & 0x0F;
    } else if (c >= 0xF0 && c <= 0xF4) {
      len = 4;
      cp = c & 0x07;
    } else {
      fail();
    }
    if (i + len > n) fail();
    for (std::size_t k = 1; k < len; ++k) {
      if ((at(i + k) & 0xC0) != 0x80) fail();
      cp = (cp << 6) | (at(i + k) & 0x3F);
    }
    if ((len == 3 && cp < 0x800) || (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      fail();
    }
    i += len;
  }
}

struct Line {
  std::size_t number;
  std::string_view text;
};

// Splits on LF, strips a trailing CR and a leading byte-order mark.
inline std::vector<Line> lines(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<Line> out;
  std::size_t number = 1;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    if (line.ends_with('\r')) line.remove_suffix(1);
    out.push_back({number++, line});
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

// RFC 4180 style quoting for CSV; TSV fields are taken verbatim.
inline std::vector<std::string> split_fields(const Line& line, char delimiter) {
  std::vector<std::string> fields;
  const auto s = line.text;
  if (delimiter == '\t') {
    std::size_t start = 0;
    while (true) {
      const auto pos = s.find('\t', start);
      fields.emplace_back(s.substr(start, pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    return fields;
  }
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < s.size() && s[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && trim(cur).empty() && !was_quoted) {
      cur.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else {
      if (was_quoted && c != ' ') {
        throw Error(Errc::MalformedRow, "", "text after closing quote", line.number);
      }
      cur += c;
    }
  }
  if (quoted) throw Error(Errc::MalformedRow, "", "unterminated quote", line.number);
  fields.push_back(std::move(cur));
  return fields;
}

// Locale-independent: '.' is the only decimal separator, no grouping.
inline std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.starts_with('+')) s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ptr != s.data() + s.size()) return std::nullopt;
  if (ec == std::errc::result_out_of_range) return HUGE_VAL;
  if (ec != std::errc{}) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> to_uint(std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline double parse_score(std::string_view raw, std::size_t line) {
  const auto v = to_double(raw);
  if (!v) {
    const auto l = lower(trim(raw));
    if (l.find("nan") != std::string::npos || l.find("inf") != std::string::npos) {
      throw Error(Errc::NonFiniteScore, std::string(trim(raw)), "score is not finite", line);
    }
    throw Error(Errc::MalformedRow, "score", "cannot parse '" + std::string(raw) + "'", line);
  }
  if (!std::isfinite(*v)) {
    throw Error(Errc::NonFiniteScore, std::string(trim(raw)), "score is not finite", line);
  }
  return *v;
}

// Wraps model construction so field errors carry the source line.
template <typename F>
auto at_line(std::size_t line, F&& make) {
  try {
    return make();
  } catch (const Error& e) {
    if (e.line()) throw;
    throw Error(e.code(), e.subject(), e.what(), line);
  }
}

inline std::map<std::string, std::size_t> header_index(const std::vector<std::string>& header,
                                                       std::size_t line) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = std::string(trim(header[i]));
    if (!idx.emplace(name, i).second) {
      throw Error(Errc::MalformedRow, name, "duplicate header column", line);
    }
  }
  return idx;
}

inline std::size_t require_column(const std::map<std::string, std::size_t>& idx,
                                  const std::string& name, std::size_t line) {
  const auto it = idx.find(name);
  if (it == idx.end()) {
    throw Error(Errc::MalformedRow, name, "header lacks required column", line);
  }
  return it->second;
}

using RecordKey = std::tuple<std::string, std::string, std::string, std::optional<std::uint64_t>>;

inline std::string describe(const RecordKey& k) {
  const auto& seg = std::get<3>(k);
  return "(" + std::get<0>(k) + ", " + std::get<1>(k) + ", " + std::get<2>(k) + ", " +
         (seg ? std::to_string(*seg) : std::string("-")) + ")";
}

inline bool needs_csv_quotes(std::string_view s) {
  return s.find_first_of(",\"") != std::string_view::npos || trim(s) != s;
}

inline std::string csv_field(std::string_view s) {
  if (!needs_csv_quotes(s)) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline ScoreFormat format_from_path(std::string_view path) {
  const auto l = detail::lower(path);
  if (l.ends_with(".csv")) return ScoreFormat::CSV;
  if (l.ends_with(".jsonl") || l.ends_with(".ndjson")) return ScoreFormat::JSONL;
  return ScoreFormat::TSV;
}

// Rows in file order. Errors carry the 1-based line number.
inline std::vector<ScoreRecord> parse_scores(std::string_view input, ScoreFormat format) {
  detail::require_utf8(input);
  std::vector<ScoreRecord> out;
  std::set<detail::RecordKey> keys;
  auto add = [&](ScoreRecord rec, std::size_t line) {
    detail::RecordKey key{rec.lang_pair(), rec.system_id(), rec.metric_id(), rec.segment_id()};
    if (!keys.insert(key).second) {
      throw Error(Errc::DuplicateKey, detail::describe(key), "duplicate score key", line);
    }
    out.push_back(std::move(rec));
  };

  const auto all = detail::lines(input);
  if (format == ScoreFormat::JSONL) {
    for (const auto& line : all) {
      if (detail::trim(line.text).empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line.text);
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::MalformedRow, "", e.what(), line.number);
      }
      if (!j.is_object()) throw Error(Errc::MalformedRow, "", "expected an object", line.number);
      auto text = [&](const char* key) {
        const auto it = j.find(key);
        if (it == j.end() || !it->is_string()) {
          throw Error(Errc::MalformedRow, key, "missing string field", line.number);
        }
        return it->get<std::string>();
      };
      std::optional<std::uint64_t> seg;
      if (const auto it = j.find("segment_id"); it != j.end() && !it->is_null()) {
        if (it->is_number_unsigned()) {
          seg = it->get<std::uint64_t>();
        } else if (it->is_string() && !detail::trim(it->get_ref<const std::string&>()).empty()) {
          seg = detail::to_uint(it->get_ref<const std::string&>());
          if (!seg) throw Error(Errc::MalformedRow, "segment_id", "not a non-negative integer", line.number);
        } else if (!it->is_string()) {
          throw Error(Errc::MalformedRow, "segment_id", "not a non-negative integer", line.number);
        }
      }
      const auto sit = j.find("score");
      if (sit == j.end()) throw Error(Errc::MalformedRow, "score", "missing field", line.number);
      double score = 0.0;
      if (sit->is_number()) {
        score = sit->get<double>();
        if (!std::isfinite(score)) {
          throw Error(Errc::NonFiniteScore, sit->dump(), "score is not finite", line.number);
        }
      } else if (sit->is_string()) {
        score = detail::parse_score(sit->get_ref<const std::string&>(), line.number);
      } else {
        throw Error(Errc::MalformedRow, "score", "not a number", line.number);
      }
      add(detail::at_line(line.number,
                          [&] {
                            return ScoreRecord(text("lang_pair"), text("system"),
                                               text("metric"), seg, score);
                          }),
          line.number);
    }
    return out;
  }

  const char delimiter = format == ScoreFormat::CSV ? ',' : '\t';
  auto it = std::find_if(all.begin(), all.end(),
                         [](const auto& l) { return !detail::trim(l.text).empty(); });
  if (it == all.end()) {
    throw Error(Errc::MalformedRow, "", "missing header row", 1);
  }
  const auto header = detail::split_fields(*it, delimiter);
  const auto idx = detail::header_index(header, it->number);
  const auto c_lp = detail::require_column(idx, "lang_pair", it->number);
  const auto c_sys = detail::require_column(idx, "system", it->number);
  const auto c_metric = detail::require_column(idx, "metric", it->number);
  const auto c_seg = detail::require_column(idx, "segment_id", it->number);
  const auto c_score = detail::require_column(idx, "score", it->number);

  for (++it; it != all.end(); ++it) {
    if (detail::trim(it->text).empty()) continue;
    const auto f = detail::split_fields(*it, delimiter);
    if (f.size() != header.size()) {
      throw Error(Errc::MalformedRow, "",
                  "expected " + std::to_string(header.size()) + " columns, got " +
                      std::to_string(f.size()),
                  it->number);
    }
    std::optional<std::uint64_t> seg;
    if (!detail::trim(f[c_seg]).empty()) {
      seg = detail::to_uint(f[c_seg]);
      if (!seg) {
        throw Error(Errc::MalformedRow, "segment_id", "not a non-negative integer", it->number);
      }
    }
    const double score = detail::parse_score(f[c_score], it->number);
    add(detail::at_line(it->number,
                        [&] { return ScoreRecord(f[c_lp], f[c_sys], f[c_metric], seg, score); }),
        it->number);
  }
  return out;
}

// Inverse of parse_scores. Scores are written in shortest round-trip form.
inline std::string serialize_scores(std::span<const ScoreRecord> records, ScoreFormat format) {
  std::string out;
  if (format == ScoreFormat::JSONL) {
    for (const auto& r : records) {
      nlohmann::ordered_json j;
      j["lang_pair"] = r.lang_pair();
      j["system"] = r.system_id();
      j["metric"] = r.metric_id();
      j["segment_id"] = r.segment_id() ? nlohmann::ordered_json(*r.segment_id()) : nullptr;
      j["score"] = r.score();
      out += j.dump() + "\n";
    }
    return out;
  }
  const bool csv = format == ScoreFormat::CSV;
  const char d = csv ? ',' : '\t';
  auto field = [&](std::string_view s) { return csv ? detail::csv_field(s) : std::string(s); };
  out += std::string("lang_pair") + d + "system" + d + "metric" + d + "segment_id" + d + "score\n";
  for (const auto& r : records) {
    out += field(r.lang_pair()) + d + field(r.system_id()) + d + field(r.metric_id()) + d +
           (r.segment_id() ? std::to_string(*r.segment_id()) : std::string()) + d +
           detail::format_double(r.score()) + "\n";
  }
  return out;
}

namespace detail {

inline std::optional<bool> parse_bool(std::string_view raw, bool optional, std::size_t line) {
  const auto v = lower(trim(raw));
  if (optional && (v.empty() || v == "?")) return std::nullopt;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(Errc::UnknownBoolean, std::string(trim(raw)), "expected true/false/1/0/yes/no",
              line);
}

inline std::optional<ParameterCount> parse_params(std::string_view raw, std::size_t line) {
  auto v = trim(raw);
  if (v.empty() || v == "?") return std::nullopt;
  ParameterCount p;
  if (v.starts_with('<')) {
    p.upper_bound = true;
    v.remove_prefix(1);
  }
  const auto num = to_double(v);
  if (!num || !std::isfinite(*num) || *num < 0.0) {
    throw Error(Errc::MalformedRow, "params_b", "expected a non-negative number", line);
  }
  p.billions = *num;
  return p;
}

}  // namespace detail

// Columns: system, constrained, params_b, open_weights, collected,
// lp_supported. The delimiter is a tab if the header contains one, otherwise
// a comma. lp_supported holds a boolean for every pair, or a list such as
// "en-cs_CZ=true;en-de_DE=?". Extra columns land in SystemMeta::extras().
inline std::vector<SystemMeta> parse_system_meta(std::string_view input) {
  detail::require_utf8(input);
  const auto all = detail::lines(input);
  auto it = std::find_if(all.begin(), all.end(),
                         [](const auto& l) { return !detail::trim(l.text).empty(); });
  if (it == all.end()) throw Error(Errc::MalformedRow, "", "missing header row", 1);
  const char delimiter = it->text.find('\t') != std::string_view::npos ? '\t' : ',';
  const auto header = detail::split_fields(*it, delimiter);
  const auto idx = detail::header_index(header, it->number);
  const auto c_sys = detail::require_column(idx, "system", it->number);
  const auto c_con = detail::require_column(idx, "constrained", it->number);
  const auto c_par = detail::require_column(idx, "params_b", it->number);
  const auto c_ow = detail::require_column(idx, "open_weights", it->number);
  const auto c_col = detail::require_column(idx, "collected", it->number);
  const auto c_lp = detail::require_column(idx, "lp_supported", it->number);
  const std::set<std::size_t> known{c_sys, c_con, c_par, c_ow, c_col, c_lp};

  std::vector<SystemMeta> out;
  std::set<std::string, std::less<>> seen;
  for (++it; it != all.end(); ++it) {
    if (detail::trim(it->text).empty()) continue;
    const auto line = it->number;
    const auto f = detail::split_fields(*it, delimiter);
    if (f.size() != header.size()) {
      throw Error(Errc::MalformedRow, "",
                  "expected " + std::to_string(header.size()) + " columns, got " +
                      std::to_string(f.size()),
                  line);
    }
    std::optional<bool> lp_default;
    SystemMeta::LpSupport lp_map;
    const auto lp_cell = detail::trim(f[c_lp]);
    if (lp_cell.find('=') == std::string_view::npos) {
      lp_default = detail::parse_bool(lp_cell, true, line);
    } else {
      std::string_view rest = lp_cell;
      while (!rest.empty()) {
        const auto semi = rest.find(';');
        const auto item = rest.substr(0, semi);
        rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
        if (detail::trim(item).empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) {
          throw Error(Errc::MalformedRow, "lp_supported", "expected lang_pair=value", line);
        }
        const auto lp = detail::at_line(
            line, [&] { return autorank::detail::identifier("lp_supported", item.substr(0, eq)); });
        lp_map[lp] = detail::parse_bool(item.substr(eq + 1), true, line);
      }
    }
    SystemMeta::Extras extras;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (!known.contains(i)) extras[std::string(detail::trim(header[i]))] = f[i];
    }
    auto meta = detail::at_line(line, [&] {
      return SystemMeta(f[c_sys], *detail::parse_bool(f[c_con], false, line),
                        detail::parse_params(f[c_par], line),
                        detail::parse_bool(f[c_ow], true, line),
                        *detail::parse_bool(f[c_col], false, line), lp_default,
                        std::move(lp_map), std::move(extras));
    });
    if (!seen.insert(meta.system_id()).second) {
      throw Error(Errc::DuplicateSystem, meta.system_id(), "system listed twice", line);
    }
    out.push_back(std::move(meta));
  }
  return out;
}

struct PolicyFile {
  std::vector<LangPairPolicy> policies;
  MetricSpecs metrics;
  double default_epsilon = kDefaultEpsilon;
  std::optional<int> k_constrained;
  std::optional<int> total;

  const LangPairPolicy* find(std::string_view lang_pair) const {
    const auto it = std::find_if(policies.begin(), policies.end(),
                                 [&](const auto& p) { return p.lang_pair() == lang_pair; });
    return it == policies.end() ? nullptr : &*it;
  }
};

namespace detail {

struct Assignment {
  std::string key;
  std::string value;
  std::vector<std::string> list;
  bool is_list = false;
};

// Parses `key=value key=[a, b]` sequences.
inline std::vector<Assignment> assignments(std::string_view s, std::size_t line) {
  std::vector<Assignment> out;
  s = trim(s);
  while (!s.empty()) {
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::MalformedRow, std::string(s), "expected key=value", line);
    }
    Assignment a;
    a.key = std::string(trim(s.substr(0, eq)));
    if (a.key.empty() || a.key.find_first_of(" \t") != std::string::npos) {
      throw Error(Errc::MalformedRow, a.key, "bad key", line);
    }
    s = trim(s.substr(eq + 1));
    if (s.starts_with('[')) {
      const auto close = s.find(']');
      if (close == std::string_view::npos) {
        throw Error(Errc::MalformedRow, a.key, "unterminated list", line);
      }
      a.is_list = true;
      auto body = s.substr(1, close - 1);
      while (!trim(body).empty()) {
        const auto comma = body.find(',');
        const auto item = trim(body.substr(0, comma));
        if (item.empty()) throw Error(Errc::MalformedRow, a.key, "empty list item", line);
        a.list.emplace_back(item);
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
      }
      s = trim(s.substr(close + 1));
    } else {
      const auto end = s.find_first_of(" \t");
      a.value = std::string(s.substr(0, end));
      s = end == std::string_view::npos ? std::string_view{} : trim(s.substr(end));
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline double parse_epsilon(std::string_view raw, std::size_t line) {
  const auto v = to_double(raw);
  if (!v || !std::isfinite(*v) || *v <= 0.0) {
    throw Error(Errc::InvalidField, "epsilon", "epsilon must be a positive real", line);
  }
  return *v;
}

inline int parse_count(std::string_view key, std::string_view raw, std::size_t line) {
  const auto v = to_uint(raw);
  if (!v || *v > 1'000'000) {
    throw Error(Errc::InvalidField, std::string(key), "expected a non-negative integer", line);
  }
  return static_cast<int>(*v);
}

}  // namespace detail

// Line-oriented configuration; see docs/policy-format.md for the grammar.
//
//   epsilon = 1e-6
//   humeval.k_constrained = 8
//   humeval.total = 18
//   metric MetricX-24-Hybrid-XL: orientation=lower_better kind=reference_based
//   en-cs_CZ: rule=standard metrics=[CometKiwi-XL, MetricX-24-Hybrid-XL] epsilon=1e-6
//
// The global epsilon applies to pairs that do not set their own, regardless
// of line order.
inline PolicyFile parse_policy(std::string_view input) {
  detail::require_utf8(input);
  PolicyFile file;
  struct PendingPolicy {
    std::size_t line;
    std::string lang_pair;
    PolicyRule rule;
    std::vector<std::string> metrics;
    std::optional<double> epsilon;
  };
  std::vector<PendingPolicy> pending;
  std::set<std::string, std::less<>> seen_lp;

  for (const auto& l : detail::lines(input)) {
    auto text = l.text;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto line = l.number;

    const auto colon = text.find(':');
    const auto eq = text.find('=');
    if (colon == std::string_view::npos || (eq != std::string_view::npos && eq < colon)) {
      // Global `key = value` setting.
      if (eq == std::string_view::npos) {
        throw Error(Errc::MalformedRow, std::string(text), "expected 'key = value' or 'name: ...'", line);
      }
      const auto key = std::string(detail::trim(text.substr(0, eq)));
      const auto value = detail::trim(text.substr(eq + 1));
      if (key == "epsilon") {
        file.default_epsilon = detail::parse_epsilon(value, line);
      } else if (key == "humeval.k_constrained") {
        file.k_constrained = detail::parse_count(key, value, line);
      } else if (key == "humeval.total") {
        file.total = detail::parse_count(key, value, line);
      } else {
        throw Error(Errc::MalformedRow, key, "unknown setting", line);
      }
      continue;
    }

    const auto head = detail::trim(text.substr(0, colon));
    const auto args = detail::assignments(text.substr(colon + 1), line);

    if (head.starts_with("metric ") || head.starts_with("metric\t")) {
      const auto id = detail::at_line(
          line, [&] { return autorank::detail::identifier("metric_id", head.substr(7)); });
      std::optional<Orientation> orientation;
      std::optional<MetricKind> kind;
      bool excluded = false;
      for (const auto& a : args) {
        if (a.key == "orientation" && !a.is_list) {
          if (a.value == "higher_better") orientation = Orientation::HigherBetter;
          else if (a.value == "lower_better") orientation = Orientation::LowerBetter;
          else throw Error(Errc::InvalidField, "orientation", "unknown value " + a.value, line);
        } else if (a.key == "kind" && !a.is_list) {
          if (a.value == "reference_based") kind = MetricKind::ReferenceBased;
          else if (a.value == "reference_free") kind = MetricKind::ReferenceFree;
          else if (a.value == "surface") kind = MetricKind::Surface;
          else throw Error(Errc::InvalidField, "kind", "unknown value " + a.value, line);
        } else if (a.key == "excluded_without_reference" && !a.is_list) {
          excluded = *detail::parse_bool(a.value, false, line);
        } else {
          throw Error(Errc::MalformedRow, a.key, "unknown metric attribute", line);
        }
      }
      if (!orientation) throw Error(Errc::InvalidField, "orientation", "required for " + id, line);
      if (!kind) throw Error(Errc::InvalidField, "kind", "required for " + id, line);
      if (!file.metrics.emplace(id, MetricSpec(id, *orientation, *kind, excluded)).second) {
        throw Error(Errc::DuplicateMetric, id, "metric declared twice", line);
      }
      continue;
    }

    PendingPolicy p{line,
                    detail::at_line(line, [&] { return autorank::detail::identifier("lang_pair", head); }),
                    PolicyRule::Standard,
                    {},
                    std::nullopt};
    bool have_rule = false;
    bool infer_rule = false;
    bool have_metrics = false;
    for (const auto& a : args) {
      if (a.key == "rule" && !a.is_list) {
        have_rule = true;
        if (a.value == "standard") p.rule = PolicyRule::Standard;
        else if (a.value == "no_reference") p.rule = PolicyRule::NoReference;
        else if (a.value == "low_resource") p.rule = PolicyRule::LowResource;
        else if (a.value == "infer") infer_rule = true;
        else throw Error(Errc::InvalidField, "rule", "unknown rule " + a.value, line);
      } else if (a.key == "metrics" && a.is_list) {
        have_metrics = true;
        p.metrics = a.list;
      } else if (a.key == "epsilon" && !a.is_list) {
        p.epsilon = detail::parse_epsilon(a.value, line);
      } else {
        throw Error(Errc::MalformedRow, a.key, "unknown policy attribute", line);
      }
    }
    if (!have_rule) throw Error(Errc::MissingRule, p.lang_pair, "rule must be stated", line);
    if (!have_metrics) throw Error(Errc::InvalidField, "metrics", "required for " + p.lang_pair, line);
    if (infer_rule) p.rule = p.metrics.size() == 1 ? PolicyRule::LowResource : PolicyRule::Standard;
    if (!seen_lp.insert(p.lang_pair).second) {
      throw Error(Errc::DuplicateLangPair, p.lang_pair, "language pair configured twice", line);
    }
    pending.push_back(std::move(p));
  }

  for (auto& p : pending) {
    auto policy = detail::at_line(p.line, [&] {
      return LangPairPolicy(p.lang_pair, p.rule, p.metrics, p.epsilon.value_or(file.default_epsilon));
    });
    detail::at_line(p.line, [&] {
      check_policy_metrics(policy, file.metrics);
      return 0;
    });
    file.policies.push_back(std::move(policy));
  }
  return file;
}

enum class FindingKind { NoPolicy, MissingMetric, ExtraMetric, MissingMeta, MixedGranularity };

constexpr std::string_view to_string(FindingKind k) {
  switch (k) {
    case FindingKind::NoPolicy: return "NoPolicy";
    case FindingKind::MissingMetric: return "MissingMetric";
    case FindingKind::ExtraMetric: return "ExtraMetric";
    case FindingKind::MissingMeta: return "MissingMeta";
    case FindingKind::MixedGranularity: return "MixedGranularity";
  }
  return "Unknown";
}

struct Finding {
  FindingKind kind;
  std::string lang_pair;
  std::string system_id;  // empty when not system-specific
  std::string metric_id;  // empty when not metric-specific

  // ExtraMetric is informational: ranking ignores metrics outside the policy.
  bool blocking() const { return kind != FindingKind::ExtraMetric; }

  std::string describe() const {
    std::string out = std::string(to_string(kind)) + " lang_pair=" + lang_pair;
    if (!system_id.empty()) out += " system=" + system_id;
    if (!metric_id.empty()) out += " metric=" + metric_id;
    return out;
  }

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool empty() const { return findings.empty(); }
  bool rankable() const {
    return std::none_of(findings.begin(), findings.end(), [](const auto& f) { return f.blocking(); });
  }
  const Finding* first_blocking() const {
    const auto it = std::find_if(findings.begin(), findings.end(),
                                 [](const auto& f) { return f.blocking(); });
    return it == findings.end() ? nullptr : &*it;
  }
};

// Findings are grouped by language pair (sorted) and then by system. Pass
// `meta` to also report scored systems without metadata.
inline ValidationReport validate_dataset(std::span<const ScoreRecord> scores,
                                         std::optional<std::span<const SystemMeta>> meta,
                                         std::span<const LangPairPolicy> policies) {
  using Set = std::set<std::string, std::less<>>;
  struct PairData {
    Set systems;
    std::map<std::string, Set, std::less<>> metrics_by_system;
    Set metrics;
    // (system, metric) -> {has segment-level, has system-level}
    std::map<std::pair<std::string, std::string>, std::pair<bool, bool>> granularity;
  };
  std::map<std::string, PairData, std::less<>> pairs;
  for (const auto& r : scores) {
    auto& p = pairs[r.lang_pair()];
    p.systems.insert(r.system_id());
    p.metrics.insert(r.metric_id());
    p.metrics_by_system[r.system_id()].insert(r.metric_id());
    auto& g = p.granularity[{r.system_id(), r.metric_id()}];
    (r.is_segment_level() ? g.first : g.second) = true;
  }
  Set known_systems;
  if (meta) {
    for (const auto& m : *meta) known_systems.insert(m.system_id());
  }

  ValidationReport report;
  for (const auto& [lp, data] : pairs) {
    const auto pit = std::find_if(policies.begin(), policies.end(),
                                  [&](const auto& p) { return p.lang_pair() == lp; });
    if (pit == policies.end()) {
      report.findings.push_back({FindingKind::NoPolicy, lp, "", ""});
      continue;
    }
    const Set wanted(pit->metric_ids().begin(), pit->metric_ids().end());
    for (const auto& m : data.metrics) {
      if (!wanted.contains(m)) report.findings.push_back({FindingKind::ExtraMetric, lp, "", m});
    }
    for (const auto& sys : data.systems) {
      if (meta && !known_systems.contains(sys)) {
        report.findings.push_back({FindingKind::MissingMeta, lp, sys, ""});
      }
      const auto& have = data.metrics_by_system.at(sys);
      for (const auto& m : pit->metric_ids()) {
        if (!have.contains(m)) {
          report.findings.push_back({FindingKind::MissingMetric, lp, sys, m});
        } else if (const auto& g = data.granularity.at({sys, m}); g.first && g.second) {
          report.findings.push_back({FindingKind::MixedGranularity, lp, sys, m});
        }
      }
    }
    // Mixed levels across systems of one metric are ambiguous as well.
    for (const auto& m : pit->metric_ids()) {
      bool seg = false, sys_level = false;
      for (const auto& [key, g] : data.granularity) {
        if (key.second != m) continue;
        seg = seg || g.first;
        sys_level = sys_level || g.second;
      }
      const bool already = std::any_of(report.findings.begin(), report.findings.end(), [&](const auto& f) {
        return f.kind == FindingKind::MixedGranularity && f.lang_pair == lp && f.metric_id == m;
      });
      if (seg && sys_level && !already) {
        report.findings.push_back({FindingKind::MixedGranularity, lp, "", m});
      }
    }
  }
  return report;
}

struct DropResult {
  std::vector<ScoreRecord> records;
  std::vector<std::pair<std::string, std::string>> dropped;  // (lang_pair, system)
};

// Removes, per language pair, every system lacking any policy metric.
inline DropResult drop_incomplete_systems(std::span<const ScoreRecord> scores,
                                          std::span<const LangPairPolicy> policies) {
  std::map<std::pair<std::string, std::string>, std::set<std::string, std::less<>>> have;
  for (const auto& r : scores) have[{r.lang_pair(), r.system_id()}].insert(r.metric_id());
  std::set<std::pair<std::string, std::string>> incomplete;
  for (const auto& [key, metrics] : have) {
    const auto pit = std::find_if(policies.begin(), policies.end(),
                                  [&](const auto& p) { return p.lang_pair() == key.first; });
    if (pit == policies.end()) continue;
    for (const auto& m : pit->metric_ids()) {
      if (!metrics.contains(m)) {
        incomplete.insert(key);
        break;
      }
    }
  }
  DropResult out;
  out.dropped.assign(incomplete.begin(), incomplete.end());
  for (const auto& r : scores) {
    if (!incomplete.contains({r.lang_pair(), r.system_id()})) out.records.push_back(r);
  }
  return out;
}

}  // namespace autorank::ingest
