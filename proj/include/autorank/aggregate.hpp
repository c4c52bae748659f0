#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "autorank/errors.hpp"
#include "autorank/model.hpp"
#include "autorank/numeric.hpp"

namespace autorank::aggregate {

// System-level score per system for one (lang_pair, metric). Segment-level
// records are averaged without weights; system-level records pass through.
// Systems with no records for the metric are absent from the result.
inline ScoreMap system_level_scores(std::span<const ScoreRecord> records,
                                    std::string_view lang_pair, std::string_view metric_id) {
  struct Acc {
    CompensatedSum segments;
    std::optional<double> system_level;
  };
  std::map<std::string, Acc, std::less<>> acc;
  bool any_segment = false;
  bool any_system = false;
  std::string first_segment_system;
  std::string first_system_system;

  for (const auto& r : records) {
    if (r.lang_pair() != lang_pair || r.metric_id() != metric_id) continue;
    auto& a = acc[r.system_id()];
    if (r.is_segment_level()) {
      if (a.system_level) {
        throw Error(Errc::MixedGranularity, r.system_id() + "/" + r.metric_id(),
                    "segment and system-level rows for the same system");
      }
      a.segments.add(r.score());
      if (!any_segment) first_segment_system = r.system_id();
      any_segment = true;
    } else {
      if (a.segments.count() > 0) {
        throw Error(Errc::MixedGranularity, r.system_id() + "/" + r.metric_id(),
                    "segment and system-level rows for the same system");
      }
      a.system_level = r.score();
      if (!any_system) first_system_system = r.system_id();
      any_system = true;
    }
  }
  if (any_segment && any_system) {
    throw Error(Errc::MixedGranularity, first_system_system + "/" + std::string(metric_id),
                "metric mixes segment-level (" + first_segment_system +
                    ") and system-level rows");
  }

  ScoreMap out;
  for (const auto& [sys, a] : acc) {
    if (a.system_level) {
      out.emplace(sys, *a.system_level);
    } else if (a.segments.count() == 0) {
      throw Error(Errc::EmptySegmentSet, sys, "no segments to average");
    } else {
      out.emplace(sys, a.segments.mean());
    }
  }
  return out;
}

inline std::vector<std::string> lang_pairs(std::span<const ScoreRecord> records) {
  std::set<std::string, std::less<>> lps;
  for (const auto& r : records) lps.insert(r.lang_pair());
  return {lps.begin(), lps.end()};
}

inline std::vector<ScoreRecord> filter_lang_pair(std::span<const ScoreRecord> records,
                                                 std::string_view lang_pair) {
  std::vector<ScoreRecord> out;
  for (const auto& r : records) {
    if (r.lang_pair() == lang_pair) out.push_back(r);
  }
  return out;
}

}  // namespace autorank::aggregate
