#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "autorank/aggregate.hpp"
#include "autorank/errors.hpp"
#include "autorank/model.hpp"
#include "autorank/numeric.hpp"
#include "autorank/parallel.hpp"

// Robust aggregation of several automatic metrics into one AutoRank per
// system. Per metric, scores are centred on the median and divided by the
// spread between the 25th and 100th percentile (floored at epsilon). The
// scaled values are averaged with equal weights and the averages mapped
// linearly onto [1, N], best system first.
namespace autorank {

namespace detail {

inline void require_finite_values(std::span<const double> values) {
  for (const double v : values) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidField, "values", "non-finite input");
  }
}

// `sorted` must be ascending and non-empty.
inline double percentile_sorted(std::span<const double> sorted, double p) {
  const auto n = sorted.size();
  const double h = static_cast<double>(n - 1) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  if (lo == hi) return sorted[lo];
  const double v = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  return std::clamp(v, sorted[lo], sorted[hi]);
}

}  // namespace detail

// Linear interpolation between order statistics at rank (n-1)*p/100.
// p = 50 gives the median, p = 100 the maximum.
inline double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(Errc::EmptyInput, "values", "percentile of an empty set");
  if (!(p >= 0.0 && p <= 100.0)) {
    throw Error(Errc::InvalidArgument, "p", "percentile must lie in [0, 100]");
  }
  detail::require_finite_values(values);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return detail::percentile_sorted(sorted, p);
}

struct ScaledScores {
  ScoreMap z;
  RobustStats stats;
};

// z_s = (x_s - median) / max(epsilon, Q100 - Q25). Scores must already be
// oriented so that higher is better.
inline ScaledScores robust_scale(const ScoreMap& system_scores, double epsilon = kDefaultEpsilon) {
  if (system_scores.empty()) throw Error(Errc::EmptyInput, "system_scores", "no systems to scale");
  if (!std::isfinite(epsilon) || epsilon <= 0.0) {
    throw Error(Errc::InvalidArgument, "epsilon", "epsilon must be a positive real");
  }
  std::vector<double> sorted;
  sorted.reserve(system_scores.size());
  for (const auto& [_, v] : system_scores) sorted.push_back(v);
  detail::require_finite_values(sorted);
  std::sort(sorted.begin(), sorted.end());

  ScaledScores out;
  out.stats.median = detail::percentile_sorted(sorted, 50.0);
  out.stats.q25 = detail::percentile_sorted(sorted, 25.0);
  out.stats.q100 = sorted.back();
  out.stats.spread = std::max(epsilon, out.stats.q100 - out.stats.q25);
  for (const auto& [sys, v] : system_scores) {
    out.z.emplace(sys, (v - out.stats.median) / out.stats.spread);
  }
  return out;
}

// Negates lower-is-better metrics so that every metric reads higher-better.
inline ScoreMap orient(const ScoreMap& scores, Orientation orientation) {
  if (orientation == Orientation::HigherBetter) return scores;
  ScoreMap out;
  for (const auto& [sys, v] : scores) out.emplace_hint(out.end(), sys, -v + 0.0);
  return out;
}

using ScaledByMetric = std::map<std::string, ScoreMap, std::less<>>;

// Equal-weight mean of the robust-scaled values over metrics.
inline ScoreMap mean_robust(const ScaledByMetric& z_by_metric) {
  if (z_by_metric.empty()) throw Error(Errc::EmptyInput, "z_by_metric", "no metrics to average");
  const auto& reference = z_by_metric.begin()->second;
  for (const auto& [metric, z] : z_by_metric) {
    const bool same = z.size() == reference.size() &&
                      std::equal(z.begin(), z.end(), reference.begin(),
                                 [](const auto& a, const auto& b) { return a.first == b.first; });
    if (!same) {
      throw Error(Errc::SystemSetMismatch, metric,
                  "metric covers a different system set than " + z_by_metric.begin()->first);
    }
  }
  ScoreMap out;
  for (const auto& [sys, _] : reference) {
    CompensatedSum sum;
    for (const auto& [metric, z] : z_by_metric) sum.add(z.find(sys)->second);
    out.emplace_hint(out.end(), sys, sum.mean());
  }
  return out;
}

// Best mean maps to 1, worst to N, linear in between. If every system has
// the same mean, all of them share rank 1.
inline ScoreMap remap_to_rank(const ScoreMap& mean_scores) {
  if (mean_scores.empty()) throw Error(Errc::EmptyInput, "mean_robust", "no systems to rank");
  double lo = mean_scores.begin()->second;
  double hi = lo;
  for (const auto& [sys, v] : mean_scores) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidField, "mean_robust", sys + " is not finite");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  ScoreMap out;
  const auto n = static_cast<double>(mean_scores.size());
  for (const auto& [sys, v] : mean_scores) {
    const double rank = hi == lo ? 1.0 : 1.0 + (n - 1.0) * ((hi - v) / (hi - lo));
    out.emplace_hint(out.end(), sys, std::clamp(rank, 1.0, n));
  }
  return out;
}

// Full pipeline for one language pair: system-level aggregation, orientation,
// per-metric robust scaling, averaging, and the final remap. Metrics without
// a spec are treated as higher-better. Records for other pairs and metrics
// outside the policy are ignored.
inline RankingResult rank_language_pair(std::span<const ScoreRecord> records,
                                        const LangPairPolicy& policy,
                                        const MetricSpecs& metric_specs = {}) {
  check_policy_metrics(policy, metric_specs);
  const auto& lp = policy.lang_pair();

  std::set<std::string, std::less<>> systems;
  for (const auto& r : records) {
    if (r.lang_pair() == lp) systems.insert(r.system_id());
  }
  if (systems.empty()) throw Error(Errc::UnknownLangPair, lp, "unknown language pair");

  ScaledByMetric z_by_metric;
  std::map<std::string, ScoreMap, std::less<>> oriented_by_metric;
  RankingResult::Stats stats;
  for (const auto& metric : policy.metric_ids()) {
    auto raw = aggregate::system_level_scores(records, lp, metric);
    if (raw.empty()) throw Error(Errc::PolicyMetricMissing, metric, "no scores in " + lp);
    for (const auto& sys : systems) {
      if (!raw.contains(sys)) {
        throw Error(Errc::PolicyMetricMissing, metric, "system " + sys + " has no score in " + lp);
      }
    }
    const auto spec = metric_specs.find(metric);
    auto oriented =
        orient(raw, spec == metric_specs.end() ? Orientation::HigherBetter : spec->second.orientation());
    auto scaled = robust_scale(oriented, policy.epsilon());
    stats.emplace(metric, scaled.stats);
    z_by_metric.emplace(metric, std::move(scaled.z));
    oriented_by_metric.emplace(metric, std::move(oriented));
  }

  const auto means = mean_robust(z_by_metric);
  const auto ranks = remap_to_rank(means);

  std::vector<SystemRanking> rows;
  rows.reserve(systems.size());
  for (const auto& sys : systems) {
    SystemRanking row;
    row.system_id = sys;
    for (const auto& metric : policy.metric_ids()) {
      row.system_scores.emplace(metric, oriented_by_metric.find(metric)->second.find(sys)->second);
      row.robust_scores.emplace(metric, z_by_metric.find(metric)->second.find(sys)->second);
    }
    row.mean_robust = means.find(sys)->second;
    row.autorank = ranks.find(sys)->second;
    rows.push_back(std::move(row));
  }
  return RankingResult(lp, policy.metric_ids(), policy.epsilon(), std::move(rows), std::move(stats));
}

// Ranks each requested pair, in parallel across pairs. Results are ordered by
// lang_pair. Throws UnknownLangPair for a pair with no policy.
inline std::vector<RankingResult> rank_all(std::span<const ScoreRecord> records,
                                           std::span<const LangPairPolicy> policies,
                                           const MetricSpecs& metric_specs,
                                           std::vector<std::string> lang_pairs,
                                           std::size_t jobs = default_jobs()) {
  std::sort(lang_pairs.begin(), lang_pairs.end());
  lang_pairs.erase(std::unique(lang_pairs.begin(), lang_pairs.end()), lang_pairs.end());
  std::vector<const LangPairPolicy*> selected;
  for (const auto& lp : lang_pairs) {
    const auto it = std::find_if(policies.begin(), policies.end(),
                                 [&](const auto& p) { return p.lang_pair() == lp; });
    if (it == policies.end()) throw Error(Errc::UnknownLangPair, lp, "unknown language pair");
    selected.push_back(&*it);
  }
  return parallel_map(selected.size(), jobs, [&](std::size_t i) {
    const auto subset = aggregate::filter_lang_pair(records, selected[i]->lang_pair());
    return rank_language_pair(subset, *selected[i], metric_specs);
  });
}

}  // namespace autorank
