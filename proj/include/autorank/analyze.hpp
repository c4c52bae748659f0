#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autorank/errors.hpp"
#include "autorank/model.hpp"
#include "autorank/numeric.hpp"

namespace autorank::analyze {

// Sample Pearson correlation. Corrected two-pass: deviations from a
// compensated mean, with the residual sum of deviations removed.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(Errc::LengthMismatch, "y",
                std::to_string(x.size()) + " vs " + std::to_string(y.size()) + " values");
  }
  if (x.size() < 2) throw Error(Errc::InvalidArgument, "x", "need at least two pairs");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw Error(Errc::InvalidField, "values", "non-finite input");
    }
  }
  const double mx = compensated_mean(x);
  const double my = compensated_mean(y);
  CompensatedSum sx, sy, sxx, syy, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sx.add(dx);
    sy.add(dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
    sxy.add(dx * dy);
  }
  const auto n = static_cast<double>(x.size());
  const double vx = sxx.value() - sx.value() * sx.value() / n;
  const double vy = syy.value() - sy.value() * sy.value() / n;
  const double cov = sxy.value() - sx.value() * sy.value() / n;
  if (!(vx > 0.0) || !(vy > 0.0)) {
    throw Error(Errc::DegenerateVariance, vx > 0.0 ? "y" : "x", "constant input");
  }
  return std::clamp(cov / (std::sqrt(vx) * std::sqrt(vy)), -1.0, 1.0);
}

struct CorrelationMatrix {
  std::string lang_pair;
  std::vector<std::string> metric_ids;
  // values[i][j] is absent when the two metrics share fewer than two
  // (system, segment) keys or one side is constant over the shared keys.
  std::vector<std::vector<std::optional<double>>> values;
  std::vector<std::vector<std::size_t>> matched;    // shared keys
  std::vector<std::vector<std::size_t>> unmatched;  // records dropped for lack of a partner
};

struct CorrelationOptions {
  // Throw NoSharedSegments / DegenerateVariance instead of leaving a cell absent.
  bool strict = false;
  // When set, lower-is-better metrics are negated before correlating.
  const MetricSpecs* orient_with = nullptr;
};

// Pools segment-level scores across all systems and correlates metrics on
// exact (system, segment) matches. System-level records are ignored. Scores
// are used as ingested unless `options.orient_with` is given.
inline CorrelationMatrix metric_correlation_matrix(std::span<const ScoreRecord> records,
                                                   std::string_view lang_pair,
                                                   const std::vector<std::string>& metric_ids,
                                                   CorrelationOptions options = {}) {
  using Key = std::pair<std::string, std::uint64_t>;
  std::vector<std::map<Key, double>> by_metric(metric_ids.size());
  for (const auto& r : records) {
    if (r.lang_pair() != lang_pair || !r.is_segment_level()) continue;
    const auto it = std::find(metric_ids.begin(), metric_ids.end(), r.metric_id());
    if (it == metric_ids.end()) continue;
    auto& m = by_metric[static_cast<std::size_t>(it - metric_ids.begin())];
    double v = r.score();
    if (options.orient_with) {
      const auto spec = options.orient_with->find(r.metric_id());
      if (spec != options.orient_with->end() && spec->second.orientation() == Orientation::LowerBetter) {
        v = -v + 0.0;
      }
    }
    if (!m.emplace(Key{r.system_id(), *r.segment_id()}, v).second) {
      throw Error(Errc::DuplicateKey, r.system_id() + "/" + r.metric_id(),
                  "segment " + std::to_string(*r.segment_id()) + " appears twice");
    }
  }

  const auto k = metric_ids.size();
  CorrelationMatrix out;
  out.lang_pair = std::string(lang_pair);
  out.metric_ids = metric_ids;
  out.values.assign(k, std::vector<std::optional<double>>(k));
  out.matched.assign(k, std::vector<std::size_t>(k, 0));
  out.unmatched.assign(k, std::vector<std::size_t>(k, 0));

  for (std::size_t i = 0; i < k; ++i) {
    out.matched[i][i] = by_metric[i].size();
    if (!by_metric[i].empty()) out.values[i][i] = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      std::vector<double> xs, ys;
      for (const auto& [key, v] : by_metric[i]) {
        if (const auto it = by_metric[j].find(key); it != by_metric[j].end()) {
          xs.push_back(v);
          ys.push_back(it->second);
        }
      }
      out.matched[i][j] = out.matched[j][i] = xs.size();
      out.unmatched[i][j] = out.unmatched[j][i] =
          by_metric[i].size() + by_metric[j].size() - 2 * xs.size();
      if (xs.size() < 2) {
        if (options.strict) {
          throw Error(Errc::NoSharedSegments, metric_ids[i] + "/" + metric_ids[j],
                      "fewer than two shared (system, segment) keys");
        }
        continue;
      }
      try {
        const double r = pearson(xs, ys);
        out.values[i][j] = out.values[j][i] = r;
      } catch (const Error& e) {
        if (options.strict || e.code() != Errc::DegenerateVariance) throw;
      }
    }
  }
  return out;
}

}  // namespace autorank::analyze
