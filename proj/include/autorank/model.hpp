#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autorank/errors.hpp"

namespace autorank {

// Keyed by system or metric id. Ordered so that iteration, and therefore every
// derived output, is deterministic.
using ScoreMap = std::map<std::string, double, std::less<>>;

inline constexpr double kDefaultEpsilon = 1e-6;

namespace detail {

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\v\f";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

// Identifiers are case-sensitive, trimmed, non-empty and free of control
// characters (they must survive a TSV round trip).
inline std::string identifier(std::string_view field, std::string_view raw) {
  const auto value = trim(raw);
  if (value.empty()) {
    throw Error(Errc::InvalidField, std::string(field), "identifier is empty");
  }
  for (const char c : value) {
    if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) {
      throw Error(Errc::InvalidField, std::string(field),
                  "identifier contains a control character");
    }
  }
  return std::string(value);
}

inline void require_finite(std::string_view field, double v) {
  if (!std::isfinite(v)) {
    throw Error(Errc::InvalidField, std::string(field), "value is not finite");
  }
}

}  // namespace detail

class ScoreRecord {
 public:
  ScoreRecord(std::string_view lang_pair, std::string_view system_id,
              std::string_view metric_id, std::optional<std::uint64_t> segment_id,
              double score)
      : lang_pair_(detail::identifier("lang_pair", lang_pair)),
        system_id_(detail::identifier("system_id", system_id)),
        metric_id_(detail::identifier("metric_id", metric_id)),
        segment_id_(segment_id),
        score_(score) {
    detail::require_finite("score", score_);
  }

  const std::string& lang_pair() const noexcept { return lang_pair_; }
  const std::string& system_id() const noexcept { return system_id_; }
  const std::string& metric_id() const noexcept { return metric_id_; }
  std::optional<std::uint64_t> segment_id() const noexcept { return segment_id_; }
  bool is_segment_level() const noexcept { return segment_id_.has_value(); }
  double score() const noexcept { return score_; }

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;

 private:
  std::string lang_pair_;
  std::string system_id_;
  std::string metric_id_;
  std::optional<std::uint64_t> segment_id_;
  double score_;
};

enum class Orientation { HigherBetter, LowerBetter };
enum class MetricKind { ReferenceBased, ReferenceFree, Surface };

class MetricSpec {
 public:
  // `excluded_without_reference` marks a pure QE metric that language pairs
  // without human references must leave out of the aggregate.
  MetricSpec(std::string_view metric_id, Orientation orientation, MetricKind kind,
             bool excluded_without_reference = false)
      : metric_id_(detail::identifier("metric_id", metric_id)),
        orientation_(orientation),
        kind_(kind),
        excluded_without_reference_(excluded_without_reference) {}

  const std::string& metric_id() const noexcept { return metric_id_; }
  Orientation orientation() const noexcept { return orientation_; }
  MetricKind kind() const noexcept { return kind_; }
  bool excluded_without_reference() const noexcept {
    return excluded_without_reference_;
  }

  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;

 private:
  std::string metric_id_;
  Orientation orientation_;
  MetricKind kind_;
  bool excluded_without_reference_;
};

using MetricSpecs = std::map<std::string, MetricSpec, std::less<>>;

// Parameter count in billions. Some systems only publish a bound ("<1").
struct ParameterCount {
  double billions = 0.0;
  bool upper_bound = false;

  friend bool operator==(const ParameterCount&, const ParameterCount&) = default;
};

class SystemMeta {
 public:
  using LpSupport = std::map<std::string, std::optional<bool>, std::less<>>;
  using Extras = std::map<std::string, std::string, std::less<>>;

  SystemMeta(std::string_view system_id, bool constrained,
             std::optional<ParameterCount> params, std::optional<bool> open_weights,
             bool organizer_collected, std::optional<bool> lp_supported_default = {},
             LpSupport lp_supported = {}, Extras extras = {})
      : system_id_(detail::identifier("system_id", system_id)),
        constrained_(constrained),
        params_(params),
        open_weights_(open_weights),
        organizer_collected_(organizer_collected),
        lp_supported_default_(lp_supported_default),
        lp_supported_(std::move(lp_supported)),
        extras_(std::move(extras)) {
    if (params_) {
      detail::require_finite("params_b", params_->billions);
      if (params_->billions < 0.0) {
        throw Error(Errc::InvalidField, "params_b", "parameter count is negative");
      }
    }
  }

  const std::string& system_id() const noexcept { return system_id_; }
  bool constrained() const noexcept { return constrained_; }
  const std::optional<ParameterCount>& params() const noexcept { return params_; }
  std::optional<bool> open_weights() const noexcept { return open_weights_; }
  bool organizer_collected() const noexcept { return organizer_collected_; }
  const Extras& extras() const noexcept { return extras_; }
  const LpSupport& lp_support_map() const noexcept { return lp_supported_; }
  std::optional<bool> lp_supported_default() const noexcept {
    return lp_supported_default_;
  }

  // Per-pair entry if present, otherwise the system-wide default.
  std::optional<bool> lp_supported(std::string_view lang_pair) const {
    if (const auto it = lp_supported_.find(lang_pair); it != lp_supported_.end()) {
      return it->second;
    }
    return lp_supported_default_;
  }

  friend bool operator==(const SystemMeta&, const SystemMeta&) = default;

 private:
  std::string system_id_;
  bool constrained_;
  std::optional<ParameterCount> params_;
  std::optional<bool> open_weights_;
  bool organizer_collected_;
  std::optional<bool> lp_supported_default_;
  LpSupport lp_supported_;
  Extras extras_;
};

enum class PolicyRule { Standard, NoReference, LowResource };

constexpr std::string_view to_string(PolicyRule rule) {
  switch (rule) {
    case PolicyRule::Standard: return "standard";
    case PolicyRule::NoReference: return "no_reference";
    case PolicyRule::LowResource: return "low_resource";
  }
  return "unknown";
}

class LangPairPolicy {
 public:
  LangPairPolicy(std::string_view lang_pair, PolicyRule rule,
                 std::vector<std::string> metric_ids,
                 double epsilon = kDefaultEpsilon)
      : lang_pair_(detail::identifier("lang_pair", lang_pair)),
        rule_(rule),
        epsilon_(epsilon) {
    if (metric_ids.empty()) {
      throw Error(Errc::InvalidField, "metric_ids", "policy lists no metrics");
    }
    std::set<std::string, std::less<>> seen;
    for (const auto& m : metric_ids) {
      auto id = detail::identifier("metric_ids", m);
      if (!seen.insert(id).second) {
        throw Error(Errc::DuplicateMetric, id, "metric listed twice for " + lang_pair_);
      }
      metric_ids_.push_back(std::move(id));
    }
    if (rule_ == PolicyRule::LowResource && metric_ids_.size() != 1) {
      throw Error(Errc::LowResourceMetricCount, lang_pair_,
                  "low_resource policy needs exactly one metric, got " +
                      std::to_string(metric_ids_.size()));
    }
    if (!std::isfinite(epsilon_) || epsilon_ <= 0.0) {
      throw Error(Errc::InvalidField, "epsilon", "epsilon must be a positive real");
    }
  }

  const std::string& lang_pair() const noexcept { return lang_pair_; }
  PolicyRule rule() const noexcept { return rule_; }
  const std::vector<std::string>& metric_ids() const noexcept { return metric_ids_; }
  double epsilon() const noexcept { return epsilon_; }

  friend bool operator==(const LangPairPolicy&, const LangPairPolicy&) = default;

 private:
  std::string lang_pair_;
  PolicyRule rule_;
  std::vector<std::string> metric_ids_;
  double epsilon_;
};

// NoReference pairs may not aggregate a metric flagged as reference-less only.
inline void check_policy_metrics(const LangPairPolicy& policy, const MetricSpecs& specs) {
  if (policy.rule() != PolicyRule::NoReference) return;
  for (const auto& m : policy.metric_ids()) {
    const auto it = specs.find(m);
    if (it != specs.end() && it->second.excluded_without_reference()) {
      throw Error(Errc::ExcludedMetricInPolicy, m,
                  "metric is excluded for pairs without references (" +
                      policy.lang_pair() + ")");
    }
  }
}

struct RobustStats {
  double median = 0.0;
  double q25 = 0.0;
  double q100 = 0.0;
  double spread = 0.0;

  friend bool operator==(const RobustStats&, const RobustStats&) = default;
};

struct SystemRanking {
  std::string system_id;
  ScoreMap system_scores;  // oriented, higher is better
  ScoreMap robust_scores;
  double mean_robust = 0.0;
  double autorank = 1.0;

  friend bool operator==(const SystemRanking&, const SystemRanking&) = default;
};

class RankingResult {
 public:
  using Stats = std::map<std::string, RobustStats, std::less<>>;

  // Rows are stored by ascending AutoRank, ties by system id.
  RankingResult(std::string_view lang_pair, std::vector<std::string> metric_ids,
                double epsilon, std::vector<SystemRanking> systems, Stats per_metric)
      : lang_pair_(detail::identifier("lang_pair", lang_pair)),
        metric_ids_(std::move(metric_ids)),
        epsilon_(epsilon),
        systems_(std::move(systems)),
        per_metric_(std::move(per_metric)) {
    std::sort(systems_.begin(), systems_.end(), [](const auto& a, const auto& b) {
      return std::tie(a.autorank, a.system_id) < std::tie(b.autorank, b.system_id);
    });
    validate();
  }

  const std::string& lang_pair() const noexcept { return lang_pair_; }
  const std::vector<std::string>& metric_ids() const noexcept { return metric_ids_; }
  double epsilon() const noexcept { return epsilon_; }
  std::size_t n_systems() const noexcept { return systems_.size(); }
  const std::vector<SystemRanking>& systems() const noexcept { return systems_; }
  const Stats& per_metric_stats() const noexcept { return per_metric_; }

  const SystemRanking* find(std::string_view system_id) const {
    const auto it = std::find_if(systems_.begin(), systems_.end(),
                                 [&](const auto& s) { return s.system_id == system_id; });
    return it == systems_.end() ? nullptr : &*it;
  }

  friend bool operator==(const RankingResult&, const RankingResult&) = default;

 private:
  void validate() const {
    if (systems_.empty()) {
      throw Error(Errc::InvalidField, "per_system", "ranking has no systems");
    }
    if (metric_ids_.empty()) {
      throw Error(Errc::InvalidField, "metric_ids", "ranking has no metrics");
    }
    if (!std::isfinite(epsilon_) || epsilon_ <= 0.0) {
      throw Error(Errc::InvalidField, "epsilon", "epsilon must be a positive real");
    }
    const auto n = static_cast<double>(systems_.size());
    std::set<std::string_view> ids;
    for (const auto& s : systems_) {
      if (!ids.insert(s.system_id).second) {
        throw Error(Errc::InvalidField, "per_system", "duplicate system " + s.system_id);
      }
      detail::require_finite("mean_robust", s.mean_robust);
      if (!(s.autorank >= 1.0 && s.autorank <= n)) {
        throw Error(Errc::InvalidField, "autorank", s.system_id + " outside [1, N]");
      }
      if (s.system_scores.size() != metric_ids_.size() ||
          s.robust_scores.size() != metric_ids_.size()) {
        throw Error(Errc::InvalidField, "per_system", s.system_id + " metric set mismatch");
      }
      for (const auto& m : metric_ids_) {
        if (!s.system_scores.contains(m) || !s.robust_scores.contains(m)) {
          throw Error(Errc::InvalidField, "per_system", s.system_id + " lacks " + m);
        }
      }
    }
    if (per_metric_.size() != metric_ids_.size()) {
      throw Error(Errc::InvalidField, "per_metric_stats", "metric set mismatch");
    }
    for (const auto& m : metric_ids_) {
      const auto it = per_metric_.find(m);
      if (it == per_metric_.end()) {
        throw Error(Errc::InvalidField, "per_metric_stats", "missing " + m);
      }
      const auto& st = it->second;
      if (!(st.q25 <= st.median && st.median <= st.q100)) {
        throw Error(Errc::InvalidField, "per_metric_stats", m + " percentiles out of order");
      }
      if (!(st.spread >= epsilon_)) {
        throw Error(Errc::InvalidField, "spread", m + " spread below epsilon");
      }
    }

    // Higher mean robust score never ranks worse.
    auto by_mean = systems_;
    std::sort(by_mean.begin(), by_mean.end(),
              [](const auto& a, const auto& b) {
                if (a.mean_robust != b.mean_robust) return a.mean_robust > b.mean_robust;
                return a.autorank < b.autorank;
              });
    for (std::size_t i = 1; i < by_mean.size(); ++i) {
      if (by_mean[i - 1].mean_robust > by_mean[i].mean_robust &&
          by_mean[i - 1].autorank > by_mean[i].autorank) {
        throw Error(Errc::InvalidField, "autorank",
                    "order disagrees with mean_robust at " + by_mean[i].system_id);
      }
    }
    const bool degenerate = by_mean.front().mean_robust == by_mean.back().mean_robust;
    const auto [lo, hi] = std::minmax_element(
        systems_.begin(), systems_.end(),
        [](const auto& a, const auto& b) { return a.autorank < b.autorank; });
    if (degenerate) {
      if (lo->autorank != 1.0 || hi->autorank != 1.0) {
        throw Error(Errc::InvalidField, "autorank", "tied systems must all rank 1");
      }
    } else if (lo->autorank != 1.0 || hi->autorank != n) {
      throw Error(Errc::InvalidField, "autorank", "ranks must span [1, N]");
    }
  }

  std::string lang_pair_;
  std::vector<std::string> metric_ids_;
  double epsilon_;
  std::vector<SystemRanking> systems_;
  Stats per_metric_;
};

enum class SelectionReason { TopConstrained, FillTop };

constexpr std::string_view to_string(SelectionReason r) {
  return r == SelectionReason::TopConstrained ? "TopConstrained" : "FillTop";
}

struct SelectedSystem {
  std::string system_id;
  SelectionReason reason = SelectionReason::FillTop;

  friend bool operator==(const SelectedSystem&, const SelectedSystem&) = default;
};

inline constexpr int kDefaultKConstrained = 8;
inline constexpr int kDefaultTotal = 18;

class SelectionResult {
 public:
  SelectionResult(std::string_view lang_pair, std::vector<SelectedSystem> selected,
                  std::size_t n_candidates, int k_constrained = kDefaultKConstrained,
                  int total = kDefaultTotal)
      : lang_pair_(detail::identifier("lang_pair", lang_pair)),
        selected_(std::move(selected)),
        n_candidates_(n_candidates),
        k_constrained_(k_constrained),
        total_(total) {
    if (k_constrained_ < 0 || total_ < 0 || k_constrained_ > total_) {
      throw Error(Errc::InvalidField, "k_constrained",
                  "need 0 <= k_constrained <= total");
    }
    const auto expected = std::min(static_cast<std::size_t>(total_), n_candidates_);
    if (selected_.size() != expected) {
      throw Error(Errc::InvalidField, "selected",
                  "size must equal min(total, N) = " + std::to_string(expected));
    }
    std::set<std::string_view> ids;
    for (const auto& s : selected_) {
      if (!ids.insert(s.system_id).second) {
        throw Error(Errc::InvalidField, "selected", "duplicate system " + s.system_id);
      }
    }
  }

  const std::string& lang_pair() const noexcept { return lang_pair_; }
  const std::vector<SelectedSystem>& selected() const noexcept { return selected_; }
  std::size_t n_candidates() const noexcept { return n_candidates_; }
  int k_constrained() const noexcept { return k_constrained_; }
  int total() const noexcept { return total_; }

  bool contains(std::string_view system_id) const {
    return std::any_of(selected_.begin(), selected_.end(),
                       [&](const auto& s) { return s.system_id == system_id; });
  }

  friend bool operator==(const SelectionResult&, const SelectionResult&) = default;

 private:
  std::string lang_pair_;
  std::vector<SelectedSystem> selected_;
  std::size_t n_candidates_;
  int k_constrained_;
  int total_;
};

}  // namespace autorank
