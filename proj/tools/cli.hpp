#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "autorank/aggregate.hpp"
#include "autorank/analyze.hpp"
#include "autorank/autorank.hpp"
#include "autorank/errors.hpp"
#include "autorank/ingest.hpp"
#include "autorank/model.hpp"
#include "autorank/report.hpp"
#include "autorank/select.hpp"

// Command-line front end. Exit codes: 0 success, 1 usage / IO / parse error,
// 2 well-formed input that fails validation or cannot be ranked.
namespace autorank::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 1;
inline constexpr int kExitValidation = 2;

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw Error(Errc::Io, out_path, "cannot write file");
  f << text;
  if (!f) throw Error(Errc::Io, out_path, "write failed");
}

inline std::vector<ScoreRecord> load_scores(const std::vector<std::string>& paths,
                                            const std::string& format) {
  std::vector<ScoreRecord> all;
  std::set<std::tuple<std::string, std::string, std::string, std::optional<std::uint64_t>>> keys;
  for (const auto& path : paths) {
    ingest::ScoreFormat f = ingest::format_from_path(path);
    if (format == "csv") f = ingest::ScoreFormat::CSV;
    else if (format == "tsv") f = ingest::ScoreFormat::TSV;
    else if (format == "jsonl") f = ingest::ScoreFormat::JSONL;
    std::vector<ScoreRecord> recs;
    try {
      recs = ingest::parse_scores(read_file(path), f);
    } catch (const Error& e) {
      throw Error(e.code(), e.subject(), path + ": " + e.what(), e.line());
    }
    for (auto& r : recs) {
      if (!keys.emplace(r.lang_pair(), r.system_id(), r.metric_id(), r.segment_id()).second) {
        throw Error(Errc::DuplicateKey, r.lang_pair() + "/" + r.system_id() + "/" + r.metric_id(),
                    "key repeated across score files (" + path + ")");
      }
      all.push_back(std::move(r));
    }
  }
  return all;
}

inline ingest::PolicyFile load_policy(const std::string& path, std::optional<double> epsilon) {
  auto file = ingest::parse_policy(read_file(path));
  if (epsilon) {
    std::vector<LangPairPolicy> overridden;
    for (const auto& p : file.policies) {
      overridden.emplace_back(p.lang_pair(), p.rule(), p.metric_ids(), *epsilon);
    }
    file.policies = std::move(overridden);
    file.default_epsilon = *epsilon;
  }
  return file;
}

inline report::Format ranking_format(const std::string& name) {
  if (name == "json") return report::Format::JSON;
  if (name == "markdown") return report::Format::Markdown;
  return report::Format::TSV;
}

inline std::size_t resolve_jobs(std::optional<std::size_t> flag) {
  if (flag) return *flag == 0 ? default_jobs() : *flag;
  if (const char* env = std::getenv("AUTORANK_JOBS")) {
    const auto v = ingest::detail::to_uint(env);
    if (v && *v > 0) return static_cast<std::size_t>(*v);
  }
  return default_jobs();
}

// Requested pairs, or every pair present in the scores. An unknown pair is a
// validation failure.
inline std::vector<std::string> resolve_lang_pairs(const std::vector<std::string>& requested,
                                                   std::span<const ScoreRecord> scores,
                                                   const ingest::PolicyFile* policy) {
  const auto present = aggregate::lang_pairs(scores);
  if (requested.empty()) return present;
  std::vector<std::string> out;
  for (const auto& lp : requested) {
    const bool in_scores = std::find(present.begin(), present.end(), lp) != present.end();
    const bool in_policy = !policy || policy->find(lp) != nullptr;
    if (!in_scores || !in_policy) {
      throw Error(Errc::UnknownLangPair, lp, "unknown language pair");
    }
    out.push_back(lp);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct RankInputs {
  std::vector<std::string> score_paths;
  std::string scores_format = "auto";
  std::string systems_path;
  std::string policy_path;
  std::vector<std::string> lang_pairs;
  bool drop_incomplete = false;
  std::optional<double> epsilon;
  std::optional<std::size_t> jobs;
};

struct Ranked {
  std::vector<RankingResult> results;
  std::vector<SystemMeta> meta;
  ingest::PolicyFile policy;
};

inline Ranked rank_inputs(const RankInputs& in, std::ostream& err) {
  Ranked out;
  auto scores = load_scores(in.score_paths, in.scores_format);
  out.policy = load_policy(in.policy_path, in.epsilon);
  if (!in.systems_path.empty()) out.meta = ingest::parse_system_meta(read_file(in.systems_path));
  const auto lps = resolve_lang_pairs(in.lang_pairs, scores, &out.policy);

  std::vector<ScoreRecord> subset;
  for (auto& r : scores) {
    if (std::binary_search(lps.begin(), lps.end(), r.lang_pair())) subset.push_back(std::move(r));
  }
  if (in.drop_incomplete) {
    auto dropped = ingest::drop_incomplete_systems(subset, out.policy.policies);
    for (const auto& [lp, sys] : dropped.dropped) {
      err << "dropped incomplete system " << sys << " from " << lp << "\n";
    }
    subset = std::move(dropped.records);
  }
  std::optional<std::span<const SystemMeta>> meta;
  if (!in.systems_path.empty()) meta = std::span<const SystemMeta>(out.meta);
  const auto report = ingest::validate_dataset(subset, meta, out.policy.policies);
  for (const auto& f : report.findings) {
    if (!f.blocking()) err << "warning: " << f.describe() << "\n";
  }
  if (const auto* f = report.first_blocking()) {
    throw Error(Errc::Validation, f->lang_pair, f->describe());
  }
  out.results = rank_all(subset, out.policy.policies, out.policy.metrics, lps, resolve_jobs(in.jobs));
  return out;
}

inline void add_rank_inputs(CLI::App& cmd, RankInputs& in, bool scores_required) {
  auto* scores = cmd.add_option("--scores", in.score_paths,
                                "Score file (CSV, TSV or JSONL; repeatable)");
  if (scores_required) scores->required();
  cmd.add_option("--scores-format", in.scores_format,
                 "Score file format; 'auto' picks by extension (.csv, .jsonl, else TSV)")
      ->check(CLI::IsMember({"auto", "csv", "tsv", "jsonl"}));
  cmd.add_option("--policy", in.policy_path, "Language-pair policy file");
  cmd.add_option("--lang-pair", in.lang_pairs, "Language pair to process (repeatable; default all)");
  cmd.add_flag("--drop-incomplete-systems", in.drop_incomplete,
               "Remove systems lacking a policy metric instead of failing");
  cmd.add_option("--epsilon", in.epsilon, "Spread floor; overrides the policy file")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--jobs", in.jobs,
                 "Worker threads across language pairs (default: $AUTORANK_JOBS or all cores)");
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"AutoRank: robust multi-metric ranking of translation systems", "autorank"};
  app.require_subcommand(1);

  detail::RankInputs rank_in;
  std::string out_path;
  std::string format = "tsv";
  bool humeval_column = false;
  auto* rank = app.add_subcommand("rank", "Compute AutoRank for each language pair");
  detail::add_rank_inputs(*rank, rank_in, true);
  rank->get_option("--policy")->required();
  rank->add_option("--systems", rank_in.systems_path, "System metadata file (CSV/TSV)");
  rank->add_option("--out", out_path, "Write output here instead of stdout");
  rank->add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"tsv", "json", "markdown"}));
  rank->add_flag("--humeval", humeval_column,
                 "Add a Humeval column from the default selection (needs --systems)");

  detail::RankInputs sel_in;
  std::string ranking_path;
  std::optional<int> k_constrained;
  std::optional<int> total;
  std::string sel_format = "tsv";
  auto* sel = app.add_subcommand("select", "Choose systems for human evaluation");
  detail::add_rank_inputs(*sel, sel_in, false);
  sel->add_option("--ranking", ranking_path, "Ranking JSON produced by 'rank --format json'");
  sel->add_option("--systems", sel_in.systems_path, "System metadata file (CSV/TSV)")->required();
  sel->add_option("--k-constrained", k_constrained, "Constrained systems taken first (default 8)")
      ->check(CLI::NonNegativeNumber);
  sel->add_option("--total", total, "Target subset size (default 18)")->check(CLI::NonNegativeNumber);
  sel->add_option("--out", out_path, "Write output here instead of stdout");
  sel->add_option("--format", sel_format, "Output format")->check(CLI::IsMember({"tsv", "json"}));

  std::vector<std::string> corr_scores;
  std::string corr_scores_format = "auto";
  std::vector<std::string> corr_lps;
  std::vector<std::string> corr_metrics;
  std::string corr_policy;
  std::string corr_format = "csv";
  bool corr_strict = false;
  bool corr_oriented = false;
  auto* corr = app.add_subcommand("correlate", "Pearson correlation between metrics per language pair");
  corr->add_option("--scores", corr_scores, "Segment-level score file (repeatable)")->required();
  corr->add_option("--scores-format", corr_scores_format, "Score file format")
      ->check(CLI::IsMember({"auto", "csv", "tsv", "jsonl"}));
  corr->add_option("--lang-pair", corr_lps, "Language pair (repeatable; default all)");
  corr->add_option("--metrics", corr_metrics, "Metric subset (repeatable or comma separated)")
      ->delimiter(',');
  corr->add_option("--policy", corr_policy, "Take each pair's metric list from this policy file");
  corr->add_flag("--strict", corr_strict, "Fail instead of leaving uncomputable cells empty");
  corr->add_flag("--oriented", corr_oriented,
                 "Negate lower-is-better metrics (per --policy) before correlating");
  corr->add_option("--out", out_path, "Write output here instead of stdout");
  corr->add_option("--format", corr_format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  detail::RankInputs val_in;
  auto* val = app.add_subcommand("validate", "Check that a dataset can be ranked");
  val->add_option("--scores", val_in.score_paths, "Score file (repeatable)")->required();
  val->add_option("--scores-format", val_in.scores_format, "Score file format")
      ->check(CLI::IsMember({"auto", "csv", "tsv", "jsonl"}));
  val->add_option("--systems", val_in.systems_path, "System metadata file (CSV/TSV)");
  val->add_option("--policy", val_in.policy_path, "Language-pair policy file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitParse;
  }

  try {
    if (*rank) {
      auto ranked = detail::rank_inputs(rank_in, err);
      std::vector<SelectionResult> selections;
      if (humeval_column) {
        if (rank_in.systems_path.empty()) {
          throw Error(Errc::InvalidArgument, "--humeval", "requires --systems");
        }
        for (const auto& r : ranked.results) {
          selections.push_back(select::select_for_humeval(
              r, ranked.meta, ranked.policy.k_constrained.value_or(kDefaultKConstrained),
              ranked.policy.total.value_or(kDefaultTotal)));
        }
      }
      detail::emit(report::render_rankings(ranked.results, ranked.meta,
                                           detail::ranking_format(format), selections),
                   out_path, out);
      return kExitOk;
    }

    if (*sel) {
      std::vector<RankingResult> results;
      auto meta = ingest::parse_system_meta(detail::read_file(sel_in.systems_path));
      int k = kDefaultKConstrained;
      int t = kDefaultTotal;
      if (!ranking_path.empty()) {
        if (!sel_in.score_paths.empty()) {
          throw Error(Errc::InvalidArgument, "--ranking", "give either --ranking or --scores");
        }
        report::Json j;
        try {
          j = report::Json::parse(detail::read_file(ranking_path));
        } catch (const nlohmann::json::exception& e) {
          throw Error(Errc::MalformedRow, ranking_path, e.what());
        }
        if (j.is_array()) {
          for (const auto& r : j) results.push_back(report::ranking_from_json(r));
        } else {
          results.push_back(report::ranking_from_json(j));
        }
        if (!sel_in.lang_pairs.empty()) {
          std::vector<RankingResult> kept;
          for (const auto& lp : sel_in.lang_pairs) {
            const auto it = std::find_if(results.begin(), results.end(),
                                         [&](const auto& r) { return r.lang_pair() == lp; });
            if (it == results.end()) throw Error(Errc::UnknownLangPair, lp, "unknown language pair");
            kept.push_back(*it);
          }
          results = std::move(kept);
        }
        std::sort(results.begin(), results.end(),
                  [](const auto& a, const auto& b) { return a.lang_pair() < b.lang_pair(); });
        if (!sel_in.policy_path.empty()) {
          const auto policy = detail::load_policy(sel_in.policy_path, std::nullopt);
          k = policy.k_constrained.value_or(k);
          t = policy.total.value_or(t);
        }
      } else {
        if (sel_in.score_paths.empty() || sel_in.policy_path.empty()) {
          throw Error(Errc::InvalidArgument, "--scores", "need --ranking, or --scores with --policy");
        }
        auto ranked = detail::rank_inputs(sel_in, err);
        results = std::move(ranked.results);
        k = ranked.policy.k_constrained.value_or(k);
        t = ranked.policy.total.value_or(t);
      }
      k = k_constrained.value_or(k);
      t = total.value_or(t);
      std::vector<SelectionResult> selections;
      for (const auto& r : results) selections.push_back(select::select_for_humeval(r, meta, k, t));
      detail::emit(report::render_selections(selections, detail::ranking_format(sel_format)),
                   out_path, out);
      return kExitOk;
    }

    if (*corr) {
      const auto scores = detail::load_scores(corr_scores, corr_scores_format);
      std::optional<ingest::PolicyFile> policy;
      if (!corr_policy.empty()) policy = detail::load_policy(corr_policy, std::nullopt);
      if (corr_oriented && !policy) {
        throw Error(Errc::InvalidArgument, "--oriented", "requires --policy");
      }
      const auto lps = detail::resolve_lang_pairs(corr_lps, scores, policy ? &*policy : nullptr);
      std::vector<analyze::CorrelationMatrix> matrices;
      for (const auto& lp : lps) {
        std::vector<std::string> metrics = corr_metrics;
        if (metrics.empty() && policy) metrics = policy->find(lp)->metric_ids();
        std::set<std::string> segment_metrics;
        for (const auto& r : scores) {
          if (r.lang_pair() == lp && r.is_segment_level()) segment_metrics.insert(r.metric_id());
        }
        if (segment_metrics.empty()) {
          throw Error(Errc::Validation, lp, "only system-level scores available");
        }
        if (metrics.empty()) metrics.assign(segment_metrics.begin(), segment_metrics.end());
        for (const auto& m : metrics) {
          if (!segment_metrics.contains(m)) {
            throw Error(Errc::Validation, lp, "no segment-level scores for metric " + m);
          }
        }
        matrices.push_back(analyze::metric_correlation_matrix(
            scores, lp, metrics, {corr_strict, corr_oriented ? &policy->metrics : nullptr}));
      }
      detail::emit(report::render_correlations(
                       matrices, corr_format == "json" ? report::Format::JSON : report::Format::TSV),
                   out_path, out);
      return kExitOk;
    }

    if (*val) {
      const auto scores = detail::load_scores(val_in.score_paths, val_in.scores_format);
      const auto policy = detail::load_policy(val_in.policy_path, std::nullopt);
      std::vector<SystemMeta> meta;
      std::optional<std::span<const SystemMeta>> meta_view;
      if (!val_in.systems_path.empty()) {
        meta = ingest::parse_system_meta(detail::read_file(val_in.systems_path));
        meta_view = std::span<const SystemMeta>(meta);
      }
      const auto report = ingest::validate_dataset(scores, meta_view, policy.policies);
      for (const auto& f : report.findings) {
        out << (f.blocking() ? "error\t" : "warning\t") << f.describe() << "\n";
      }
      if (!report.rankable()) return kExitValidation;
      out << "ok\t" << aggregate::lang_pairs(scores).size() << " language pair(s) rankable\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_parse_error(e.code()) ? kExitParse : kExitValidation;
  }
  return kExitParse;
}

}  // namespace autorank::cli
