#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "autorank/ingest.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) {
  return std::string(AUTORANK_TEST_DATA) + "/" + name;
}

inline std::string read(const std::string& name) {
  std::ifstream in(data_path(name), std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<autorank::ScoreRecord> golden_scores(bool as_printed = false) {
  return autorank::ingest::parse_scores(
      read(as_printed ? "golden/scores_as_printed.tsv" : "golden/scores.tsv"),
      autorank::ingest::ScoreFormat::TSV);
}

inline autorank::ingest::PolicyFile golden_policy(bool as_printed = false) {
  return autorank::ingest::parse_policy(
      read(as_printed ? "golden/policy_as_printed.conf" : "golden/policy.conf"));
}

inline std::vector<autorank::SystemMeta> golden_systems() {
  return autorank::ingest::parse_system_meta(read("golden/systems.csv"));
}

struct Published {
  std::vector<std::string> systems;  // table order
  std::map<std::string, double> autorank;
  std::map<std::string, bool> humeval;
};

// AutoRank column as printed, one decimal.
inline Published published(const std::string& lang_pair) {
  std::istringstream in(read("golden/published_autorank.tsv"));
  std::string line;
  std::getline(in, line);
  Published out;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string lp, sys, ar, he;
    std::getline(row, lp, '\t');
    std::getline(row, sys, '\t');
    std::getline(row, ar, '\t');
    std::getline(row, he, '\t');
    if (lp != lang_pair) continue;
    out.systems.push_back(sys);
    out.autorank[sys] = std::stod(ar);
    out.humeval[sys] = he == "true";
  }
  return out;
}

}  // namespace fixtures
