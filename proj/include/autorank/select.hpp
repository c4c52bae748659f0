#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "autorank/errors.hpp"
#include "autorank/model.hpp"

namespace autorank::select {

// Human-evaluation subset: the k best constrained systems first, then the
// best of everything left until `total` (or all N) are chosen. Ties on
// AutoRank break by system id. Output is ordered by AutoRank.
inline SelectionResult select_for_humeval(const RankingResult& ranking,
                                          std::span<const SystemMeta> meta,
                                          int k_constrained = kDefaultKConstrained,
                                          int total = kDefaultTotal) {
  if (k_constrained < 0 || total < 0 || k_constrained > total) {
    throw Error(Errc::InvalidArgument, "k_constrained", "need 0 <= k_constrained <= total");
  }
  std::map<std::string_view, const SystemMeta*> by_id;
  for (const auto& m : meta) by_id.emplace(m.system_id(), &m);

  struct Candidate {
    const SystemRanking* row;
    bool constrained;
  };
  std::vector<Candidate> order;
  order.reserve(ranking.n_systems());
  for (const auto& row : ranking.systems()) {
    const auto it = by_id.find(row.system_id);
    if (it == by_id.end()) {
      throw Error(Errc::MissingMeta, row.system_id, "no metadata for ranked system");
    }
    order.push_back({&row, it->second->constrained()});
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return std::tie(a.row->autorank, a.row->system_id) < std::tie(b.row->autorank, b.row->system_id);
  });

  const auto limit = std::min(static_cast<std::size_t>(total), order.size());
  std::vector<bool> taken(order.size(), false);
  std::vector<std::pair<std::size_t, SelectionReason>> picks;

  for (std::size_t i = 0; i < order.size() && picks.size() < static_cast<std::size_t>(k_constrained); ++i) {
    if (order[i].constrained) {
      taken[i] = true;
      picks.emplace_back(i, SelectionReason::TopConstrained);
    }
  }
  for (std::size_t i = 0; i < order.size() && picks.size() < limit; ++i) {
    if (!taken[i]) {
      taken[i] = true;
      picks.emplace_back(i, SelectionReason::FillTop);
    }
  }
  std::sort(picks.begin(), picks.end());

  std::vector<SelectedSystem> selected;
  selected.reserve(picks.size());
  for (const auto& [i, reason] : picks) selected.push_back({order[i].row->system_id, reason});
  return SelectionResult(ranking.lang_pair(), std::move(selected), order.size(), k_constrained, total);
}

}  // namespace autorank::select
