#pragma once

// Reference implementations used only by tests. They follow the textbook
// definitions directly and share no code with the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Percentile by explicit order-statistic interpolation, in long double.
inline long double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const long double h = static_cast<long double>(v.size() - 1) * p / 100.0L;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return v[lo] + (h - lo) * (static_cast<long double>(v[hi]) - v[lo]);
}

// sum (x - mx)(y - my) / sqrt(sum (x - mx)^2 * sum (y - my)^2)
inline long double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<long double>(x.size());
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Average ranks (1-based) with ties sharing the mean rank.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return static_cast<double>(pearson(ranks(a), ranks(b)));
}

struct Candidate {
  std::string id;
  double autorank;
  bool constrained;
};

// Selection by set algebra: top-k constrained, then the best `total - |top|`
// of what remains, both under (autorank, id) order.
inline std::set<std::string> select(std::vector<Candidate> c, int k, int total) {
  std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) {
    return std::pair(a.autorank, a.id) < std::pair(b.autorank, b.id);
  });
  std::set<std::string> top;
  for (const auto& x : c) {
    if (x.constrained && static_cast<int>(top.size()) < k) top.insert(x.id);
  }
  std::set<std::string> out = top;
  const auto limit = std::min<std::size_t>(static_cast<std::size_t>(total), c.size());
  for (const auto& x : c) {
    if (out.size() >= limit) break;
    if (!top.contains(x.id)) out.insert(x.id);
  }
  return out;
}

}  // namespace oracle
