// Naive reference implementations used only by tests. They follow the textbook
// definitions directly and share no code with the library's fast paths.
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "tgf/common.hpp"
#include "tgf/history.hpp"
#include "tgf/link.hpp"

namespace tgf::oracle {

template <class Key>
struct NaiveCounters {
  std::map<Key, std::uint64_t> values;

  void increase(const Key& k) { ++values[k]; }
  void decrease(const Key& k) {
    if (--values.at(k) == 0) values.erase(k);
  }

  std::vector<std::uint64_t> sorted_desc() const {
    std::vector<std::uint64_t> v;
    for (const auto& [k, x] : values) v.push_back(x);
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
  }
  std::uint64_t value(const Key& k) const {
    auto it = values.find(k);
    return it == values.end() ? 0 : it->second;
  }
  std::size_t size() const { return values.size(); }
  std::uint64_t sum() const {
    std::uint64_t s = 0;
    for (const auto& [k, x] : values) s += x;
    return s;
  }
  std::uint64_t max_value() const {
    auto v = sorted_desc();
    return v.empty() ? 0 : v.front();
  }
  std::uint64_t median_value() const {
    auto v = sorted_desc();
    return v.empty() ? 0 : v[v.size() / 2];
  }
  std::size_t count_with_value(std::uint64_t x) const {
    std::size_t c = 0;
    for (const auto& [k, y] : values) c += y == x;
    return c;
  }
  std::size_t count_greater_than(std::uint64_t x) const {
    std::size_t c = 0;
    for (const auto& [k, y] : values) c += y > x;
    return c;
  }
};

/// Name -> value map plus a sorted multiset of the values. Queries walk the
/// multiset directly.
template <class Key>
struct MultisetCounters {
  std::map<Key, std::uint64_t> values;
  std::multiset<std::uint64_t> sorted;

  void increase(const Key& k) {
    auto& v = values[k];
    if (v) sorted.erase(sorted.find(v));
    sorted.insert(++v);
  }
  void decrease(const Key& k) {
    auto it = values.find(k);
    sorted.erase(sorted.find(it->second));
    if (--it->second == 0) {
      values.erase(it);
    } else {
      sorted.insert(it->second);
    }
  }
  std::uint64_t value(const Key& k) const {
    auto it = values.find(k);
    return it == values.end() ? 0 : it->second;
  }
  std::size_t size() const { return sorted.size(); }
  std::uint64_t sum() const {
    std::uint64_t s = 0;
    for (auto v : sorted) s += v;
    return s;
  }
  std::uint64_t max_value() const { return sorted.empty() ? 0 : *sorted.rbegin(); }
  std::uint64_t median_value() const {
    if (sorted.empty()) return 0;
    return *std::next(sorted.rbegin(), static_cast<std::ptrdiff_t>(sorted.size() / 2));
  }
  std::size_t count_with_value(std::uint64_t x) const { return x == 0 ? 0 : sorted.count(x); }
  std::size_t count_greater_than(std::uint64_t x) const {
    return static_cast<std::size_t>(std::distance(sorted.upper_bound(x), sorted.end()));
  }
};

/// Links j < i that belong to the history graph of link i, straight from the
/// set definitions: t_i - t_j <= d (duration) or i - j <= s (size).
inline std::vector<TimestampedLink> window_of(std::span<const TimestampedLink> links, std::size_t i,
                                              const HistoryConfig& c) {
  std::vector<TimestampedLink> w;
  for (std::size_t j = 0; j < i; ++j) {
    bool in;
    if (c.kind == HistoryKind::BySize) {
      in = i - j <= c.size;
    } else {
      in = links[i].t.as_double() - links[j].t.as_double() <= c.duration.as_double();
    }
    if (in) w.push_back(links[j]);
  }
  return w;
}

/// The 30 features of (u, v) in the weighted graph built from `window`,
/// computed by direct enumeration.
inline FeatureRow naive_features(std::span<const TimestampedLink> window, NodeId u, NodeId v) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> weight;
  for (const auto& l : window) {
    auto a = std::min(l.u.value, l.v.value), b = std::max(l.u.value, l.v.value);
    ++weight[{a, b}];
  }
  std::map<std::uint32_t, std::set<std::uint32_t>> neighbors;
  std::map<std::uint32_t, std::uint64_t> wdeg;
  for (const auto& [p, w] : weight) {
    neighbors[p.first].insert(p.second);
    neighbors[p.second].insert(p.first);
    wdeg[p.first] += w;
    wdeg[p.second] += w;
  }
  std::vector<std::uint64_t> degs, wdegs, ws;
  for (const auto& [x, nb] : neighbors) degs.push_back(nb.size());
  for (const auto& [x, w] : wdeg) wdegs.push_back(w);
  for (const auto& [p, w] : weight) ws.push_back(w);

  auto count_eq = [](const std::vector<std::uint64_t>& v, std::uint64_t x) {
    return static_cast<std::uint64_t>(std::count(v.begin(), v.end(), x));
  };
  auto count_gt = [](const std::vector<std::uint64_t>& v, std::uint64_t x) {
    return static_cast<std::uint64_t>(std::count_if(v.begin(), v.end(), [&](auto y) { return y > x; }));
  };
  auto max_of = [](std::vector<std::uint64_t> v) -> std::uint64_t {
    return v.empty() ? 0 : *std::max_element(v.begin(), v.end());
  };
  auto median_of = [](std::vector<std::uint64_t> v) -> std::uint64_t {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end(), std::greater<>());
    return v[v.size() / 2];
  };

  FeatureRow f;
  f[Feature::n] = neighbors.size();
  f[Feature::m] = weight.size();
  std::uint64_t mu = 0;
  for (auto w : ws) mu += w;
  f[Feature::mu] = mu;
  f[Feature::deg1_count] = count_eq(degs, 1);
  f[Feature::deg2_count] = count_eq(degs, 2);
  f[Feature::deg_max] = max_of(degs);
  f[Feature::deg_median] = median_of(degs);
  f[Feature::wdeg1_count] = count_eq(wdegs, 1);
  f[Feature::wdeg2_count] = count_eq(wdegs, 2);
  f[Feature::wdeg_max] = max_of(wdegs);
  f[Feature::wdeg_median] = median_of(wdegs);
  f[Feature::w1_count] = count_eq(ws, 1);
  f[Feature::w2_count] = count_eq(ws, 2);
  f[Feature::w_max] = max_of(ws);
  f[Feature::w_median] = median_of(ws);

  auto deg_of = [&](NodeId x) -> std::uint64_t {
    auto it = neighbors.find(x.value);
    return it == neighbors.end() ? 0 : it->second.size();
  };
  auto wdeg_of = [&](NodeId x) -> std::uint64_t {
    auto it = wdeg.find(x.value);
    return it == wdeg.end() ? 0 : it->second;
  };
  NodeId a = u, b = v;
  if (deg_of(b) < deg_of(a) || (deg_of(b) == deg_of(a) && wdeg_of(b) < wdeg_of(a))) std::swap(a, b);

  f[Feature::u_deg] = deg_of(a);
  f[Feature::v_deg] = deg_of(b);
  f[Feature::u_deg_count] = count_eq(degs, deg_of(a));
  f[Feature::v_deg_count] = count_eq(degs, deg_of(b));
  f[Feature::u_deg_gt] = count_gt(degs, deg_of(a));
  f[Feature::v_deg_gt] = count_gt(degs, deg_of(b));
  f[Feature::u_wdeg] = wdeg_of(a);
  f[Feature::v_wdeg] = wdeg_of(b);
  f[Feature::u_wdeg_count] = count_eq(wdegs, wdeg_of(a));
  f[Feature::v_wdeg_count] = count_eq(wdegs, wdeg_of(b));
  f[Feature::u_wdeg_gt] = count_gt(wdegs, wdeg_of(a));
  f[Feature::v_wdeg_gt] = count_gt(wdegs, wdeg_of(b));
  const auto key = std::pair{std::min(u.value, v.value), std::max(u.value, v.value)};
  const std::uint64_t w = weight.contains(key) ? weight.at(key) : 0;
  f[Feature::uv_w] = w;
  f[Feature::uv_w_count] = count_eq(ws, w);
  f[Feature::uv_w_gt] = count_gt(ws, w);
  return f;
}

/// A random stream over `nodes` node ids with non-decreasing integer
/// timestamps; about one link in `per_tick` advances the clock.
inline std::vector<TimestampedLink> random_links(std::size_t count, std::uint32_t nodes,
                                                 std::uint64_t seed, std::uint64_t per_tick = 3) {
  Rng rng(seed);
  std::vector<TimestampedLink> out;
  std::int64_t t = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (rng.below(per_tick) == 0) t += static_cast<std::int64_t>(1 + rng.below(2));
    auto u = static_cast<std::uint32_t>(rng.below(nodes));
    auto v = static_cast<std::uint32_t>(rng.below(nodes - 1));
    if (v >= u) ++v;
    out.push_back({Timestamp::integer(t), NodeId{u}, NodeId{v}});
  }
  return out;
}

/// Probability that a random positive outscores a random negative, ties 1/2,
/// by enumerating all pairs.
inline double brute_force_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  std::uint64_t twice_wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        twice_wins += 2;
      } else if (scores[i] == scores[j]) {
        twice_wins += 1;
      }
    }
  }
  return static_cast<double>(twice_wins) / 2.0 / static_cast<double>(pairs);
}

}  // namespace tgf::oracle
