#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "tgf/common.hpp"
#include "tgf/streamio.hpp"

namespace tgf {

/// Parameters of a stationary synthetic interaction stream: nodes have
/// power-law activity, and a share of the links repeat recently seen pairs.
struct SynthParams {
  std::size_t links = 50'000;
  std::size_t nodes = 2'000;
  double activity_exponent = 1.0;  // node i is drawn with weight (i + 1)^-exponent
  double repeat_probability = 0.5;
  std::size_t recent_pairs = 500;  // repeats pick among the last pairs created
  double links_per_tick = 4.0;     // mean number of links sharing a timestamp
  std::uint64_t seed = 0;
};

inline LinkStream generate_stream(const SynthParams& p) {
  if (p.nodes < 2) throw UsageError("synthetic stream needs at least two nodes");
  Rng rng(derive_seed(p.seed, "synth"));
  std::vector<double> cumulative(p.nodes);
  double total = 0;
  for (std::size_t i = 0; i < p.nodes; ++i) {
    total += std::pow(static_cast<double>(i + 1), -p.activity_exponent);
    cumulative[i] = total;
  }
  // Node names are shuffled so that name order carries no activity signal.
  std::vector<std::size_t> label(p.nodes);
  for (std::size_t i = 0; i < p.nodes; ++i) label[i] = i;
  shuffle(label, rng);
  auto draw_node = [&] {
    const double x = rng.uniform() * total;
    return static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), x) -
                                    cumulative.begin()) % p.nodes;
  };

  LinkStream s;
  s.links.reserve(p.links);
  // Intern in index order so NodeIds are stable across runs.
  for (std::size_t i = 0; i < p.nodes; ++i) s.nodes.intern("n" + std::to_string(label[i]));

  std::vector<std::pair<std::uint32_t, std::uint32_t>> recent;
  std::size_t recent_next = 0;
  std::int64_t t = 0;
  const double advance = 1.0 / std::max(1.0, p.links_per_tick);
  for (std::size_t k = 0; k < p.links; ++k) {
    if (k > 0 && rng.uniform() < advance) ++t;
    std::uint32_t u, v;
    if (!recent.empty() && rng.uniform() < p.repeat_probability) {
      std::tie(u, v) = recent[rng.below(recent.size())];
    } else {
      u = static_cast<std::uint32_t>(draw_node());
      do {
        v = static_cast<std::uint32_t>(draw_node());
      } while (v == u);
      if (recent.size() < p.recent_pairs) {
        recent.emplace_back(u, v);
      } else if (p.recent_pairs > 0) {
        recent[recent_next] = {u, v};
        recent_next = (recent_next + 1) % p.recent_pairs;
      }
    }
    s.links.push_back({Timestamp::integer(t), NodeId{u}, NodeId{v}});
  }
  return s;
}

}  // namespace tgf
