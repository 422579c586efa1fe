#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "tgf/common.hpp"
#include "tgf/dsc.hpp"
#include "tgf/link.hpp"

namespace tgf {

enum class HistoryKind { ByDuration, BySize };

/// One history graph definition: the links of the last `duration` time units
/// (G-type) or the last `size` link occurrences (H-type) before each link.
struct HistoryConfig {
  HistoryKind kind = HistoryKind::BySize;
  Timestamp duration;
  std::uint64_t size = 0;
  std::string id;

  static HistoryConfig by_size(std::uint64_t s, std::string label = {}) {
    if (s == 0) throw UsageError("history size must be positive");
    HistoryConfig c;
    c.kind = HistoryKind::BySize;
    c.size = s;
    c.id = label.empty() ? "H" + std::to_string(s) : std::move(label);
    return c;
  }

  static HistoryConfig by_duration(Timestamp d, std::string label = {}) {
    if (!(d > Timestamp::integer(0))) throw UsageError("history duration must be positive");
    HistoryConfig c;
    c.kind = HistoryKind::ByDuration;
    c.duration = d;
    c.id = label.empty() ? "G" + d.to_string() : std::move(label);
    return c;
  }
};

/// The per-link feature catalogue: 15 features of the history graph itself
/// followed by 15 features of the queried link. For the link family, `u` is the
/// endpoint of smaller degree (ties: smaller weighted degree).
enum class Feature : std::size_t {
  n, m, mu,
  deg1_count, deg2_count, deg_max, deg_median,
  wdeg1_count, wdeg2_count, wdeg_max, wdeg_median,
  w1_count, w2_count, w_max, w_median,
  u_deg, v_deg, u_deg_count, v_deg_count, u_deg_gt, v_deg_gt,
  u_wdeg, v_wdeg, u_wdeg_count, v_wdeg_count, u_wdeg_gt, v_wdeg_gt,
  uv_w, uv_w_count, uv_w_gt,
};

inline constexpr std::size_t kFeatureCount = 30;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "n",           "m",           "mu",
    "deg1_count",  "deg2_count",  "deg_max",      "deg_median",
    "wdeg1_count", "wdeg2_count", "wdeg_max",     "wdeg_median",
    "w1_count",    "w2_count",    "w_max",        "w_median",
    "u_deg",       "v_deg",       "u_deg_count",  "v_deg_count",  "u_deg_gt",  "v_deg_gt",
    "u_wdeg",      "v_wdeg",      "u_wdeg_count", "v_wdeg_count", "u_wdeg_gt", "v_wdeg_gt",
    "uv_w",        "uv_w_count",  "uv_w_gt",
};

struct FeatureRow {
  std::array<std::uint64_t, kFeatureCount> values{};

  std::uint64_t& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  std::uint64_t operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

/// A weighted undirected graph over a sliding window of the stream.
///
/// Three counter structures carry everything the features need: node degrees,
/// node weighted degrees, and pair weights (occurrence counts in the window).
/// Absent nodes and pairs read as 0, and zero-valued counters are never stored.
class HistoryGraph {
 public:
  explicit HistoryGraph(HistoryConfig config) : config_(std::move(config)) {}

  /// Processes the next stream link: evicts expired occurrences (G-type), computes
  /// the features of the link against the graph of strictly earlier links, then
  /// inserts it and trims to size (H-type).
  FeatureRow observe(const TimestampedLink& link) {
    if (observed_ > 0 && link.t < last_t_) {
      throw DataError("link " + std::to_string(observed_) + ": timestamp " + link.t.to_string() +
                      " precedes " + last_t_.to_string());
    }
    last_t_ = link.t;
    ++observed_;

    if (config_.kind == HistoryKind::ByDuration) {
      while (!window_.empty() && elapsed_exceeds(link.t, window_.front().t, config_.duration)) {
        evict_oldest();
      }
    }
    FeatureRow row = compute_features(link.u, link.v);
    insert(link);
    if (config_.kind == HistoryKind::BySize && window_.size() > config_.size) evict_oldest();
    return row;
  }

  FeatureRow compute_features(NodeId u, NodeId v) const {
    FeatureRow f;
    f[Feature::n] = degrees_.size();
    f[Feature::m] = link_weights_.size();
    f[Feature::mu] = link_weights_.sum();

    f[Feature::deg1_count] = degrees_.count_with_value(1);
    f[Feature::deg2_count] = degrees_.count_with_value(2);
    f[Feature::deg_max] = degrees_.max_value();
    f[Feature::deg_median] = degrees_.median_value();

    f[Feature::wdeg1_count] = weighted_degrees_.count_with_value(1);
    f[Feature::wdeg2_count] = weighted_degrees_.count_with_value(2);
    f[Feature::wdeg_max] = weighted_degrees_.max_value();
    f[Feature::wdeg_median] = weighted_degrees_.median_value();

    f[Feature::w1_count] = link_weights_.count_with_value(1);
    f[Feature::w2_count] = link_weights_.count_with_value(2);
    f[Feature::w_max] = link_weights_.max_value();
    f[Feature::w_median] = link_weights_.median_value();

    auto du = degrees_.value(u);
    auto dv = degrees_.value(v);
    auto wu = weighted_degrees_.value(u);
    auto wv = weighted_degrees_.value(v);
    // When both degree and weighted degree tie, every link feature is symmetric
    // in (u, v), so no further tie-break can change the row.
    if (dv < du || (dv == du && wv < wu)) {
      std::swap(du, dv);
      std::swap(wu, wv);
    }
    f[Feature::u_deg] = du;
    f[Feature::v_deg] = dv;
    f[Feature::u_deg_count] = degrees_.count_with_value(du);
    f[Feature::v_deg_count] = degrees_.count_with_value(dv);
    f[Feature::u_deg_gt] = degrees_.count_greater_than(du);
    f[Feature::v_deg_gt] = degrees_.count_greater_than(dv);

    f[Feature::u_wdeg] = wu;
    f[Feature::v_wdeg] = wv;
    f[Feature::u_wdeg_count] = weighted_degrees_.count_with_value(wu);
    f[Feature::v_wdeg_count] = weighted_degrees_.count_with_value(wv);
    f[Feature::u_wdeg_gt] = weighted_degrees_.count_greater_than(wu);
    f[Feature::v_wdeg_gt] = weighted_degrees_.count_greater_than(wv);

    const auto w = link_weights_.value(pair_key(u, v));
    f[Feature::uv_w] = w;
    f[Feature::uv_w_count] = link_weights_.count_with_value(w);
    f[Feature::uv_w_gt] = link_weights_.count_greater_than(w);
    return f;
  }

  const HistoryConfig& config() const { return config_; }
  const std::deque<TimestampedLink>& window() const { return window_; }
  const DecreasingSortedCounters<NodeId>& degrees() const { return degrees_; }
  const DecreasingSortedCounters<NodeId>& weighted_degrees() const { return weighted_degrees_; }
  const DecreasingSortedCounters<std::uint64_t>& link_weights() const { return link_weights_; }
  std::uint64_t observed() const { return observed_; }

  /// Total elementary counter updates across the three structures.
  std::uint64_t operation_count() const {
    return degrees_.operation_count() + weighted_degrees_.operation_count() +
           link_weights_.operation_count();
  }

 private:
  void insert(const TimestampedLink& link) {
    window_.push_back(link);
    if (link_weights_.increase(pair_key(link.u, link.v)) == 1) {
      degrees_.increase(link.u);
      degrees_.increase(link.v);
    }
    weighted_degrees_.increase(link.u);
    weighted_degrees_.increase(link.v);
  }

  void evict_oldest() {
    const TimestampedLink old = window_.front();
    window_.pop_front();
    if (link_weights_.decrease(pair_key(old.u, old.v)) == 0) {
      degrees_.decrease(old.u);
      degrees_.decrease(old.v);
    }
    weighted_degrees_.decrease(old.u);
    weighted_degrees_.decrease(old.v);
  }

  HistoryConfig config_;
  std::deque<TimestampedLink> window_;
  DecreasingSortedCounters<NodeId> degrees_;
  DecreasingSortedCounters<NodeId> weighted_degrees_;
  DecreasingSortedCounters<std::uint64_t> link_weights_;
  Timestamp last_t_;
  std::uint64_t observed_ = 0;
};

/// Several history graphs fed with the same stream; their feature rows are
/// concatenated in configuration order.
class HistoryPipeline {
 public:
  explicit HistoryPipeline(std::span<const HistoryConfig> configs) {
    if (configs.empty()) throw UsageError("at least one history graph is required");
    std::unordered_set<std::string> ids;
    for (const auto& c : configs) {
      if (!ids.insert(c.id).second) throw UsageError("duplicate history id '" + c.id + "'");
      graphs_.emplace_back(c);
    }
  }

  std::size_t width() const { return graphs_.size() * kFeatureCount; }

  /// Column names of the form "<id>.<feature>".
  std::vector<std::string> column_names() const {
    std::vector<std::string> names;
    names.reserve(width());
    for (const auto& g : graphs_) {
      for (auto f : kFeatureNames) names.push_back(g.config().id + "." + std::string(f));
    }
    return names;
  }

  /// Writes width() values into out.
  void observe(const TimestampedLink& link, std::span<std::uint64_t> out) {
    if (out.size() != width()) throw ContractViolation("HistoryPipeline::observe: output width");
    for (std::size_t g = 0; g < graphs_.size(); ++g) {
      const FeatureRow row = graphs_[g].observe(link);
      std::copy(row.values.begin(), row.values.end(), out.begin() + g * kFeatureCount);
    }
  }

  std::vector<std::uint64_t> observe(const TimestampedLink& link) {
    std::vector<std::uint64_t> out(width());
    observe(link, out);
    return out;
  }

  std::span<const HistoryGraph> graphs() const { return graphs_; }

 private:
  std::vector<HistoryGraph> graphs_;
};

}  // namespace tgf
