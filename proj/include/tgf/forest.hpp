#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tgf/common.hpp"
#include "tgf/dataset.hpp"

namespace tgf {

/// Anything that maps a feature row to an anomaly score in [0, 1].
class Model {
 public:
  virtual ~Model() = default;
  virtual double score(std::span<const double> row) const = 0;
  virtual std::size_t width() const = 0;

  std::vector<double> score_all(const MatrixView& x) const {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = score(x.row(i));
    return out;
  }
};

struct ForestParams {
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_features;  // default floor(sqrt(F))
  bool bootstrap = true;
  std::optional<std::size_t> max_depth;     // default unbounded
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // does not affect the trained model

  std::size_t resolved_max_features(std::size_t n_features) const {
    std::size_t k = max_features.value_or(
        static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features)))));
    return std::clamp<std::size_t>(k, 1, n_features);
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"n_trees", n_trees},
                        {"bootstrap", bootstrap},
                        {"min_samples_split", min_samples_split},
                        {"min_samples_leaf", min_samples_leaf},
                        {"seed", seed}};
    j["max_features"] = max_features ? nlohmann::json(*max_features) : nlohmann::json("sqrt");
    j["max_depth"] = max_depth ? nlohmann::json(*max_depth) : nlohmann::json(nullptr);
    return j;
  }

  static ForestParams from_json(const nlohmann::json& j) {
    ForestParams p;
    p.n_trees = j.at("n_trees").get<std::size_t>();
    p.bootstrap = j.at("bootstrap").get<bool>();
    p.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    p.seed = j.at("seed").get<std::uint64_t>();
    if (j.at("max_features").is_number()) p.max_features = j.at("max_features").get<std::size_t>();
    if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<std::size_t>();
    return p;
  }
};

/// Binary CART tree. Rows with x[feature] <= threshold go left. Leaves hold the
/// fraction of class-1 training samples that reached them.
class DecisionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 for leaves
    double threshold = 0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0;  // class-1 fraction (leaves)
    std::uint32_t samples = 0;
  };

  double predict(std::span<const double> row) const {
    std::uint32_t i = 0;
    while (nodes_[i].feature >= 0) {
      const Node& n = nodes_[i];
      i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[i].value;
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t depth() const { return depth_from(0); }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
  }

  /// Grows a tree on the given sample multiset (indices into x, repeats allowed).
  static DecisionTree grow(const MatrixView& x, std::span<const std::uint8_t> y,
                           std::vector<std::size_t> samples, const ForestParams& params, Rng& rng) {
    DecisionTree tree;
    Grower g{x, y, params, rng, params.resolved_max_features(x.cols), {}};
    g.values.resize(samples.size());
    tree.nodes_.push_back({});
    struct Task {
      std::uint32_t node;
      std::size_t begin, end, depth;
    };
    std::vector<Task> stack{{0, 0, samples.size(), 0}};
    while (!stack.empty()) {
      const Task t = stack.back();
      stack.pop_back();
      auto range = std::span<std::size_t>(samples).subspan(t.begin, t.end - t.begin);
      std::size_t pos = 0;
      for (auto s : range) pos += y[s];
      Node& node = tree.nodes_[t.node];
      node.samples = static_cast<std::uint32_t>(range.size());
      node.value = static_cast<double>(pos) / static_cast<double>(range.size());

      const bool pure = pos == 0 || pos == range.size();
      const bool depth_reached = params.max_depth && t.depth >= *params.max_depth;
      if (pure || range.size() < params.min_samples_split || depth_reached) continue;

      auto split = g.best_split(range, pos);
      if (!split) continue;

      auto mid = std::partition(range.begin(), range.end(), [&](std::size_t s) {
        return x.at(s, split->feature) <= split->threshold;
      });
      const std::size_t n_left = static_cast<std::size_t>(mid - range.begin());
      const auto left = static_cast<std::uint32_t>(tree.nodes_.size());
      tree.nodes_.push_back({});
      tree.nodes_.push_back({});
      Node& parent = tree.nodes_[t.node];
      parent.feature = static_cast<std::int32_t>(split->feature);
      parent.threshold = split->threshold;
      parent.left = left;
      parent.right = left + 1;
      stack.push_back({left + 1, t.begin + n_left, t.end, t.depth + 1});
      stack.push_back({left, t.begin, t.begin + n_left, t.depth + 1});
    }
    return tree;
  }

  nlohmann::json to_json() const { return node_json(0); }

  static DecisionTree from_json(const nlohmann::json& j) {
    DecisionTree t;
    t.nodes_.push_back({});
    t.load(j, 0);
    return t;
  }

 private:
  struct Split {
    std::size_t feature;
    double threshold;
    // Split quality (lp^2 + ln^2)/nl + (rp^2 + rn^2)/nr kept as an exact fraction.
    unsigned __int128 num;
    unsigned __int128 den;
  };

  struct Grower {
    const MatrixView& x;
    std::span<const std::uint8_t> y;
    const ForestParams& params;
    Rng& rng;
    std::size_t max_features;
    std::vector<std::pair<double, std::uint8_t>> values;

    static bool better(const Split& a, const std::optional<Split>& b) {
      if (!b) return true;
      const auto lhs = a.num * b->den;
      const auto rhs = b->num * a.den;
      if (lhs != rhs) return lhs > rhs;
      if (a.feature != b->feature) return a.feature < b->feature;
      return a.threshold < b->threshold;
    }

    // Features are visited in a random order until max_features non-constant ones
    // have been examined. Among the examined candidates the best quality wins,
    // ties going to the lowest feature index, then the smallest threshold.
    std::optional<Split> best_split(std::span<const std::size_t> range, std::size_t pos) {
      std::vector<std::size_t> order(x.cols);
      for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
      std::optional<Split> best;
      std::size_t examined = 0;
      const std::size_t n = range.size();
      const std::size_t min_leaf = std::max<std::size_t>(1, params.min_samples_leaf);
      for (std::size_t k = 0; k < order.size() && examined < max_features; ++k) {
        std::swap(order[k], order[k + rng.below(order.size() - k)]);
        const std::size_t f = order[k];
        auto vals = std::span(values).first(n);
        for (std::size_t i = 0; i < n; ++i) vals[i] = {x.at(range[i], f), y[range[i]]};
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (vals.front().first == vals.back().first) continue;
        ++examined;
        std::uint64_t lp = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          lp += vals[i].second;
          if (vals[i].first == vals[i + 1].first) continue;
          const std::uint64_t nl = i + 1;
          const std::uint64_t nr = n - nl;
          if (nl < min_leaf || nr < min_leaf) continue;
          const std::uint64_t ln = nl - lp;
          const std::uint64_t rp = pos - lp;
          const std::uint64_t rn = nr - rp;
          using u128 = unsigned __int128;
          Split s;
          s.feature = f;
          s.threshold = midpoint(vals[i].first, vals[i + 1].first);
          s.num = (u128(lp) * lp + u128(ln) * ln) * nr + (u128(rp) * rp + u128(rn) * rn) * nl;
          s.den = u128(nl) * nr;
          if (better(s, best)) best = s;
        }
      }
      return best;
    }

    static double midpoint(double a, double b) {
      double m = a + (b - a) / 2;
      if (m >= b || m < a) m = a;
      return m;
    }
  };

  nlohmann::json node_json(std::uint32_t i) const {
    const Node& n = nodes_[i];
    if (n.feature < 0) return {{"leaf", n.value}, {"samples", n.samples}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"samples", n.samples},
            {"value", n.value},
            {"left", node_json(n.left)},
            {"right", node_json(n.right)}};
  }

  void load(const nlohmann::json& j, std::uint32_t i) {
    if (j.contains("leaf")) {
      nodes_[i].feature = -1;
      nodes_[i].value = j.at("leaf").get<double>();
      nodes_[i].samples = j.value("samples", 0u);
      return;
    }
    const auto left = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    nodes_.push_back({});
    Node& n = nodes_[i];
    n.feature = j.at("feature").get<std::int32_t>();
    n.threshold = j.at("threshold").get<double>();
    n.samples = j.value("samples", 0u);
    n.value = j.value("value", 0.0);
    n.left = left;
    n.right = left + 1;
    load(j.at("left"), left);
    load(j.at("right"), left + 1);
  }

  std::size_t depth_from(std::uint32_t i) const {
    const Node& n = nodes_[i];
    if (n.feature < 0) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }

  std::vector<Node> nodes_;
};

/// Random forest of CART trees with Gini splits; the score is the mean leaf
/// class-1 fraction over trees.
class RandomForest final : public Model {
 public:
  static constexpr int kFormatVersion = 1;

  static RandomForest train(const MatrixView& x, std::span<const std::uint8_t> y,
                            const ForestParams& params, std::vector<std::string> feature_names = {}) {
    if (x.rows == 0 || x.cols == 0) throw DataError("cannot train on an empty matrix");
    if (y.size() != x.rows) throw ContractViolation("label count does not match row count");
    if (params.n_trees == 0) throw UsageError("n_trees must be >= 1");
    if (params.max_features && (*params.max_features == 0 || *params.max_features > x.cols)) {
      throw UsageError("max_features must lie in [1, F]");
    }
    std::size_t pos = 0;
    for (auto l : y) pos += l != 0;
    if (pos == 0 || pos == y.size()) throw DataError("training labels contain a single class");

    RandomForest f;
    f.params_ = params;
    f.width_ = x.cols;
    f.feature_names_ = std::move(feature_names);
    f.trees_.resize(params.n_trees);
    parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
      Rng rng(derive_seed(params.seed, "forest.tree", t));
      std::vector<std::size_t> samples(x.rows);
      if (params.bootstrap) {
        for (auto& s : samples) s = rng.below(x.rows);
      } else {
        for (std::size_t i = 0; i < x.rows; ++i) samples[i] = i;
      }
      f.trees_[t] = DecisionTree::grow(x, y, std::move(samples), params, rng);
    });
    return f;
  }

  double score(std::span<const double> row) const override {
    if (row.size() != width_) {
      throw ContractViolation("row width " + std::to_string(row.size()) + " != model width " +
                              std::to_string(width_));
    }
    double sum = 0;
    for (const auto& t : trees_) sum += t.predict(row);
    return sum / static_cast<double>(trees_.size());
  }

  std::size_t width() const override { return width_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  nlohmann::json to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return {{"format", "tgf-random-forest"},
            {"version", kFormatVersion},
            {"width", width_},
            {"feature_names", feature_names_},
            {"params", params_.to_json()},
            {"trees", std::move(trees)}};
  }

  static RandomForest from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "tgf-random-forest") throw DataError("not a forest model document");
    if (j.value("version", 0) != kFormatVersion) throw DataError("unsupported model version");
    RandomForest f;
    f.width_ = j.at("width").get<std::size_t>();
    f.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
    f.params_ = ForestParams::from_json(j.at("params"));
    for (const auto& t : j.at("trees")) f.trees_.push_back(DecisionTree::from_json(t));
    if (f.trees_.empty()) throw DataError("model has no trees");
    return f;
  }

 private:
  ForestParams params_;
  std::size_t width_ = 0;
  std::vector<std::string> feature_names_;
  std::vector<DecisionTree> trees_;
};

}  // namespace tgf
