#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include <boost/rational.hpp>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tgf/eval.hpp"
#include "tgf/forest.hpp"

namespace tgf {
namespace {

struct Data {
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  std::size_t rows = 0, cols = 0;
  MatrixView view() const { return {x, rows, cols}; }
  std::span<const double> row(std::size_t i) const { return std::span(x).subspan(i * cols, cols); }
};

// Small integer-valued features where the label depends on two of them plus noise.
Data random_data(std::size_t rows, std::size_t cols, std::uint64_t seed, std::uint64_t range = 6) {
  Rng rng(seed);
  Data d;
  d.rows = rows;
  d.cols = cols;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) d.x.push_back(static_cast<double>(rng.below(range)));
    const double a = d.x[i * cols], b = d.x[i * cols + (cols > 1 ? 1 : 0)];
    d.y.push_back((a + b > static_cast<double>(range) - 1) != (rng.below(8) == 0));
  }
  if (std::count(d.y.begin(), d.y.end(), 1) == 0) d.y[0] = 1;
  if (std::count(d.y.begin(), d.y.end(), 0) == 0) d.y[0] = 0;
  return d;
}

// Exhaustive CART: at each node try every feature and every midpoint between
// consecutive distinct values, minimizing the weighted Gini impurity computed
// with exact rationals. Ties: lowest feature, then smallest threshold.
struct OracleTree {
  using Q = boost::rational<std::int64_t>;
  struct Node {
    int feature = -1;
    double threshold = 0;
    std::unique_ptr<Node> left, right;
    double value = 0;
  };
  const Data& d;

  std::unique_ptr<Node> build(const std::vector<std::size_t>& rows) const {
    auto node = std::make_unique<Node>();
    std::int64_t pos = 0;
    for (auto r : rows) pos += d.y[r];
    const auto n = static_cast<std::int64_t>(rows.size());
    node->value = static_cast<double>(pos) / static_cast<double>(n);
    if (pos == 0 || pos == n || n < 2) return node;

    std::optional<Q> best;
    int best_f = -1;
    double best_t = 0;
    for (std::size_t f = 0; f < d.cols; ++f) {
      std::vector<double> vals;
      for (auto r : rows) vals.push_back(d.x[r * d.cols + f]);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
        const double t = (vals[k] + vals[k + 1]) / 2;
        std::int64_t nl = 0, lp = 0;
        for (auto r : rows) {
          if (d.x[r * d.cols + f] <= t) {
            ++nl;
            lp += d.y[r];
          }
        }
        const std::int64_t nr = n - nl, rp = pos - lp, ln = nl - lp, rn = nr - rp;
        const Q gini_l = Q(1) - Q(lp * lp + ln * ln, nl * nl);
        const Q gini_r = Q(1) - Q(rp * rp + rn * rn, nr * nr);
        const Q impurity = Q(nl) * gini_l + Q(nr) * gini_r;
        if (!best || impurity < *best) {
          best = impurity;
          best_f = static_cast<int>(f);
          best_t = t;
        }
      }
    }
    if (!best) return node;
    node->feature = best_f;
    node->threshold = best_t;
    std::vector<std::size_t> l, r;
    for (auto row : rows) (d.x[row * d.cols + best_f] <= best_t ? l : r).push_back(row);
    node->left = build(l);
    node->right = build(r);
    return node;
  }

  static double predict(const Node& n, std::span<const double> row) {
    if (n.feature < 0) return n.value;
    return predict(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? *n.left : *n.right, row);
  }
};

ForestParams single_exhaustive_tree(std::size_t cols) {
  ForestParams p;
  p.n_trees = 1;
  p.max_features = cols;
  p.bootstrap = false;
  return p;
}

TEST(Forest, SeparableOneDimensional) {
  Data d;
  d.cols = 1;
  for (int i = 0; i < 20; ++i) {
    d.x.push_back(i + 1);
    d.y.push_back(i + 1 > 10);
  }
  d.rows = 20;
  ForestParams p;
  p.seed = 4;
  const auto f = RandomForest::train(d.view(), d.y, p);
  for (const auto& t : f.trees()) {
    const auto& root = t.nodes().front();
    if (root.feature >= 0) {
      EXPECT_GT(root.threshold, 5.0);
      EXPECT_LT(root.threshold, 16.0);
    }
  }
  EXPECT_DOUBLE_EQ(roc_auc(f.score_all(d.view()), d.y), 1.0);
  const auto single = RandomForest::train(d.view(), d.y, single_exhaustive_tree(1));
  EXPECT_EQ(single.trees().front().nodes().front().threshold, 10.5);
}

TEST(Forest, SingleClassIsError) {
  Data d = random_data(30, 3, 1);
  std::fill(d.y.begin(), d.y.end(), 1);
  EXPECT_THROW(RandomForest::train(d.view(), d.y, {}), DataError);
  std::fill(d.y.begin(), d.y.end(), 0);
  EXPECT_THROW(RandomForest::train(d.view(), d.y, {}), DataError);
  EXPECT_THROW(RandomForest::train(MatrixView{{}, 0, 3}, {}, {}), DataError);
}

TEST(Forest, ParameterValidation) {
  const Data d = random_data(30, 3, 2);
  ForestParams p;
  p.n_trees = 0;
  EXPECT_THROW(RandomForest::train(d.view(), d.y, p), UsageError);
  p.n_trees = 3;
  p.max_features = 4;
  EXPECT_THROW(RandomForest::train(d.view(), d.y, p), UsageError);
  p.max_features = 0;
  EXPECT_THROW(RandomForest::train(d.view(), d.y, p), UsageError);
  EXPECT_EQ(ForestParams{}.resolved_max_features(30), 5u);
  EXPECT_EQ(ForestParams{}.resolved_max_features(1), 1u);
}

TEST(Forest, SingleTreeMatchesExhaustiveCart) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t rows = 8 + seed % 57, cols = 1 + seed % 4;
    const Data d = random_data(rows, cols, 1000 + seed, 3 + seed % 5);
    const auto f = RandomForest::train(d.view(), d.y, single_exhaustive_tree(cols));
    std::vector<std::size_t> all(rows);
    for (std::size_t i = 0; i < rows; ++i) all[i] = i;
    OracleTree oracle{d};
    const auto root = oracle.build(all);
    for (std::size_t i = 0; i < rows; ++i) {
      ASSERT_EQ(f.score(d.row(i)), OracleTree::predict(*root, d.row(i))) << "seed " << seed << " row " << i;
    }
    // Off-sample probes exercise the thresholds, not just the leaves.
    Rng rng(seed);
    std::vector<double> probe(cols);
    for (int k = 0; k < 50; ++k) {
      for (auto& v : probe) v = static_cast<double>(rng.below(16)) / 2.0 - 1.0;
      ASSERT_EQ(f.score(probe), OracleTree::predict(*root, probe));
    }
  }
}

TEST(Forest, ScoreIsMeanOfTrees) {
  const Data d = random_data(300, 6, 3);
  ForestParams p;
  p.n_trees = 25;
  p.seed = 8;
  const auto f = RandomForest::train(d.view(), d.y, p);
  for (std::size_t i = 0; i < 100; ++i) {
    double sum = 0;
    for (const auto& t : f.trees()) sum += t.predict(d.row(i));
    EXPECT_DOUBLE_EQ(f.score(d.row(i)), sum / 25.0);
    EXPECT_GE(f.score(d.row(i)), 0.0);
    EXPECT_LE(f.score(d.row(i)), 1.0);
  }
}

TEST(Forest, TrainingRowLeafFraction) {
  const Data d = random_data(50, 2, 5);
  const auto f = RandomForest::train(d.view(), d.y, single_exhaustive_tree(2));
  for (std::size_t i = 0; i < d.rows; ++i) {
    std::size_t same = 0, pos = 0;
    for (std::size_t j = 0; j < d.rows; ++j) {
      if (d.x[j * 2] == d.x[i * 2] && d.x[j * 2 + 1] == d.x[i * 2 + 1]) {
        ++same;
        pos += d.y[j];
      }
    }
    // Unbounded depth isolates every distinct row, so its leaf holds exactly its duplicates.
    EXPECT_DOUBLE_EQ(f.score(d.row(i)), static_cast<double>(pos) / static_cast<double>(same));
  }
}

// A strictly increasing transform of the features leaves every tree's
// partition of its own training sample unchanged: same features, same sample
// counts, same leaf fractions (only threshold values move).
TEST(Forest, MonotoneTransformKeepsPartitions) {
  const Data d = random_data(400, 5, 6, 12);
  Data t = d;
  for (auto& v : t.x) v = std::exp(v / 3.0) + v * v * v;
  ForestParams p;
  p.n_trees = 20;
  p.seed = 77;
  const auto a = RandomForest::train(d.view(), d.y, p);
  const auto b = RandomForest::train(t.view(), t.y, p);
  for (std::size_t k = 0; k < a.trees().size(); ++k) {
    const auto& na = a.trees()[k].nodes();
    const auto& nb = b.trees()[k].nodes();
    ASSERT_EQ(na.size(), nb.size());
    for (std::size_t i = 0; i < na.size(); ++i) {
      ASSERT_EQ(na[i].feature, nb[i].feature);
      ASSERT_EQ(na[i].samples, nb[i].samples);
      ASSERT_EQ(na[i].value, nb[i].value);
      ASSERT_EQ(na[i].left, nb[i].left);
    }
  }
  // Without bootstrap every training row is in-sample, so scores match exactly.
  p.bootstrap = false;
  p.max_features = 2;
  const auto c = RandomForest::train(d.view(), d.y, p);
  const auto e = RandomForest::train(t.view(), t.y, p);
  for (std::size_t i = 0; i < d.rows; ++i) ASSERT_EQ(c.score(d.row(i)), e.score(t.row(i)));
}

TEST(Forest, DeterministicSerialization) {
  const Data d = random_data(200, 4, 7);
  ForestParams p;
  p.n_trees = 10;
  p.seed = 5;
  const auto a = RandomForest::train(d.view(), d.y, p).to_json().dump();
  const auto b = RandomForest::train(d.view(), d.y, p).to_json().dump();
  EXPECT_EQ(a, b);
  p.seed = 6;
  EXPECT_NE(a, RandomForest::train(d.view(), d.y, p).to_json().dump());
  p.seed = 5;
  p.threads = 4;
  EXPECT_EQ(a, RandomForest::train(d.view(), d.y, p).to_json().dump());
}

TEST(Forest, JsonRoundTripReproducesScores) {
  const Data d = random_data(300, 5, 8);
  ForestParams p;
  p.n_trees = 15;
  p.seed = 9;
  p.max_depth = 6;
  const auto f = RandomForest::train(d.view(), d.y, p, {"a", "b", "c", "d", "e"});
  const auto j = nlohmann::json::parse(f.to_json().dump());
  const auto g = RandomForest::from_json(j);
  EXPECT_EQ(g.feature_names(), f.feature_names());
  EXPECT_EQ(g.params().to_json(), f.params().to_json());
  EXPECT_EQ(g.to_json().dump(), f.to_json().dump());
  for (std::size_t i = 0; i < d.rows; ++i) ASSERT_EQ(f.score(d.row(i)), g.score(d.row(i)));
  auto bad = j;
  bad["version"] = 99;
  EXPECT_THROW(RandomForest::from_json(bad), DataError);
  bad = j;
  bad["format"] = "other";
  EXPECT_THROW(RandomForest::from_json(bad), DataError);
}

TEST(Forest, MaxDepthIsRespected) {
  const Data d = random_data(500, 4, 10);
  ForestParams p;
  p.n_trees = 5;
  p.max_depth = 3;
  const auto f = RandomForest::train(d.view(), d.y, p);
  for (const auto& t : f.trees()) EXPECT_LE(t.depth(), 3u);
}

TEST(Forest, MinSamplesLeafIsRespected) {
  const Data d = random_data(300, 3, 12);
  ForestParams p = single_exhaustive_tree(3);
  p.min_samples_leaf = 7;
  const auto f = RandomForest::train(d.view(), d.y, p);
  for (const auto& n : f.trees().front().nodes()) {
    if (n.feature < 0) {
      EXPECT_GE(n.samples, 7u);
    }
  }
}

TEST(Forest, ThresholdsLieBetweenObservedValues) {
  const Data d = random_data(300, 4, 13, 20);
  ForestParams p;
  p.n_trees = 10;
  const auto f = RandomForest::train(d.view(), d.y, p);
  for (const auto& t : f.trees()) {
    for (const auto& n : t.nodes()) {
      if (n.feature < 0) {
        EXPECT_GE(n.value, 0.0);
        EXPECT_LE(n.value, 1.0);
        continue;
      }
      bool below = false, above = false;
      for (std::size_t i = 0; i < d.rows; ++i) {
        const double v = d.x[i * d.cols + static_cast<std::size_t>(n.feature)];
        below |= v < n.threshold;
        above |= v > n.threshold;
      }
      EXPECT_TRUE(below && above);
    }
  }
}

TEST(Forest, ConstantExtraColumnChangesNothing) {
  const Data d = random_data(250, 4, 14);
  Data e;
  e.rows = d.rows;
  e.cols = d.cols + 1;
  e.y = d.y;
  for (std::size_t i = 0; i < d.rows; ++i) {
    for (std::size_t j = 0; j < d.cols; ++j) e.x.push_back(d.x[i * d.cols + j]);
    e.x.push_back(3.0);
  }
  ForestParams p;
  p.n_trees = 10;
  p.seed = 2;
  p.max_features = 4;
  const auto a = RandomForest::train(d.view(), d.y, p);
  p.max_features = 5;
  const auto b = RandomForest::train(e.view(), e.y, p);
  EXPECT_EQ(a.to_json()["trees"], b.to_json()["trees"]);
}

TEST(Forest, WidthMismatchIsContractViolation) {
  const Data d = random_data(40, 3, 15);
  const auto f = RandomForest::train(d.view(), d.y, single_exhaustive_tree(3));
  const std::vector<double> short_row{1.0, 2.0};
  EXPECT_THROW(f.score(short_row), ContractViolation);
}

}  // namespace
}  // namespace tgf
