#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tgf/common.hpp"
#include "tgf/dataset.hpp"
#include "tgf/features.hpp"
#include "tgf/forest.hpp"
#include "tgf/history.hpp"
#include "tgf/streamio.hpp"

namespace tgf {

/// ROC-AUC in its Mann-Whitney form with mid-ranks for tied scores:
/// (R_pos - P(P+1)/2) / (P N), i.e. the probability that a random positive
/// outscores a random negative, ties counting one half.
inline double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ContractViolation("roc_auc: size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0;  // sum of positive ranks, doubled to stay integral
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share the mid-rank (i + 1 + j) / 2.
    const double twice_mid = static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        rank_sum += twice_mid;
        ++pos;
      }
    }
    i = j;
  }
  const std::uint64_t neg = n - pos;
  if (pos == 0 || neg == 0) throw DataError("roc_auc needs both classes");
  const double p = static_cast<double>(pos);
  return (rank_sum / 2 - p * (p + 1) / 2) / (p * static_cast<double>(neg));
}

/// Number of training rows for ratio r: floor(r * rows).
inline std::size_t split_point(std::size_t rows, double ratio) {
  if (!(ratio > 0 && ratio < 1)) throw UsageError("split ratio must lie strictly between 0 and 1");
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(rows)));
}

struct ChronologicalSplit {
  Dataset train;
  Dataset test;
};

/// First floor(r * rows) rows train, the rest test, in stream order.
inline ChronologicalSplit chronological_split(const Dataset& d, double ratio) {
  const std::size_t k = split_point(d.rows(), ratio);
  return {d.slice(0, k), d.slice(k, d.rows())};
}

struct UndersampleResult {
  std::vector<std::size_t> rows;  // indices into the input, in shuffled order
  std::size_t anomalies = 0;
  std::size_t normals = 0;
  bool short_of_normals = false;  // fewer normals than anomalies: all normals kept
};

/// Keeps every anomalous row and an equally large uniform sample (without
/// replacement) of normal rows, then shuffles the selection.
inline UndersampleResult undersample(std::span<const std::uint8_t> labels, std::uint64_t seed) {
  UndersampleResult res;
  std::vector<std::size_t> normal;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      res.rows.push_back(i);
    } else {
      normal.push_back(i);
    }
  }
  res.anomalies = res.rows.size();
  if (res.anomalies == 0) throw DataError("undersampling needs at least one anomalous training row");
  Rng rng(seed);
  std::size_t take = res.anomalies;
  if (normal.size() < take) {
    res.short_of_normals = true;
    take = normal.size();
  }
  // Partial Fisher-Yates: the first `take` slots become a uniform sample.
  for (std::size_t i = 0; i < take; ++i) {
    std::swap(normal[i], normal[i + rng.below(normal.size() - i)]);
  }
  res.rows.insert(res.rows.end(), normal.begin(), normal.begin() + static_cast<std::ptrdiff_t>(take));
  res.normals = take;
  shuffle(res.rows, rng);
  return res;
}

/// Pluggable learner: trains on a matrix and labels with a seed.
using Trainer =
    std::function<std::unique_ptr<Model>(const Dataset& train, std::uint64_t seed)>;

inline Trainer forest_trainer(ForestParams params) {
  return [params](const Dataset& train, std::uint64_t seed) -> std::unique_ptr<Model> {
    ForestParams p = params;
    p.seed = seed;
    return std::make_unique<RandomForest>(RandomForest::train(train.view(), train.labels, p, train.columns));
  };
}

struct EvalOptions {
  double ratio = 0.7;
  std::uint64_t seed = 0;
};

struct EvalReport {
  double auc = 0;
  std::size_t rows = 0;
  std::size_t features = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t train_anomalies = 0;
  std::size_t test_anomalies = 0;
  std::size_t balanced_anomalies = 0;
  std::size_t balanced_normals = 0;
  bool short_of_normals = false;
  double ratio = 0;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  double undersample_seconds = 0;
  double train_seconds = 0;
  double score_seconds = 0;

  nlohmann::json to_json(bool with_timings = true) const {
    nlohmann::json j = {
        {"auc", auc},
        {"counts",
         {{"rows", rows},
          {"features", features},
          {"train_rows", train_rows},
          {"test_rows", test_rows},
          {"train_anomalies", train_anomalies},
          {"test_anomalies", test_anomalies},
          {"balanced_anomalies", balanced_anomalies},
          {"balanced_normals", balanced_normals},
          {"short_of_normals", short_of_normals}}},
        {"ratio", ratio},
        {"seed", seed},
        {"config", config}};
    if (with_timings) {
      j["timings"] = {{"undersample_seconds", undersample_seconds},
                      {"train_seconds", train_seconds},
                      {"score_seconds", score_seconds}};
    }
    return j;
  }
};

struct EvalOutcome {
  EvalReport report;
  std::unique_ptr<Model> model;
  Dataset test;                    // chronological test part
  std::vector<double> test_scores; // one per test row
};

/// Chronological split, undersampling of the training part, training, and
/// ROC-AUC on the untouched test part.
inline EvalOutcome evaluate(const Dataset& d, const EvalOptions& opts, const Trainer& trainer) {
  using clock = std::chrono::steady_clock;
  if (!d.labeled()) throw DataError("evaluation needs a labeled feature table");
  EvalOutcome out;
  EvalReport& r = out.report;
  r.rows = d.rows();
  r.features = d.cols();
  r.ratio = opts.ratio;
  r.seed = opts.seed;

  auto split = chronological_split(d, opts.ratio);
  r.train_rows = split.train.rows();
  r.test_rows = split.test.rows();
  r.train_anomalies = static_cast<std::size_t>(std::count(split.train.labels.begin(), split.train.labels.end(), 1));
  r.test_anomalies = static_cast<std::size_t>(std::count(split.test.labels.begin(), split.test.labels.end(), 1));

  auto t0 = clock::now();
  auto balanced = undersample(split.train.labels, derive_seed(opts.seed, "undersample"));
  r.balanced_anomalies = balanced.anomalies;
  r.balanced_normals = balanced.normals;
  r.short_of_normals = balanced.short_of_normals;
  const Dataset train = split.train.select(balanced.rows);
  auto t1 = clock::now();
  out.model = trainer(train, derive_seed(opts.seed, "learner"));
  auto t2 = clock::now();
  out.test_scores = out.model->score_all(split.test.view());
  r.auc = roc_auc(out.test_scores, split.test.labels);
  auto t3 = clock::now();
  r.undersample_seconds = std::chrono::duration<double>(t1 - t0).count();
  r.train_seconds = std::chrono::duration<double>(t2 - t1).count();
  r.score_seconds = std::chrono::duration<double>(t3 - t2).count();
  out.test = std::move(split.test);
  return out;
}

struct WindowOptions {
  double window_fraction = 0.5;
  double step_fraction = 0.01;
  double ratio = 0.7;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct WindowResult {
  std::size_t index = 0;
  std::size_t begin = 0;  // first link (0-based)
  std::size_t end = 0;    // one past the last link
  EvalReport report;
};

/// Number of windows: floor((1 - w) / step). For w = 0.5 and step = 0.01 this is 50.
inline std::size_t window_count(double window_fraction, double step_fraction) {
  if (!(window_fraction > 0 && window_fraction <= 1)) throw UsageError("window fraction must lie in (0, 1]");
  if (!(step_fraction > 0)) throw UsageError("window step must be positive");
  return static_cast<std::size_t>(std::floor((1 - window_fraction) / step_fraction + 1e-9));
}

/// Sliding-window evaluation: window i covers links [floor(i * step * ell),
/// + ceil(w * ell)). Features are recomputed from empty histories inside each
/// window, then the usual split / undersample / train / test protocol runs.
inline std::vector<WindowResult> sliding_window_eval(const LinkStream& s,
                                                     std::span<const HistoryConfig> configs,
                                                     const WindowOptions& opts, const Trainer& trainer) {
  if (!s.labeled()) throw DataError("sliding-window evaluation needs a labeled stream");
  const std::size_t ell = s.size();
  const std::size_t count = window_count(opts.window_fraction, opts.step_fraction);
  if (count == 0) throw UsageError("window and step leave no room for any window");
  const auto length = static_cast<std::size_t>(std::ceil(opts.window_fraction * static_cast<double>(ell)));
  std::vector<WindowResult> out(count);
  parallel_for(count, opts.threads, [&](std::size_t i) {
    WindowResult& w = out[i];
    w.index = i;
    w.begin = static_cast<std::size_t>(std::floor(static_cast<double>(i) * opts.step_fraction * static_cast<double>(ell)));
    w.end = std::min(ell, w.begin + length);
    const Dataset d = extract_features(s, configs, w.begin, w.end);
    EvalOptions eo{opts.ratio, derive_seed(opts.seed, "window", i)};
    try {
      w.report = evaluate(d, eo, trainer).report;
    } catch (const DataError& e) {
      throw DataError("window " + std::to_string(i) + ": " + e.what());
    }
  });
  return out;
}

struct FeatureImportance {
  std::string name;
  std::size_t column = 0;
  std::vector<double> decreases;  // one per repeat
  double mean = 0;
};

struct ImportanceResult {
  double baseline = 0;
  std::vector<FeatureImportance> ranked;  // by mean decrease, largest first
};

/// Permutation importance: for each column, shuffle that column of the test
/// data `repeats` times and record baseline AUC minus the shuffled AUC.
inline ImportanceResult permutation_importance(const Model& model, const Dataset& test, std::size_t repeats,
                                               std::uint64_t seed, unsigned threads = 1) {
  if (!test.labeled()) throw DataError("permutation importance needs labeled test rows");
  if (repeats == 0) throw UsageError("repeats must be >= 1");
  ImportanceResult res;
  const auto base_scores = model.score_all(test.view());
  res.baseline = roc_auc(base_scores, test.labels);
  std::vector<FeatureImportance> all(test.cols());
  parallel_for(test.cols(), threads, [&](std::size_t j) {
    FeatureImportance& fi = all[j];
    fi.name = test.columns[j];
    fi.column = j;
    std::vector<double> row_buf(test.cols());
    std::vector<double> column(test.rows());
    std::vector<double> scores(test.rows());
    for (std::size_t r = 0; r < repeats; ++r) {
      for (std::size_t i = 0; i < test.rows(); ++i) column[i] = test.view().at(i, j);
      Rng rng(derive_seed(derive_seed(seed, "permute", j), "repeat", r));
      shuffle(column, rng);
      for (std::size_t i = 0; i < test.rows(); ++i) {
        auto src = test.row(i);
        std::copy(src.begin(), src.end(), row_buf.begin());
        row_buf[j] = column[i];
        scores[i] = model.score(row_buf);
      }
      fi.decreases.push_back(res.baseline - roc_auc(scores, test.labels));
    }
    fi.mean = std::accumulate(fi.decreases.begin(), fi.decreases.end(), 0.0) / static_cast<double>(repeats);
  });
  res.ranked = std::move(all);
  std::stable_sort(res.ranked.begin(), res.ranked.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) { return a.mean > b.mean; });
  return res;
}

/// Exact value histogram of one feature column, restricted to one class.
inline std::map<double, std::uint64_t> feature_distribution(const Dataset& d, std::string_view feature,
                                                            Label cls) {
  if (!d.labeled()) throw DataError("feature distribution needs a labeled feature table");
  const std::size_t j = d.column_index(feature);
  std::map<double, std::uint64_t> hist;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    if (d.labels[i] == static_cast<std::uint8_t>(cls)) ++hist[d.view().at(i, j)];
  }
  return hist;
}

}  // namespace tgf
