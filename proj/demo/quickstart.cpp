// Synthetic stream -> injected anomalies -> history-graph features -> forest.

#include <cstdio>
#include <vector>

#include "tgf/tgf.hpp"

int main() {
  using namespace tgf;

  SynthParams sp;
  sp.links = 20'000;
  sp.seed = 1;
  const LinkStream raw = generate_stream(sp);

  const auto injected = inject(raw, {0.05, 1});
  std::printf("stream: %zu links, %zu injected anomalies\n", injected.stream.size(), injected.report.injected);

  const std::vector<HistoryConfig> histories{HistoryConfig::by_size(100), HistoryConfig::by_size(1000),
                                             HistoryConfig::by_duration(Timestamp::integer(50))};
  const Dataset features = extract_features(injected.stream, histories);
  std::printf("features: %zu rows x %zu columns\n", features.rows(), features.cols());

  ForestParams fp;
  fp.n_trees = 50;
  const auto outcome = evaluate(features, {0.7, 1}, forest_trainer(fp));
  const auto& r = outcome.report;
  std::printf("train %zu rows (%zu anomalies), test %zu rows (%zu anomalies)\n", r.train_rows, r.train_anomalies,
              r.test_rows, r.test_anomalies);
  std::printf("AUC %.4f\n", r.auc);

  const auto imp = permutation_importance(*outcome.model, outcome.test, 3, 1);
  std::printf("most important features:\n");
  for (std::size_t k = 0; k < 5 && k < imp.ranked.size(); ++k) {
    std::printf("  %-22s %.4f\n", imp.ranked[k].name.c_str(), imp.ranked[k].mean);
  }
}
