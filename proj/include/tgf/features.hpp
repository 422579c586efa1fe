#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "tgf/common.hpp"
#include "tgf/dataset.hpp"
#include "tgf/history.hpp"
#include "tgf/streamio.hpp"

namespace tgf {

/// Runs every configured history graph over links [begin, end) of the stream,
/// starting from empty histories, and returns one feature row per link.
/// Graphs are independent, so they may run on separate threads; the result is
/// identical to a sequential pass.
inline Dataset extract_features(const LinkStream& s, std::span<const HistoryConfig> configs,
                                std::size_t begin = 0,
                                std::size_t end = std::numeric_limits<std::size_t>::max(),
                                unsigned threads = 1) {
  end = std::min(end, s.links.size());
  if (begin > end) throw ContractViolation("extract_features: begin > end");
  HistoryPipeline pipeline(configs);  // validates ids
  Dataset d;
  d.columns = pipeline.column_names();
  const std::size_t rows = end - begin;
  const std::size_t width = d.columns.size();
  d.values.assign(rows * width, 0.0);
  d.index.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) d.index[i] = begin + i;
  if (s.labeled()) {
    d.labels.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) d.labels[i] = static_cast<std::uint8_t>(s.labels[begin + i]);
  }
  parallel_for(configs.size(), threads, [&](std::size_t g) {
    HistoryGraph graph(configs[g]);
    for (std::size_t i = 0; i < rows; ++i) {
      const FeatureRow row = graph.observe(s.links[begin + i]);
      double* out = d.values.data() + i * width + g * kFeatureCount;
      for (std::size_t k = 0; k < kFeatureCount; ++k) out[k] = static_cast<double>(row.values[k]);
    }
  });
  return d;
}

/// Streams the feature CSV of a whole stream without holding the full matrix:
/// links are processed in batches, each graph filling its column block.
inline void write_features_csv(std::ostream& os, const LinkStream& s,
                               std::span<const HistoryConfig> configs, unsigned threads = 1,
                               std::size_t batch = 1 << 15) {
  HistoryPipeline names(configs);
  const auto columns = names.column_names();
  write_csv_header(os, columns, s.labeled());
  std::vector<HistoryGraph> graphs(configs.begin(), configs.end());
  const std::size_t width = columns.size();
  std::vector<double> buffer;
  for (std::size_t start = 0; start < s.links.size(); start += batch) {
    const std::size_t stop = std::min(s.links.size(), start + batch);
    buffer.assign((stop - start) * width, 0.0);
    parallel_for(graphs.size(), threads, [&](std::size_t g) {
      for (std::size_t i = start; i < stop; ++i) {
        const FeatureRow row = graphs[g].observe(s.links[i]);
        double* out = buffer.data() + (i - start) * width + g * kFeatureCount;
        for (std::size_t k = 0; k < kFeatureCount; ++k) out[k] = static_cast<double>(row.values[k]);
      }
    });
    for (std::size_t i = start; i < stop; ++i) {
      std::uint8_t label = s.labeled() ? static_cast<std::uint8_t>(s.labels[i]) : 0;
      write_csv_row(os, i, std::span<const double>(buffer).subspan((i - start) * width, width),
                    s.labeled() ? &label : nullptr);
    }
  }
}

}  // namespace tgf
