#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "tgf/common.hpp"
#include "tgf/link.hpp"

namespace tgf {

enum class Label : std::uint8_t { Normal = 0, Anomalous = 1 };

struct LabeledLink {
  TimestampedLink link;
  Label label = Label::Normal;
};

/// Bidirectional mapping between original node names and dense NodeIds.
class NodeTable {
 public:
  NodeId intern(std::string_view name) {
    auto [it, inserted] = ids_.try_emplace(std::string(name), NodeId{static_cast<std::uint32_t>(names_.size())});
    if (inserted) names_.push_back(it->first);
    return it->second;
  }

  std::optional<NodeId> find(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(NodeId id) const { return names_.at(id.value); }
  std::size_t size() const { return names_.size(); }

 private:
  std::unordered_map<std::string, NodeId> ids_;
  std::vector<std::string> names_;
};

/// A link stream in stream order, optionally labeled.
struct LinkStream {
  NodeTable nodes;
  std::vector<TimestampedLink> links;
  std::vector<Label> labels;  // empty, or one per link

  bool labeled() const { return !labels.empty(); }
  std::size_t size() const { return links.size(); }

  void push_back(Timestamp t, std::string_view u, std::string_view v) {
    links.push_back({t, nodes.intern(u), nodes.intern(v)});
  }
  void push_back(Timestamp t, std::string_view u, std::string_view v, Label label) {
    push_back(t, u, v);
    labels.push_back(label);
  }
};

struct StreamSummary {
  std::uint64_t ell = 0;
  std::uint64_t n_nodes = 0;
  std::uint64_t m_distinct = 0;
  Timestamp t_min;
  Timestamp t_max;
  std::uint64_t n_timestamps = 0;
};

inline StreamSummary summarize(const LinkStream& s) {
  StreamSummary sum;
  sum.ell = s.links.size();
  if (s.links.empty()) return sum;
  std::unordered_set<std::uint32_t> nodes;
  std::unordered_set<std::uint64_t> pairs;
  sum.t_min = s.links.front().t;
  sum.t_max = s.links.back().t;
  for (std::size_t i = 0; i < s.links.size(); ++i) {
    const auto& l = s.links[i];
    nodes.insert(l.u.value);
    nodes.insert(l.v.value);
    pairs.insert(pair_key(l.u, l.v));
    if (i == 0 || !(l.t == s.links[i - 1].t)) ++sum.n_timestamps;
  }
  sum.n_nodes = nodes.size();
  sum.m_distinct = pairs.size();
  return sum;
}

struct ParseOptions {
  std::optional<char> delimiter;  // nullopt: any run of spaces/tabs
  bool allow_empty = false;
};

struct ParseResult {
  LinkStream stream;
  StreamSummary summary;
  std::uint64_t self_loops_dropped = 0;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, std::optional<char> delim) {
  std::vector<std::string_view> out;
  if (delim) {
    std::size_t start = 0;
    while (true) {
      auto pos = line.find(*delim, start);
      out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    return out;
  }
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

/// Parses "t u v" or "t u v label" lines. '#' lines and blank lines are skipped,
/// self-loops are dropped and counted. The column count of the first data line
/// decides whether the stream is labeled.
inline ParseResult parse_stream(std::istream& is, const ParseOptions& opts = {}) {
  ParseResult res;
  LinkStream& s = res.stream;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> width;
  std::optional<Timestamp> prev;
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view text = line;
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
    if (text.empty() || text.front() == '#') continue;
    if (text.find_first_not_of(" \t") == std::string_view::npos) continue;
    auto fields = detail::split_fields(text, opts.delimiter);
    auto error = [&](const std::string& what) {
      return DataError("line " + std::to_string(line_no) + ": " + what);
    };
    if (fields.size() != 3 && fields.size() != 4) {
      throw error("expected 3 or 4 columns, got " + std::to_string(fields.size()));
    }
    if (!width) width = fields.size();
    if (fields.size() != *width) throw error("inconsistent column count");
    auto t = Timestamp::parse(fields[0]);
    if (!t) throw error("bad timestamp '" + std::string(fields[0]) + "'");
    if (fields[1].empty() || fields[2].empty()) throw error("empty node id");
    if (prev && *t < *prev) {
      throw error("timestamp " + t->to_string() + " precedes " + prev->to_string());
    }
    prev = t;
    Label label = Label::Normal;
    if (fields.size() == 4) {
      if (fields[3] == "0") {
        label = Label::Normal;
      } else if (fields[3] == "1") {
        label = Label::Anomalous;
      } else {
        throw error("label must be 0 or 1");
      }
    }
    if (fields[1] == fields[2]) {
      ++res.self_loops_dropped;
      continue;
    }
    if (fields.size() == 4) {
      s.push_back(*t, fields[1], fields[2], label);
    } else {
      s.push_back(*t, fields[1], fields[2]);
    }
  }
  if (s.links.empty()) {
    if (!opts.allow_empty) throw DataError("empty stream");
    return res;
  }
  res.summary = summarize(s);
  return res;
}

inline ParseResult parse_stream_file(const std::string& path, const ParseOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_stream(in, opts);
}

/// Writes one "t u v[ label]" line per link.
inline void write_stream(std::ostream& os, const LinkStream& s, char delimiter = ' ') {
  std::string line;
  for (std::size_t i = 0; i < s.links.size(); ++i) {
    const auto& l = s.links[i];
    line = l.t.to_string();
    line += delimiter;
    line += s.nodes.name(l.u);
    line += delimiter;
    line += s.nodes.name(l.v);
    if (s.labeled()) {
      line += delimiter;
      line += s.labels[i] == Label::Anomalous ? '1' : '0';
    }
    line += '\n';
    os << line;
  }
}

struct InjectionOptions {
  double rate = 0.05;
  std::uint64_t seed = 0;
  /// Upper bound on rejection-sampling draws; 0 means 100 per anomaly + 1000.
  std::uint64_t max_attempts = 0;
};

struct InjectionReport {
  std::uint64_t input_links = 0;
  std::uint64_t requested = 0;
  std::uint64_t injected = 0;
  std::uint64_t attempts = 0;
  std::uint64_t rejected_existing = 0;
  std::uint64_t rejected_duplicate = 0;
  std::uint64_t distinct_timestamps = 0;
  std::uint64_t nodes = 0;
  double rate = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"input_links", input_links},
            {"requested", requested},
            {"injected", injected},
            {"output_links", input_links + injected},
            {"attempts", attempts},
            {"rejected_existing", rejected_existing},
            {"rejected_duplicate", rejected_duplicate},
            {"distinct_timestamps", distinct_timestamps},
            {"nodes", nodes},
            {"rate", rate},
            {"seed", seed}};
  }
};

struct InjectionResult {
  LinkStream stream;
  InjectionReport report;
};

/// Number of anomalies injected for a given rate: round-half-up of rate * ell.
inline std::uint64_t anomaly_count(double rate, std::uint64_t ell) {
  return static_cast<std::uint64_t>(std::floor(rate * static_cast<double>(ell) + 0.5));
}

/// Adds round(rate * ell) random links, each with a timestamp drawn uniformly
/// from the distinct timestamps of the stream and an unordered pair of distinct
/// nodes drawn uniformly, rejecting any (t, {u, v}) already in the stream or
/// already injected. Original links become Normal (or keep their labels),
/// injected ones Anomalous. Each injected link is placed at a uniformly random
/// position inside the block of links sharing its timestamp.
inline InjectionResult inject(const LinkStream& in, const InjectionOptions& opts) {
  if (!(opts.rate >= 0) || !std::isfinite(opts.rate)) throw UsageError("injection rate must be >= 0");
  if (in.links.empty()) throw DataError("cannot inject into an empty stream");

  // Distinct timestamps and the time slot of every original link.
  std::vector<std::size_t> block_start;
  std::vector<std::uint32_t> slot_of(in.links.size());
  for (std::size_t i = 0; i < in.links.size(); ++i) {
    if (i == 0 || !(in.links[i].t == in.links[i - 1].t)) block_start.push_back(i);
    slot_of[i] = static_cast<std::uint32_t>(block_start.size() - 1);
  }
  block_start.push_back(in.links.size());
  const std::size_t n_slots = block_start.size() - 1;

  std::vector<bool> seen_node(in.nodes.size(), false);
  std::vector<NodeId> nodes;
  for (const auto& l : in.links) {
    for (NodeId x : {l.u, l.v}) {
      if (!seen_node[x.value]) {
        seen_node[x.value] = true;
        nodes.push_back(x);
      }
    }
  }
  // Sampling indexes V in first-appearance order so results do not depend on
  // how the node table was populated.
  if (nodes.size() < 2) throw DataError("injection needs at least two nodes");

  InjectionReport report;
  report.input_links = in.links.size();
  report.requested = anomaly_count(opts.rate, in.links.size());
  report.distinct_timestamps = n_slots;
  report.nodes = nodes.size();
  report.rate = opts.rate;
  report.seed = opts.seed;

  struct SlotPair {
    std::uint64_t slot;
    std::uint64_t pair;
    bool operator==(const SlotPair&) const = default;
  };
  struct SlotPairHash {
    std::size_t operator()(const SlotPair& k) const noexcept {
      return detail::splitmix64(k.pair ^ detail::splitmix64(k.slot));
    }
  };
  std::unordered_set<SlotPair, SlotPairHash> existing;
  existing.reserve(in.links.size());
  for (std::size_t i = 0; i < in.links.size(); ++i) {
    existing.insert({slot_of[i], pair_key(in.links[i].u, in.links[i].v)});
  }

  Rng sampler(derive_seed(opts.seed, "inject.sample"));
  const std::uint64_t cap = opts.max_attempts ? opts.max_attempts : 100 * report.requested + 1000;
  std::unordered_set<SlotPair, SlotPairHash> injected_keys;
  std::vector<std::vector<TimestampedLink>> per_slot(n_slots);
  while (report.injected < report.requested) {
    if (report.attempts >= cap) {
      throw DataError("injection gave up after " + std::to_string(report.attempts) +
                      " attempts; the stream is too saturated for rate " + std::to_string(opts.rate));
    }
    ++report.attempts;
    const auto slot = sampler.below(n_slots);
    const auto a = sampler.below(nodes.size());
    auto b = sampler.below(nodes.size() - 1);
    if (b >= a) ++b;
    const NodeId u = nodes[a];
    const NodeId v = nodes[b];
    const SlotPair key{slot, pair_key(u, v)};
    if (existing.contains(key)) {
      ++report.rejected_existing;
      continue;
    }
    if (!injected_keys.insert(key).second) {
      ++report.rejected_duplicate;
      continue;
    }
    per_slot[slot].push_back({in.links[block_start[slot]].t, u, v});
    ++report.injected;
  }

  InjectionResult out;
  out.report = report;
  out.stream.nodes = in.nodes;
  out.stream.links.reserve(in.links.size() + report.injected);
  out.stream.labels.reserve(in.links.size() + report.injected);
  Rng placer(derive_seed(opts.seed, "inject.place"));
  for (std::size_t slot = 0; slot < n_slots; ++slot) {
    std::size_t orig = block_start[slot];
    const std::size_t orig_end = block_start[slot + 1];
    const auto& extra = per_slot[slot];
    std::size_t next_extra = 0;
    // Uniform random interleaving: take an injected link with probability
    // (remaining injected) / (remaining total).
    while (orig < orig_end || next_extra < extra.size()) {
      const std::uint64_t left_orig = orig_end - orig;
      const std::uint64_t left_extra = extra.size() - next_extra;
      if (left_extra > 0 && placer.below(left_orig + left_extra) < left_extra) {
        out.stream.links.push_back(extra[next_extra++]);
        out.stream.labels.push_back(Label::Anomalous);
      } else {
        out.stream.links.push_back(in.links[orig]);
        out.stream.labels.push_back(in.labeled() ? in.labels[orig] : Label::Normal);
        ++orig;
      }
    }
  }
  return out;
}

}  // namespace tgf
