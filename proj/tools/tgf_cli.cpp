// tgf: command-line front end for link-stream anomaly detection with history
// graph features.
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tgf/tgf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace tgf;

struct Common {
  std::string input;
  std::string out;
  std::string delimiter;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::vector<HistoryConfig> histories;
};

struct Learner {
  double ratio = 0.7;
  std::size_t trees = 100;
  std::optional<std::size_t> max_features;
  std::optional<std::size_t> max_depth;
};

std::optional<char> parse_delimiter(const std::string& d) {
  if (d.empty()) return std::nullopt;
  if (d == "tab" || d == "\\t") return '\t';
  if (d == "space") return ' ';
  if (d == "comma") return ',';
  if (d.size() != 1) throw UsageError("delimiter must be a single character, 'tab', 'space' or 'comma'");
  return d[0];
}

// "[label=]value"
std::pair<std::string, std::string> split_label(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {"", arg};
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

HistoryConfig parse_hsize(const std::string& arg) {
  auto [label, value] = split_label(arg);
  std::uint64_t s = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
  if (ec != std::errc() || p != value.data() + value.size() || s == 0) {
    throw UsageError("--hsize expects a positive integer, got '" + value + "'");
  }
  return HistoryConfig::by_size(s, label);
}

HistoryConfig parse_gdur(const std::string& arg) {
  auto [label, value] = split_label(arg);
  auto d = Timestamp::parse(value);
  if (!d || !(*d > Timestamp::integer(0))) throw UsageError("--gdur expects a positive duration, got '" + value + "'");
  return HistoryConfig::by_duration(*d, label);
}

void add_io(CLI::App* cmd, Common& c, bool positional_out = false) {
  cmd->add_option("--input,-i", c.input, "input file");
  cmd->add_option("--out,-o", c.out, positional_out ? "output file" : "output path");
  cmd->add_option("input_path", c.input)->description("input file (alternative to --input)");
  cmd->add_option("output_path", c.out)->description("output path (alternative to --out)");
}

void add_seed(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "master seed")->capture_default_str();
}

void add_threads(CLI::App* cmd, Common& c) {
  cmd->add_option("--threads", c.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

void add_delimiter(CLI::App* cmd, Common& c) {
  cmd->add_option("--delimiter,-d", c.delimiter, "stream field delimiter (default: whitespace)");
}

struct HistoryFlags {
  CLI::App* cmd = nullptr;
  CLI::Option* hsize = nullptr;
  CLI::Option* gdur = nullptr;
};

HistoryFlags add_histories(CLI::App* cmd) {
  HistoryFlags f;
  f.cmd = cmd;
  f.hsize = cmd->add_option("--hsize", "H-type history size (repeatable)")->take_all()->type_name("[LABEL=]S");
  f.gdur = cmd->add_option("--gdur", "G-type history duration (repeatable)")->take_all()->type_name("[LABEL=]D");
  return f;
}

// Histories in command-line order, --hsize and --gdur interleaved as given.
std::vector<HistoryConfig> collect_histories(const HistoryFlags& f) {
  std::vector<HistoryConfig> out;
  std::size_t h = 0, g = 0;
  for (const CLI::Option* o : f.cmd->parse_order()) {
    if (o == f.hsize) out.push_back(parse_hsize(f.hsize->results().at(h++)));
    if (o == f.gdur) out.push_back(parse_gdur(f.gdur->results().at(g++)));
  }
  return out;
}

void add_learner(CLI::App* cmd, Learner& l) {
  cmd->add_option("--ratio", l.ratio, "training fraction r")->capture_default_str();
  cmd->add_option("--trees", l.trees, "number of trees")->capture_default_str();
  cmd->add_option("--max-features", l.max_features, "features examined per split (default floor(sqrt(F)))");
  cmd->add_option("--max-depth", l.max_depth, "tree depth bound (default unbounded)");
}

void require(const std::string& value, const char* what) {
  if (value.empty()) throw UsageError(std::string("missing ") + what);
}

void require_histories(const Common& c) {
  if (c.histories.empty()) throw UsageError("at least one --hsize or --gdur is required");
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DataError("cannot write '" + p.string() + "'");
  return os;
}

void write_json(const fs::path& p, const json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

ParseResult read_stream(const Common& c, bool allow_empty = false) {
  require(c.input, "input stream (--input)");
  ParseOptions o;
  o.delimiter = parse_delimiter(c.delimiter);
  o.allow_empty = allow_empty;
  auto r = parse_stream_file(c.input, o);
  if (r.self_loops_dropped) std::cerr << "warning: dropped " << r.self_loops_dropped << " self-loop(s)\n";
  return r;
}

Dataset read_features(const std::string& path) {
  require(path, "feature CSV (--input)");
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path + "'");
  return read_csv(is);
}

ForestParams forest_params(const Learner& l, unsigned threads) {
  ForestParams p;
  p.n_trees = l.trees;
  p.max_features = l.max_features;
  p.max_depth = l.max_depth;
  p.threads = threads;
  return p;
}

std::vector<std::string> history_ids(const Dataset& d) {
  std::vector<std::string> ids;
  for (const auto& c : d.columns) {
    auto id = c.substr(0, c.find('.'));
    if (ids.empty() || ids.back() != id) ids.push_back(id);
  }
  return ids;
}

json eval_config(const Dataset& d, const ForestParams& p, std::uint64_t seed) {
  json params = p.to_json();
  params.erase("threads");
  params.erase("seed");
  return {{"histories", history_ids(d)},
          {"learner", {{"kind", "random_forest"}, {"params", params}}},
          {"seeds",
           {{"master", seed},
            {"undersample", derive_seed(seed, "undersample")},
            {"learner", derive_seed(seed, "learner")}}}};
}

// ---- commands -------------------------------------------------------------

void cmd_synth(const Common& c, const SynthParams& sp) {
  require(c.out, "output file (--out)");
  SynthParams p = sp;
  p.seed = c.seed;
  const auto s = generate_stream(p);
  auto os = open_out(c.out);
  write_stream(os, s, parse_delimiter(c.delimiter).value_or(' '));
}

InjectionReport do_inject(const Common& c, double rate, const fs::path& out) {
  const auto in = read_stream(c);
  InjectionOptions o;
  o.rate = rate;
  o.seed = c.seed;
  const auto r = inject(in.stream, o);
  {
    auto os = open_out(out);
    write_stream(os, r.stream, parse_delimiter(c.delimiter).value_or(' '));
  }
  json j = r.report.to_json();
  j["self_loops_dropped"] = in.self_loops_dropped;
  write_json(fs::path(out.string() + ".json"), j);
  return r.report;
}

void cmd_inject(const Common& c, double rate) {
  require(c.out, "output file (--out)");
  const auto r = do_inject(c, rate, c.out);
  std::cout << "injected " << r.injected << " anomalies into " << r.input_links << " links -> " << c.out << '\n';
}

void do_features(const Common& c, const LinkStream& s, const fs::path& out) {
  auto os = open_out(out);
  write_features_csv(os, s, c.histories, c.threads);
}

void cmd_features(const Common& c) {
  require_histories(c);
  require(c.out, "output CSV (--out)");
  const auto in = read_stream(c);
  do_features(c, in.stream, c.out);
  std::cout << "wrote " << in.stream.size() << " rows x " << c.histories.size() * kFeatureCount
            << " features -> " << c.out << '\n';
}

EvalReport do_eval(const Common& c, const Learner& l, const Dataset& d, const fs::path& dir) {
  const auto params = forest_params(l, c.threads);
  auto outcome = evaluate(d, {l.ratio, c.seed}, forest_trainer(params));
  outcome.report.config = eval_config(d, params, c.seed);
  write_json(dir / "report.json", outcome.report.to_json());
  {
    auto os = open_out(dir / "scores.csv");
    os << "index,score,label\n";
    std::string line;
    for (std::size_t i = 0; i < outcome.test.rows(); ++i) {
      line = std::to_string(outcome.test.index[i]);
      line += ',';
      append_number(line, outcome.test_scores[i]);
      line += ',';
      line += outcome.test.labels[i] ? '1' : '0';
      line += '\n';
      os << line;
    }
  }
  const auto& forest = dynamic_cast<const RandomForest&>(*outcome.model);
  auto os = open_out(dir / "model.json");
  os << forest.to_json().dump() << '\n';
  return outcome.report;
}

void cmd_eval(const Common& c, const Learner& l) {
  require(c.out, "output directory (--out)");
  const auto d = read_features(c.input);
  const auto r = do_eval(c, l, d, c.out);
  std::cout << "AUC " << std::setprecision(6) << r.auc << " (train " << r.train_rows << ", test " << r.test_rows
            << ") -> " << c.out << '\n';
}

void cmd_windows(const Common& c, const Learner& l, double window, double step) {
  require_histories(c);
  require(c.out, "output directory (--out)");
  const auto in = read_stream(c);
  WindowOptions o;
  o.window_fraction = window;
  o.step_fraction = step;
  o.ratio = l.ratio;
  o.seed = c.seed;
  o.threads = c.threads;
  auto p = forest_params(l, 1);
  const auto windows = sliding_window_eval(in.stream, c.histories, o, forest_trainer(p));

  const fs::path dir = c.out;
  auto csv = open_out(dir / "windows.csv");
  csv << "window,begin,end,auc,train_rows,test_rows,train_anomalies,test_anomalies\n";
  json arr = json::array();
  double sum = 0, lo = 1, hi = 0;
  for (const auto& w : windows) {
    std::string line = std::to_string(w.index) + ',' + std::to_string(w.begin) + ',' + std::to_string(w.end) + ',';
    append_number(line, w.report.auc);
    line += ',' + std::to_string(w.report.train_rows) + ',' + std::to_string(w.report.test_rows) + ',' +
            std::to_string(w.report.train_anomalies) + ',' + std::to_string(w.report.test_anomalies) + '\n';
    csv << line;
    json j = w.report.to_json();
    j["window"] = w.index;
    j["begin"] = w.begin;
    j["end"] = w.end;
    arr.push_back(std::move(j));
    sum += w.report.auc;
    lo = std::min(lo, w.report.auc);
    hi = std::max(hi, w.report.auc);
  }
  const double mean = sum / static_cast<double>(windows.size());
  json summary = {{"windows", windows.size()},
                  {"window_fraction", window},
                  {"step_fraction", step},
                  {"histories", [&] {
                     std::vector<std::string> ids;
                     for (const auto& h : c.histories) ids.push_back(h.id);
                     return ids;
                   }()},
                  {"auc_mean", mean},
                  {"auc_min", lo},
                  {"auc_max", hi},
                  {"results", std::move(arr)}};
  write_json(dir / "windows.json", summary);
  std::cout << windows.size() << " windows, AUC mean " << mean << " [" << lo << ", " << hi << "] -> " << c.out
            << '\n';
}

void cmd_importance(const Common& c, const Learner& l, std::size_t repeats) {
  require(c.out, "output directory (--out)");
  const auto d = read_features(c.input);
  const auto params = forest_params(l, c.threads);
  const auto outcome = evaluate(d, {l.ratio, c.seed}, forest_trainer(params));
  const auto r = permutation_importance(*outcome.model, outcome.test, repeats, derive_seed(c.seed, "importance"),
                                        c.threads);
  const fs::path dir = c.out;
  {
    auto os = open_out(dir / "importance.csv");
    os << "feature,repeat,decrease\n";
    for (const auto& f : r.ranked) {
      for (std::size_t k = 0; k < f.decreases.size(); ++k) {
        std::string line = f.name + ',' + std::to_string(k) + ',';
        append_number(line, f.decreases[k]);
        os << line << '\n';
      }
    }
  }
  {
    auto os = open_out(dir / "importance_ranked.csv");
    os << "rank,feature,mean_decrease\n";
    for (std::size_t k = 0; k < r.ranked.size(); ++k) {
      std::string line = std::to_string(k + 1) + ',' + r.ranked[k].name + ',';
      append_number(line, r.ranked[k].mean);
      os << line << '\n';
    }
  }
  std::cout << "baseline AUC " << r.baseline << "; top feature " << r.ranked.front().name << " ("
            << r.ranked.front().mean << ") -> " << c.out << '\n';
}

void cmd_hist(const Common& c, const std::vector<std::string>& features) {
  require(c.out, "output CSV (--out)");
  if (features.empty()) throw UsageError("at least one --feature is required");
  const auto d = read_features(c.input);
  auto os = open_out(c.out);
  os << "feature,class,value,count\n";
  for (const auto& f : features) {
    for (auto cls : {Label::Normal, Label::Anomalous}) {
      for (const auto& [v, n] : feature_distribution(d, f, cls)) {
        std::string line = f + ',' + (cls == Label::Anomalous ? '1' : '0') + ',';
        append_number(line, v);
        os << line << ',' << n << '\n';
      }
    }
  }
}

void cmd_bench(const Common& c) {
  require_histories(c);
  const auto in = read_stream(c, true);
  if (in.stream.links.empty()) throw UsageError("cannot benchmark an empty stream");
  using clock = std::chrono::steady_clock;
  json results = json::array();
  std::cout << std::left << std::setw(12) << "history" << std::right << std::setw(12) << "mean_us" << std::setw(12)
            << "p50_us" << std::setw(12) << "p99_us" << std::setw(16) << "links_per_s" << '\n';
  const auto& links = in.stream.links;
  for (const auto& h : c.histories) {
    HistoryGraph g(h);
    std::vector<double> ns(links.size());
    std::uint64_t checksum = 0;
    const auto start = clock::now();
    for (std::size_t i = 0; i < links.size(); ++i) {
      const auto t0 = clock::now();
      const auto row = g.observe(links[i]);
      const auto t1 = clock::now();
      checksum += row[Feature::mu];
      ns[i] = std::chrono::duration<double, std::nano>(t1 - t0).count();
    }
    const double total = std::chrono::duration<double>(clock::now() - start).count();
    double sum = 0;
    for (double x : ns) sum += x;
    auto quantile = [&](double q) {
      auto k = static_cast<std::size_t>(q * static_cast<double>(ns.size() - 1));
      std::nth_element(ns.begin(), ns.begin() + static_cast<std::ptrdiff_t>(k), ns.end());
      return ns[k];
    };
    const double mean_us = sum / static_cast<double>(ns.size()) / 1000.0;
    const double p50 = quantile(0.5) / 1000.0, p99 = quantile(0.99) / 1000.0;
    const double rate = static_cast<double>(links.size()) / total;
    results.push_back({{"history", h.id},
                       {"links", links.size()},
                       {"mean_us", mean_us},
                       {"p50_us", p50},
                       {"p99_us", p99},
                       {"total_seconds", total},
                       {"links_per_second", rate},
                       {"checksum", checksum}});
    std::cout << std::left << std::setw(12) << h.id << std::right << std::fixed << std::setprecision(3)
              << std::setw(12) << mean_us << std::setw(12) << p50 << std::setw(12) << p99 << std::setw(16)
              << std::setprecision(0) << rate << '\n'
              << std::defaultfloat;
  }
  if (!c.out.empty()) write_json(c.out, {{"links", links.size()}, {"results", results}});
}

void cmd_run(const Common& c, const Learner& l, double rate) {
  require_histories(c);
  require(c.out, "output directory (--out)");
  const fs::path dir = c.out;
  do_inject(c, rate, dir / "labeled.txt");
  Common labeled = c;
  labeled.input = (dir / "labeled.txt").string();
  const auto s = read_stream(labeled);
  do_features(c, s.stream, dir / "features.csv");
  const auto d = read_features((dir / "features.csv").string());
  const auto r = do_eval(c, l, d, dir);
  std::cout << "AUC " << std::setprecision(6) << r.auc << " -> " << c.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tgf: anomaly detection in link streams with history-graph features"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tgf 1.0");

  Common c;
  Learner l;
  double rate = 0.05;
  double window = 0.5, step = 0.01;
  std::size_t repeats = 10;
  std::vector<std::string> features;
  SynthParams sp;

  auto* synth = app.add_subcommand("synth", "generate a synthetic link stream");
  synth->add_option("--out,-o,output_path", c.out, "output stream file");
  synth->add_option("--links", sp.links, "number of links")->capture_default_str();
  synth->add_option("--nodes", sp.nodes, "number of nodes")->capture_default_str();
  synth->add_option("--exponent", sp.activity_exponent, "node activity power-law exponent")->capture_default_str();
  synth->add_option("--repeat", sp.repeat_probability, "probability of repeating a recent pair")->capture_default_str();
  synth->add_option("--recent", sp.recent_pairs, "recent pairs kept for repeats")->capture_default_str();
  synth->add_option("--per-tick", sp.links_per_tick, "mean links per timestamp")->capture_default_str();
  add_seed(synth, c);
  add_delimiter(synth, c);

  auto* inj = app.add_subcommand("inject", "inject random anomalous links into a stream");
  add_io(inj, c, true);
  inj->add_option("--rate", rate, "anomalies as a fraction of the stream length")->capture_default_str();
  add_seed(inj, c);
  add_delimiter(inj, c);

  auto* feat = app.add_subcommand("features", "extract history-graph features to CSV");
  add_io(feat, c, true);
  const auto feat_h = add_histories(feat);
  add_delimiter(feat, c);
  add_threads(feat, c);

  auto* ev = app.add_subcommand("eval", "train and evaluate on a feature CSV");
  add_io(ev, c);
  add_learner(ev, l);
  add_seed(ev, c);
  add_threads(ev, c);

  auto* win = app.add_subcommand("windows", "sliding-window evaluation of a labeled stream");
  add_io(win, c);
  const auto win_h = add_histories(win);
  add_learner(win, l);
  win->add_option("--window", window, "window size as a fraction of the stream")->capture_default_str();
  win->add_option("--step", step, "window step as a fraction of the stream")->capture_default_str();
  add_seed(win, c);
  add_delimiter(win, c);
  add_threads(win, c);

  auto* imp = app.add_subcommand("importance", "permutation feature importance");
  add_io(imp, c);
  add_learner(imp, l);
  imp->add_option("--repeats", repeats, "shuffles per feature")->capture_default_str();
  add_seed(imp, c);
  add_threads(imp, c);

  auto* hist = app.add_subcommand("hist", "per-class value histograms of features");
  add_io(hist, c, true);
  hist->add_option("--feature,-f", features, "feature column (repeatable)");

  auto* bench = app.add_subcommand("bench", "per-link feature latency for each history graph");
  add_io(bench, c, true);
  const auto bench_h = add_histories(bench);
  add_delimiter(bench, c);

  auto* run = app.add_subcommand("run", "inject, extract features and evaluate in one go");
  add_io(run, c);
  const auto run_h = add_histories(run);
  add_learner(run, l);
  run->add_option("--rate", rate, "anomalies as a fraction of the stream length")->capture_default_str();
  add_seed(run, c);
  add_delimiter(run, c);
  add_threads(run, c);

  try {
    app.parse(argc, argv);
    for (const auto* f : {&feat_h, &win_h, &bench_h, &run_h}) {
      if (*f->cmd) c.histories = collect_histories(*f);
    }
    if (*synth) cmd_synth(c, sp);
    if (*inj) cmd_inject(c, rate);
    if (*feat) cmd_features(c);
    if (*ev) cmd_eval(c, l);
    if (*win) cmd_windows(c, l, window, step);
    if (*imp) cmd_importance(c, l, repeats);
    if (*hist) cmd_hist(c, features);
    if (*bench) cmd_bench(c);
    if (*run) cmd_run(c, l, rate);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "tgf: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "tgf: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
