#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hyperpart/hypergraph_io.hpp"
#include "hyperpart/metrics.hpp"
#include "hyperpart/partitioner.hpp"

namespace {

using namespace hyperpart;
using nlohmann::json;

json statsToJson(const RunStats& stats) {
  json phase_times = {
      {"community_detection", stats.community_seconds * 1000.0},
      {"coarsening", stats.coarsening_seconds * 1000.0},
      {"initial_partitioning", stats.initial_partitioning_seconds * 1000.0},
      {"lp", stats.lp_seconds * 1000.0},
      {"fm", stats.fm_seconds * 1000.0},
      {"rebalance", stats.rebalance_seconds * 1000.0},
      {"total", stats.total_seconds * 1000.0},
  };
  json levels = json::array();
  for (const LevelStats& level : stats.levels) {
    levels.push_back(
        {{"vertices", level.num_vertices}, {"nets", level.num_nets}});
  }
  return json{{"version", 1},
              {"metric", stats.metric},
              {"imbalance", stats.imbalance},
              {"balanced", stats.balanced},
              {"phase_times_ms", phase_times},
              {"k", stats.k},
              {"epsilon", stats.epsilon},
              {"seed", stats.seed},
              {"threads", stats.num_threads},
              {"levels", levels}};
}

int runPartition(const std::string& input, const PartitionConfig& config,
                 const std::string& out_file, const std::string& stats_file) {
  const io::ParseResult parsed = io::parseHmetisFile(input);
  const Hypergraph& hg = parsed.hypergraph;
  const PartitionResult result = partition(hg, config);

  if (!out_file.empty()) {
    io::writePartitionFile(result.phg.extractPartition(), out_file);
  }
  if (!stats_file.empty()) {
    std::ofstream out(stats_file);
    if (!out) {
      throw std::runtime_error("cannot write stats file: " + stats_file);
    }
    out << statsToJson(result.stats).dump(2) << '\n';
  }
  std::cout << "metric " << result.stats.metric << "  imbalance "
            << result.stats.imbalance << "  time "
            << result.stats.total_seconds << "s  levels "
            << result.stats.levels.size() << (result.stats.balanced
                                                  ? ""
                                                  : "  IMBALANCED")
            << '\n';
  return result.stats.balanced ? 0 : 2;
}

// ---- benchmark harness ----

// One measured partitioner run; replayed rows from --from-tsv produce the
// same shape, so aggregation is identical for live and recorded data.
struct BenchRun {
  std::string instance;
  BlockID k = 2;
  int threads = 1;
  uint64_t seed = 0;
  double time_s = 0.0;
  Gain metric = 0;
  bool balanced = true;
  bool failed = false;
  bool timed_out = false;
};

struct BenchCell {
  std::string instance;
  BlockID k = 2;
  int threads = 1;
  int num_seeds = 0;
  double mean_time_s = 0.0;
  double mean_metric = 0.0;
  int imbalanced = 0;
  int failed = 0;
  int timed_out = 0;
  std::optional<double> speedup;  // vs the p=1 cell of the same instance and k
};

struct BenchSummary {
  BlockID k = 2;
  int threads = 1;
  int instances = 0;
  double geomean_time_s = 0.0;
  std::optional<double> harmonic_mean_speedup;
};

std::vector<BenchCell> aggregateCells(const std::vector<BenchRun>& runs) {
  std::map<std::tuple<std::string, BlockID, int>, BenchCell> cells;
  for (const BenchRun& run : runs) {
    BenchCell& cell = cells[{run.instance, run.k, run.threads}];
    cell.instance = run.instance;
    cell.k = run.k;
    cell.threads = run.threads;
    if (run.failed) {
      ++cell.failed;
      continue;
    }
    ++cell.num_seeds;
    cell.mean_time_s += run.time_s;
    cell.mean_metric += static_cast<double>(run.metric);
    cell.imbalanced += run.balanced ? 0 : 1;
    cell.timed_out += run.timed_out ? 1 : 0;
  }
  std::vector<BenchCell> out;
  for (auto& [key, cell] : cells) {
    if (cell.num_seeds > 0) {
      cell.mean_time_s /= cell.num_seeds;
      cell.mean_metric /= cell.num_seeds;
    }
    out.push_back(std::move(cell));
  }
  // Self-relative speedup against the single-thread cell of the same
  // instance and k.
  for (BenchCell& cell : out) {
    for (const BenchCell& base : out) {
      if (base.instance == cell.instance && base.k == cell.k &&
          base.threads == 1 && base.num_seeds > 0 && cell.num_seeds > 0 &&
          cell.mean_time_s > 0.0) {
        cell.speedup = base.mean_time_s / cell.mean_time_s;
      }
    }
  }
  return out;
}

std::vector<BenchSummary> summarize(const std::vector<BenchCell>& cells) {
  std::map<std::pair<BlockID, int>, std::vector<const BenchCell*>> groups;
  for (const BenchCell& cell : cells) {
    groups[{cell.k, cell.threads}].push_back(&cell);
  }
  std::vector<BenchSummary> out;
  for (const auto& [key, members] : groups) {
    BenchSummary summary;
    summary.k = key.first;
    summary.threads = key.second;
    double log_sum = 0.0;
    double inv_speedup_sum = 0.0;
    int with_speedup = 0;
    for (const BenchCell* cell : members) {
      if (cell->num_seeds == 0) {
        continue;
      }
      ++summary.instances;
      log_sum += std::log(std::max(cell->mean_time_s, 1e-9));
      if (cell->speedup.has_value() && *cell->speedup > 0.0) {
        inv_speedup_sum += 1.0 / *cell->speedup;
        ++with_speedup;
      }
    }
    if (summary.instances > 0) {
      summary.geomean_time_s = std::exp(log_sum / summary.instances);
    }
    if (with_speedup > 0) {
      summary.harmonic_mean_speedup = with_speedup / inv_speedup_sum;
    }
    out.push_back(summary);
  }
  return out;
}

void writeBenchReport(const std::vector<BenchRun>& runs,
                      const std::vector<BenchCell>& cells,
                      const std::vector<BenchSummary>& summaries,
                      const std::string& out_base) {
  {
    std::ofstream tsv(out_base + ".tsv");
    tsv << "instance\tk\tthreads\tseeds\tmean_time_s\tmean_metric\tspeedup\t"
           "imbalanced\tfailed\ttimed_out\n";
    for (const BenchCell& cell : cells) {
      tsv << cell.instance << '\t' << cell.k << '\t' << cell.threads << '\t'
          << cell.num_seeds << '\t' << cell.mean_time_s << '\t'
          << cell.mean_metric << '\t';
      if (cell.speedup.has_value()) {
        tsv << *cell.speedup;
      } else {
        tsv << "n/a";
      }
      tsv << '\t' << cell.imbalanced << '\t' << cell.failed << '\t'
          << cell.timed_out << '\n';
    }
  }
  json doc;
  doc["version"] = 1;
  doc["runs"] = json::array();
  for (const BenchRun& run : runs) {
    doc["runs"].push_back({{"instance", run.instance},
                           {"k", run.k},
                           {"threads", run.threads},
                           {"seed", run.seed},
                           {"time_s", run.time_s},
                           {"metric", run.metric},
                           {"balanced", run.balanced},
                           {"failed", run.failed},
                           {"timed_out", run.timed_out}});
  }
  doc["cells"] = json::array();
  for (const BenchCell& cell : cells) {
    json entry = {{"instance", cell.instance},
                  {"k", cell.k},
                  {"threads", cell.threads},
                  {"seeds", cell.num_seeds},
                  {"mean_time_s", cell.mean_time_s},
                  {"mean_metric", cell.mean_metric},
                  {"imbalanced", cell.imbalanced},
                  {"failed", cell.failed},
                  {"timed_out", cell.timed_out}};
    if (cell.speedup.has_value()) {
      entry["speedup"] = *cell.speedup;
    }
    doc["cells"].push_back(entry);
  }
  doc["summary"] = json::array();
  for (const BenchSummary& summary : summaries) {
    json entry = {{"k", summary.k},
                  {"threads", summary.threads},
                  {"instances", summary.instances},
                  {"geomean_time_s", summary.geomean_time_s}};
    if (summary.harmonic_mean_speedup.has_value()) {
      entry["harmonic_mean_speedup"] = *summary.harmonic_mean_speedup;
    }
    doc["summary"].push_back(entry);
  }
  std::ofstream js(out_base + ".json");
  js << doc.dump(2) << '\n';
}

void printBenchTable(const std::vector<BenchCell>& cells,
                     const std::vector<BenchSummary>& summaries) {
  std::cout << "instance                  k  p   seeds  mean_time_s  "
               "mean_metric  speedup\n";
  for (const BenchCell& cell : cells) {
    std::ostringstream line;
    line << cell.instance;
    std::cout << line.str() << std::string(std::max<int>(1, 26 - static_cast<int>(line.str().size())), ' ')
              << cell.k << "  " << cell.threads << "   " << cell.num_seeds
              << "      " << cell.mean_time_s << "  " << cell.mean_metric
              << "  ";
    if (cell.speedup.has_value()) {
      std::cout << *cell.speedup;
    } else {
      std::cout << "n/a";
    }
    if (cell.imbalanced + cell.failed + cell.timed_out > 0) {
      std::cout << "  [imbalanced " << cell.imbalanced << ", failed "
                << cell.failed << ", timed out " << cell.timed_out << "]";
    }
    std::cout << '\n';
  }
  for (const BenchSummary& summary : summaries) {
    std::cout << "k=" << summary.k << " p=" << summary.threads << ": geomean time "
              << summary.geomean_time_s << "s over " << summary.instances
              << " instances";
    if (summary.harmonic_mean_speedup.has_value()) {
      std::cout << ", harmonic mean speedup " << *summary.harmonic_mean_speedup;
    }
    std::cout << '\n';
  }
}

std::vector<BenchRun> readRunsTsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read rows file: " + path);
  }
  std::vector<BenchRun> runs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' ||
        line.rfind("instance", 0) == 0) {
      continue;
    }
    std::istringstream row(line);
    BenchRun run;
    int balanced = 1;
    int failed = 0;
    if (!(row >> run.instance >> run.k >> run.threads >> run.seed >>
          run.time_s >> run.metric >> balanced)) {
      throw std::runtime_error("rows file line " + std::to_string(line_no) +
                               ": expected 'instance k threads seed time_s "
                               "metric balanced [failed]'");
    }
    row >> failed;
    run.balanced = balanced != 0;
    run.failed = failed != 0;
    runs.push_back(run);
  }
  return runs;
}

int runBench(const std::string& corpus_dir, const std::string& from_tsv,
             const std::vector<BlockID>& ks, const std::vector<uint64_t>& seeds,
             const std::vector<int>& threads, double epsilon, double time_limit,
             const std::string& out_base) {
  std::vector<BenchRun> runs;
  if (!from_tsv.empty()) {
    runs = readRunsTsv(from_tsv);
  } else {
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(corpus_dir)) {
      if (entry.path().extension() == ".hgr") {
        files.push_back(entry.path().string());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw std::runtime_error("no .hgr files in " + corpus_dir);
    }
    for (const std::string& file : files) {
      const std::string name = std::filesystem::path(file).stem().string();
      io::ParseResult parsed = io::parseHmetisFile(file);
      for (const BlockID k : ks) {
        for (const int p : threads) {
          for (const uint64_t seed : seeds) {
            BenchRun run;
            run.instance = name;
            run.k = k;
            run.threads = p;
            run.seed = seed;
            PartitionConfig config;
            config.k = k;
            config.epsilon = epsilon;
            config.seed = seed;
            config.num_threads = p;
            try {
              const auto start = std::chrono::steady_clock::now();
              const PartitionResult result =
                  partition(parsed.hypergraph, config);
              run.time_s = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
              run.metric = result.stats.metric;
              run.balanced = result.stats.balanced;
              if (time_limit > 0.0 && run.time_s > time_limit) {
                run.timed_out = true;
                run.time_s = time_limit;
              }
            } catch (const std::exception& e) {
              std::cerr << name << " k=" << k << " p=" << p
                        << " seed=" << seed << " failed: " << e.what() << '\n';
              run.failed = true;
            }
            runs.push_back(run);
          }
        }
      }
    }
  }
  const std::vector<BenchCell> cells = aggregateCells(runs);
  const std::vector<BenchSummary> summaries = summarize(cells);
  printBenchTable(cells, summaries);
  if (!out_base.empty()) {
    writeBenchReport(runs, cells, summaries, out_base);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shared-memory multilevel hypergraph partitioner"};
  app.set_help_flag("--help", "Print help");

  std::string input;
  std::string out_file;
  std::string stats_file;
  PartitionConfig config;
  std::vector<std::string> overrides;
  app.add_option("-h,--hypergraph", input, "Input hypergraph (hMetis format)");
  app.add_option("-k,--blocks", config.k, "Number of blocks");
  app.add_option("-e,--epsilon", config.epsilon, "Balance tolerance");
  app.add_option("--seed", config.seed, "Random seed");
  app.add_option("--threads", config.num_threads, "Worker threads");
  app.add_option("-o,--output", out_file, "Partition output file");
  app.add_option("--stats", stats_file, "Stats JSON output file");
  app.add_flag_callback(
      "--no-community-detection",
      [&config] { config.use_community_detection = false; },
      "Skip community detection");
  app.add_flag_callback("--no-lp",
                        [&config] { config.use_lp = false; },
                        "Skip label propagation refinement");
  app.add_flag_callback("--no-fm", [&config] { config.use_fm = false; },
                        "Skip FM refinement");
  app.add_option("--set", overrides, "Tunable override key=value");

  CLI::App* bench = app.add_subcommand("bench", "Benchmark harness");
  std::string corpus_dir;
  std::string from_tsv;
  std::string bench_out;
  std::vector<BlockID> bench_ks{2, 8};
  std::vector<uint64_t> bench_seeds{1, 2, 3};
  std::vector<int> bench_threads{1};
  double bench_epsilon = 0.03;
  double time_limit = 0.0;
  bench->add_option("--corpus", corpus_dir, "Directory of .hgr instances");
  bench->add_option("--from-tsv", from_tsv,
                    "Aggregate recorded rows instead of running "
                    "(instance k threads seed time_s metric balanced [failed])");
  bench->add_option("--k", bench_ks, "Block counts")->delimiter(',');
  bench->add_option("--seeds", bench_seeds, "Seeds")->delimiter(',');
  bench->add_option("--threads", bench_threads, "Thread counts")
      ->delimiter(',');
  bench->add_option("-e,--epsilon", bench_epsilon, "Balance tolerance");
  bench->add_option("--time-limit", time_limit,
                    "Record longer runs at this limit (seconds)");
  bench->add_option("--out", bench_out, "Report base name (.tsv and .json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (bench->parsed()) {
      if (corpus_dir.empty() && from_tsv.empty()) {
        std::cerr << "bench: need --corpus or --from-tsv\n";
        return 1;
      }
      return runBench(corpus_dir, from_tsv, bench_ks, bench_seeds,
                      bench_threads, bench_epsilon, time_limit, bench_out);
    }
    if (input.empty()) {
      std::cerr << "missing input hypergraph (-h FILE); --help for usage\n";
      return 1;
    }
    for (const std::string& kv : overrides) {
      config.setOption(kv);
    }
    return runPartition(input, config, out_file, stats_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
