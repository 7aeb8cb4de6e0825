#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperpart/hypergraph.hpp"
#include "hyperpart/hypergraph_io.hpp"
#include "hyperpart/types.hpp"
#include "test_support.hpp"

namespace hyperpart {

using namespace testing;
using nlohmann::json;

namespace {

std::string cliPath() {
  if (const char* env = std::getenv("HYPERPART_CLI")) {
    return env;
  }
  return HYPERPART_CLI_FALLBACK;
}

std::string corpusDir() {
  if (const char* env = std::getenv("HYPERPART_CORPUS")) {
    return env;
  }
  return HYPERPART_CORPUS_FALLBACK;
}

// Runs the binary through the shell; returns the raw exit code.
int runCli(const std::string& args) {
  const std::string command = cliPath() + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::filesystem::path tempDir() {
  const auto dir = std::filesystem::temp_directory_path() / "hyperpart_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

json readJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  json doc;
  in >> doc;
  return doc;
}

}  // namespace

TEST_CASE("cli partitions the tiny instance and reports honest stats") {
  const auto dir = tempDir();
  const auto hgr = dir / "tiny.hgr";
  const Hypergraph hg = tinyHypergraph();
  io::writeHmetisFile(hg, hgr.string());
  const auto part_file = dir / "tiny.part";
  const auto stats_file = dir / "tiny.json";

  const int code = runCli("-h " + hgr.string() +
                          " -k 2 -e 0.03 --seed 1 --threads 1 -o " +
                          part_file.string() + " --stats " +
                          stats_file.string());
  CHECK(code == 0);

  const json stats = readJson(stats_file);
  CHECK(stats["k"] == 2);
  CHECK(stats["epsilon"] == 0.03);
  CHECK(stats["seed"] == 1);
  CHECK(stats["threads"] == 1);
  CHECK(stats["balanced"] == true);
  CHECK(stats["metric"] <= 2);
  CHECK(stats["phase_times_ms"]["total"].get<double>() >= 0.0);
  REQUIRE(stats["levels"].is_array());
  CHECK(stats["levels"][0]["vertices"] == 6);

  // Round trip: the emitted partition re-scores to the reported metric.
  const std::vector<BlockID> part =
      io::readPartitionFile(part_file.string(), hg.numVertices(), 2);
  CHECK(oracleConnectivityMetric(hg, part) == stats["metric"].get<Gain>());
}

TEST_CASE("cli single-block run is trivial and clean") {
  const auto dir = tempDir();
  const auto hgr = dir / "tiny_k1.hgr";
  io::writeHmetisFile(tinyHypergraph(), hgr.string());
  const auto stats_file = dir / "tiny_k1.json";
  const int code =
      runCli("-h " + hgr.string() + " -k 1 --stats " + stats_file.string());
  CHECK(code == 0);
  CHECK(readJson(stats_file)["metric"] == 0);
}

TEST_CASE("cli exit codes distinguish user errors from imbalance") {
  CHECK(runCli("-h /does/not/exist.hgr -k 2") == 1);
  CHECK(runCli("--definitely-not-a-flag") == 1);
  CHECK(runCli("") == 1);  // missing input

  // One vertex outweighs the limit entirely: the run must finish, flag the
  // imbalance, and still write the partition.
  const auto dir = tempDir();
  const auto hgr = dir / "heavy.hgr";
  {
    std::ofstream out(hgr);
    out << "1 2 11\n1 2\n10\n1\n";
  }
  const auto part_file = dir / "heavy.part";
  const int code =
      runCli("-h " + hgr.string() + " -k 2 -o " + part_file.string());
  CHECK(code == 2);
  const std::vector<BlockID> part =
      io::readPartitionFile(part_file.string(), 2, 2);
  CHECK(part.size() == 2);
}

TEST_CASE("cli tunable overrides reach the configuration") {
  const auto dir = tempDir();
  const auto hgr = dir / "tiny_set.hgr";
  io::writeHmetisFile(tinyHypergraph(), hgr.string());
  CHECK(runCli("-h " + hgr.string() +
               " -k 2 --no-fm --no-lp --no-community-detection "
               "--set ip.runs_per_algorithm=3") == 0);
  CHECK(runCli("-h " + hgr.string() + " -k 2 --set no_such_knob=1") == 1);
}

TEST_CASE("cli round trip on a corpus instance") {
  const std::string corpus = corpusDir();
  const std::string hgr = corpus + "/rand_small.hgr";
  REQUIRE(std::filesystem::exists(hgr));
  const auto dir = tempDir();
  const auto part_file = dir / "corpus.part";
  const auto stats_file = dir / "corpus.json";
  const int code = runCli("-h " + hgr + " -k 8 --seed 3 -o " +
                          part_file.string() + " --stats " +
                          stats_file.string());
  CHECK(code == 0);
  const json stats = readJson(stats_file);
  const io::ParseResult parsed = io::parseHmetisFile(hgr);
  const std::vector<BlockID> part = io::readPartitionFile(
      part_file.string(), parsed.hypergraph.numVertices(), 8);
  CHECK(oracleConnectivityMetric(parsed.hypergraph, part) ==
        stats["metric"].get<Gain>());
  CHECK(stats["balanced"] == true);
}

TEST_CASE("bench aggregation matches the spreadsheet oracle") {
  const auto dir = tempDir();
  const auto rows = dir / "rows.tsv";
  {
    std::ofstream out(rows);
    out << "instance k threads seed time_s metric balanced\n"
        << "a 2 1 1 1.0 10 1\n"
        << "a 2 1 2 3.0 20 1\n"
        << "a 2 4 1 1.0 12 1\n"
        << "b 2 1 1 4.0 5 1\n"
        << "b 2 4 1 1.0 6 0\n";
  }
  const auto report = dir / "report";
  CHECK(runCli("bench --from-tsv " + rows.string() + " --out " +
               report.string()) == 0);
  const json doc = readJson(report.string() + ".json");

  REQUIRE(doc["cells"].is_array());
  REQUIRE(doc["summary"].is_array());
  for (const json& cell : doc["cells"]) {
    if (cell["instance"] == "a" && cell["threads"] == 1) {
      CHECK(cell["mean_time_s"].get<double>() == doctest::Approx(2.0));
      CHECK(cell["mean_metric"].get<double>() == doctest::Approx(15.0));
      CHECK(cell["speedup"].get<double>() == doctest::Approx(1.0));  // p1 vs p1
    }
    if (cell["instance"] == "a" && cell["threads"] == 4) {
      CHECK(cell["speedup"].get<double>() == doctest::Approx(2.0));
    }
    if (cell["instance"] == "b" && cell["threads"] == 4) {
      CHECK(cell["speedup"].get<double>() == doctest::Approx(4.0));
      CHECK(cell["imbalanced"] == 1);
    }
  }
  for (const json& summary : doc["summary"]) {
    if (summary["threads"] == 4) {
      // Harmonic mean of {2, 4} and geometric mean of {1, 1}.
      CHECK(summary["harmonic_mean_speedup"].get<double>() ==
            doctest::Approx(8.0 / 3.0));
      CHECK(summary["geomean_time_s"].get<double>() == doctest::Approx(1.0));
    }
    if (summary["threads"] == 1) {
      CHECK(summary["harmonic_mean_speedup"].get<double>() ==
            doctest::Approx(1.0));
      // Geometric mean of {2, 4}.
      CHECK(summary["geomean_time_s"].get<double>() ==
            doctest::Approx(std::sqrt(8.0)));
    }
  }

  const std::ifstream tsv(report.string() + ".tsv");
  CHECK(tsv.good());
}

TEST_CASE("bench runs a live matrix over a small corpus slice") {
  const auto dir = tempDir();
  const auto slice = dir / "slice_corpus";
  std::filesystem::create_directories(slice);
  const std::string corpus = corpusDir();
  for (const char* name : {"path_chain.hgr", "rand_small.hgr"}) {
    std::filesystem::copy_file(corpus + "/" + name, slice / name,
                               std::filesystem::copy_options::overwrite_existing);
  }
  const auto report = dir / "live";
  const int code = runCli("bench --corpus " + slice.string() +
                          " --k 2 --seeds 1,2 --threads 1 --out " +
                          report.string());
  CHECK(code == 0);
  const json doc = readJson(report.string() + ".json");
  CHECK(doc["runs"].size() == 4);  // 2 instances x 1 k x 1 p x 2 seeds
  REQUIRE(doc["cells"].size() == 2);
  for (const json& cell : doc["cells"]) {
    CHECK(cell["seeds"] == 2);
    CHECK(cell["failed"] == 0);
    CHECK(cell["imbalanced"] == 0);
    CHECK(cell["speedup"].get<double>() == doctest::Approx(1.0));
  }
}

}  // namespace hyperpart
