#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(TOPICFORGE_EXE) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) r.output.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const fs::path& p) {
  const auto s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("topicforge_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  static std::string demo() { return std::string(TOPICFORGE_DATA_DIR) + "/demo_notes.jsonl"; }

  // Ingested demo corpus in <dir>/demo.
  void ingest_demo() { ASSERT_EQ(run("ingest --input " + demo() + " --out " + path("demo")).code, 0); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, IngestReportsFilterCounts) {
  const auto r = run("ingest --input " + demo() + " --out " + path("demo"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("18 in, 10 after filters"), std::string::npos) << r.output;
  const auto prov = nlohmann::json::parse(slurp(path("demo/provenance.json")));
  EXPECT_EQ(prov["records_in"], 18);
  EXPECT_EQ(prov["rejected_malformed"], 1);
  EXPECT_EQ(prov["after_metadata_filter"], 14);
  EXPECT_EQ(prov["removed_short"], 2);
  EXPECT_EQ(prov["removed_duplicate_text"], 2);
  EXPECT_EQ(count_lines(path("demo/corpus.jsonl")), 10u);
  EXPECT_EQ(count_lines(path("demo/tokens.txt")), 10u);
  const auto manifest = nlohmann::json::parse(slurp(path("demo/manifest.json")));
  EXPECT_EQ(manifest["command"], "ingest");
  EXPECT_EQ(manifest["config"]["min-len"], "30");
  EXPECT_EQ(manifest["outputs"].size(), 5u);
}

TEST_F(Cli, EmptyResultIsAWarningNotAFailure) {
  const auto r = run("ingest --input " + demo() + " --keyword zzzz --out " + path("none"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("no notes survived"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("none/matrix.txt")));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("fit --k 3").code, 1);  // --data missing
  EXPECT_EQ(run("no-such-command").code, 1);
  EXPECT_EQ(run("fit --data " + path("missing") + " --k 3 --out " + path("o")).code, 2);
  EXPECT_EQ(run("ingest --input " + path("missing.jsonl") + " --out " + path("o")).code, 2);
  ingest_demo();
  EXPECT_EQ(run("fit --data " + path("demo") + " --k 3 --kappa 0.4 --out " + path("o")).code, 1);
}

TEST_F(Cli, DryRunShowsDefaultsAndWritesNothing) {
  const auto r = run("fit --data " + path("demo") + " --k 4 --out " + path("dry") + " --dry-run");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(r.output);
  EXPECT_EQ(j["config"]["k"], "4");
  EXPECT_EQ(j["config"]["batch-size"], "2048");
  EXPECT_EQ(j["config"]["passes"], "10");
  EXPECT_EQ(j["config"]["tau0"], "1");
  EXPECT_EQ(j["config"]["top-words"], "10");
  EXPECT_DOUBLE_EQ(std::stod(j["config"]["kappa"].get<std::string>()), 0.7);
  EXPECT_FALSE(fs::exists(path("dry")));
  const auto sk = nlohmann::json::parse(run("select-k --data x --dry-run").output);
  EXPECT_EQ(sk["config"]["k-range"], "10..50");
  EXPECT_EQ(sk["config"]["window"], "110");
  const auto lb = nlohmann::json::parse(run("label --data x --dry-run").output);
  EXPECT_EQ(lb["config"]["neighbors"], "20");
  EXPECT_EQ(lb["config"]["repeats"], "5");
}

TEST_F(Cli, FlagsBeatConfigFileWhichBeatsDefaults) {
  std::ofstream(path("cfg.txt")) << "# settings\npasses = 2\nseed=5\nthreads = 3\n";
  const auto r = run("--config " + path("cfg.txt") + " fit --data d --k 3 --seed 7 --dry-run");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(r.output);
  EXPECT_EQ(j["config"]["passes"], "2");
  EXPECT_EQ(j["config"]["seed"], "7");
  EXPECT_EQ(j["config"]["max-iters"], "100");
  std::ofstream(path("bad.txt")) << "nonsense line\n";
  EXPECT_EQ(run("--config " + path("bad.txt") + " fit --data d --k 3 --dry-run").code, 1);
}

TEST_F(Cli, FitIsReproducibleAndRerunMatchesBytes) {
  ingest_demo();
  const std::string fit = "fit --data " + path("demo") + " --k 2 --passes 5 --seed 9 --out ";
  ASSERT_EQ(run(fit + path("a")).code, 0);
  ASSERT_EQ(run(fit + path("b")).code, 0);
  EXPECT_EQ(slurp(path("a/model.txt")), slurp(path("b/model.txt")));
  EXPECT_EQ(slurp(path("a/topics.csv")), slurp(path("b/topics.csv")));

  const auto prop = run("proportions --data " + path("demo") + " --model " + path("a/model.txt") +
                        " --out " + path("p1"));
  ASSERT_EQ(prop.code, 0) << prop.output;
  const auto again = run("rerun " + path("p1/manifest.json") + " --out " + path("p2"));
  ASSERT_EQ(again.code, 0) << again.output;
  EXPECT_EQ(slurp(path("p1/proportions.csv")), slurp(path("p2/proportions.csv")));
  EXPECT_EQ(slurp(path("p1/proportions.svg")), slurp(path("p2/proportions.svg")));
}

TEST_F(Cli, PipelineOnSyntheticData) {
  auto r = run("synth --k 3 --vocab 60 --docs 150 --min-tokens 40 --max-tokens 40 --seed 2 --out " +
               path("syn"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(count_lines(path("syn/true_beta.csv")), 4u);
  EXPECT_EQ(count_lines(path("syn/true_theta.csv")), 151u);

  r = run("select-k --data " + path("syn") + " --k-range 2..4 --passes 3 --batch-size 50 --out " +
          path("sweep"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(count_lines(path("sweep/sweep.csv")), 4u);
  EXPECT_TRUE(fs::exists(path("sweep/sweep.svg")));

  r = run("fit --data " + path("syn") + " --k 3 --passes 3 --batch-size 50 --out " + path("fit"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(count_lines(path("fit/elbo.csv")), 4u);
  const std::string model = " --model " + path("fit/model.txt");
  EXPECT_EQ(run("transform --data " + path("syn") + model + " --out " + path("tr")).code, 0);
  EXPECT_EQ(count_lines(path("tr/theta.csv")), 151u);
  EXPECT_EQ(run("coherence --data " + path("syn") + model + " --out " + path("coh")).code, 0);
  EXPECT_TRUE(fs::exists(path("coh/coherence.csv")));
  EXPECT_EQ(run("label --data " + path("syn") + model + " --out " + path("lab")).code, 0);
  EXPECT_EQ(count_lines(path("lab/labels.csv")), 4u);
  EXPECT_EQ(run("report --sweep " + path("sweep/sweep.csv") + " --out " + path("rep")).code, 0);
}

TEST_F(Cli, DemoLabelingAndFrequencyOutputs) {
  ingest_demo();
  ASSERT_EQ(run("fit --data " + path("demo") + " --k 2 --passes 5 --out " + path("fit")).code, 0);
  const auto r = run("label --data " + path("demo") + " --model " + path("fit/model.txt") +
                     " --train-embeddings --embedding-dim 3 --out " + path("lab"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(path("lab/labels.csv")));
  EXPECT_TRUE(fs::exists(path("lab/dictionary_expanded.tsv")));
  const auto freq = run("freq --data " + path("demo") + " --out " + path("freq"));
  // the demo notes carry codes from several chapters
  ASSERT_EQ(freq.code, 0) << freq.output;
  EXPECT_TRUE(fs::exists(path("freq/heatmap.svg")));
}
