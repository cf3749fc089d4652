#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include "cfi/config.hpp"
#include "cfi/duplicates.hpp"
#include "test_util.hpp"

// End-to-end checks of the cfi binary; CFI_CLI_PATH is injected by CMake.

using cfitest::TempDir;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(CFI_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string write_config(const TempDir& dir) {
  const std::string path = dir.file("run.cfg");
  cfitest::spit(path,
                "master_seed=4242\n"
                "n_models=32\n"
                "learner=ngram_lm\n"
                "ngram_order=2\n"
                "out_dir=" + dir.file("out") + "\n"
                "gen_unique=10\n"
                "gen_dup_groups=2\n"
                "gen_n_dup=3\n"
                "gen_vocab_size=150\n"
                "gen_q_len=4\n"
                "gen_a_len=6\n");
  return path;
}

}  // namespace

TEST_CASE("running a step before its inputs names the missing subcommand") {
  TempDir dir("cli_order");
  const std::string cfg = write_config(dir);
  const std::string err_file = dir.file("err.txt");
  const std::string cmd = std::string(CFI_CLI_PATH) + " influence --config " +
                          cfg + " 2>" + err_file + " >/dev/null";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) != 0);
  const std::string err = cfitest::slurp(err_file);
  CHECK(err.rfind("error:", 0) == 0);
  CHECK(err.find("sweep") != std::string::npos);
}

TEST_CASE("full pipeline runs clean and is idempotent") {
  TempDir dir("cli_pipeline");
  const std::string cfg = write_config(dir);
  const std::string out = dir.file("out");

  for (const char* sub :
       {"gen-data", "craft-dups", "gen-partitions", "sweep", "influence",
        "extract", "stats", "stability --m-values 16,32", "report"}) {
    CAPTURE(sub);
    CHECK(run_cli(std::string(sub) + " --config " + cfg) == 0);
  }
  for (const char* artifact :
       {"unique.qa", "dup_sources.qa", "targets.qa", "groups.csv",
        "partitions.bin", "losses.bin", "losses.csv", "metrics.csv",
        "influence.bin", "influence.csv", "extraction.csv", "summary.csv",
        "group_summary.csv", "stability.csv", "report/heatmap.svg",
        "report/stability.svg", "report/group_summary.csv"}) {
    CAPTURE(artifact);
    CHECK(fs::exists(out + "/" + artifact));
  }
  // one ranked plot per exemplar: first unique and first duplicate target
  CHECK(fs::exists(out + "/report/ranked_0.svg"));
  CHECK(fs::exists(out + "/report/ranked_10.svg"));

  // idempotence: re-running report rewrites identical bytes
  const std::string before = cfitest::slurp(out + "/report/heatmap.svg");
  const std::string summary_before = cfitest::slurp(out + "/summary.csv");
  CHECK(run_cli("report --config " + cfg) == 0);
  CHECK(run_cli("stats --config " + cfg) == 0);
  CHECK(cfitest::slurp(out + "/report/heatmap.svg") == before);
  CHECK(cfitest::slurp(out + "/summary.csv") == summary_before);
}

TEST_CASE("report --target emits the requested ranked plot with group labels") {
  TempDir dir("cli_target");
  const std::string cfg = write_config(dir);
  for (const char* sub :
       {"gen-data", "craft-dups", "gen-partitions", "sweep", "influence"})
    REQUIRE(run_cli(std::string(sub) + " --config " + cfg) == 0);

  // target 10 is the first duplicate-group member (source of group 0)
  CHECK(run_cli("report --config " + cfg + " --target 10") == 0);
  const std::string svg =
      cfitest::slurp(dir.file("out") + "/report/ranked_10.svg");
  // top-3 bars carry the group member ids 10, 11, 12 as labels
  cfi::DuplicateGroupMap groups =
      cfi::load_group_map(dir.file("out") + "/groups.csv");
  REQUIRE(!groups.groups.empty());
  for (auto id : groups.groups[0].member_ids) {
    const std::string label = ">" + std::to_string(id) + "</text>";
    CAPTURE(id);
    CHECK(svg.find(label) != std::string::npos);
  }
}

TEST_CASE("oracle subcommand works at desk scale") {
  TempDir dir("cli_oracle");
  const std::string path = dir.file("run.cfg");
  cfitest::spit(path,
                "master_seed=7\n"
                "n_models=8\n"
                "learner=ngram_lm\n"
                "ngram_order=2\n"
                "out_dir=" + dir.file("out") + "\n"
                "gen_unique=5\n"
                "gen_dup_groups=0\n"
                "gen_vocab_size=100\n"
                "gen_q_len=3\n"
                "gen_a_len=4\n");
  REQUIRE(run_cli("gen-data --config " + path) == 0);
  REQUIRE(run_cli("craft-dups --config " + path) == 0);
  CHECK(run_cli("oracle --config " + path) == 0);
  CHECK(fs::exists(dir.file("out") + "/influence_oracle.bin"));
}

TEST_CASE("missing config is a one-line machine-parseable error") {
  TempDir dir("cli_noconfig");
  const std::string err_file = dir.file("err.txt");
  const std::string cmd = std::string(CFI_CLI_PATH) + " sweep 2>" + err_file +
                          " >/dev/null";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) != 0);
  const std::string err = cfitest::slurp(err_file);
  CHECK(err.rfind("error:", 0) == 0);
  CHECK(std::count(err.begin(), err.end(), '\n') == 1);
}
