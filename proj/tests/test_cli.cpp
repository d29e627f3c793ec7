#include "doctest.h"

#include <fstream>
#include <sstream>

#include "dpaudit/cli.hpp"
#include "dpaudit/corpus.hpp"

using namespace dpaudit;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dpaudit");
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dpaudit_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("synth, audit, eval, report") {
  const auto dir = scratch("pipeline");
  const auto corpus = (dir / "corpus").string(), preds = (dir / "preds").string();

  auto r = cli({"synth", "--n", "30", "--seed", "7", "--out", corpus});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "corpus" / "truth.labels"));
  CHECK(fs::exists(dir / "corpus" / "manifest.json"));

  REQUIRE(cli({"audit", corpus, "--out", preds}).code == 0);
  CHECK(read_reports(preds).size() == 30);

  r = cli({"eval", preds, corpus + "/truth.labels", "--format", "json", "--out",
           (dir / "metrics.json").string()});
  REQUIRE(r.code == 0);
  const auto doc = read_document(dir / "metrics.json");
  CHECK(doc.at("aggregate").at("accuracy").at("value") == 1.0);
  CHECK(doc.at("n_evaluated") == 30);

  r = cli({"report", "--style", "table3", (dir / "metrics.json").string(), "--format", "csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("aggregate,") != std::string::npos);

  r = cli({"report", "--style", "table4", preds, "--truth", corpus + "/truth.labels"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("CreatingBarriers") != std::string::npos);

  const auto m = read_manifest(dir / "preds" / "manifest.json");
  CHECK(m.command == "audit");
  CHECK_FALSE(m.input_digests.empty());
  CHECK_FALSE(m.output_digests.empty());
  fs::remove_all(dir);
}

TEST_CASE("agent-run with injected faults excludes failed runs") {
  const auto dir = scratch("agent");
  const auto corpus = (dir / "corpus").string(), preds = (dir / "preds").string();
  REQUIRE(cli({"synth", "--n", "40", "--seed", "3", "--out", corpus}).code == 0);
  REQUIRE(cli({"agent-run", corpus, "--out", preds, "--seed", "5", "--fault-rate", "0.25"}).code == 0);
  const auto r = cli({"eval", preds, corpus + "/truth.labels", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc.at("excluded_failed_runs").get<int>() > 0);
  CHECK(doc.at("aggregate").at("f1").at("value") == 1.0);
  fs::remove_all(dir);
}

TEST_CASE("ablation then table2 report") {
  const auto dir = scratch("ablation");
  const auto corpus = (dir / "corpus").string();
  REQUIRE(cli({"synth", "--n", "20", "--seed", "9", "--out", corpus}).code == 0);
  const auto out = (dir / "ablation.json").string();
  REQUIRE(cli({"ablation", corpus, "--out", out, "--seed", "1", "--levels", "1,2", "--m", "10",
               "--B", "50"})
              .code == 0);
  const auto r = cli({"report", "--style", "table2", out, "--format", "csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("L1,") != std::string::npos);
  CHECK(r.out.find("L2,") != std::string::npos);
  CHECK(r.out.find("delta L2-L1") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"synth", "--n", "3", "--out", "/tmp/x"}).code == kExitUsage);
  CHECK(cli({"audit", "/definitely/not/here", "--out", "/tmp/x"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);

  const auto dir = scratch("mismatch");
  REQUIRE(cli({"synth", "--n", "5", "--seed", "1", "--out", (dir / "a").string()}).code == 0);
  REQUIRE(cli({"synth", "--n", "6", "--seed", "1", "--out", (dir / "b").string()}).code == 0);
  REQUIRE(cli({"audit", (dir / "a").string(), "--out", (dir / "preds").string()}).code == 0);
  const auto r = cli({"eval", (dir / "preds").string(), (dir / "b" / "truth.labels").string(),
                      "--corpus", (dir / "b").string()});
  CHECK(r.code == kExitError);
  CHECK_FALSE(r.err.empty());
  fs::remove_all(dir);
}

TEST_CASE("same seed, same bytes, same run id") {
  const auto dir = scratch("repro");
  for (const char* sub : {"one", "two"}) {
    REQUIRE(cli({"synth", "--n", "10", "--seed", "42", "--out", (dir / sub).string()}).code == 0);
  }
  for (const auto& e : fs::directory_iterator(dir / "one")) {
    const auto name = e.path().filename();
    if (name == "manifest.json") continue;
    CHECK_MESSAGE(slurp(e.path()) == slurp(dir / "two" / name), name.string());
  }
  const auto first = read_manifest(dir / "one" / "manifest.json");
  REQUIRE(cli({"synth", "--n", "10", "--seed", "42", "--out", (dir / "one").string()}).code == 0);
  const auto again = read_manifest(dir / "one" / "manifest.json");
  CHECK(first.run_id == again.run_id);
  CHECK(first.output_digests == again.output_digests);
  CHECK(first.run_id != read_manifest(dir / "two" / "manifest.json").run_id);
  fs::remove_all(dir);
}

TEST_CASE("settings") {
  const auto dir = scratch("config");
  std::ofstream(dir / "dpaudit.toml") << "[detector]\nmaze_depth_threshold = 5\n";
  const auto r = cli({"--config", (dir / "dpaudit.toml").string(), "--show-config"});
  CHECK(r.code == 0);
  CHECK(r.out.find("maze_depth_threshold = 5") != std::string::npos);
  std::ofstream(dir / "bad.toml") << "[detector]\nnope = 1\n";
  CHECK(cli({"--config", (dir / "bad.toml").string(), "--show-config"}).code == kExitError);
  fs::remove_all(dir);
}
