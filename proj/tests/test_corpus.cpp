#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"

#include "dpaudit/config.hpp"
#include "dpaudit/corpus.hpp"
#include "dpaudit/probe.hpp"
#include "dpaudit/synth.hpp"

using namespace dpaudit;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dpaudit_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Local HTTP fixture: /ok 200, /gone 404, /moved -> /ok, /loop -> /loop.
struct FixtureServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  FixtureServer() {
    server.Get("/ok", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok", "text/plain");
    });
    server.Get("/gone", [](const httplib::Request&, httplib::Response& res) { res.status = 404; });
    server.Get("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    server.Get("/moved", [](const httplib::Request&, httplib::Response& res) {
      res.set_redirect("/ok");
    });
    server.Get("/loop", [](const httplib::Request&, httplib::Response& res) {
      res.set_redirect("/loop");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FixtureServer() {
    server.stop();
    thread.join();
  }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port) + path;
  }
};

int closed_port() {
  httplib::Server s;
  return s.bind_to_any_port("127.0.0.1");
}

}  // namespace

TEST_CASE("config files") {
  SUBCASE("all tables") {
    const auto c = parse_config(R"(
# thresholds
[detector]
maze_depth_threshold = 4
ambiguous_label_lexicon = ["Info Request", "data inquiry"]

[llm]
endpoint = "https://llm.example/v1/chat/completions"
model = "m1"  # trailing comment
temperature = 0.2
max_attempts = 5

[probe]
concurrency = 2
)");
    CHECK(c.detector.maze_depth_threshold == 4);
    CHECK(c.detector.ambiguous_label_lexicon.count("info request"));
    CHECK(c.llm.model == "m1");
    CHECK(c.llm.temperature == doctest::Approx(0.2));
    CHECK(c.max_attempts == 5);
    CHECK(c.probe.concurrency == 2);
    CHECK(c.probe.timeout_ms == 10000);
  }
  SUBCASE("unknown key") {
    CHECK_THROWS_AS(parse_config("[detector]\nmaze_depth = 4\n"), SchemaError);
    CHECK_THROWS_AS(parse_config("[nowhere]\nx = 1\n"), SchemaError);
  }
  SUBCASE("malformed values") {
    CHECK_THROWS_AS(parse_config("[detector]\nmaze_depth_threshold = \"four\"\n"), SchemaError);
    CHECK_THROWS_AS(parse_config("[llm]\nmodel = \"unterminated\n"), SchemaError);
    CHECK_THROWS_AS(parse_config("[detector]\nmaze_depth_threshold = 0\n"), Error);
  }
  SUBCASE("api key from the environment, redacted on output") {
    auto c = parse_config("[llm]\napi_key = \"from-file\"\n");
    ::setenv("DPAUDIT_API_KEY", "from-env", 1);
    apply_environment(c);
    ::unsetenv("DPAUDIT_API_KEY");
    CHECK(c.llm.api_key == "from-env");
    const auto doc = config_to_json(c);
    CHECK(doc.dump().find("from-env") == std::string::npos);
    CHECK(config_to_text(c).find("from-env") == std::string::npos);
  }
}

TEST_CASE("registry csv") {
  const auto entries = parse_registry(
      "broker_name,url\nAcme Data,https://acme.example/\n\"Beta, Inc\",http://beta.example/x\n");
  REQUIRE(entries.size() == 2);
  CHECK(entries[1].broker_name == "Beta, Inc");
  CHECK(entries[0].probe_result == ProbeResult::Pending);
  const auto back = parse_registry(registry_to_csv(entries));
  CHECK(back.size() == 2);
  CHECK(back[1].broker_name == "Beta, Inc");

  CHECK_THROWS_AS(parse_registry("name,link\nA,https://a.example/\n"), SchemaError);
  CHECK_THROWS_AS(parse_registry("broker_name,url\nA,not a url\n"), SchemaError);
  CHECK(valid_url("https://a.example/path?q=1"));
  CHECK_FALSE(valid_url("ftp://a.example/"));
}

TEST_CASE("corpus documents round-trip on disk") {
  const auto dir = scratch("corpus");
  const auto items = generate_corpus(5, 3, CorpusMix::table4());
  std::vector<WorkflowTrace> traces;
  TruthLabels truth;
  for (const auto& it : items) {
    traces.push_back(it.trace);
    truth[it.trace.broker_id] = it.truth;
  }
  write_traces(dir, traces);
  write_truth(dir, truth);
  const auto back = read_traces(dir);
  CHECK(back.size() == 5);
  CHECK(read_truth(dir / std::string(kTruthFile)) == truth);

  SUBCASE("file name must match the broker id") {
    fs::rename(dir / (traces[0].broker_id + ".trace"), dir / "renamed.trace");
    CHECK_THROWS_AS(read_traces(dir), SchemaError);
  }
  fs::remove_all(dir);
}

TEST_CASE("run manifests detect tampering") {
  const auto dir = scratch("manifest");
  std::ofstream(dir / "input.txt") << "alpha";
  RunManifest m;
  m.command = "audit";
  m.argv = {"dpaudit", "audit", "x"};
  m.input_digests = digest_paths({dir / "input.txt"});
  m.run_id = derive_run_id(m.argv, m.input_digests);
  m.started_at = m.finished_at = utc_now();
  CHECK(m.run_id.size() == 16);
  CHECK(m.run_id == derive_run_id(m.argv, m.input_digests));
  write_manifest(dir / "manifest.json", m);

  CHECK(read_manifest(dir / "manifest.json").run_id == m.run_id);
  CHECK(digest_paths({dir}).size() == 1);
  std::ofstream(dir / "input.txt") << "beta";
  CHECK_THROWS_AS(read_manifest(dir / "manifest.json"), TamperError);
  CHECK_NOTHROW(read_manifest(dir / "manifest.json", false));
  fs::remove(dir / "input.txt");
  CHECK_THROWS_AS(read_manifest(dir / "manifest.json"), TamperError);
  fs::remove_all(dir);
}

TEST_CASE("probe against a local server") {
  FixtureServer srv;
  ProbeOptions opts;
  opts.timeout_ms = 2000;
  opts.concurrency = 4;

  SUBCASE("one of three refused") {
    std::vector<RegistryEntry> entries{
        {"a", srv.url("/ok")},
        {"b", srv.url("/moved")},
        {"c", "http://127.0.0.1:" + std::to_string(closed_port()) + "/"}};
    ProbeStats stats;
    const auto out = probe(entries, opts, &stats);
    CHECK(out[0].probe_result == ProbeResult::Reachable);
    CHECK(out[1].probe_result == ProbeResult::Reachable);
    CHECK(out[2].probe_result == ProbeResult::Unreachable);
    CHECK(stats.requests == 4);
  }
  SUBCASE("status codes") {
    const auto out = probe({{"g", srv.url("/gone")}, {"b", srv.url("/broken")}, {"l", srv.url("/loop")}},
                           opts);
    CHECK(out[0].probe_result == ProbeResult::Unreachable);
    CHECK(out[1].probe_result == ProbeResult::Unreachable);
    CHECK(out[2].probe_result == ProbeResult::Reachable);
  }
  SUBCASE("475 entries, 19 gone") {
    std::vector<RegistryEntry> entries;
    for (int i = 0; i < 475; ++i) {
      entries.push_back({"broker " + std::to_string(i), srv.url(i % 25 == 3 ? "/gone" : "/ok")});
    }
    opts.concurrency = 16;
    const auto out = probe(entries, opts);
    CHECK(out.size() == 475);
    const auto kept = std::count_if(out.begin(), out.end(), [](const RegistryEntry& e) {
      return e.probe_result == ProbeResult::Reachable;
    });
    CHECK(kept == 456);
    CHECK(out[3].broker_name == "broker 3");
  }
  SUBCASE("empty registry") { CHECK_THROWS_AS(probe({}, opts), PreconditionError); }
}
