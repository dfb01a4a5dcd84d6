#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "corpuskit/authority.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace corpuskit;
using testing_support::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, HelpSucceeds) {
  const auto r = call({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("collect"), std::string::npos);
}

TEST(Cli, UsageErrorsAreConfigErrors) {
  EXPECT_EQ(call({}).code, 2);
  EXPECT_EQ(call({"store", "scan", "--store", "x"}).code, 2);
  EXPECT_EQ(call({"no-such-command"}).code, 2);
}

TEST(Cli, ExitCodesFollowCategory) {
  TempDir dir;
  // Missing config file.
  EXPECT_EQ(call({"sim", "build", "--config", (dir / "none.json").string(), "--out", (dir / "w").string()}).code, 2);
  // Unknown corpus in an empty store.
  const auto r = call({"store", "scan", "--store", (dir / "s").string(), "--corpus", "missing"});
  EXPECT_EQ(r.code, 4);
  EXPECT_FALSE(r.err.empty());
  // Malformed roster.
  testing_support::spit(dir / "roster.csv", "id,name\n");
  EXPECT_EQ(call({"store", "export-candidates", "--roster", (dir / "roster.csv").string()}).code, 2);
}

TEST(Cli, AuthoritiesMatchBruteForce) {
  TempDir dir;
  const auto& s = testing_support::mini();
  ASSERT_EQ(call({"sim", "build", "--preset", "bundestag-mini", "--out", (dir / "w").string()}).code, 0);
  ASSERT_EQ(call({"sim", "export", "--world", (dir / "w").string(), "--what", "graph", "--out",
                  (dir / "e.tsv").string(), "--groups", (dir / "g.json").string()})
                .code,
            0);
  const auto r = call({"authorities", "--graph", (dir / "e.tsv").string(), "--groups", (dir / "g.json").string(),
                       "--threshold", "1/4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::ordered_json::parse(r.out);
  std::set<UserId> got = j["authorities"].get<std::set<UserId>>();
  auto expect = oracle::authorities(s.graph.edges, s.graph.gatekeepers, 1, 4);
  for (auto id : oracle::authorities(s.graph.edges, s.graph.journalists, 1, 4)) expect.insert(id);
  for (auto id : oracle::authorities(s.graph.edges, s.graph.editors, 1, 4)) expect.insert(id);
  EXPECT_EQ(got, expect);
}

TEST(Cli, CollectRunThenStatus) {
  TempDir dir;
  const std::string world = (dir / "w").string(), store = (dir / "s").string();
  ASSERT_EQ(call({"sim", "build", "--preset", "bundestag-mini", "--out", world}).code, 0);
  testing_support::spit(dir / "corpora.json",
                        R"({"corpora":[{"name":"tags","strategy":{"type":"keywords","hashtags":["wahl2013"]},)"
                        R"("window":{"start":"2013-06-01T00:00:00Z","end":"2013-08-30T00:00:00Z"}}]})");
  const auto run = call({"collect", "run", "--corpora", (dir / "corpora.json").string(), "--world", world,
                         "--store", store, "--manifest", (dir / "m.json").string(), "--probes", "10"});
  ASSERT_EQ(run.code, 0) << run.err;
  const auto st = call({"collect", "status", "--manifest", (dir / "m.json").string()});
  EXPECT_EQ(st.code, 0);
  EXPECT_NE(st.out.find("tags"), std::string::npos);
  EXPECT_NE(st.out.find("1.0000"), std::string::npos);
  const auto scan = call({"collect", "status", "--store", store});
  EXPECT_NE(scan.out.find("tags\t"), std::string::npos);
  EXPECT_NE(scan.out.find("\t10\n"), std::string::npos);
}

TEST(Cli, EngagementReport) {
  TempDir dir;
  testing_support::spit(dir / "posts.ndjson",
                        "{\"id\":\"1\",\"wall\":\"a\",\"author\":7,\"kind\":\"comment\",\"createdAt\":\"2013-08-01T12:00:00Z\"}\n"
                        "{\"id\":\"2\",\"wall\":\"b\",\"author\":7,\"kind\":\"post\",\"createdAt\":\"2013-08-01T12:00:00Z\"}\n");
  const auto r = call({"engagement", "--posts", (dir / "posts.ndjson").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(r.out.empty());
}

}  // namespace
