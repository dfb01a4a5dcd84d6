#include <gtest/gtest.h>

#include "corpuskit/errors.hpp"
#include "corpuskit/sim.hpp"
#include "helpers.hpp"

using namespace corpuskit;
using testing_support::mini;
using testing_support::small_config;

namespace {

TEST(Scenario, BuildIsDeterministic) {
  const auto a = sim::build_scenario(small_config(800));
  const auto b = sim::build_scenario(small_config(800));
  EXPECT_EQ(sim::timeline_to_ndjson(a), sim::timeline_to_ndjson(b));
  EXPECT_EQ(a.accounts, b.accounts);
  EXPECT_EQ(a.graph.edges, b.graph.edges);
  auto other = small_config(800);
  other.seed = 99;
  EXPECT_NE(sim::timeline_to_ndjson(sim::build_scenario(other)), sim::timeline_to_ndjson(a));
}

TEST(Scenario, TimelineOrderedAndInWindow) {
  const auto& s = mini();
  ASSERT_EQ(s.timeline.size(), s.script.size());
  for (std::size_t i = 0; i < s.timeline.size(); ++i) {
    const auto& t = s.timeline[i];
    EXPECT_GE(t.created_at, s.start());
    EXPECT_LT(t.created_at, s.end());
    if (i) {
      EXPECT_LT(std::tie(s.timeline[i - 1].created_at, s.timeline[i - 1].id), std::tie(t.created_at, t.id));
    }
  }
  EXPECT_TRUE(std::is_sorted(s.accounts.begin(), s.accounts.end(),
                             [](const sim::Account& a, const sim::Account& b) { return a.id < b.id; }));
}

TEST(Scenario, ReferencesResolve) {
  const auto& s = mini();
  for (const auto& t : s.timeline) {
    ASSERT_TRUE(s.account(t.user_id)) << t.id;
    EXPECT_EQ(s.account(t.user_id)->screen_name, t.screen_name);
    if (t.reply_to_id) {
      EXPECT_TRUE(s.tweet(*t.reply_to_id)) << t.id;
    }
    for (const auto& m : t.mentions) {
      ASSERT_TRUE(s.account(m.user_id)) << t.id;
      EXPECT_EQ(s.account(m.user_id)->screen_name, m.screen_name);
    }
    EXPECT_TRUE(validate(t).empty()) << t.id;
  }
}

TEST(Scenario, GeoFractionNearConfigured) {
  const auto& s = mini();
  std::size_t geo = 0;
  for (const auto& t : s.timeline) geo += t.geo.has_value();
  const double f = static_cast<double>(geo) / static_cast<double>(s.timeline.size());
  EXPECT_NEAR(f, s.config.geo_fraction, 0.05);
}

TEST(Scenario, RepliesKeepTagWhenConfigured) {
  auto c = small_config(1500);
  c.reply_without_hashtag = 0.0;
  const auto s = sim::build_scenario(c);
  std::size_t tagged_replies = 0;
  for (std::size_t i = 0; i < s.timeline.size(); ++i) {
    const auto& t = s.timeline[i];
    if (!t.reply_to_id || s.script[i].thread_tag.empty()) continue;
    ++tagged_replies;
    bool found = false;
    for (const auto& h : t.hashtags) found |= normalize_hashtag(h.text) == s.script[i].thread_tag;
    EXPECT_TRUE(found) << t.id;
  }
  EXPECT_GT(tagged_replies, 0u);
}

TEST(Scenario, EmergentAccountsArePresent) {
  const auto& s = mini();
  const auto emergent = s.accounts_of(sim::AccountKind::emergent);
  EXPECT_EQ(emergent.size(), s.config.emergent.count);
  EXPECT_GT(s.emergence_time(), s.start());
  EXPECT_LT(s.emergence_time(), s.end());
}

TEST(World, WriteReadRoundTrip) {
  const auto s = sim::build_scenario(small_config(300));
  testing_support::TempDir dir;
  sim::write_world(s, dir.path());
  const auto back = sim::read_world(dir.path());
  EXPECT_EQ(back.config, s.config);
  EXPECT_EQ(back.accounts, s.accounts);
  EXPECT_EQ(back.timeline, s.timeline);
  EXPECT_EQ(back.script, s.script);
  EXPECT_EQ(back.graph.edges, s.graph.edges);
  EXPECT_THROW(sim::read_world(dir / "missing"), Error);
}

TEST(ScenarioConfig, JsonRoundTripAndErrors) {
  const auto c = sim::preset("bundestag-mini");
  EXPECT_EQ(sim::parse_scenario_config(sim::scenario_config_to_json(c)), c);
  EXPECT_THROW(sim::preset("nope"), ConfigError);
  auto bad = c;
  bad.geo_fraction = 1.5;
  try {
    sim::check_config(bad);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("geo"), std::string::npos);
  }
  bad = c;
  bad.topics.clear();
  EXPECT_THROW(sim::check_config(bad), ConfigError);
  bad = c;
  bad.reply_probability = 0.7;
  bad.retweet_probability = 0.5;
  EXPECT_THROW(sim::check_config(bad), ConfigError);
  EXPECT_THROW(sim::parse_scenario_config("{"), ParseError);
}

TEST(Source, DropSetReproducibleAndExact) {
  const auto& s = mini();
  sim::FaultSchedule f;
  f.drop_rate = 0.10;
  f.seed = 4;
  sim::SimulatedSource a(s, f), b(s, f);
  std::size_t dropped = 0;
  const std::size_t blocks = s.timeline.size() / 100;
  for (std::size_t i = 0; i < blocks * 100; ++i) {
    EXPECT_EQ(a.drops_event(i), b.drops_event(i));
    dropped += a.drops_event(i);
  }
  EXPECT_EQ(dropped, blocks * 10);
  f.seed = 5;
  sim::SimulatedSource c(s, f);
  bool differs = false;
  for (std::size_t i = 0; i < 1000; ++i) differs |= a.drops_event(i) != c.drops_event(i);
  EXPECT_TRUE(differs);
}

TEST(Source, SubscribeAfterEndIsEmpty) {
  const auto& s = mini();
  sim::SimulatedSource src(s);
  StreamQuery q;
  q.mode = StreamQuery::Mode::firehose;
  auto sub = src.subscribe(q, s.end());
  EXPECT_EQ(sub->next().kind, StreamEvent::Kind::end);
}

TEST(Source, UnreachableSubscribeThrows) {
  const auto& s = mini();
  sim::FaultSchedule f;
  const UtcTime t = s.start() + Seconds{3600};
  f.disconnects = {{{t, t + Seconds{600}}, 0}};
  sim::SimulatedSource src(s, f);
  EXPECT_FALSE(src.reachable(t + Seconds{1}));
  EXPECT_TRUE(src.reachable(t + Seconds{600}));
  StreamQuery q;
  q.mode = StreamQuery::Mode::firehose;
  EXPECT_THROW(src.subscribe(q, t + Seconds{10}), SourceError);
}

TEST(Source, BackfillReturnsOnlyAuthoredTweets) {
  const auto& s = mini();
  sim::SimulatedSource src(s);
  const auto& who = s.accounts_of(sim::AccountKind::candidate).front();
  const auto got = src.backfill_timeline(who.id, s.start(), s.end());
  std::size_t expect = 0;
  for (const auto& t : s.timeline) expect += t.user_id == who.id;
  EXPECT_EQ(got.size(), expect);
  for (const auto& t : got) EXPECT_EQ(t.user_id, who.id);
}

TEST(Source, RemovedIdsNoLongerResolve) {
  const auto& s = mini();
  sim::SimulatedSource src(s);
  const TweetId id = s.timeline[5].id;
  EXPECT_TRUE(src.lookup(id));
  src.remove(id);
  EXPECT_FALSE(src.lookup(id));
}

TEST(Bias, RecallAndMissing) {
  const auto& s = mini();
  const auto ref = sim::topic_tweets(s, "election");
  ASSERT_GT(ref.size(), 4u);
  std::set<TweetId> stored(ref.begin(), std::next(ref.begin(), static_cast<long>(ref.size() / 2)));
  const auto rows = sim::bias_report(s, {{"c", "topic", stored, ref}});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].hits, stored.size());
  EXPECT_DOUBLE_EQ(*rows[0].precision, 1.0);
  EXPECT_EQ(rows[0].missing.size(), ref.size() - stored.size());
  const auto empty = sim::bias_report(s, {{"c", "none", stored, {}}});
  EXPECT_FALSE(empty[0].recall);
}

TEST(DemoRoster, Deterministic) {
  EXPECT_EQ(sim::make_demo_roster(1).candidates, sim::make_demo_roster(1).candidates);
}

}  // namespace
