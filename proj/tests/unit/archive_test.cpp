#include <gtest/gtest.h>

#include "corpuskit/archive.hpp"
#include "corpuskit/errors.hpp"
#include "helpers.hpp"

using namespace corpuskit;
using testing_support::mini;
using testing_support::observe;
using testing_support::refs;
using testing_support::whole;

namespace {

const UtcTime kGen = *parse_utc("2013-12-31T00:00:00Z");

void fill(CorpusStore& store, const std::string& corpus, std::size_t n, std::size_t offset = 0) {
  const auto& tl = mini().timeline;
  for (std::size_t i = 0; i < n; ++i) store.append(tl[offset + i], corpus, false, tl[offset + i].created_at);
}

TEST(Dehydrate, CardinalityAndUniqueIds) {
  CorpusStore store;
  fill(store, "c", 120);
  const auto d = dehydrate(store, "c", nullptr, kGen);
  EXPECT_EQ(d.count(), 120u);
  std::set<TweetId> ids;
  for (const auto& r : d.rows) ids.insert(r.tweet_id);
  EXPECT_EQ(ids.size(), 120u);
  EXPECT_TRUE(std::is_sorted(d.rows.begin(), d.rows.end(),
                             [](const DehydratedRow& a, const DehydratedRow& b) { return a.tweet_id < b.tweet_id; }));
}

TEST(Dehydrate, ProbesAreNotExported) {
  CorpusStore store;
  fill(store, "c", 3);
  TweetRecord probe = mini().timeline[10];
  store.append(probe, "c", true, probe.created_at);
  EXPECT_EQ(dehydrate(store, "c", nullptr, kGen).count(), 3u);
}

TEST(Dehydrate, AnnotatesCandidates) {
  const auto& s = mini();
  const Roster roster = sim::scenario_roster(s);
  CorpusStore store;
  fill(store, "c", 400);
  const auto d = dehydrate(store, "c", &roster, kGen);
  const auto accounts = roster.twitter_accounts();
  std::size_t annotated = 0;
  for (const auto& r : d.rows) {
    const auto* t = s.tweet(r.tweet_id);
    ASSERT_TRUE(t);
    if (accounts.count(t->user_id)) {
      ASSERT_TRUE(r.candidate_id);
      EXPECT_EQ(*r.candidate_id, accounts.at(t->user_id));
      ++annotated;
    } else {
      EXPECT_FALSE(r.candidate_id);
    }
  }
  EXPECT_GT(annotated, 0u);
}

TEST(Dehydrate, TextFormatRoundTrips) {
  CorpusStore store;
  fill(store, "c", 50);
  const auto d = dehydrate(store, "c", nullptr, kGen);
  const std::string text = dehydrated_to_text(d);
  EXPECT_EQ(text.rfind("# corpus:c generated:2013-12-31T00:00:00Z\n", 0), 0u);
  EXPECT_EQ(parse_dehydrated(text), d);
  EXPECT_EQ(dehydrated_to_text(parse_dehydrated(text)), text);
}

TEST(ParseDehydrated, ErrorsCarryLineNumbers) {
  const auto expect_line = [](const std::string& text, const std::string& line) {
    try {
      parse_dehydrated(text);
      ADD_FAILURE() << text;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find("line " + line), std::string::npos) << e.what();
    }
  };
  expect_line("# corpus:c generated:2013-12-31T00:00:00Z\n1\t\nabc\t\n", "3");
  expect_line("# corpus:c generated:2013-12-31T00:00:00Z\n1\t\n1\t\n", "3");
  expect_line("1\t\n", "1");
}

TEST(Rehydrate, IdentityOnIntactStore) {
  CorpusStore store;
  fill(store, "c", 200);
  const auto d = dehydrate(store, "c", nullptr, kGen);
  const auto r = rehydrate(d, StoreLookup(store, "c"));
  EXPECT_TRUE(r.missing.empty());
  std::map<TweetId, TweetRecord> a, b;
  for (const auto& t : store.scan("c")) a[t.tweet.id] = t.tweet;
  for (const auto& t : r.tweets) b[t.id] = t;
  EXPECT_EQ(a, b);
}

TEST(Rehydrate, ReportsDeletedIds) {
  const auto& s = mini();
  CorpusStore store;
  fill(store, "c", 300);
  const auto d = dehydrate(store, "c", nullptr, kGen);
  sim::SimulatedSource platform(s);
  std::vector<TweetId> gone{d.rows[0].tweet_id, d.rows[17].tweet_id, d.rows[100].tweet_id, d.rows[101].tweet_id,
                            d.rows[299].tweet_id};
  for (auto id : gone) platform.remove(id);
  const auto r = rehydrate(d, platform);
  EXPECT_EQ(r.missing, gone);
  EXPECT_EQ(r.tweets.size(), 295u);
}

TEST(PrivacyFilter, KeepsExactlyRosterAuthors) {
  const auto& s = mini();
  const Roster roster = sim::scenario_roster(s);
  const auto accounts = roster.twitter_accounts();
  CorpusStore store;
  std::size_t candidate = 0, other = 0;
  for (const auto& t : s.timeline) {
    const bool c = accounts.count(t.user_id) > 0;
    if ((c && candidate < 40) || (!c && other < 60)) {
      store.append(t, "mixed", false, t.created_at);
      (c ? candidate : other)++;
    }
  }
  ASSERT_EQ(candidate, 40u);
  const auto r = privacy_filter(store, "mixed", roster, "mixed.public");
  EXPECT_EQ(r.kept, 40u);
  EXPECT_EQ(r.excluded, 60u);
  for (const auto& t : store.scan("mixed.public")) EXPECT_TRUE(accounts.count(t.tweet.user_id));
  // Already candidate-only: identity.
  const auto again = privacy_filter(store, "mixed.public", roster, "mixed.public2");
  EXPECT_EQ(again.kept, 40u);
  EXPECT_EQ(again.excluded, 0u);
}

TEST(PrivacyFilter, ExcludesPublicReplyMentioningCandidate) {
  const auto& s = mini();
  const Roster roster = sim::scenario_roster(s);
  const auto accounts = roster.twitter_accounts();
  CorpusStore store;
  const TweetRecord* reply = nullptr;
  for (const auto& t : s.timeline) {
    if (t.reply_to_id && !accounts.count(t.user_id) && !t.mentions.empty() && accounts.count(t.mentions[0].user_id)) {
      reply = &t;
      break;
    }
  }
  ASSERT_TRUE(reply);
  store.append(*reply, "c", false, reply->created_at);
  const auto r = privacy_filter(store, "c", roster);
  EXPECT_EQ(r.kept, 0u);
  EXPECT_EQ(r.excluded, 1u);
}

TEST(PrivacyFilter, EmptyRosterRefused) {
  CorpusStore store;
  fill(store, "c", 3);
  EXPECT_THROW(privacy_filter(store, "c", Roster{}), ConfigError);
}

TEST(ExportCandidates, EmptyRosterIsHeaderOnly) {
  const std::string csv = export_candidates(Roster{});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  EXPECT_EQ(csv.rfind("candidate_id,", 0), 0u);
}

TEST(ArchivePipeline, ObserverCorpusRoundTrip) {
  const auto& s = mini();
  sim::SimulatedSource src(s);
  CorpusStore store;
  const CorpusDefinition d{"cand", AccountQuery{refs(s.accounts_of(sim::AccountKind::candidate))}, std::nullopt,
                           whole(s)};
  observe(d, src, store);
  const auto list = dehydrate(store, "cand", nullptr, kGen);
  EXPECT_EQ(list.count(), sim::ground_truth(s, d).size());
  EXPECT_TRUE(rehydrate(parse_dehydrated(dehydrated_to_text(list)), src).missing.empty());
}

}  // namespace
