#include <gtest/gtest.h>

#include <thread>

#include "corpuskit/errors.hpp"
#include "corpuskit/store.hpp"
#include "helpers.hpp"

using namespace corpuskit;
using testing_support::mini;
using testing_support::TempDir;

namespace {

TweetRecord tweet(TweetId id, const std::string& when = "2013-06-02T10:00:00Z") {
  TweetRecord t;
  t.id = id;
  t.user_id = 1;
  t.screen_name = "a";
  t.created_at = *parse_utc(when);
  t.text = "text " + std::to_string(id);
  return t;
}

const UtcTime kNow = *parse_utc("2013-06-03T00:00:00Z");

TEST(Store, AppendThenDuplicate) {
  CorpusStore s;
  EXPECT_EQ(s.append(tweet(1), "c", false, kNow), AppendResult::appended);
  EXPECT_EQ(s.append(tweet(1), "c", false, kNow), AppendResult::duplicate);
  EXPECT_EQ(s.count("c"), 1u);
}

TEST(Store, CorporaAreParallel) {
  CorpusStore s;
  EXPECT_EQ(s.append(tweet(1), "a", false, kNow), AppendResult::appended);
  EXPECT_EQ(s.append(tweet(1), "b", false, kNow), AppendResult::appended);
  EXPECT_EQ(s.scan("a").size(), 1u);
  EXPECT_EQ(s.scan("b").size(), 1u);
}

TEST(Store, UnknownCorpusIsNamed) {
  CorpusStore s;
  try {
    s.scan("nope");
    FAIL();
  } catch (const StoreError& e) {
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
  }
  EXPECT_THROW(s.append(tweet(1), "../evil", false, kNow), StoreError);
}

TEST(Store, EmptyCorpusScansEmpty) {
  CorpusStore s;
  s.ensure_corpus("empty");
  EXPECT_TRUE(s.scan("empty").empty());
  EXPECT_TRUE(s.has_corpus("empty"));
}

TEST(Store, ProbesHiddenByDefault) {
  CorpusStore s;
  s.append(tweet(1), "c", false, kNow);
  s.append(tweet(2), "c", true, kNow);
  EXPECT_EQ(s.scan("c").size(), 1u);
  EXPECT_EQ(s.scan("c", std::nullopt, true).size(), 2u);
  EXPECT_EQ(s.count("c", false), 1u);
  EXPECT_EQ(s.count("c", true), 2u);
}

TEST(Store, WindowScanMatchesOracle) {
  const auto& sc = mini();
  CorpusStore s;
  for (const auto& t : sc.timeline) s.append(t, "all", false, t.created_at);
  const Interval half{sc.start(), sc.start() + sc.config.duration / 2};
  std::set<TweetId> expect;
  for (const auto& t : sc.timeline) {
    if (t.created_at >= half.start && t.created_at < half.end) expect.insert(t.id);
  }
  std::set<TweetId> got;
  for (const auto& r : s.scan("all", half)) got.insert(r.tweet.id);
  EXPECT_EQ(got, expect);
}

TEST(Store, PersistsAndReloads) {
  TempDir dir;
  {
    CorpusStore s(dir.path());
    s.append(tweet(1), "c", false, kNow);
    s.append(tweet(2), "c", true, kNow);
    s.append(tweet(3), "d", false, kNow);
  }
  CorpusStore s(dir.path());
  EXPECT_EQ(s.corpora(), (std::vector<std::string>{"c", "d"}));
  const auto all = s.scan("c", std::nullopt, true);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].tweet, tweet(1));
  EXPECT_TRUE(all[1].is_probe);
  EXPECT_EQ(s.append(tweet(1), "c", false, kNow), AppendResult::duplicate);
  EXPECT_TRUE(s.find("d", 3));
  EXPECT_FALSE(s.find("d", 1));
}

TEST(Store, RejectsCorruptFile) {
  TempDir dir;
  {
    CorpusStore s(dir.path());
    s.append(tweet(1), "c", false, kNow);
  }
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path())) {
    if (e.is_regular_file() && e.path().extension() == ".ndjson") {
      std::ofstream(e.path(), std::ios::app) << "{not json\n";
    }
  }
  EXPECT_THROW(CorpusStore{dir.path()}, StoreError);
}

TEST(Store, StoredRecordJsonRoundTrip) {
  StoredTweet s{tweet(77), "c", kNow, true};
  EXPECT_EQ(stored_tweet_from_json(stored_tweet_to_json(s)), s);
}

TEST(Store, ConcurrentAppendsKeepOneCopy) {
  CorpusStore s;
  std::atomic<int> appended{0};
  std::vector<std::thread> threads;
  for (int k = 0; k < 4; ++k) {
    threads.emplace_back([&] {
      for (TweetId id = 1; id <= 500; ++id) {
        if (s.append(tweet(id), "c", false, kNow) == AppendResult::appended) ++appended;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(appended.load(), 500);
  EXPECT_EQ(s.count("c"), 500u);
}

TEST(StoreLookup, ResolvesStoredIds) {
  CorpusStore s;
  s.append(tweet(5), "c", false, kNow);
  StoreLookup l(s, "c");
  EXPECT_EQ(l.lookup(5), tweet(5));
  EXPECT_FALSE(l.lookup(6));
}

}  // namespace
