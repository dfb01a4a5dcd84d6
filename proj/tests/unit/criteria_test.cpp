#include <gtest/gtest.h>

#include "corpuskit/criteria.hpp"
#include "corpuskit/errors.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace corpuskit;
using testing_support::mini;
using testing_support::refs;
using testing_support::whole;

namespace {

TweetRecord tweet_at(const std::string& text, UtcTime at, UserId author = 7) {
  TweetRecord t;
  t.id = 42;
  t.user_id = author;
  t.screen_name = "someone";
  t.created_at = at;
  t.text = text;
  const auto e = extract_entities(text);
  t.hashtags = e.hashtags;
  t.mentions = e.mentions;
  return t;
}

const Interval kJune{*parse_utc("2013-06-01T00:00:00Z"), *parse_utc("2013-07-01T00:00:00Z")};
const UtcTime kMid = *parse_utc("2013-06-15T12:00:00Z");

TEST(Matches, DirectAuthor) {
  CorpusDefinition d{"c", AccountQuery{{{630340041, "lkaczmirek"}}}, std::nullopt, kJune};
  EXPECT_TRUE(matches(tweet_at("nothing special", kMid, 630340041), d));
  EXPECT_FALSE(matches(tweet_at("nothing special", kJune.end, 630340041), d));
}

TEST(Matches, MentionAndNameHashtag) {
  AccountQuery q{{{630340041, "lkaczmirek"}}};
  CorpusDefinition d{"c", q, std::nullopt, kJune};
  EXPECT_TRUE(matches(tweet_at("hallo @LKaczmirek", kMid), d));
  EXPECT_TRUE(matches(tweet_at("#lkaczmirek rocks", kMid), d));
  std::get<AccountQuery>(d.strategy).match_mentions = false;
  EXPECT_FALSE(matches(tweet_at("hallo @lkaczmirek", kMid), d));
  std::get<AccountQuery>(d.strategy).match_name_hashtag = false;
  EXPECT_FALSE(matches(tweet_at("#lkaczmirek rocks", kMid), d));
}

TEST(Matches, RetweetsAndRepliesFlag) {
  AccountQuery q{{{630340041, "lkaczmirek"}}};
  q.include_retweets_and_replies = false;
  CorpusDefinition d{"c", q, std::nullopt, kJune};
  auto rt = tweet_at("RT @lkaczmirek: text", kMid);
  rt.is_retweet = true;
  EXPECT_FALSE(matches(rt, d));
  rt.user_id = 630340041;
  EXPECT_TRUE(matches(rt, d));
}

TEST(Matches, HashtagCaseInsensitive) {
  CorpusDefinition d{"c", KeywordQuery{{"wahl2013", "btw13"}, {}}, std::nullopt, kJune};
  EXPECT_TRUE(matches(tweet_at("los #wahl2013", kMid), d));
  EXPECT_TRUE(matches(tweet_at("los #Wahl2013", kMid), d));
  EXPECT_FALSE(matches(tweet_at("los wahl2013", kMid), d));
  EXPECT_FALSE(matches(tweet_at("los #wahl2013x", kMid), d));
}

TEST(Matches, TermsAreWholeTokens) {
  CorpusDefinition d{"c", KeywordQuery{{}, {"election 2013"}}, std::nullopt, kJune};
  EXPECT_TRUE(matches(tweet_at("The Election 2013 is here", kMid), d));
  EXPECT_FALSE(matches(tweet_at("the election in 2013", kMid), d));
  EXPECT_FALSE(matches(tweet_at("preelection 2013", kMid), d));
}

TEST(Matches, MetadataConjunction) {
  MetadataQuery m;
  m.country = "DE";
  m.languages = {"de"};
  m.format = {FormatPredicate::must_have_url};
  CorpusDefinition d{"c", m, std::nullopt, kJune};
  auto t = tweet_at("x https://example.org", kMid);
  t.urls = {"https://example.org"};
  t.geo = GeoTag{50, 8, "de"};
  t.language = "DE";
  EXPECT_TRUE(matches(t, d));
  t.urls.clear();
  EXPECT_FALSE(matches(t, d));
  t.urls = {"u"};
  t.geo.reset();
  EXPECT_FALSE(matches(t, d));
}

TEST(Matches, ExtraMetadataNarrowsAnyStrategy) {
  MetadataQuery m;
  m.format = {FormatPredicate::retweets_only};
  CorpusDefinition d{"c", KeywordQuery{{"nsa"}, {}}, m, kJune};
  auto t = tweet_at("#nsa", kMid);
  EXPECT_FALSE(matches(t, d));
  t.is_retweet = true;
  EXPECT_TRUE(matches(t, d));
}

TEST(Matches, AgreesWithOracleOverScenario) {
  const auto& s = mini();
  MetadataQuery lang;
  lang.languages = {"en"};
  MetadataQuery fmt;
  fmt.format = {FormatPredicate::must_have_image};
  AccountQuery everyone{refs(s.accounts)};
  const std::vector<CorpusDefinition> defs{
      {"a", AccountQuery{refs(s.accounts_of(sim::AccountKind::journalist))}, std::nullopt, whole(s)},
      {"all", everyone, std::nullopt, whole(s)},
      {"k", KeywordQuery{{"nsa", "ltw"}, {"neuland", "ist"}}, std::nullopt, whole(s)},
      {"m", lang, fmt, whole(s)},
      {"r", RandomSampleQuery{0.1, 3}, std::nullopt, {s.start(), s.start() + std::chrono::days{20}}},
  };
  for (const auto& d : defs) {
    std::size_t hits = 0;
    for (const auto& t : s.timeline) {
      const bool m = matches(t, d);
      ASSERT_EQ(m, oracle::matches(t, d)) << d.name << " " << t.id;
      hits += m;
    }
    EXPECT_GT(hits, 0u) << d.name;
  }
}

TEST(Sampler, RateOneAcceptsAll) {
  for (TweetId id = 0; id < 1000; ++id) EXPECT_TRUE(sample_decision(id, 1.0, 5));
}

TEST(Sampler, Deterministic) {
  for (TweetId id = 1; id < 1000; id += 37) EXPECT_EQ(sample_decision(id, 0.3, 9), sample_decision(id, 0.3, 9));
}

TEST(Sampler, SequentialIdsHitRate) {
  std::size_t n = 0;
  for (TweetId id = 1; id <= 100000; ++id) n += sample_decision(id, 0.25, 0);
  EXPECT_NEAR(static_cast<double>(n) / 100000.0, 0.25, 0.01);
}

TEST(Sampler, SeedChangesSelection) {
  std::size_t differ = 0;
  for (TweetId id = 1; id <= 1000; ++id) differ += sample_decision(id, 0.5, 1) != sample_decision(id, 0.5, 2);
  EXPECT_GT(differ, 300u);
}

TEST(CompileQuery, Accounts) {
  const auto q = compile_query({"c", AccountQuery{{{630340041, "lkaczmirek"}}}, std::nullopt, kJune});
  EXPECT_EQ(q.mode, StreamQuery::Mode::filter);
  EXPECT_EQ(q.follow_ids, std::vector<UserId>{630340041});
  EXPECT_EQ(q.track_terms, std::vector<std::string>{"lkaczmirek"});
}

TEST(CompileQuery, Keywords) {
  const auto q = compile_query({"c", KeywordQuery{{"ltw"}, {}}, std::nullopt, kJune});
  EXPECT_EQ(q.track_terms, std::vector<std::string>{"#ltw"});
  EXPECT_TRUE(q.follow_ids.empty());
}

TEST(CompileQuery, RandomAndFirehose) {
  const auto r = compile_query({"c", RandomSampleQuery{0.25, 4}, std::nullopt, kJune});
  EXPECT_EQ(r.mode, StreamQuery::Mode::sample);
  EXPECT_TRUE(r.track_terms.empty());
  EXPECT_EQ(r.sample_rate, 0.25);
  MetadataQuery m;
  m.format = {FormatPredicate::must_have_image};
  EXPECT_EQ(compile_query({"c", m, std::nullopt, kJune}).mode, StreamQuery::Mode::firehose);
}

TEST(CheckDefinition, Rejections) {
  EXPECT_THROW(check_definition({"c", AccountQuery{}, std::nullopt, kJune}), ConfigError);
  EXPECT_THROW(check_definition({"c", KeywordQuery{}, std::nullopt, kJune}), ConfigError);
  EXPECT_THROW(check_definition({"c", KeywordQuery{{"Wahl"}, {}}, std::nullopt, kJune}), ConfigError);
  EXPECT_THROW(check_definition({"c", RandomSampleQuery{0.0, 0}, std::nullopt, kJune}), ConfigError);
  EXPECT_THROW(check_definition({"c", MetadataQuery{}, std::nullopt, kJune}), ConfigError);
  EXPECT_THROW(check_definition({"c", KeywordQuery{{"x"}, {}}, std::nullopt, {kJune.end, kJune.start}}), ConfigError);
  EXPECT_NO_THROW(check_definition({"c", KeywordQuery{{"x"}, {}}, std::nullopt, kJune}));
}

TEST(Widen, AddsAndDeduplicates) {
  CorpusDefinition d{"c", AccountQuery{{{1, "a"}}}, std::nullopt, kJune};
  const auto w = widen(d, {{1, "a"}, {2, "b"}}, {}, {});
  EXPECT_EQ(std::get<AccountQuery>(w.strategy).accounts.size(), 2u);
  EXPECT_THROW(widen(d, {}, {"tag"}, {}), ConfigError);
  CorpusDefinition k{"k", KeywordQuery{{"nsa"}, {}}, std::nullopt, kJune};
  const auto wk = widen(k, {}, {"#Snowden", "nsa"}, {});
  EXPECT_EQ(std::get<KeywordQuery>(wk.strategy).hashtags, (std::vector<std::string>{"nsa", "snowden"}));
  EXPECT_THROW(widen(k, {{3, "c"}}, {}, {}), ConfigError);
}

TEST(Widen, IsMonotone) {
  const auto& s = mini();
  CorpusDefinition d{"c", AccountQuery{refs(s.accounts_of(sim::AccountKind::candidate))}, std::nullopt, whole(s)};
  const auto w = widen(d, refs(s.accounts_of(sim::AccountKind::emergent)), {}, {});
  for (const auto& t : s.timeline) {
    if (matches(t, d)) {
      EXPECT_TRUE(matches(t, w));
    }
  }
}

TEST(CorpusConfig, ParsesAllStrategies) {
  const auto defs = parse_corpus_config(R"({"corpora":[
    {"name":"cand","window":{"start":"2013-06-01T00:00:00Z","end":"2013-12-31T00:00:00Z"},
     "strategy":{"type":"accounts","accounts":[{"id":630340041,"screenName":"lkaczmirek"}]}},
    {"name":"tags","window":{"start":"2013-06-01T00:00:00Z","end":"2013-12-31T00:00:00Z"},
     "strategy":{"type":"keywords","hashtags":["#Wahl2013","btw13"]},"metadata":{"languages":["de"]}},
    {"name":"geo","window":{"start":"2013-06-01T00:00:00Z","end":"2013-12-31T00:00:00Z"},
     "strategy":{"type":"metadata","country":"DE","format":["must_have_url"]}},
    {"name":"rnd","window":{"start":"2013-06-01T00:00:00Z","end":"2013-12-31T00:00:00Z"},
     "strategy":{"type":"random","rate":0.01,"seed":3}}]})");
  ASSERT_EQ(defs.size(), 4u);
  EXPECT_EQ(std::get<KeywordQuery>(defs[1].strategy).hashtags, (std::vector<std::string>{"wahl2013", "btw13"}));
  EXPECT_TRUE(defs[1].extra_metadata);
  EXPECT_EQ(std::get<RandomSampleQuery>(defs[3].strategy).seed, 3u);
  EXPECT_EQ(parse_corpus_config(corpus_config_to_json(defs)), defs);
}

TEST(CorpusConfig, ErrorsNameCorpusAndField) {
  const auto expect_error = [](const std::string& json, const std::string& needle) {
    try {
      parse_corpus_config(json);
      ADD_FAILURE() << "no error for " << json;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  const std::string w = R"("window":{"start":"2013-06-01T00:00:00Z","end":"2013-07-01T00:00:00Z"})";
  expect_error(R"({"corpora":[{"name":"x",)" + w + R"(,"strategy":{"type":"accounts","accounts":[]}}]})", "strategy.accounts");
  expect_error(R"({"corpora":[{"name":"x",)" + w + R"(,"strategy":{"type":"random","rate":2}}]})", "strategy.rate");
  expect_error(R"({"corpora":[{"name":"x",)" + w + R"(,"strategy":{"type":"bogus"}}]})", "strategy.type");
  expect_error(R"({"corpora":[{"name":"x","window":{"start":"2013-07-01T00:00:00Z","end":"2013-06-01T00:00:00Z"},)"
               R"("strategy":{"type":"keywords","hashtags":["a"]}}]})",
               "window");
  expect_error(R"({"corpora":[{"name":"x",)" + w + R"(,"strategy":{"type":"keywords","hashtags":["a"]}},)" +
                   R"({"name":"x",)" + w + R"(,"strategy":{"type":"keywords","hashtags":["b"]}}]})",
               "duplicate");
  EXPECT_THROW(parse_corpus_config("{"), ParseError);
}

TEST(CorpusConfig, ShippedExampleLoads) {
  const auto defs = load_corpus_config(std::string(CORPUSKIT_SOURCE_DIR) + "/config/corpora.example.json");
  std::vector<std::string> names;
  for (const auto& d : defs) names.push_back(d.name);
  EXPECT_EQ(names, (std::vector<std::string>{"candidates", "media_agents", "political_topics", "media_content",
                                             "nsa_snowden", "geo_de", "sample"}));
}

TEST(Time, CanonicalForm) {
  const auto t = parse_utc("2014-03-19T11:08:00Z");
  ASSERT_TRUE(t);
  EXPECT_EQ(format_utc(*t), "2014-03-19T11:08:00Z");
  EXPECT_FALSE(parse_utc("2014-03-19 11:08:00"));
  EXPECT_FALSE(parse_utc("2014-02-30T00:00:00Z"));
  EXPECT_THROW(parse_utc_field("nope", "x"), ConfigError);
  const Interval i{*t, *t + Seconds{10}};
  EXPECT_TRUE(i.contains(*t));
  EXPECT_FALSE(i.contains(*t + Seconds{10}));
}

}  // namespace
