#include <gtest/gtest.h>

#include "corpuskit/errors.hpp"
#include "corpuskit/roster.hpp"
#include "helpers.hpp"

using namespace corpuskit;

namespace {

const UtcTime kDecided = *parse_utc("2013-05-15T00:00:00Z");

AccountCandidate account(UserId id, const std::string& name, std::set<Evidence> ev, bool professional,
                         bool badge = false) {
  AccountCandidate a;
  a.account = {id, name};
  a.evidence = std::move(ev);
  a.is_professional = professional;
  a.verified_badge = badge;
  return a;
}

AccountCandidateSet set_of(std::vector<AccountCandidate> accounts) {
  AccountCandidateSet s;
  s.candidate_id = "c1";
  s.decided_at = kDecided;
  s.accounts = std::move(accounts);
  return s;
}

TEST(Resolve, SingleEvidencedProfessional) {
  const auto r = resolve_account(set_of({account(1, "a", {Evidence::party_reference}, true)}));
  ASSERT_TRUE(r.link);
  EXPECT_EQ(r.link->account.user_id, 1u);
  EXPECT_EQ(r.link->decided_at, kDecided);
}

TEST(Resolve, BadgeBreaksTie) {
  const auto r = resolve_account(set_of({account(1, "a", {Evidence::party_reference}, true),
                                         account(2, "b", {Evidence::website_link}, true, true)}));
  ASSERT_TRUE(r.link);
  EXPECT_EQ(r.link->account.user_id, 2u);
}

TEST(Resolve, PrivateAccountExcluded) {
  const auto r = resolve_account(set_of({account(1, "private", {Evidence::image_or_constituency_match}, false),
                                         account(2, "office", {Evidence::party_reference}, true)}));
  ASSERT_TRUE(r.link);
  EXPECT_EQ(r.link->account.screen_name, "office");
}

TEST(Resolve, UnresolvedTieIsReported) {
  const auto r = resolve_account(set_of({account(1, "a", {Evidence::party_reference}, true),
                                         account(2, "b", {Evidence::party_reference}, true)}));
  EXPECT_FALSE(r.link);
  EXPECT_EQ(r.tied.size(), 2u);
}

TEST(Resolve, NoEvidenceMeansNoLink) {
  const auto r = resolve_account(set_of({account(1, "a", {}, true)}));
  EXPECT_FALSE(r.link);
  EXPECT_TRUE(r.tied.empty());
}

TEST(Roster, ScenarioRosterRoundTrips) {
  const Roster r = sim::scenario_roster(testing_support::mini());
  const Roster back = parse_roster(roster_to_csv(r), evidence_to_json(r));
  EXPECT_EQ(back, r);
  EXPECT_EQ(back.twitter_accounts().size(), 55u);
}

TEST(Roster, DemoRosterScale) {
  const auto demo = sim::make_demo_roster(2013);
  EXPECT_EQ(demo.candidates.candidates.size(), 2346u);
  EXPECT_EQ(demo.candidates.twitter_accounts().size(), 1009u);
  EXPECT_EQ(demo.media_agents.size(), 76u);
  EXPECT_EQ(parse_roster(roster_to_csv(demo.candidates), evidence_to_json(demo.candidates)), demo.candidates);
}

TEST(Roster, LinkWithoutEvidenceRejected) {
  const Roster r = sim::scenario_roster(testing_support::mini());
  EXPECT_THROW(parse_roster(roster_to_csv(r), std::nullopt), ConfigError);
}

TEST(Roster, BadHeaderAndFieldCount) {
  EXPECT_THROW(parse_roster("id,name\n", std::nullopt), ParseError);
  const std::string header = roster_to_csv(Roster{});
  try {
    parse_roster(header + "x,y\n", std::nullopt);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Roster, QuotedFieldsSurvive) {
  Roster r;
  CandidateRecord c;
  c.candidate_id = "x1";
  c.name = "Müller, \"Hans\"";
  c.party = "SPD";
  c.state = "Berlin";
  r.candidates.push_back(c);
  EXPECT_EQ(parse_roster(roster_to_csv(r), evidence_to_json(r)), r);
}

TEST(Merge, DisjointUnionAndIdentity) {
  const Roster all = sim::scenario_roster(testing_support::mini());
  Roster a, b;
  for (std::size_t i = 0; i < all.candidates.size(); ++i) (i % 2 ? a : b).candidates.push_back(all.candidates[i]);
  const auto merged = merge_roster_updates(a, b);
  EXPECT_EQ(merged.roster, all);
  std::size_t linked = 0;
  for (const auto& c : b.candidates) linked += c.twitter.has_value();
  EXPECT_EQ(merged.new_accounts.size(), linked);
  const auto again = merge_roster_updates(all, all);
  EXPECT_EQ(again.roster, all);
  EXPECT_TRUE(again.new_accounts.empty());
}

TEST(Merge, ConflictRefused) {
  Roster a = sim::scenario_roster(testing_support::mini());
  Roster b;
  b.candidates.push_back(a.candidates.front());
  b.candidates.front().party = "Other";
  EXPECT_THROW(merge_roster_updates(a, b), ConfigError);
}

TEST(AccountSets, ParseAndResolve) {
  const auto sets = parse_account_sets(R"({"sets":[{"candidateId":"c9","decidedAt":"2013-05-01T00:00:00Z",
    "accounts":[{"id":5,"screenName":"amt","evidence":["party_reference"],"professional":true,"verifiedBadge":false},
                {"id":6,"screenName":"privat","evidence":["website_link"],"professional":false,"verifiedBadge":false}]}]})");
  ASSERT_EQ(sets.size(), 1u);
  const auto r = resolve_account(sets[0]);
  ASSERT_TRUE(r.link);
  EXPECT_EQ(r.link->account.user_id, 5u);
  EXPECT_NE(resolutions_to_json(sets, {r}).find("amt"), std::string::npos);
  EXPECT_THROW(parse_account_sets(R"({"sets":[{"candidateId":"c","decidedAt":"2013-05-01T00:00:00Z",
    "accounts":[{"id":1,"screenName":"a","evidence":["hearsay"]}]}]})"), SchemaError);
}

}  // namespace
