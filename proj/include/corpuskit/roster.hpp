#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "corpuskit/criteria.hpp"
#include "corpuskit/time.hpp"

namespace corpuskit {

enum class Candidature { direct, list, both };
std::string_view to_string(Candidature c);
std::optional<Candidature> candidature_from(std::string_view s);

// The three account-verification questions: party reference (logo, party
// followers), a link from the candidate's or party's website, recognition by
// image or constituency.
enum class Evidence { party_reference, website_link, image_or_constituency_match };
std::string_view to_string(Evidence e);
std::optional<Evidence> evidence_from(std::string_view s);

struct VerifiedLink {
  AccountRef account;
  std::set<Evidence> evidence;
  bool verified_badge = false;
  bool is_professional = false;
  UtcTime decided_at{};

  friend bool operator==(const VerifiedLink&, const VerifiedLink&) = default;
};

struct CandidateRecord {
  std::string candidate_id;
  std::string name;
  std::string party;
  Candidature candidature = Candidature::list;
  std::optional<std::string> constituency;
  std::string state;
  std::optional<VerifiedLink> twitter;
  std::optional<VerifiedLink> facebook;
  std::optional<UtcTime> added_at;

  friend bool operator==(const CandidateRecord&, const CandidateRecord&) = default;
};

/// Candidates kept sorted by candidate_id.
struct Roster {
  std::vector<CandidateRecord> candidates;

  const CandidateRecord* find(std::string_view candidate_id) const;
  /// Twitter account id -> candidate id, for every verified link.
  std::map<UserId, std::string> twitter_accounts() const;

  friend bool operator==(const Roster&, const Roster&) = default;
};

struct AccountCandidate {
  AccountRef account;
  std::set<Evidence> evidence;
  bool verified_badge = false;
  bool is_professional = false;
};

struct AccountCandidateSet {
  std::string candidate_id;
  std::string platform = "twitter";
  UtcTime decided_at{};
  std::vector<AccountCandidate> accounts;
};

struct Resolution {
  std::optional<VerifiedLink> link;
  // Non-empty when several eligible accounts remain after badge preference;
  // the candidate then needs manual adjudication.
  std::vector<AccountRef> tied;
};

/// Eligible = evidenced and professional. One eligible account wins outright;
/// among several, badge holders are preferred; a remaining tie yields no link.
Resolution resolve_account(const AccountCandidateSet& set);

/// Throws ConfigError on duplicate ids, a direct candidature without
/// constituency, or a link lacking evidence or professional status.
void check_roster(const Roster& roster);

Roster parse_roster(std::string_view csv, std::optional<std::string_view> evidence_json);
Roster load_roster(const std::filesystem::path& csv,
                   const std::optional<std::filesystem::path>& evidence = std::nullopt);

extern const char* const kRosterHeader;

std::string roster_to_csv(const Roster& roster);
std::string evidence_to_json(const Roster& roster);

struct RosterMerge {
  Roster roster;
  // Twitter accounts of candidates not present before the merge: the account
  // list for an amendment to running account corpora.
  std::vector<AccountRef> new_accounts;
  std::optional<UtcTime> latest_addition;
};

/// Union by candidate_id. Identical duplicates are absorbed; a duplicate id
/// with different fields is a conflict and the merge is refused.
RosterMerge merge_roster_updates(const Roster& base, const Roster& additions);

std::vector<AccountCandidateSet> parse_account_sets(std::string_view json_text);
std::string resolutions_to_json(const std::vector<AccountCandidateSet>& sets,
                                const std::vector<Resolution>& results);

}  // namespace corpuskit
