#include "corpuskit/roster.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "corpuskit/detail/csv.hpp"
#include "corpuskit/detail/tweet_json.hpp"
#include "corpuskit/errors.hpp"

namespace corpuskit {

using detail::Json;

const char* const kRosterHeader =
    "candidate_id,name,party,candidature,constituency,state,twitter_id,twitter_screen_name,"
    "facebook_id,facebook_name,added_at";

std::string_view to_string(Candidature c) {
  switch (c) {
    case Candidature::direct: return "direct";
    case Candidature::list: return "list";
    case Candidature::both: return "both";
  }
  return "list";
}

std::optional<Candidature> candidature_from(std::string_view s) {
  for (auto c : {Candidature::direct, Candidature::list, Candidature::both}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::string_view to_string(Evidence e) {
  switch (e) {
    case Evidence::party_reference: return "party_reference";
    case Evidence::website_link: return "website_link";
    case Evidence::image_or_constituency_match: return "image_or_constituency_match";
  }
  return "party_reference";
}

std::optional<Evidence> evidence_from(std::string_view s) {
  for (auto e : {Evidence::party_reference, Evidence::website_link, Evidence::image_or_constituency_match}) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

const CandidateRecord* Roster::find(std::string_view candidate_id) const {
  auto it = std::lower_bound(candidates.begin(), candidates.end(), candidate_id,
                             [](const CandidateRecord& c, std::string_view id) { return c.candidate_id < id; });
  if (it == candidates.end() || it->candidate_id != candidate_id) return nullptr;
  return &*it;
}

std::map<UserId, std::string> Roster::twitter_accounts() const {
  std::map<UserId, std::string> out;
  for (const auto& c : candidates) {
    if (c.twitter) out.emplace(c.twitter->account.user_id, c.candidate_id);
  }
  return out;
}

Resolution resolve_account(const AccountCandidateSet& set) {
  std::vector<const AccountCandidate*> eligible;
  for (const auto& a : set.accounts) {
    if (!a.evidence.empty() && a.is_professional) eligible.push_back(&a);
  }
  if (eligible.size() > 1) {
    std::vector<const AccountCandidate*> badged;
    std::copy_if(eligible.begin(), eligible.end(), std::back_inserter(badged),
                 [](const AccountCandidate* a) { return a->verified_badge; });
    if (!badged.empty()) eligible = std::move(badged);
  }
  // Same account listed twice is not a tie.
  std::sort(eligible.begin(), eligible.end(), [](const AccountCandidate* a, const AccountCandidate* b) {
    return a->account.user_id < b->account.user_id;
  });
  eligible.erase(std::unique(eligible.begin(), eligible.end(),
                             [](const AccountCandidate* a, const AccountCandidate* b) {
                               return a->account.user_id == b->account.user_id;
                             }),
                 eligible.end());

  Resolution r;
  if (eligible.size() == 1) {
    const auto& a = *eligible.front();
    r.link = VerifiedLink{a.account, a.evidence, a.verified_badge, a.is_professional, set.decided_at};
  } else {
    for (const auto* a : eligible) r.tied.push_back(a->account);
  }
  return r;
}

namespace {

void check_link(const CandidateRecord& c, const char* platform, const std::optional<VerifiedLink>& link) {
  if (!link) return;
  if (link->evidence.empty()) {
    throw ConfigError("candidate '" + c.candidate_id + "': " + platform + " link has no recorded evidence");
  }
  if (!link->is_professional) {
    throw ConfigError("candidate '" + c.candidate_id + "': " + platform + " link is not a professional account");
  }
}

}  // namespace

void check_roster(const Roster& roster) {
  std::unordered_set<std::string> ids;
  for (const auto& c : roster.candidates) {
    if (c.candidate_id.empty()) throw ConfigError("roster: empty candidate_id");
    if (!ids.insert(c.candidate_id).second) {
      throw ConfigError("roster: duplicate candidate_id '" + c.candidate_id + "'");
    }
    if (c.candidature != Candidature::list && !c.constituency) {
      throw ConfigError("candidate '" + c.candidate_id + "': direct candidature requires a constituency");
    }
    check_link(c, "twitter", c.twitter);
    check_link(c, "facebook", c.facebook);
  }
}

namespace {

Json link_json(const VerifiedLink& l) {
  Json ev = Json::array();
  for (auto e : l.evidence) ev.push_back(std::string(to_string(e)));
  return Json{{"id", l.account.user_id},
              {"screenName", l.account.screen_name},
              {"evidence", std::move(ev)},
              {"verifiedBadge", l.verified_badge},
              {"professional", l.is_professional},
              {"decidedAt", format_utc(l.decided_at)}};
}

std::set<Evidence> evidence_set(const Json& j, const std::string& path) {
  auto it = j.find("evidence");
  if (it == j.end() || !it->is_array()) throw SchemaError(path + ".evidence", path + ".evidence must be an array");
  std::set<Evidence> out;
  for (const auto& v : *it) {
    auto e = v.is_string() ? evidence_from(v.get<std::string>()) : std::nullopt;
    if (!e) throw SchemaError(path + ".evidence", path + ": unknown evidence kind " + v.dump());
    out.insert(*e);
  }
  return out;
}

bool bool_field(const Json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_boolean()) {
    throw SchemaError(path + "." + key, path + "." + key + " must be a boolean");
  }
  return it->get<bool>();
}

VerifiedLink link_from_json(const Json& j, const std::string& path) {
  VerifiedLink l;
  l.account.user_id = detail::get_u64(j, "id", path);
  l.account.screen_name = detail::get_string(j, "screenName", path);
  l.evidence = evidence_set(j, path);
  l.verified_badge = bool_field(j, "verifiedBadge", path);
  l.is_professional = bool_field(j, "professional", path);
  l.decided_at = parse_utc_field(detail::get_string(j, "decidedAt", path), path + ".decidedAt");
  return l;
}

UserId parse_id_cell(const std::string& cell, const std::string& where) {
  if (cell.empty() || !std::all_of(cell.begin(), cell.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ParseError(where + ": account id '" + cell + "' is not numeric");
  }
  try {
    return std::stoull(cell);
  } catch (const std::exception&) {
    throw ParseError(where + ": account id '" + cell + "' out of range");
  }
}

}  // namespace

Roster parse_roster(std::string_view csv, std::optional<std::string_view> evidence_json) {
  const auto rows = detail::parse_csv(csv);
  if (rows.empty()) throw ParseError("roster: missing header line");
  if (detail::csv_row(rows.front()) != std::string(kRosterHeader) + "\n") {
    throw ParseError(std::string("roster: header must be '") + kRosterHeader + "'");
  }

  Json evidence = Json::object();
  if (evidence_json) {
    try {
      evidence = Json::parse(*evidence_json);
    } catch (const Json::parse_error& e) {
      throw ParseError(std::string("evidence sidecar is not valid JSON: ") + e.what());
    }
    if (!evidence.contains("candidates") || !evidence["candidates"].is_object()) {
      throw SchemaError("candidates", "evidence sidecar needs a 'candidates' object");
    }
    evidence = evidence["candidates"];
  }

  Roster roster;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "roster line " + std::to_string(r + 1);
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 11) throw ParseError(where + ": expected 11 fields, found " + std::to_string(row.size()));
    CandidateRecord c;
    c.candidate_id = row[0];
    c.name = row[1];
    c.party = row[2];
    auto kind = candidature_from(row[3]);
    if (!kind) throw ParseError(where + ": unknown candidature '" + row[3] + "'");
    c.candidature = *kind;
    if (!row[4].empty()) c.constituency = row[4];
    c.state = row[5];
    if (!row[10].empty()) c.added_at = parse_utc_field(row[10], where + " added_at");

    const auto attach = [&](const char* platform, const std::string& id_cell, const std::string& name_cell,
                            std::optional<VerifiedLink>& slot) {
      const Json* entry = nullptr;
      if (auto it = evidence.find(c.candidate_id); it != evidence.end() && it->contains(platform)) {
        entry = &(*it)[platform];
      }
      if (id_cell.empty()) {
        if (entry) {
          throw ConfigError(where + ": evidence sidecar has a " + platform + " link for '" + c.candidate_id +
                            "' but the roster row has none");
        }
        return;
      }
      const UserId id = parse_id_cell(id_cell, where);
      if (!entry) {
        throw ConfigError(where + ": no evidence recorded for " + platform + " account " + id_cell + " of '" +
                          c.candidate_id + "'");
      }
      VerifiedLink link = link_from_json(*entry, c.candidate_id + "." + platform);
      if (link.account.user_id != id || link.account.screen_name != name_cell) {
        throw ConfigError(where + ": " + platform + " account differs from the evidence sidecar");
      }
      slot = std::move(link);
    };
    attach("twitter", row[6], row[7], c.twitter);
    attach("facebook", row[8], row[9], c.facebook);
    roster.candidates.push_back(std::move(c));
  }
  std::sort(roster.candidates.begin(), roster.candidates.end(),
            [](const CandidateRecord& a, const CandidateRecord& b) { return a.candidate_id < b.candidate_id; });
  check_roster(roster);
  return roster;
}

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Roster load_roster(const std::filesystem::path& csv, const std::optional<std::filesystem::path>& evidence) {
  const std::string text = read_file(csv);
  if (!evidence) return parse_roster(text, std::nullopt);
  const std::string ev = read_file(*evidence);
  return parse_roster(text, std::string_view(ev));
}

std::string roster_to_csv(const Roster& roster) {
  std::string out = std::string(kRosterHeader) + "\n";
  for (const auto& c : roster.candidates) {
    out += detail::csv_row({c.candidate_id, c.name, c.party, std::string(to_string(c.candidature)),
                            c.constituency.value_or(""), c.state,
                            c.twitter ? std::to_string(c.twitter->account.user_id) : "",
                            c.twitter ? c.twitter->account.screen_name : "",
                            c.facebook ? std::to_string(c.facebook->account.user_id) : "",
                            c.facebook ? c.facebook->account.screen_name : "",
                            c.added_at ? format_utc(*c.added_at) : ""});
  }
  return out;
}

std::string evidence_to_json(const Roster& roster) {
  Json candidates = Json::object();
  for (const auto& c : roster.candidates) {
    if (!c.twitter && !c.facebook) continue;
    Json entry = Json::object();
    if (c.twitter) entry["twitter"] = link_json(*c.twitter);
    if (c.facebook) entry["facebook"] = link_json(*c.facebook);
    candidates[c.candidate_id] = std::move(entry);
  }
  return Json{{"candidates", std::move(candidates)}}.dump(2) + "\n";
}

RosterMerge merge_roster_updates(const Roster& base, const Roster& additions) {
  RosterMerge out;
  out.roster = base;
  std::vector<std::string> conflicts;
  for (const auto& c : additions.candidates) {
    if (const auto* existing = base.find(c.candidate_id)) {
      if (!(*existing == c)) conflicts.push_back(c.candidate_id);
      continue;
    }
    if (c.twitter) out.new_accounts.push_back(c.twitter->account);
    if (c.added_at && (!out.latest_addition || *out.latest_addition < *c.added_at)) {
      out.latest_addition = c.added_at;
    }
    out.roster.candidates.push_back(c);
  }
  if (!conflicts.empty()) {
    std::string list;
    for (const auto& id : conflicts) list += (list.empty() ? "" : ", ") + id;
    throw ConfigError("roster merge refused: conflicting records for candidate id(s) " + list);
  }
  std::sort(out.roster.candidates.begin(), out.roster.candidates.end(),
            [](const CandidateRecord& a, const CandidateRecord& b) { return a.candidate_id < b.candidate_id; });
  std::sort(out.new_accounts.begin(), out.new_accounts.end(),
            [](const AccountRef& a, const AccountRef& b) { return a.user_id < b.user_id; });
  check_roster(out.roster);
  return out;
}

std::vector<AccountCandidateSet> parse_account_sets(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("account sets file is not valid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("sets") || !root["sets"].is_array()) {
    throw SchemaError("sets", "account sets file needs a 'sets' array");
  }
  std::vector<AccountCandidateSet> out;
  for (std::size_t i = 0; i < root["sets"].size(); ++i) {
    const Json& s = root["sets"][i];
    const std::string path = "sets[" + std::to_string(i) + "]";
    AccountCandidateSet set;
    set.candidate_id = detail::get_string(s, "candidateId", path);
    if (s.contains("platform")) set.platform = detail::get_string(s, "platform", path);
    set.decided_at = parse_utc_field(detail::get_string(s, "decidedAt", path), path + ".decidedAt");
    if (!s.contains("accounts") || !s["accounts"].is_array()) {
      throw SchemaError(path + ".accounts", path + ".accounts must be an array");
    }
    for (std::size_t k = 0; k < s["accounts"].size(); ++k) {
      const Json& a = s["accounts"][k];
      const std::string apath = path + ".accounts[" + std::to_string(k) + "]";
      AccountCandidate ac;
      ac.account = {detail::get_u64(a, "id", apath), detail::get_string(a, "screenName", apath)};
      ac.evidence = evidence_set(a, apath);
      ac.verified_badge = bool_field(a, "verifiedBadge", apath);
      ac.is_professional = bool_field(a, "professional", apath);
      set.accounts.push_back(std::move(ac));
    }
    out.push_back(std::move(set));
  }
  return out;
}

std::string resolutions_to_json(const std::vector<AccountCandidateSet>& sets,
                                const std::vector<Resolution>& results) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < sets.size() && i < results.size(); ++i) {
    Json j;
    j["candidateId"] = sets[i].candidate_id;
    j["platform"] = sets[i].platform;
    if (results[i].link) {
      j["status"] = "accepted";
      j["link"] = link_json(*results[i].link);
    } else if (!results[i].tied.empty()) {
      j["status"] = "tie";
      Json tied = Json::array();
      for (const auto& a : results[i].tied) tied.push_back(Json{{"id", a.user_id}, {"screenName", a.screen_name}});
      j["tied"] = std::move(tied);
    } else {
      j["status"] = "none";
    }
    arr.push_back(std::move(j));
  }
  return Json{{"resolutions", std::move(arr)}}.dump(2) + "\n";
}

}  // namespace corpuskit
