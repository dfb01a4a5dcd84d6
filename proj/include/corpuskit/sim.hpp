#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "corpuskit/authority.hpp"
#include "corpuskit/criteria.hpp"
#include "corpuskit/roster.hpp"
#include "corpuskit/stream.hpp"

namespace corpuskit::sim {

enum class AccountKind { candidate, journalist, editor, public_user, emergent, probe };
std::string_view to_string(AccountKind k);
std::optional<AccountKind> account_kind_from(std::string_view s);

struct Account {
  UserId id = 0;
  std::string screen_name;
  std::string display_name;
  AccountKind kind = AccountKind::public_user;
  std::string party;  // candidates and emergent accounts only

  friend bool operator==(const Account&, const Account&) = default;
};

struct HashtagUse {
  std::string tag;    // lowercase, no '#'
  std::string topic;  // script-level topic the tag belongs to
  double propensity = 1.0;

  friend bool operator==(const HashtagUse&, const HashtagUse&) = default;
};

struct TopicShare {
  std::string topic;
  double share = 1.0;

  friend bool operator==(const TopicShare&, const TopicShare&) = default;
};

struct LanguageShare {
  std::string language;
  double share = 1.0;

  friend bool operator==(const LanguageShare&, const LanguageShare&) = default;
};

/// The source refuses connections during `window`. After the window closes a
/// reconnect may replay the last `redeliver` delivered events.
struct DisconnectWindow {
  Interval window;
  std::size_t redeliver = 0;

  friend bool operator==(const DisconnectWindow&, const DisconnectWindow&) = default;
};

/// Applied on the delivery path only. Drops are exact per block of 100
/// consecutive timeline events (and separately per 100 consecutive probes):
/// round(drop_rate * 100) of each block are lost, chosen by seeded hash.
struct FaultSchedule {
  double drop_rate = 0.0;
  std::uint64_t seed = 0;
  std::vector<DisconnectWindow> disconnects;

  friend bool operator==(const FaultSchedule&, const FaultSchedule&) = default;
};

/// Accounts of a party the collectors do not know about at the start; they
/// tweet and are mentioned all along and become notable at `emerges_at`
/// (a fraction of the duration).
struct EmergentParty {
  std::string party = "AfD";
  std::size_t count = 0;
  double emerges_at = 0.6;

  friend bool operator==(const EmergentParty&, const EmergentParty&) = default;
};

struct ScenarioConfig {
  std::string name = "custom";
  std::uint64_t seed = 1;
  std::vector<std::string> parties;
  std::size_t candidates = 0;
  std::size_t journalists = 0;
  std::size_t editors = 0;
  std::size_t public_accounts = 0;
  std::size_t tweets = 0;
  UtcTime start{};
  Seconds duration{0};
  std::vector<TopicShare> topics;
  std::vector<HashtagUse> hashtags;
  double tag_probability = 0.6;           // an original carries a topic tag
  double reply_probability = 0.3;
  double retweet_probability = 0.15;
  double reply_without_hashtag = 0.5;     // a reply in a tagged thread omits the tag
  double mention_probability = 0.3;       // an original mentions someone
  double name_hashtag_probability = 0.05; // an original tags a politician's name
  double geo_fraction = 0.3;
  std::vector<LanguageShare> languages;
  double url_probability = 0.2;
  double image_probability = 0.1;
  EmergentParty emergent;
  FaultSchedule faults;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Throws ConfigError naming the offending field.
void check_config(const ScenarioConfig& c);
ScenarioConfig parse_scenario_config(std::string_view json_text);
ScenarioConfig load_scenario_config(const std::filesystem::path& file);
std::string scenario_config_to_json(const ScenarioConfig& c);

/// Named presets; currently "bundestag-mini".
ScenarioConfig preset(std::string_view name);

/// Script-level facts the generator knows but a collector cannot see.
struct ScriptInfo {
  std::string topic;
  std::string thread_tag;  // tag of the thread root, empty if untagged
  TweetId thread_root = 0;

  friend bool operator==(const ScriptInfo&, const ScriptInfo&) = default;
};

struct Scenario {
  ScenarioConfig config;
  std::vector<Account> accounts;  // ascending id
  FollowGraph graph;
  std::vector<TweetRecord> timeline;  // ascending (created_at, id)
  std::vector<ScriptInfo> script;     // parallel to timeline

  UtcTime start() const { return config.start; }
  UtcTime end() const { return config.start + config.duration; }
  UtcTime emergence_time() const;

  const Account* account(UserId id) const;
  const Account* account_by_name(std::string_view screen_name) const;
  std::vector<Account> accounts_of(AccountKind k) const;
  const TweetRecord* tweet(TweetId id) const;
  const ScriptInfo* script_of(TweetId id) const;
};

Scenario build_scenario(const ScenarioConfig& c);

/// Brute-force evaluation of `matches` over the whole timeline.
std::set<TweetId> ground_truth(const Scenario& s, const CorpusDefinition& d);

// Reference sets for bias measurement.
std::set<TweetId> authored_by(const Scenario& s, const std::set<UserId>& authors);
/// Threads rooted in a tweet carrying `tag`: the roots, every reply below
/// them and retweets of the roots.
std::set<TweetId> conversation(const Scenario& s, std::string_view tag);
std::set<TweetId> topic_tweets(const Scenario& s, std::string_view topic);

struct BiasInput {
  std::string corpus;
  std::string reference;  // label of the reference set
  std::set<TweetId> stored;
  std::set<TweetId> expected;
};

struct BiasRow {
  std::string corpus;
  std::string reference;
  std::size_t stored = 0;
  std::size_t expected = 0;
  std::size_t hits = 0;
  std::optional<double> recall;     // undefined for an empty reference
  std::optional<double> precision;  // undefined for an empty stored set
  std::vector<TweetId> missing;     // expected but not stored
  std::vector<TweetId> extra;       // stored but not expected
};

std::vector<BiasRow> bias_report(const Scenario& s, const std::vector<BiasInput>& inputs);
std::string bias_report_json(const std::vector<BiasRow>& rows);
std::string bias_report_text(const std::vector<BiasRow>& rows);

// World directory: config.json, accounts.ndjson, follows.tsv, groups.json,
// timeline.ndjson (one {"tweet":…, "topic":…, "threadTag":…, "threadRoot":…}
// per line).
void write_world(const Scenario& s, const std::filesystem::path& dir);
Scenario read_world(const std::filesystem::path& dir);

/// Timeline as plain tweet records, one canonical object per line.
std::string timeline_to_ndjson(const Scenario& s);

/// Candidates and emergent accounts as a roster with fully evidenced links.
Roster scenario_roster(const Scenario& s);

/// Synthetic roster at full election scale: 2,346 candidates of whom 1,009
/// have a verified Twitter account, plus 76 media agents (kept apart).
struct DemoRoster {
  Roster candidates;
  std::vector<AccountRef> media_agents;
};
DemoRoster make_demo_roster(std::uint64_t seed);

enum class Clock { accelerated, realtime };

/// In-process stream source over a scenario. Thread-safe; every subscription
/// keeps its own cursor. Probes posted through post_probe join the live
/// timeline and are subject to the same fault schedule.
class SimulatedSource : public StreamSource {
 public:
  explicit SimulatedSource(const Scenario& s, Clock clock = Clock::accelerated);
  SimulatedSource(const Scenario& s, FaultSchedule faults, Clock clock = Clock::accelerated);
  ~SimulatedSource() override;

  std::unique_ptr<Subscription> subscribe(const StreamQuery& query, UtcTime since) override;
  std::vector<TweetRecord> backfill_timeline(UserId user_id, UtcTime since, UtcTime until) override;
  void post_probe(const TweetRecord& probe) override;
  std::optional<TweetRecord> lookup(TweetId id) const override;

  /// Simulates deletion on the platform: lookup no longer resolves the id.
  void remove(TweetId id);
  /// Rejects later post_probe calls with SourceError.
  void refuse_probes(bool refuse);

  /// True when delivery of the timeline event at `index` is dropped.
  bool drops_event(std::size_t index) const;
  /// True when delivery of the probe with sequence number `seq` is dropped.
  bool drops_probe(std::size_t seq) const;
  bool reachable(UtcTime t) const;

  const Scenario& scenario() const { return scenario_; }
  const FaultSchedule& faults() const { return faults_; }
  Clock clock() const { return clock_; }

 private:
  class Cursor;
  friend class Cursor;

  struct Probe {
    TweetRecord tweet;
    std::size_t seq = 0;
  };

  std::vector<bool> build_drop_mask(std::size_t n, std::uint64_t salt) const;

  const Scenario& scenario_;
  FaultSchedule faults_;
  Clock clock_;
  std::vector<bool> dropped_;
  mutable std::mutex mutex_;
  std::vector<Probe> probes_;  // ascending (created_at, id)
  std::set<TweetId> removed_;
  bool refuse_probes_ = false;
};

}  // namespace corpuskit::sim
