#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "corpuskit/time.hpp"
#include "corpuskit/tweet.hpp"

namespace corpuskit {

struct AccountRef {
  UserId user_id = 0;
  std::string screen_name;

  friend bool operator==(const AccountRef&, const AccountRef&) = default;
};

/// Collect by user accounts: tweets sent by the listed accounts, tweets that
/// mention them, and tweets carrying an account name as a hashtag.
struct AccountQuery {
  std::vector<AccountRef> accounts;
  bool match_mentions = true;
  bool match_name_hashtag = true;
  // When false, retweets and replies by non-listed authors only match if the
  // author is listed.
  bool include_retweets_and_replies = true;

  friend bool operator==(const AccountQuery&, const AccountQuery&) = default;
};

/// Collect by topic: listed hashtags (stored lowercase, no '#') or whole-token
/// full-text terms.
struct KeywordQuery {
  std::vector<std::string> hashtags;
  std::vector<std::string> terms;

  friend bool operator==(const KeywordQuery&, const KeywordQuery&) = default;
};

enum class FormatPredicate { retweets_only, must_have_url, must_have_image };

std::string_view to_string(FormatPredicate p);
std::optional<FormatPredicate> format_predicate_from(std::string_view name);

/// Collect by metadata. Present constraints combine conjunctively.
struct MetadataQuery {
  std::optional<std::string> country;
  std::optional<Interval> time_window;
  std::set<std::string> languages;
  std::set<FormatPredicate> format;

  bool has_constraint() const {
    return country || time_window || !languages.empty() || !format.empty();
  }

  friend bool operator==(const MetadataQuery&, const MetadataQuery&) = default;
};

struct RandomSampleQuery {
  double rate = 1.0;
  std::uint64_t seed = 0;

  friend bool operator==(const RandomSampleQuery&, const RandomSampleQuery&) = default;
};

using Strategy = std::variant<AccountQuery, KeywordQuery, MetadataQuery, RandomSampleQuery>;

std::string_view strategy_name(const Strategy& s);

struct CorpusDefinition {
  std::string name;
  Strategy strategy;
  std::optional<MetadataQuery> extra_metadata;
  Interval window;

  friend bool operator==(const CorpusDefinition&, const CorpusDefinition&) = default;
};

/// The subscription request handed to a stream source. A source may deliver
/// more than the query asks for; `matches` makes the final decision.
struct StreamQuery {
  enum class Mode { filter, sample, firehose };

  Mode mode = Mode::filter;
  std::vector<UserId> follow_ids;
  std::vector<std::string> track_terms;  // screen names, "#tag", plain terms
  std::vector<std::string> countries;
  std::vector<std::string> languages;
  double sample_rate = 1.0;
  std::uint64_t sample_seed = 0;

  friend bool operator==(const StreamQuery&, const StreamQuery&) = default;
};

bool matches(const TweetRecord& t, const CorpusDefinition& d);
bool matches_strategy(const TweetRecord& t, const Strategy& s);
bool matches_metadata(const TweetRecord& t, const MetadataQuery& q);

/// Stable per-id coin flip: a splitmix64 hash of (tweet_id, seed) mapped to
/// [0, 1) and compared against `rate`. Rate 1 accepts every id.
bool sample_decision(TweetId tweet_id, double rate, std::uint64_t seed);

StreamQuery compile_query(const CorpusDefinition& d);

/// Throws ConfigError naming the corpus and field when an invariant fails.
void check_definition(const CorpusDefinition& d);

/// Widens a definition with additional accounts or keywords (amendments).
/// Accounts may only be added to account corpora, keywords to keyword corpora.
CorpusDefinition widen(const CorpusDefinition& d, const std::vector<AccountRef>& accounts,
                       const std::vector<std::string>& hashtags,
                       const std::vector<std::string>& terms);

std::vector<CorpusDefinition> parse_corpus_config(std::string_view json_text);
std::vector<CorpusDefinition> load_corpus_config(const std::filesystem::path& file);
std::string corpus_config_to_json(const std::vector<CorpusDefinition>& defs);

std::string normalize_hashtag(std::string_view tag);

}  // namespace corpuskit
