#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpuskit/time.hpp"

namespace corpuskit {

using TweetId = std::uint64_t;
using UserId = std::uint64_t;

// Offsets count Unicode scalar values. `start` indexes the '#' marker, `end`
// is exclusive, `text` excludes the marker.
struct HashtagEntity {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;

  friend bool operator==(const HashtagEntity&, const HashtagEntity&) = default;
};

// Same convention as HashtagEntity with '@' as the marker. Mentions produced
// by extract_entities carry user_id 0 until resolved against an account table.
struct MentionEntity {
  std::size_t start = 0;
  std::size_t end = 0;
  UserId user_id = 0;
  std::string screen_name;
  std::string display_name;

  friend bool operator==(const MentionEntity&, const MentionEntity&) = default;
};

struct GeoTag {
  double latitude = 0.0;
  double longitude = 0.0;
  std::string country;  // ISO 3166-1 alpha-2

  friend bool operator==(const GeoTag&, const GeoTag&) = default;
};

/// One status update with the attributes of the archived tweet schema
/// (`_id`, `userid`, `screenName`, `createdAt`, `tweettext`, `hashtags`,
/// `mentions`) plus the optional metadata used by metadata-based corpora.
struct TweetRecord {
  TweetId id = 0;
  UserId user_id = 0;
  std::string screen_name;
  UtcTime created_at{};
  std::string text;
  std::vector<HashtagEntity> hashtags;
  std::vector<MentionEntity> mentions;
  std::vector<std::string> urls;
  bool is_retweet = false;
  std::optional<TweetId> reply_to_id;
  std::optional<GeoTag> geo;
  std::optional<std::string> language;  // ISO 639-1
  bool has_image = false;

  friend bool operator==(const TweetRecord&, const TweetRecord&) = default;
};

enum class IssueKind {
  offset_out_of_range,
  slice_mismatch,
  marker_missing,
  timestamp_invalid,
};

std::string_view to_string(IssueKind kind);

struct ValidationIssue {
  TweetId tweet_id = 0;
  std::string field;  // e.g. "hashtags[0]"
  IssueKind kind{};
  std::string message;

  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

struct Entities {
  std::vector<HashtagEntity> hashtags;
  std::vector<MentionEntity> mentions;
};

/// Parses one tweet object. Throws ParseError on malformed JSON and
/// SchemaError naming the attribute when a mandatory attribute is missing or
/// mistyped. Unknown attributes are ignored.
TweetRecord parse_tweet(std::string_view raw);

/// Canonical single-line JSON: mandatory attributes in schema order, then
/// optional ones only when set. serialize_tweet(parse_tweet(s)) == s for any
/// s already in canonical form.
std::string serialize_tweet(const TweetRecord& t);

/// Every maximal '#'+word and '@'+word run, ordered by start offset.
Entities extract_entities(std::string_view text);

/// Checks the offset convention and timestamp. Empty iff the record conforms.
std::vector<ValidationIssue> validate(const TweetRecord& t);

/// Reads newline-delimited tweets; blank lines are skipped. Errors carry the
/// 1-based line number.
std::vector<TweetRecord> read_tweet_lines(std::string_view ndjson);

}  // namespace corpuskit
