#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpuskit/roster.hpp"
#include "corpuskit/store.hpp"

namespace corpuskit {

struct DehydratedRow {
  TweetId tweet_id = 0;
  std::optional<std::string> candidate_id;

  friend bool operator==(const DehydratedRow&, const DehydratedRow&) = default;
};

/// Shareable ID list. Text form:
///   # corpus:<name> generated:<UTC>
///   <tweet_id>\t<candidate_id or empty>
/// Rows are in ascending tweet id order.
struct DehydratedCorpus {
  std::string corpus;
  UtcTime generated_at{};
  std::vector<DehydratedRow> rows;

  std::size_t count() const { return rows.size(); }

  friend bool operator==(const DehydratedCorpus&, const DehydratedCorpus&) = default;
};

/// Probes are never exported. With a roster, each row names the candidate who
/// authored the tweet (empty when the author is not on the roster).
DehydratedCorpus dehydrate(const CorpusStore& store, const std::string& corpus, const Roster* roster,
                           UtcTime generated_at);

std::string dehydrated_to_text(const DehydratedCorpus& d);
/// Throws ParseError with the 1-based line number on malformed input.
DehydratedCorpus parse_dehydrated(std::string_view text);

struct Rehydration {
  std::vector<TweetRecord> tweets;  // in file order
  std::vector<TweetId> missing;     // ids the lookup could not resolve
};

Rehydration rehydrate(const DehydratedCorpus& file, const TweetLookup& lookup);

struct PrivacyFilterResult {
  std::string derived_corpus;
  std::size_t kept = 0;
  std::size_t excluded = 0;
};

/// Copies tweets authored by verified roster accounts into a derived corpus
/// (default name "<corpus>.roster-only"). Public tweets, including replies
/// that mention candidates, and probes are left out. Refuses an empty roster.
PrivacyFilterResult privacy_filter(CorpusStore& store, const std::string& corpus, const Roster& roster,
                                   std::optional<std::string> derived_name = std::nullopt);

/// One CSV row per candidate with the roster header.
std::string export_candidates(const Roster& roster);

}  // namespace corpuskit
