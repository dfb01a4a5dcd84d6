#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "corpuskit/stream.hpp"
#include "corpuskit/tweet.hpp"

namespace corpuskit {

struct StoredTweet {
  TweetRecord tweet;
  std::string corpus;
  UtcTime stored_at{};
  bool is_probe = false;

  friend bool operator==(const StoredTweet&, const StoredTweet&) = default;
};

enum class AppendResult { appended, duplicate };

class TweetSink {
 public:
  virtual ~TweetSink() = default;
  /// Idempotent per (corpus, tweet id). Throws StoreError on storage failure;
  /// a failed append leaves nothing visible.
  virtual AppendResult append(const TweetRecord& t, const std::string& corpus, bool is_probe,
                              UtcTime stored_at) = 0;
};

/// Append-only tweet store partitioned by corpus. On disk each corpus is a
/// newline-delimited JSON file (`<name>.ndjson`) plus an id index
/// (`<name>.idx`). Safe for concurrent appends and scans.
class CorpusStore : public TweetSink {
 public:
  /// Purely in-memory store.
  CorpusStore();
  /// Opens (creating if needed) a store rooted at `root` and loads any
  /// existing corpus files.
  explicit CorpusStore(std::filesystem::path root);
  ~CorpusStore() override;

  CorpusStore(const CorpusStore&) = delete;
  CorpusStore& operator=(const CorpusStore&) = delete;

  AppendResult append(const TweetRecord& t, const std::string& corpus, bool is_probe,
                      UtcTime stored_at) override;

  /// Registers an empty corpus so it can be scanned before anything is stored.
  void ensure_corpus(const std::string& corpus);

  /// Records ordered by (created_at, id). Throws StoreError for an unknown corpus.
  std::vector<StoredTweet> scan(const std::string& corpus,
                                const std::optional<Interval>& window = std::nullopt,
                                bool include_probes = false) const;

  std::optional<StoredTweet> find(const std::string& corpus, TweetId id) const;
  bool has_corpus(const std::string& corpus) const;
  std::vector<std::string> corpora() const;
  std::size_t count(const std::string& corpus, bool include_probes = true) const;

  const std::optional<std::filesystem::path>& root() const { return root_; }

 private:
  struct Partition {
    std::vector<StoredTweet> records;
    std::unordered_map<TweetId, std::size_t> ids;  // id -> position in records
    std::ofstream data;
    std::ofstream index;
  };

  Partition& partition_locked(const std::string& corpus);
  void load_existing();

  std::optional<std::filesystem::path> root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::unique_ptr<Partition>> partitions_;
};

/// Resolves tweet ids against one corpus of a store (probes included).
class StoreLookup : public TweetLookup {
 public:
  StoreLookup(const CorpusStore& store, std::string corpus)
      : store_(store), corpus_(std::move(corpus)) {}

  std::optional<TweetRecord> lookup(TweetId id) const override;

 private:
  const CorpusStore& store_;
  std::string corpus_;
};

std::string stored_tweet_to_json(const StoredTweet& s);
StoredTweet stored_tweet_from_json(std::string_view line);

/// Corpus names become file names, so they are limited to [A-Za-z0-9_.-].
bool valid_corpus_name(std::string_view name);

}  // namespace corpuskit
