#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "corpuskit/criteria.hpp"
#include "corpuskit/tweet.hpp"

namespace corpuskit {

struct StreamEvent {
  enum class Kind { tweet, disconnected, end };

  Kind kind = Kind::end;
  UtcTime at{};
  TweetRecord tweet;  // set when kind == tweet
};

/// One live connection. Delivers events at or after its start time in
/// timestamp order; after `disconnected` nothing is delivered until a
/// successful reconnect.
class Subscription {
 public:
  virtual ~Subscription() = default;

  virtual StreamEvent next() = 0;
  /// Attempts to resume at `at`. Returns false while the source is unreachable.
  virtual bool reconnect(UtcTime at) = 0;
  /// Events the source lost on this connection (visible to simulators only).
  virtual std::uint64_t dropped() const = 0;
  /// Unblocks a pending next() from another thread; next() then returns `end`.
  virtual void cancel() {}
};

class TweetLookup {
 public:
  virtual ~TweetLookup() = default;
  virtual std::optional<TweetRecord> lookup(TweetId id) const = 0;
};

class StreamSource : public TweetLookup {
 public:
  /// Throws SourceError when the source is unreachable at `since`.
  virtual std::unique_ptr<Subscription> subscribe(const StreamQuery& query, UtcTime since) = 0;

  /// Tweets written by `user_id` in [since, until). Never returns tweets by
  /// other users that merely mention the account.
  virtual std::vector<TweetRecord> backfill_timeline(UserId user_id, UtcTime since,
                                                     UtcTime until) = 0;

  /// Publishes a probe tweet at its created_at. Throws SourceError when the
  /// source does not accept probes.
  virtual void post_probe(const TweetRecord& probe) = 0;
};

}  // namespace corpuskit
