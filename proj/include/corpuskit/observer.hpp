#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "corpuskit/criteria.hpp"
#include "corpuskit/errors.hpp"
#include "corpuskit/store.hpp"
#include "corpuskit/stream.hpp"

namespace corpuskit {

/// Reconnect delays: initial, doubling, capped; the observer gives up after
/// max_retries consecutive failures.
struct BackoffPolicy {
  Seconds initial{1};
  Seconds cap{60};
  int max_retries = 10;

  /// Delay before retry number `attempt` (1-based).
  Seconds delay(int attempt) const;
};

enum class ObserverState { starting, running, reconnecting, stopped };
std::string_view to_string(ObserverState s);

struct ObserverCounters {
  std::uint64_t seen = 0;
  std::uint64_t matched = 0;
  std::uint64_t stored = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t dropped_by_source = 0;
  // Appends made by amendment backfill; kept apart so the stream algebra
  // seen >= matched = stored + duplicates stays exact.
  std::uint64_t backfilled = 0;
  std::uint64_t backfill_duplicates = 0;

  friend bool operator==(const ObserverCounters&, const ObserverCounters&) = default;
};

struct GapRecord {
  Interval interval;
  int attempts = 0;
  bool terminal = false;
  std::string reason;

  friend bool operator==(const GapRecord&, const GapRecord&) = default;
};

struct AmendmentRequest {
  std::vector<AccountRef> accounts;
  std::vector<std::string> hashtags;
  std::vector<std::string> terms;
  UtcTime at{};
  bool backfill = true;
};

struct AccountBackfill {
  AccountRef account;
  std::size_t recovered = 0;
  std::optional<UtcTime> earliest;

  friend bool operator==(const AccountBackfill&, const AccountBackfill&) = default;
};

struct AmendmentEvent {
  std::string corpus;
  UtcTime requested_at{};
  // Later than requested_at when the observer had already moved past it.
  UtcTime effective_at{};
  std::vector<AccountRef> added_accounts;
  std::vector<std::string> added_hashtags;
  std::vector<std::string> added_terms;
  bool backfill = false;
  std::vector<AccountBackfill> backfill_summary;
  std::string limitation;

  friend bool operator==(const AmendmentEvent&, const AmendmentEvent&) = default;
};

struct ObserverSnapshot {
  std::string observer_id;
  std::string corpus;
  ObserverState state = ObserverState::starting;
  ObserverCounters counters;
  std::vector<GapRecord> gaps;
  std::vector<AmendmentEvent> amendments;
  CorpusDefinition definition;  // current, including amendments
  UtcTime position{};
  bool drained = false;
  std::optional<std::string> error;
  std::optional<ErrorCategory> error_category;
};

/// Newline-delimited JSON audit trail shared by concurrent observers.
class RunLog {
 public:
  explicit RunLog(const std::filesystem::path& file);
  RunLog();  // discards events

  void event(std::string_view kind, const std::string& observer, const std::string& corpus, UtcTime at,
             const std::string& extra_json = {});

 private:
  std::mutex mutex_;
  std::ofstream out_;
  bool enabled_ = false;
};

struct ObserverOptions {
  std::string observer_id = "observer";
  BackoffPolicy backoff;
  int sink_retries = 3;
  std::vector<AmendmentRequest> planned_amendments;
  std::function<bool(TweetId)> is_probe;
  RunLog* log = nullptr;
  // Called with (previous instant, attempt instant) before each reconnect
  // attempt; empty means simulated time jumps straight to the attempt.
  std::function<void(UtcTime, UtcTime)> wait;
};

class ObserverHandle {
 public:
  struct Impl;

  explicit ObserverHandle(std::shared_ptr<Impl> impl);
  ~ObserverHandle();

  ObserverHandle(const ObserverHandle&) = delete;
  ObserverHandle& operator=(const ObserverHandle&) = delete;

  /// Widens the live query from max(request.at, current position). With
  /// backfill, each added account's own tweets since the window start are
  /// fetched and stored; earlier mentions and hashtags cannot be recovered.
  /// Blocks until applied. Throws ConfigError if the observer is stopped.
  AmendmentEvent amend(const AmendmentRequest& request);

  ObserverSnapshot snapshot() const;
  /// Blocks until the stream is exhausted or the observer stopped.
  ObserverSnapshot wait_drained();
  /// Unsubscribes and returns the final snapshot. Idempotent.
  ObserverSnapshot stop();

 private:
  std::shared_ptr<Impl> impl_;
};

/// Subscribes via compile_query(d) from the window start and appends every
/// matching event to `sink` under d.name on a background thread. The source
/// and sink must outlive the handle.
std::unique_ptr<ObserverHandle> run_observer(const CorpusDefinition& d, StreamSource& source, TweetSink& sink,
                                             ObserverOptions options = {});

inline AmendmentEvent amend(ObserverHandle& h, const AmendmentRequest& r) { return h.amend(r); }
inline ObserverSnapshot stop(ObserverHandle& h) { return h.stop(); }

std::string snapshot_to_json(const ObserverSnapshot& s);
std::string amendment_to_json(const AmendmentEvent& a);

}  // namespace corpuskit
