#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "corpuskit/criteria.hpp"
#include "corpuskit/store.hpp"
#include "corpuskit/stream.hpp"

namespace corpuskit {

struct ProbeRecord {
  std::uint64_t probe_id = 0;  // global sequence number
  std::string corpus;
  UtcTime injected_at{};
  TweetId carrier_id = 0;
  std::string marker;  // appears in the carrier text and as its hashtag

  friend bool operator==(const ProbeRecord&, const ProbeRecord&) = default;
};

struct ProbeOptions {
  Seconds interval{600};
  // First injection instant; defaults to the corpus window start.
  std::optional<UtcTime> start;
  AccountRef account{1, "observer_probe"};
  // Carrier ids are drawn from [id_base + seq * 1000, id_base + seq * 1000 + 1000).
  TweetId id_base = 8000000000000000000ULL;
  // Sequence number of the first probe; keeps markers unique across corpora.
  std::uint64_t first_seq = 0;
};

/// Adds the probe account to an account corpus; other strategies are returned
/// unchanged.
CorpusDefinition with_probe_account(const CorpusDefinition& d, const AccountRef& probe_account);

/// Builds the carrier for probe `seq` so that it satisfies matches(·, d).
/// Throws ConfigError when the definition cannot be satisfied by construction
/// (e.g. an account corpus without the probe account).
TweetRecord make_probe(const CorpusDefinition& d, std::uint64_t seq, UtcTime at, const ProbeOptions& options);

std::string probe_marker(const std::string& corpus, std::uint64_t seq);

/// Posts `count` probes, one per interval. Every carrier is checked against
/// the matcher before posting (VerificationError otherwise). If the source
/// refuses a probe the SourceError propagates and no log is returned.
std::vector<ProbeRecord> inject_probes(const CorpusDefinition& d, StreamSource& source, std::size_t count,
                                       const ProbeOptions& options = {});

/// Thread-safe set of carrier ids observers consult to flag stored probes.
class ProbeRegistry {
 public:
  void add(const std::vector<ProbeRecord>& probes);
  bool contains(TweetId carrier_id) const;
  std::vector<ProbeRecord> all() const;

 private:
  mutable std::mutex mutex_;
  std::vector<ProbeRecord> probes_;
  std::set<TweetId> ids_;
};

struct CompletenessBin {
  Interval interval;
  std::size_t created = 0;
  std::size_t stored = 0;
};

struct CompletenessReport {
  std::string corpus;
  Interval window;
  std::size_t created = 0;
  std::size_t stored = 0;
  double completeness = 0.0;  // stored / created
  std::vector<CompletenessBin> bins;
  std::vector<ProbeRecord> missing;
};

/// Counts probe markers present among the corpus's stored hashtags. Throws
/// VerificationError when no probe for the corpus was created in `window`
/// (completeness is undefined then).
CompletenessReport compute_completeness(const CorpusStore& store, const std::vector<ProbeRecord>& probes,
                                        const std::string& corpus, const Interval& window,
                                        Seconds bin = Seconds{3600});

std::string completeness_to_json(const std::vector<CompletenessReport>& reports);
/// Columns: corpus, window, created, stored, ratio.
std::string completeness_to_text(const std::vector<CompletenessReport>& reports);

std::string probe_log_to_ndjson(const std::vector<ProbeRecord>& probes);
std::vector<ProbeRecord> parse_probe_log(std::string_view ndjson);

}  // namespace corpuskit
