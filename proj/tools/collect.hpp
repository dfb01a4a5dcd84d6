#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "corpuskit/completeness.hpp"
#include "corpuskit/observer.hpp"
#include "corpuskit/sim.hpp"

namespace corpuskit::cli {

namespace fs = std::filesystem;

/// Structured log line on standard error.
void log_event(std::ostream& err, std::string_view level, std::string_view message,
               const std::map<std::string, std::string>& fields = {});

std::string sha256_file(const fs::path& file);
std::string sha256_text(std::string_view text);

std::string read_text(const fs::path& file);
void write_text(const fs::path& file, const std::string& content);

struct PlannedAmendment {
  std::string corpus;
  AmendmentRequest request;
};

/// {"amendments": [{"corpus", "at", "accounts": [{"id", "screenName"}],
///                  "hashtags": [...], "terms": [...], "backfill": bool}]}
std::vector<PlannedAmendment> parse_plan(std::string_view json_text);
std::string plan_to_json(const std::vector<PlannedAmendment>& plan);

/// Applies planned amendments to the definitions (used by analyses that need
/// the final, widened corpus definitions).
std::vector<CorpusDefinition> amended_definitions(std::vector<CorpusDefinition> defs,
                                                  const std::vector<PlannedAmendment>& plan);

struct CollectOptions {
  fs::path corpora;
  fs::path world;
  fs::path store;
  fs::path manifest;
  std::optional<fs::path> plan;
  std::optional<fs::path> run_log;
  std::optional<fs::path> probe_log;
  std::optional<fs::path> dehydrate_dir;
  std::size_t probes = 0;
  Seconds probe_interval{600};
  // 0: one observer per corpus; otherwise account corpora are split into
  // observers following at most this many accounts each.
  std::size_t shard_size = 0;
  std::optional<std::uint64_t> seed;  // overrides the world's fault seed
  sim::Clock clock = sim::Clock::accelerated;
  std::string command = "collect run";
};

struct CollectResult {
  int exit_code = 0;
  std::string manifest_json;
  std::vector<CompletenessReport> completeness;
};

/// Runs every corpus of the config against the simulated world and writes the
/// manifest (also when the run fails).
CollectResult collect(const CollectOptions& options, std::ostream& err);

}  // namespace corpuskit::cli
