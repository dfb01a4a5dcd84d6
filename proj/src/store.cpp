#include "corpuskit/store.hpp"

#include <algorithm>
#include <mutex>
#include <sstream>

#include "corpuskit/detail/tweet_json.hpp"
#include "corpuskit/errors.hpp"

namespace corpuskit {

namespace fs = std::filesystem;
using detail::Json;

bool valid_corpus_name(std::string_view name) {
  if (name.empty() || name == "." || name == "..") return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-' || c == '.';
  });
}

std::string stored_tweet_to_json(const StoredTweet& s) {
  Json j = detail::tweet_to_json(s.tweet);
  j["corpus"] = s.corpus;
  j["storedAt"] = format_utc(s.stored_at);
  j["isProbe"] = s.is_probe;
  return j.dump();
}

StoredTweet stored_tweet_from_json(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed corpus record: ") + e.what());
  }
  StoredTweet s;
  s.tweet = detail::tweet_from_json(j);
  s.corpus = detail::get_string(j, "corpus", "");
  s.stored_at = parse_utc_field(detail::get_string(j, "storedAt", ""), "storedAt");
  auto probe = j.find("isProbe");
  if (probe == j.end() || !probe->is_boolean()) {
    throw SchemaError("isProbe", "attribute 'isProbe' must be a boolean");
  }
  s.is_probe = probe->get<bool>();
  return s;
}

CorpusStore::CorpusStore() = default;

CorpusStore::CorpusStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(*root_, ec);
  if (ec) {
    throw StoreError("cannot create store directory '" + root_->string() + "': " + ec.message(), false);
  }
  load_existing();
}

CorpusStore::~CorpusStore() = default;

void CorpusStore::load_existing() {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(*root_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ndjson") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const std::string corpus = file.stem().string();
    if (!valid_corpus_name(corpus)) continue;
    auto part = std::make_unique<Partition>();
    std::ifstream in(file, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      StoredTweet s;
      try {
        s = stored_tweet_from_json(line);
      } catch (const ConfigError& e) {
        throw StoreError(file.string() + ":" + std::to_string(line_no) + ": " + e.what(), false);
      }
      if (s.corpus != corpus) {
        throw StoreError(file.string() + ":" + std::to_string(line_no) + ": record belongs to corpus '" +
                             s.corpus + "'",
                         false);
      }
      if (part->ids.emplace(s.tweet.id, part->records.size()).second) part->records.push_back(std::move(s));
    }
    // The index is derived data; rewrite it so it always mirrors the records.
    {
      std::ofstream idx(fs::path(*root_) / (corpus + ".idx"), std::ios::binary | std::ios::trunc);
      for (const auto& r : part->records) idx << r.tweet.id << '\n';
    }
    partitions_.emplace(corpus, std::move(part));
  }
}

CorpusStore::Partition& CorpusStore::partition_locked(const std::string& corpus) {
  auto it = partitions_.find(corpus);
  if (it != partitions_.end()) return *it->second;
  if (!valid_corpus_name(corpus)) {
    throw StoreError("invalid corpus name '" + corpus + "' (allowed: letters, digits, _ . -)", false);
  }
  auto part = std::make_unique<Partition>();
  if (root_) {
    part->data.open(*root_ / (corpus + ".ndjson"), std::ios::binary | std::ios::app);
    part->index.open(*root_ / (corpus + ".idx"), std::ios::binary | std::ios::app);
    if (!part->data || !part->index) {
      throw StoreError("cannot open corpus files for '" + corpus + "'", true);
    }
  }
  return *partitions_.emplace(corpus, std::move(part)).first->second;
}

void CorpusStore::ensure_corpus(const std::string& corpus) {
  std::unique_lock lock(mutex_);
  partition_locked(corpus);
}

AppendResult CorpusStore::append(const TweetRecord& t, const std::string& corpus, bool is_probe,
                                 UtcTime stored_at) {
  std::unique_lock lock(mutex_);
  Partition& part = partition_locked(corpus);
  if (part.ids.count(t.id)) return AppendResult::duplicate;
  StoredTweet s{t, corpus, stored_at, is_probe};
  if (root_) {
    if (!part.data.is_open()) {
      part.data.open(*root_ / (corpus + ".ndjson"), std::ios::binary | std::ios::app);
      part.index.open(*root_ / (corpus + ".idx"), std::ios::binary | std::ios::app);
    }
    const std::string line = stored_tweet_to_json(s) + "\n";
    part.data.write(line.data(), static_cast<std::streamsize>(line.size()));
    part.data.flush();
    if (!part.data) {
      part.data.clear();
      throw StoreError("write to corpus '" + corpus + "' failed", true);
    }
    part.index << t.id << '\n';
    part.index.flush();
  }
  part.ids.emplace(t.id, part.records.size());
  part.records.push_back(std::move(s));
  return AppendResult::appended;
}

std::vector<StoredTweet> CorpusStore::scan(const std::string& corpus, const std::optional<Interval>& window,
                                           bool include_probes) const {
  std::vector<StoredTweet> out;
  {
    std::shared_lock lock(mutex_);
    auto it = partitions_.find(corpus);
    if (it == partitions_.end()) throw StoreError("unknown corpus '" + corpus + "'", false);
    for (const auto& r : it->second->records) {
      if (!include_probes && r.is_probe) continue;
      if (window && !window->contains(r.tweet.created_at)) continue;
      out.push_back(r);
    }
  }
  std::sort(out.begin(), out.end(), [](const StoredTweet& a, const StoredTweet& b) {
    if (a.tweet.created_at != b.tweet.created_at) return a.tweet.created_at < b.tweet.created_at;
    return a.tweet.id < b.tweet.id;
  });
  return out;
}

std::optional<StoredTweet> CorpusStore::find(const std::string& corpus, TweetId id) const {
  std::shared_lock lock(mutex_);
  auto it = partitions_.find(corpus);
  if (it == partitions_.end()) return std::nullopt;
  auto pos = it->second->ids.find(id);
  if (pos == it->second->ids.end()) return std::nullopt;
  return it->second->records[pos->second];
}

bool CorpusStore::has_corpus(const std::string& corpus) const {
  std::shared_lock lock(mutex_);
  return partitions_.count(corpus) > 0;
}

std::vector<std::string> CorpusStore::corpora() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, part] : partitions_) out.push_back(name);
  return out;
}

std::size_t CorpusStore::count(const std::string& corpus, bool include_probes) const {
  std::shared_lock lock(mutex_);
  auto it = partitions_.find(corpus);
  if (it == partitions_.end()) throw StoreError("unknown corpus '" + corpus + "'", false);
  if (include_probes) return it->second->records.size();
  return static_cast<std::size_t>(std::count_if(it->second->records.begin(), it->second->records.end(),
                                                [](const StoredTweet& r) { return !r.is_probe; }));
}

std::optional<TweetRecord> StoreLookup::lookup(TweetId id) const {
  auto s = store_.find(corpus_, id);
  if (!s) return std::nullopt;
  return s->tweet;
}

}  // namespace corpuskit
