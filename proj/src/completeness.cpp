#include "corpuskit/completeness.hpp"

#include <algorithm>
#include <sstream>

#include "corpuskit/detail/tweet_json.hpp"
#include "corpuskit/errors.hpp"
#include "corpuskit/text.hpp"

namespace corpuskit {

using detail::Json;

CorpusDefinition with_probe_account(const CorpusDefinition& d, const AccountRef& probe_account) {
  const auto* q = std::get_if<AccountQuery>(&d.strategy);
  if (!q) return d;
  const bool listed = std::any_of(q->accounts.begin(), q->accounts.end(),
                                  [&](const AccountRef& a) { return a.user_id == probe_account.user_id; });
  return listed ? d : widen(d, {probe_account}, {}, {});
}

std::string probe_marker(const std::string& corpus, std::uint64_t seq) {
  std::string slug;
  for (char c : corpus) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) slug += static_cast<char>(std::tolower(u));
  }
  if (slug.empty()) slug = "corpus";
  return "probe_" + slug + "_" + std::to_string(seq);
}

namespace {

void apply_metadata(const MetadataQuery& m, TweetRecord& t, UtcTime at, const CorpusDefinition& d,
                    const AccountRef& account, std::uint64_t seq) {
  if (m.time_window && !m.time_window->contains(at)) {
    throw ConfigError("corpus '" + d.name + "': probe time " + format_utc(at) + " lies outside the metadata window");
  }
  if (m.country) t.geo = GeoTag{52.52, 13.405, *m.country};
  if (!m.languages.empty()) t.language = *m.languages.begin();
  for (auto p : m.format) {
    switch (p) {
      case FormatPredicate::retweets_only:
        if (!t.is_retweet) {
          t.is_retweet = true;
          t.text = "RT @" + account.screen_name + ": " + t.text;
        }
        break;
      case FormatPredicate::must_have_url:
        if (t.urls.empty()) {
          t.urls.push_back("https://example.org/probe/" + std::to_string(seq));
          t.text += " " + t.urls.back();
        }
        break;
      case FormatPredicate::must_have_image:
        t.has_image = true;
        break;
    }
  }
}

}  // namespace

TweetRecord make_probe(const CorpusDefinition& d, std::uint64_t seq, UtcTime at, const ProbeOptions& options) {
  if (!d.window.contains(at)) {
    throw ConfigError("corpus '" + d.name + "': probe time " + format_utc(at) + " lies outside the corpus window");
  }
  TweetRecord t;
  t.user_id = options.account.user_id;
  t.screen_name = options.account.screen_name;
  t.created_at = at;
  const std::string marker = probe_marker(d.name, seq);
  t.text = "Sammeltest " + marker + " #" + marker;
  TweetId offset = 0;

  std::visit(
      [&](const auto& q) {
        using Q = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<Q, AccountQuery>) {
          const bool listed = std::any_of(q.accounts.begin(), q.accounts.end(),
                                          [&](const AccountRef& a) { return a.user_id == options.account.user_id; });
          if (!listed) {
            throw ConfigError("corpus '" + d.name + "': probe account " + std::to_string(options.account.user_id) +
                              " is not on the account list");
          }
        } else if constexpr (std::is_same_v<Q, KeywordQuery>) {
          if (!q.hashtags.empty()) {
            t.text += " #" + q.hashtags.front();
          } else if (!q.terms.empty()) {
            t.text += " " + q.terms.front();
          }
        } else if constexpr (std::is_same_v<Q, MetadataQuery>) {
          apply_metadata(q, t, at, d, options.account, seq);
        } else {
          while (!sample_decision(options.id_base + seq * 1000 + offset, q.rate, q.seed)) {
            if (++offset == 1000) {
              throw ConfigError("corpus '" + d.name + "': no probe id in the reserved block passes the sampler");
            }
          }
        }
      },
      d.strategy);
  if (d.extra_metadata) apply_metadata(*d.extra_metadata, t, at, d, options.account, seq);

  t.id = options.id_base + seq * 1000 + offset;
  const Entities e = extract_entities(t.text);
  t.hashtags = e.hashtags;
  t.mentions = e.mentions;
  for (auto& m : t.mentions) {
    if (text::iequals(m.screen_name, options.account.screen_name)) m.user_id = options.account.user_id;
  }
  return t;
}

std::vector<ProbeRecord> inject_probes(const CorpusDefinition& d, StreamSource& source, std::size_t count,
                                       const ProbeOptions& options) {
  if (options.interval <= Seconds{0}) throw ConfigError("probe interval must be positive");
  const UtcTime start = options.start.value_or(d.window.start);
  std::vector<TweetRecord> carriers;
  std::vector<ProbeRecord> log;
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint64_t seq = options.first_seq + k;
    const UtcTime at = start + options.interval * static_cast<std::int64_t>(k);
    TweetRecord t = make_probe(d, seq, at, options);
    if (!matches(t, d)) {
      throw VerificationError("corpus '" + d.name + "': probe " + std::to_string(seq) + " does not satisfy the matcher");
    }
    log.push_back({seq, d.name, at, t.id, probe_marker(d.name, seq)});
    carriers.push_back(std::move(t));
  }
  for (const auto& t : carriers) source.post_probe(t);
  return log;
}

void ProbeRegistry::add(const std::vector<ProbeRecord>& probes) {
  std::lock_guard lock(mutex_);
  for (const auto& p : probes) {
    probes_.push_back(p);
    ids_.insert(p.carrier_id);
  }
}

bool ProbeRegistry::contains(TweetId carrier_id) const {
  std::lock_guard lock(mutex_);
  return ids_.count(carrier_id) > 0;
}

std::vector<ProbeRecord> ProbeRegistry::all() const {
  std::lock_guard lock(mutex_);
  return probes_;
}

CompletenessReport compute_completeness(const CorpusStore& store, const std::vector<ProbeRecord>& probes,
                                        const std::string& corpus, const Interval& window, Seconds bin) {
  if (bin <= Seconds{0}) throw ConfigError("completeness bin width must be positive");
  CompletenessReport r;
  r.corpus = corpus;
  r.window = window;
  std::vector<const ProbeRecord*> created;
  for (const auto& p : probes) {
    if (p.corpus == corpus && window.contains(p.injected_at)) created.push_back(&p);
  }
  if (created.empty()) {
    throw VerificationError("completeness undefined for corpus '" + corpus + "': no probes created in [" +
                            format_utc(window.start) + ", " + format_utc(window.end) + ")");
  }
  std::set<std::string> found;
  if (store.has_corpus(corpus)) {
    for (const auto& s : store.scan(corpus, std::nullopt, true)) {
      for (const auto& h : s.tweet.hashtags) {
        if (h.text.rfind("probe_", 0) == 0) found.insert(h.text);
      }
    }
  }
  std::map<std::int64_t, CompletenessBin> bins;
  for (const ProbeRecord* p : created) {
    const bool stored = found.count(p->marker) > 0;
    ++r.created;
    if (stored) {
      ++r.stored;
    } else {
      r.missing.push_back(*p);
    }
    const std::int64_t k = (p->injected_at - window.start) / bin;
    auto& b = bins[k];
    b.interval = {window.start + bin * k, std::min(window.end, window.start + bin * (k + 1))};
    ++b.created;
    if (stored) ++b.stored;
  }
  for (auto& [k, b] : bins) r.bins.push_back(b);
  r.completeness = static_cast<double>(r.stored) / static_cast<double>(r.created);
  return r;
}

namespace {

Json probe_to_json(const ProbeRecord& p) {
  Json j;
  j["probeId"] = p.probe_id;
  j["corpus"] = p.corpus;
  j["injectedAt"] = format_utc(p.injected_at);
  j["carrierId"] = p.carrier_id;
  j["marker"] = p.marker;
  return j;
}

}  // namespace

std::string completeness_to_json(const std::vector<CompletenessReport>& reports) {
  Json out = Json::array();
  for (const auto& r : reports) {
    Json j;
    j["corpus"] = r.corpus;
    j["window"] = Json{{"start", format_utc(r.window.start)}, {"end", format_utc(r.window.end)}};
    j["created"] = r.created;
    j["stored"] = r.stored;
    j["difference"] = r.created - r.stored;
    j["completeness"] = r.completeness;
    Json bins = Json::array();
    for (const auto& b : r.bins) {
      bins.push_back(Json{{"start", format_utc(b.interval.start)},
                          {"end", format_utc(b.interval.end)},
                          {"created", b.created},
                          {"stored", b.stored}});
    }
    j["bins"] = std::move(bins);
    Json missing = Json::array();
    for (const auto& p : r.missing) missing.push_back(probe_to_json(p));
    j["missing"] = std::move(missing);
    out.push_back(std::move(j));
  }
  return Json{{"reports", std::move(out)}}.dump(2) + "\n";
}

std::string completeness_to_text(const std::vector<CompletenessReport>& reports) {
  std::string out = "corpus\twindow\tcreated\tstored\tratio\n";
  for (const auto& r : reports) {
    char ratio[32];
    std::snprintf(ratio, sizeof ratio, "%.4f", r.completeness);
    out += r.corpus + "\t" + format_utc(r.window.start) + "/" + format_utc(r.window.end) + "\t" +
           std::to_string(r.created) + "\t" + std::to_string(r.stored) + "\t" + ratio + "\n";
  }
  return out;
}

std::string probe_log_to_ndjson(const std::vector<ProbeRecord>& probes) {
  std::string out;
  for (const auto& p : probes) out += probe_to_json(p).dump() + "\n";
  return out;
}

std::vector<ProbeRecord> parse_probe_log(std::string_view ndjson) {
  std::vector<ProbeRecord> out;
  std::istringstream in{std::string(ndjson)};
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    const std::string where = "probe log line " + std::to_string(n);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    ProbeRecord p;
    p.probe_id = detail::get_u64(j, "probeId", where);
    p.corpus = detail::get_string(j, "corpus", where);
    p.injected_at = parse_utc_field(detail::get_string(j, "injectedAt", where), where + ".injectedAt");
    p.carrier_id = detail::get_u64(j, "carrierId", where);
    p.marker = detail::get_string(j, "marker", where);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace corpuskit
