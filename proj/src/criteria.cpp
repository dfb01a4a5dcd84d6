#include "corpuskit/criteria.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "corpuskit/detail/tweet_json.hpp"
#include "corpuskit/errors.hpp"
#include "corpuskit/text.hpp"

namespace corpuskit {

using detail::Json;

std::string_view to_string(FormatPredicate p) {
  switch (p) {
    case FormatPredicate::retweets_only: return "retweets_only";
    case FormatPredicate::must_have_url: return "must_have_url";
    case FormatPredicate::must_have_image: return "must_have_image";
  }
  return "unknown";
}

std::optional<FormatPredicate> format_predicate_from(std::string_view name) {
  for (auto p : {FormatPredicate::retweets_only, FormatPredicate::must_have_url,
                 FormatPredicate::must_have_image}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

std::string_view strategy_name(const Strategy& s) {
  static constexpr std::string_view names[] = {"accounts", "keywords", "metadata", "random"};
  return names[s.index()];
}

std::string normalize_hashtag(std::string_view tag) {
  if (!tag.empty() && tag.front() == '#') tag.remove_prefix(1);
  return text::fold(tag);
}

namespace {

bool author_listed(const TweetRecord& t, const AccountQuery& q) {
  return std::any_of(q.accounts.begin(), q.accounts.end(),
                     [&](const AccountRef& a) { return a.user_id == t.user_id; });
}

bool names_account(const AccountQuery& q, std::string_view name) {
  return std::any_of(q.accounts.begin(), q.accounts.end(),
                     [&](const AccountRef& a) { return text::iequals(a.screen_name, name); });
}

bool matches_accounts(const TweetRecord& t, const AccountQuery& q) {
  if (author_listed(t, q)) return true;
  if (!q.include_retweets_and_replies && (t.is_retweet || t.reply_to_id)) return false;
  if (q.match_mentions) {
    for (const auto& m : t.mentions) {
      const bool by_id =
          m.user_id != 0 && std::any_of(q.accounts.begin(), q.accounts.end(),
                                        [&](const AccountRef& a) { return a.user_id == m.user_id; });
      if (by_id || names_account(q, m.screen_name)) return true;
    }
  }
  if (q.match_name_hashtag) {
    for (const auto& h : t.hashtags) {
      if (names_account(q, h.text)) return true;
    }
  }
  return false;
}

bool contains_run(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

bool matches_keywords(const TweetRecord& t, const KeywordQuery& q) {
  for (const auto& h : t.hashtags) {
    const std::string tag = text::fold(h.text);
    if (std::find(q.hashtags.begin(), q.hashtags.end(), tag) != q.hashtags.end()) return true;
  }
  if (!q.terms.empty()) {
    const auto toks = text::tokens(t.text);
    for (const auto& term : q.terms) {
      if (contains_run(toks, text::tokens(term))) return true;
    }
  }
  return false;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

bool matches_metadata(const TweetRecord& t, const MetadataQuery& q) {
  if (q.country && (!t.geo || !text::iequals(t.geo->country, *q.country))) return false;
  if (q.time_window && !q.time_window->contains(t.created_at)) return false;
  if (!q.languages.empty() && (!t.language || !q.languages.count(text::fold(*t.language)))) {
    return false;
  }
  for (auto p : q.format) {
    switch (p) {
      case FormatPredicate::retweets_only:
        if (!t.is_retweet) return false;
        break;
      case FormatPredicate::must_have_url:
        if (t.urls.empty()) return false;
        break;
      case FormatPredicate::must_have_image:
        if (!t.has_image) return false;
        break;
    }
  }
  return true;
}

bool sample_decision(TweetId tweet_id, double rate, std::uint64_t seed) {
  if (rate >= 1.0) return true;
  const std::uint64_t h = splitmix64(tweet_id ^ splitmix64(seed));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < rate;
}

bool matches_strategy(const TweetRecord& t, const Strategy& s) {
  return std::visit(
      [&](const auto& q) -> bool {
        using Q = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<Q, AccountQuery>) {
          return matches_accounts(t, q);
        } else if constexpr (std::is_same_v<Q, KeywordQuery>) {
          return matches_keywords(t, q);
        } else if constexpr (std::is_same_v<Q, MetadataQuery>) {
          return matches_metadata(t, q);
        } else {
          return sample_decision(t.id, q.rate, q.seed);
        }
      },
      s);
}

bool matches(const TweetRecord& t, const CorpusDefinition& d) {
  if (!d.window.contains(t.created_at)) return false;
  if (!matches_strategy(t, d.strategy)) return false;
  return !d.extra_metadata || matches_metadata(t, *d.extra_metadata);
}

StreamQuery compile_query(const CorpusDefinition& d) {
  StreamQuery q;
  std::visit(
      [&](const auto& s) {
        using Q = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<Q, AccountQuery>) {
          q.mode = StreamQuery::Mode::filter;
          for (const auto& a : s.accounts) {
            q.follow_ids.push_back(a.user_id);
            q.track_terms.push_back(a.screen_name);
          }
        } else if constexpr (std::is_same_v<Q, KeywordQuery>) {
          q.mode = StreamQuery::Mode::filter;
          for (const auto& h : s.hashtags) q.track_terms.push_back("#" + h);
          for (const auto& term : s.terms) q.track_terms.push_back(term);
        } else if constexpr (std::is_same_v<Q, MetadataQuery>) {
          if (s.country || !s.languages.empty()) {
            q.mode = StreamQuery::Mode::filter;
            if (s.country) q.countries.push_back(*s.country);
            q.languages.assign(s.languages.begin(), s.languages.end());
          } else {
            q.mode = StreamQuery::Mode::firehose;
          }
        } else {
          q.mode = StreamQuery::Mode::sample;
          q.sample_rate = s.rate;
          q.sample_seed = s.seed;
        }
      },
      d.strategy);
  return q;
}

namespace {

[[noreturn]] void fail(const std::string& corpus, const std::string& field, const std::string& msg) {
  throw ConfigError("corpus '" + corpus + "', field '" + field + "': " + msg);
}

void check_metadata(const std::string& corpus, const std::string& field, const MetadataQuery& m) {
  if (!m.has_constraint()) fail(corpus, field, "metadata block sets no constraint");
  if (m.time_window && !m.time_window->valid()) fail(corpus, field + ".window", "start must precede end");
}

}  // namespace

void check_definition(const CorpusDefinition& d) {
  if (d.name.empty()) throw ConfigError("corpus name must not be empty");
  if (!d.window.valid()) fail(d.name, "window", "start must precede end");
  std::visit(
      [&](const auto& s) {
        using Q = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<Q, AccountQuery>) {
          if (s.accounts.empty()) fail(d.name, "strategy.accounts", "account list is empty");
          std::unordered_set<UserId> seen;
          for (const auto& a : s.accounts) {
            if (!seen.insert(a.user_id).second) {
              fail(d.name, "strategy.accounts", "duplicate user id " + std::to_string(a.user_id));
            }
          }
        } else if constexpr (std::is_same_v<Q, KeywordQuery>) {
          if (s.hashtags.empty() && s.terms.empty()) {
            fail(d.name, "strategy.hashtags", "keyword lists are empty");
          }
          for (const auto& h : s.hashtags) {
            if (h.empty() || h != normalize_hashtag(h)) {
              fail(d.name, "strategy.hashtags", "tag '" + h + "' is not normalized");
            }
          }
        } else if constexpr (std::is_same_v<Q, MetadataQuery>) {
          check_metadata(d.name, "strategy", s);
        } else {
          if (!(s.rate > 0.0 && s.rate <= 1.0)) fail(d.name, "strategy.rate", "rate must lie in (0, 1]");
        }
      },
      d.strategy);
  if (d.extra_metadata) check_metadata(d.name, "metadata", *d.extra_metadata);
}

CorpusDefinition widen(const CorpusDefinition& d, const std::vector<AccountRef>& accounts,
                       const std::vector<std::string>& hashtags,
                       const std::vector<std::string>& terms) {
  CorpusDefinition out = d;
  if (!accounts.empty()) {
    auto* q = std::get_if<AccountQuery>(&out.strategy);
    if (!q) throw ConfigError("corpus '" + d.name + "': accounts can only be added to an account corpus");
    for (const auto& a : accounts) {
      const bool present = std::any_of(q->accounts.begin(), q->accounts.end(),
                                       [&](const AccountRef& b) { return b.user_id == a.user_id; });
      if (!present) q->accounts.push_back(a);
    }
  }
  if (!hashtags.empty() || !terms.empty()) {
    auto* q = std::get_if<KeywordQuery>(&out.strategy);
    if (!q) throw ConfigError("corpus '" + d.name + "': keywords can only be added to a keyword corpus");
    for (const auto& h : hashtags) {
      const std::string tag = normalize_hashtag(h);
      if (std::find(q->hashtags.begin(), q->hashtags.end(), tag) == q->hashtags.end()) {
        q->hashtags.push_back(tag);
      }
    }
    for (const auto& term : terms) {
      if (std::find(q->terms.begin(), q->terms.end(), term) == q->terms.end()) q->terms.push_back(term);
    }
  }
  return out;
}

// ---- configuration file -------------------------------------------------

namespace {

Interval parse_window(const Json& j, const std::string& corpus, const std::string& field) {
  if (!j.is_object()) fail(corpus, field, "window must be an object with start and end");
  const auto get = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) fail(corpus, field + "." + key, "missing timestamp");
    auto t = parse_utc(it->get<std::string>());
    if (!t) fail(corpus, field + "." + key, "not a UTC timestamp: '" + it->get<std::string>() + "'");
    return *t;
  };
  Interval w{get("start"), get("end")};
  if (!w.valid()) fail(corpus, field, "inverted window: start must precede end");
  return w;
}

std::vector<std::string> string_list(const Json& j, const char* key, const std::string& corpus,
                                     const std::string& field) {
  std::vector<std::string> out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_array()) fail(corpus, field, "must be an array of strings");
  for (const auto& v : *it) {
    if (!v.is_string()) fail(corpus, field, "must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

bool flag(const Json& j, const char* key, bool dflt, const std::string& corpus) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_boolean()) fail(corpus, std::string("strategy.") + key, "must be a boolean");
  return it->get<bool>();
}

MetadataQuery parse_metadata(const Json& j, const std::string& corpus, const std::string& field) {
  MetadataQuery m;
  if (auto it = j.find("country"); it != j.end()) {
    if (!it->is_string()) fail(corpus, field + ".country", "must be a string");
    m.country = it->get<std::string>();
  }
  if (auto it = j.find("window"); it != j.end()) m.time_window = parse_window(*it, corpus, field + ".window");
  for (const auto& l : string_list(j, "languages", corpus, field + ".languages")) {
    m.languages.insert(text::fold(l));
  }
  for (const auto& f : string_list(j, "format", corpus, field + ".format")) {
    auto p = format_predicate_from(f);
    if (!p) fail(corpus, field + ".format", "unknown format predicate '" + f + "'");
    m.format.insert(*p);
  }
  if (!m.has_constraint()) fail(corpus, field, "metadata block sets no constraint");
  return m;
}

Strategy parse_strategy(const Json& j, const std::string& corpus) {
  if (!j.is_object()) fail(corpus, "strategy", "must be an object");
  auto type_it = j.find("type");
  if (type_it == j.end() || !type_it->is_string()) fail(corpus, "strategy.type", "missing strategy type");
  const std::string type = type_it->get<std::string>();
  if (type == "accounts") {
    AccountQuery q;
    auto it = j.find("accounts");
    if (it == j.end() || !it->is_array()) fail(corpus, "strategy.accounts", "must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& a = (*it)[i];
      const std::string path = "strategy.accounts[" + std::to_string(i) + "]";
      try {
        q.accounts.push_back({detail::get_u64(a, "id", path), detail::get_string(a, "screenName", path)});
      } catch (const SchemaError& e) {
        fail(corpus, e.attribute(), e.what());
      }
    }
    if (q.accounts.empty()) fail(corpus, "strategy.accounts", "account list is empty");
    q.match_mentions = flag(j, "matchMentions", true, corpus);
    q.match_name_hashtag = flag(j, "matchNameHashtag", true, corpus);
    q.include_retweets_and_replies = flag(j, "includeRetweetsAndReplies", true, corpus);
    return q;
  }
  if (type == "keywords") {
    KeywordQuery q;
    for (const auto& h : string_list(j, "hashtags", corpus, "strategy.hashtags")) {
      const std::string tag = normalize_hashtag(h);
      if (tag.empty()) fail(corpus, "strategy.hashtags", "empty hashtag");
      if (std::find(q.hashtags.begin(), q.hashtags.end(), tag) == q.hashtags.end()) q.hashtags.push_back(tag);
    }
    q.terms = string_list(j, "terms", corpus, "strategy.terms");
    if (q.hashtags.empty() && q.terms.empty()) fail(corpus, "strategy.hashtags", "keyword lists are empty");
    return q;
  }
  if (type == "metadata") return parse_metadata(j, corpus, "strategy");
  if (type == "random") {
    RandomSampleQuery q;
    auto rate = j.find("rate");
    if (rate == j.end() || !rate->is_number()) fail(corpus, "strategy.rate", "missing sampling rate");
    q.rate = rate->get<double>();
    if (!(q.rate > 0.0 && q.rate <= 1.0)) fail(corpus, "strategy.rate", "rate must lie in (0, 1]");
    if (j.contains("seed")) {
      try {
        q.seed = detail::get_u64(j, "seed", "strategy");
      } catch (const SchemaError& e) {
        fail(corpus, "strategy.seed", e.what());
      }
    }
    return q;
  }
  fail(corpus, "strategy.type", "unknown strategy '" + type + "'");
}

Json window_json(const Interval& w) {
  return Json{{"start", format_utc(w.start)}, {"end", format_utc(w.end)}};
}

Json metadata_json(const MetadataQuery& m) {
  Json j = Json::object();
  if (m.country) j["country"] = *m.country;
  if (m.time_window) j["window"] = window_json(*m.time_window);
  if (!m.languages.empty()) j["languages"] = m.languages;
  if (!m.format.empty()) {
    Json f = Json::array();
    for (auto p : m.format) f.push_back(std::string(to_string(p)));
    j["format"] = std::move(f);
  }
  return j;
}

}  // namespace

std::vector<CorpusDefinition> parse_corpus_config(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("corpus configuration is not valid JSON: ") + e.what());
  }
  auto corpora = root.find("corpora");
  if (!root.is_object() || corpora == root.end() || !corpora->is_array()) {
    throw SchemaError("corpora", "corpus configuration needs a top-level 'corpora' array");
  }
  std::vector<CorpusDefinition> out;
  std::map<std::string, std::size_t> names;
  for (std::size_t i = 0; i < corpora->size(); ++i) {
    const Json& c = (*corpora)[i];
    auto name_it = c.find("name");
    if (!c.is_object() || name_it == c.end() || !name_it->is_string() ||
        name_it->get<std::string>().empty()) {
      throw ConfigError("corpora[" + std::to_string(i) + "], field 'name': missing corpus name");
    }
    CorpusDefinition d;
    d.name = name_it->get<std::string>();
    if (!names.emplace(d.name, i).second) fail(d.name, "name", "duplicate corpus name");
    auto w = c.find("window");
    if (w == c.end()) fail(d.name, "window", "missing collection window");
    d.window = parse_window(*w, d.name, "window");
    auto s = c.find("strategy");
    if (s == c.end()) fail(d.name, "strategy", "missing strategy block");
    d.strategy = parse_strategy(*s, d.name);
    if (auto m = c.find("metadata"); m != c.end()) d.extra_metadata = parse_metadata(*m, d.name, "metadata");
    check_definition(d);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<CorpusDefinition> load_corpus_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open corpus configuration '" + file.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_corpus_config(ss.str());
}

std::string corpus_config_to_json(const std::vector<CorpusDefinition>& defs) {
  Json corpora = Json::array();
  for (const auto& d : defs) {
    Json c;
    c["name"] = d.name;
    c["window"] = window_json(d.window);
    Json s;
    std::visit(
        [&](const auto& q) {
          using Q = std::decay_t<decltype(q)>;
          if constexpr (std::is_same_v<Q, AccountQuery>) {
            s["type"] = "accounts";
            Json accts = Json::array();
            for (const auto& a : q.accounts) accts.push_back(Json{{"id", a.user_id}, {"screenName", a.screen_name}});
            s["accounts"] = std::move(accts);
            s["matchMentions"] = q.match_mentions;
            s["matchNameHashtag"] = q.match_name_hashtag;
            s["includeRetweetsAndReplies"] = q.include_retweets_and_replies;
          } else if constexpr (std::is_same_v<Q, KeywordQuery>) {
            s["type"] = "keywords";
            s["hashtags"] = q.hashtags;
            if (!q.terms.empty()) s["terms"] = q.terms;
          } else if constexpr (std::is_same_v<Q, MetadataQuery>) {
            s = metadata_json(q);
            s["type"] = "metadata";
          } else {
            s["type"] = "random";
            s["rate"] = q.rate;
            s["seed"] = q.seed;
          }
        },
        d.strategy);
    c["strategy"] = std::move(s);
    if (d.extra_metadata) c["metadata"] = metadata_json(*d.extra_metadata);
    corpora.push_back(std::move(c));
  }
  return Json{{"corpora", std::move(corpora)}}.dump(2) + "\n";
}

}  // namespace corpuskit
