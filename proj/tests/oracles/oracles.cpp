#include "oracles.hpp"

#include <algorithm>
#include <tuple>

namespace oracle {

namespace {

std::vector<std::uint32_t> decode(const std::string& s) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto b = static_cast<unsigned char>(s[i]);
    int len = b < 0x80 ? 1 : (b >> 5) == 0x6 ? 2 : (b >> 4) == 0xE ? 3 : 4;
    std::uint32_t cp = len == 1 ? b : len == 2 ? (b & 0x1F) : len == 3 ? (b & 0x0F) : (b & 0x07);
    for (int k = 1; k < len && i + k < s.size(); ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode(const std::vector<std::uint32_t>& cps) {
  std::string out;
  for (auto c : cps) {
    if (c < 0x80) {
      out += static_cast<char>(c);
    } else if (c < 0x800) {
      out += static_cast<char>(0xC0 | (c >> 6));
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else if (c < 0x10000) {
      out += static_cast<char>(0xE0 | (c >> 12));
      out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (c >> 18));
      out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    }
  }
  return out;
}

// Letters, digits and underscore; Latin-1 and Latin Extended letters count.
bool word(std::uint32_t c) {
  if (c == '_') return true;
  if (c >= '0' && c <= '9') return true;
  if ((c | 0x20) >= 'a' && (c | 0x20) <= 'z') return true;
  return c >= 0xC0 && c <= 0x24F && c != 0xD7 && c != 0xF7;
}

std::uint32_t lower(std::uint32_t c) {
  if (c >= 'A' && c <= 'Z') return c - 'A' + 'a';
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if ((c >= 0x100 && c <= 0x137) || (c >= 0x14A && c <= 0x177)) return c | 1u;
  return c;
}

bool same(const std::string& a, const std::string& b) { return fold(a) == fold(b); }

bool metadata_ok(const corpuskit::TweetRecord& t, const corpuskit::MetadataQuery& m) {
  if (m.country) {
    if (!t.geo || !same(t.geo->country, *m.country)) return false;
  }
  if (m.time_window) {
    if (t.created_at < m.time_window->start || t.created_at >= m.time_window->end) return false;
  }
  if (!m.languages.empty()) {
    if (!t.language) return false;
    bool any = false;
    for (const auto& l : m.languages) any = any || same(l, *t.language);
    if (!any) return false;
  }
  for (auto f : m.format) {
    if (f == corpuskit::FormatPredicate::retweets_only && !t.is_retweet) return false;
    if (f == corpuskit::FormatPredicate::must_have_url && t.urls.empty()) return false;
    if (f == corpuskit::FormatPredicate::must_have_image && !t.has_image) return false;
  }
  return true;
}

bool accounts_ok(const corpuskit::TweetRecord& t, const corpuskit::AccountQuery& q) {
  std::set<std::uint64_t> ids;
  std::set<std::string> names;
  for (const auto& a : q.accounts) {
    ids.insert(a.user_id);
    names.insert(fold(a.screen_name));
  }
  if (ids.count(t.user_id)) return true;
  if (!q.include_retweets_and_replies && (t.is_retweet || t.reply_to_id.has_value())) return false;
  if (q.match_mentions) {
    for (const auto& m : t.mentions) {
      if ((m.user_id != 0 && ids.count(m.user_id)) || names.count(fold(m.screen_name))) return true;
    }
  }
  if (q.match_name_hashtag) {
    for (const auto& h : t.hashtags) {
      if (names.count(fold(h.text))) return true;
    }
  }
  return false;
}

bool keywords_ok(const corpuskit::TweetRecord& t, const corpuskit::KeywordQuery& q) {
  for (const auto& h : t.hashtags) {
    for (const auto& want : q.hashtags) {
      if (same(h.text, want)) return true;
    }
  }
  const auto toks = word_tokens(t.text);
  for (const auto& term : q.terms) {
    const auto need = word_tokens(term);
    if (need.empty() || need.size() > toks.size()) continue;
    for (std::size_t i = 0; i + need.size() <= toks.size(); ++i) {
      bool all = true;
      for (std::size_t k = 0; k < need.size() && all; ++k) all = toks[i + k] == need[k];
      if (all) return true;
    }
  }
  return false;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string fold(const std::string& utf8) {
  auto cps = decode(utf8);
  for (auto& c : cps) c = lower(c);
  return encode(cps);
}

std::vector<Span> scan_entities(const std::string& utf8) {
  const auto cps = decode(utf8);
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < cps.size()) {
    if ((cps[i] == '#' || cps[i] == '@') && i + 1 < cps.size() && word(cps[i + 1])) {
      std::size_t j = i + 1;
      std::vector<std::uint32_t> w;
      for (; j < cps.size() && word(cps[j]); ++j) w.push_back(cps[j]);
      out.push_back({i, j, static_cast<char>(cps[i]), encode(w)});
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

std::vector<std::string> word_tokens(const std::string& utf8) {
  std::vector<std::string> out;
  std::vector<std::uint32_t> cur;
  for (auto c : decode(utf8)) {
    if (word(c)) {
      cur.push_back(lower(c));
      continue;
    }
    if (!cur.empty()) out.push_back(encode(cur));
    cur.clear();
  }
  if (!cur.empty()) out.push_back(encode(cur));
  return out;
}

bool sampled(std::uint64_t id, double rate, std::uint64_t seed) {
  if (rate >= 1.0) return true;
  const std::uint64_t h = mix(id ^ mix(seed));
  return static_cast<double>(h >> 11) / 9007199254740992.0 < rate;
}

bool matches(const corpuskit::TweetRecord& t, const corpuskit::CorpusDefinition& d) {
  if (t.created_at < d.window.start || t.created_at >= d.window.end) return false;
  bool ok = false;
  if (auto* a = std::get_if<corpuskit::AccountQuery>(&d.strategy)) ok = accounts_ok(t, *a);
  if (auto* k = std::get_if<corpuskit::KeywordQuery>(&d.strategy)) ok = keywords_ok(t, *k);
  if (auto* m = std::get_if<corpuskit::MetadataQuery>(&d.strategy)) ok = metadata_ok(t, *m);
  if (auto* r = std::get_if<corpuskit::RandomSampleQuery>(&d.strategy)) ok = sampled(t.id, r->rate, r->seed);
  return ok && (!d.extra_metadata || metadata_ok(t, *d.extra_metadata));
}

std::uint64_t min_followers(std::uint64_t num, std::uint64_t den, std::uint64_t total) {
  std::uint64_t k = 0;
  while (k * den < num * total) ++k;
  return k;
}

std::set<std::uint64_t> authorities(const std::set<std::pair<std::uint64_t, std::uint64_t>>& edges,
                                    const std::set<std::uint64_t>& group, std::uint64_t num, std::uint64_t den) {
  std::set<std::uint64_t> targets;
  for (const auto& e : edges) targets.insert(e.second);
  std::set<std::uint64_t> out;
  const std::uint64_t need = min_followers(num, den, group.size());
  for (auto target : targets) {
    std::uint64_t n = 0;
    for (auto g : group) n += edges.count({g, target});
    if (n >= need && n > 0) out.insert(target);
  }
  return out;
}

std::set<Issue> offset_issues(const corpuskit::TweetRecord& t) {
  const auto cps = decode(t.text);
  std::set<Issue> out;
  const auto check = [&](const std::string& field, std::size_t start, std::size_t end, char marker,
                         const std::string& text) {
    if (!(start < end && end <= cps.size())) {
      out.insert({field, "range"});
      return;
    }
    if (cps[start] != static_cast<std::uint32_t>(marker)) out.insert({field, "marker"});
    std::vector<std::uint32_t> inner(cps.begin() + static_cast<long>(start) + 1, cps.begin() + static_cast<long>(end));
    if (!same(encode(inner), text)) out.insert({field, "slice"});
  };
  for (std::size_t i = 0; i < t.hashtags.size(); ++i) {
    check("hashtags[" + std::to_string(i) + "]", t.hashtags[i].start, t.hashtags[i].end, '#', t.hashtags[i].text);
  }
  for (std::size_t i = 0; i < t.mentions.size(); ++i) {
    check("mentions[" + std::to_string(i) + "]", t.mentions[i].start, t.mentions[i].end, '@',
          t.mentions[i].screen_name);
  }
  return out;
}

}  // namespace oracle
