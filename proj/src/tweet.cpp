#include "corpuskit/tweet.hpp"

#include <algorithm>

#include "corpuskit/detail/tweet_json.hpp"
#include "corpuskit/errors.hpp"
#include "corpuskit/text.hpp"

namespace corpuskit {

namespace detail {

namespace {

const Json& require(const Json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) {
    const std::string name = path.empty() ? key : path + "." + key;
    throw SchemaError(name, "missing mandatory attribute '" + name + "'");
  }
  return *it;
}

std::string qualified(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

std::size_t get_offset(const Json& j, const char* key, const std::string& path) {
  return static_cast<std::size_t>(get_u64(j, key, path));
}

}  // namespace

std::uint64_t get_u64(const Json& j, const char* key, const std::string& path) {
  const Json& v = require(j, key, path);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (!s.empty() && s.size() <= 20 &&
        std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      try {
        return std::stoull(s);
      } catch (const std::out_of_range&) {
      }
    }
  }
  const std::string name = qualified(path, key);
  throw SchemaError(name, "attribute '" + name + "' must be a non-negative integer");
}

std::string get_string(const Json& j, const char* key, const std::string& path) {
  const Json& v = require(j, key, path);
  if (!v.is_string()) {
    const std::string name = qualified(path, key);
    throw SchemaError(name, "attribute '" + name + "' must be a string");
  }
  return v.get<std::string>();
}

Json tweet_to_json(const TweetRecord& t) {
  Json j;
  j["_id"] = t.id;
  j["userid"] = t.user_id;
  j["screenName"] = t.screen_name;
  j["createdAt"] = format_utc(t.created_at);
  j["tweettext"] = t.text;
  Json tags = Json::array();
  for (const auto& h : t.hashtags) {
    tags.push_back(Json{{"start", h.start}, {"end", h.end}, {"text", h.text}});
  }
  j["hashtags"] = std::move(tags);
  Json mentions = Json::array();
  for (const auto& m : t.mentions) {
    mentions.push_back(Json{{"start", m.start},
                            {"end", m.end},
                            {"id", m.user_id},
                            {"screenName", m.screen_name},
                            {"name", m.display_name}});
  }
  j["mentions"] = std::move(mentions);
  if (!t.urls.empty()) j["urls"] = t.urls;
  if (t.is_retweet) j["isRetweet"] = true;
  if (t.reply_to_id) j["inReplyToId"] = *t.reply_to_id;
  if (t.geo) {
    j["geo"] = Json{{"lat", t.geo->latitude}, {"lon", t.geo->longitude}, {"country", t.geo->country}};
  }
  if (t.language) j["lang"] = *t.language;
  if (t.has_image) j["hasImage"] = true;
  return j;
}

TweetRecord tweet_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("", "tweet must be a JSON object");
  TweetRecord t;
  t.id = get_u64(j, "_id", "");
  t.user_id = get_u64(j, "userid", "");
  t.screen_name = get_string(j, "screenName", "");
  t.created_at = [&] {
    const std::string raw = get_string(j, "createdAt", "");
    auto parsed = parse_utc(raw);
    if (!parsed) {
      throw SchemaError("createdAt", "attribute 'createdAt' is not a UTC timestamp: '" + raw + "'");
    }
    return *parsed;
  }();
  t.text = get_string(j, "tweettext", "");

  const Json& tags = require(j, "hashtags", "");
  if (!tags.is_array()) throw SchemaError("hashtags", "attribute 'hashtags' must be an array");
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string path = "hashtags[" + std::to_string(i) + "]";
    t.hashtags.push_back(HashtagEntity{get_offset(tags[i], "start", path),
                                       get_offset(tags[i], "end", path),
                                       get_string(tags[i], "text", path)});
  }

  const Json& mentions = require(j, "mentions", "");
  if (!mentions.is_array()) throw SchemaError("mentions", "attribute 'mentions' must be an array");
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const std::string path = "mentions[" + std::to_string(i) + "]";
    const Json& m = mentions[i];
    MentionEntity e;
    e.start = get_offset(m, "start", path);
    e.end = get_offset(m, "end", path);
    e.user_id = get_u64(m, "id", path);
    e.screen_name = get_string(m, "screenName", path);
    if (m.contains("name")) e.display_name = get_string(m, "name", path);
    t.mentions.push_back(std::move(e));
  }

  if (auto it = j.find("urls"); it != j.end()) {
    if (!it->is_array()) throw SchemaError("urls", "attribute 'urls' must be an array");
    for (const auto& u : *it) {
      if (!u.is_string()) throw SchemaError("urls", "attribute 'urls' must hold strings");
      t.urls.push_back(u.get<std::string>());
    }
  }
  if (auto it = j.find("isRetweet"); it != j.end()) {
    if (!it->is_boolean()) throw SchemaError("isRetweet", "attribute 'isRetweet' must be a boolean");
    t.is_retweet = it->get<bool>();
  }
  if (j.contains("inReplyToId")) t.reply_to_id = get_u64(j, "inReplyToId", "");
  if (auto it = j.find("geo"); it != j.end() && !it->is_null()) {
    const auto num = [&](const char* key) {
      auto v = it->find(key);
      if (v == it->end() || !v->is_number()) {
        throw SchemaError(std::string("geo.") + key, std::string("attribute 'geo.") + key + "' must be a number");
      }
      return v->get<double>();
    };
    t.geo = GeoTag{num("lat"), num("lon"), get_string(*it, "country", "geo")};
  }
  if (j.contains("lang")) t.language = get_string(j, "lang", "");
  if (auto it = j.find("hasImage"); it != j.end()) {
    if (!it->is_boolean()) throw SchemaError("hasImage", "attribute 'hasImage' must be a boolean");
    t.has_image = it->get<bool>();
  }
  return t;
}

}  // namespace detail

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::offset_out_of_range: return "offset-out-of-range";
    case IssueKind::slice_mismatch: return "slice-mismatch";
    case IssueKind::marker_missing: return "marker-missing";
    case IssueKind::timestamp_invalid: return "timestamp-invalid";
  }
  return "unknown";
}

TweetRecord parse_tweet(std::string_view raw) {
  detail::Json j;
  try {
    j = detail::Json::parse(raw);
  } catch (const detail::Json::parse_error& e) {
    throw ParseError(std::string("malformed tweet JSON: ") + e.what());
  }
  return detail::tweet_from_json(j);
}

std::string serialize_tweet(const TweetRecord& t) { return detail::tweet_to_json(t).dump(); }

Entities extract_entities(std::string_view text) {
  const std::u32string cps = text::decode_utf8(text);
  Entities out;
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t marker = cps[i];
    if ((marker == U'#' || marker == U'@') && i + 1 < cps.size() && text::is_word_char(cps[i + 1])) {
      std::size_t j = i + 1;
      while (j < cps.size() && text::is_word_char(cps[j])) ++j;
      std::string word = text::encode_utf8(cps.substr(i + 1, j - i - 1));
      if (marker == U'#') {
        out.hashtags.push_back(HashtagEntity{i, j, std::move(word)});
      } else {
        MentionEntity m;
        m.start = i;
        m.end = j;
        m.screen_name = std::move(word);
        out.mentions.push_back(std::move(m));
      }
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

namespace {

template <typename Entity>
void check_entity(const TweetRecord& t, const std::u32string& cps, const Entity& e,
                  const std::string& field, char32_t marker, const std::string& expected,
                  std::vector<ValidationIssue>& issues) {
  if (e.start >= e.end || e.end > cps.size()) {
    issues.push_back({t.id, field, IssueKind::offset_out_of_range,
                      "offsets [" + std::to_string(e.start) + ", " + std::to_string(e.end) +
                          ") outside text of length " + std::to_string(cps.size())});
    return;
  }
  if (cps[e.start] != marker) {
    issues.push_back({t.id, field, IssueKind::marker_missing,
                      "character at " + std::to_string(e.start) + " is not '" +
                          text::encode_utf8(std::u32string(1, marker)) + "'"});
  }
  const std::string slice = text::encode_utf8(cps.substr(e.start + 1, e.end - e.start - 1));
  if (!text::iequals(slice, expected)) {
    issues.push_back({t.id, field, IssueKind::slice_mismatch,
                      "slice [" + std::to_string(e.start + 1) + ", " + std::to_string(e.end) +
                          ") is '" + slice + "', expected '" + expected + "'"});
  }
}

}  // namespace

std::vector<ValidationIssue> validate(const TweetRecord& t) {
  std::vector<ValidationIssue> issues;
  const std::u32string cps = text::decode_utf8(t.text);
  for (std::size_t i = 0; i < t.hashtags.size(); ++i) {
    check_entity(t, cps, t.hashtags[i], "hashtags[" + std::to_string(i) + "]", U'#',
                 t.hashtags[i].text, issues);
  }
  for (std::size_t i = 0; i < t.mentions.size(); ++i) {
    check_entity(t, cps, t.mentions[i], "mentions[" + std::to_string(i) + "]", U'@',
                 t.mentions[i].screen_name, issues);
  }
  if (!canonical_representable(t.created_at)) {
    issues.push_back({t.id, "createdAt", IssueKind::timestamp_invalid,
                      "timestamp has no four-digit-year UTC representation"});
  }
  return issues;
}

std::vector<TweetRecord> read_tweet_lines(std::string_view ndjson) {
  std::vector<TweetRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= ndjson.size()) {
    const std::size_t nl = ndjson.find('\n', pos);
    const std::string_view line =
        ndjson.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        out.push_back(parse_tweet(line));
      } catch (const SchemaError& e) {
        throw SchemaError(e.attribute(), "line " + std::to_string(line_no) + ": " + e.what());
      } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

}  // namespace corpuskit
