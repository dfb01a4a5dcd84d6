#include "corpuskit/archive.hpp"

#include <algorithm>
#include <unordered_set>

#include "corpuskit/errors.hpp"

namespace corpuskit {

DehydratedCorpus dehydrate(const CorpusStore& store, const std::string& corpus, const Roster* roster,
                           UtcTime generated_at) {
  DehydratedCorpus out;
  out.corpus = corpus;
  out.generated_at = generated_at;
  std::map<UserId, std::string> authors;
  if (roster) authors = roster->twitter_accounts();
  for (const auto& s : store.scan(corpus, std::nullopt, false)) {
    DehydratedRow row{s.tweet.id, std::nullopt};
    if (roster) {
      if (auto it = authors.find(s.tweet.user_id); it != authors.end()) row.candidate_id = it->second;
    }
    out.rows.push_back(std::move(row));
  }
  std::sort(out.rows.begin(), out.rows.end(),
            [](const DehydratedRow& a, const DehydratedRow& b) { return a.tweet_id < b.tweet_id; });
  return out;
}

std::string dehydrated_to_text(const DehydratedCorpus& d) {
  std::string out = "# corpus:" + d.corpus + " generated:" + format_utc(d.generated_at) + "\n";
  for (const auto& r : d.rows) {
    out += std::to_string(r.tweet_id);
    out.push_back('\t');
    if (r.candidate_id) out += *r.candidate_id;
    out.push_back('\n');
  }
  return out;
}

DehydratedCorpus parse_dehydrated(std::string_view text) {
  DehydratedCorpus d;
  std::unordered_set<TweetId> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = false;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto fail = [&](const std::string& msg) -> ParseError {
      return ParseError("ID list line " + std::to_string(line_no) + ": " + msg);
    };
    if (!header) {
      constexpr std::string_view corpus_tag = "# corpus:";
      constexpr std::string_view gen_tag = " generated:";
      const auto g = line.rfind(gen_tag);
      if (line.substr(0, corpus_tag.size()) != corpus_tag || g == std::string_view::npos || g < corpus_tag.size()) {
        throw fail("expected header '# corpus:<name> generated:<UTC>'");
      }
      d.corpus = std::string(line.substr(corpus_tag.size(), g - corpus_tag.size()));
      auto t = parse_utc(line.substr(g + gen_tag.size()));
      if (d.corpus.empty() || !t) throw fail("malformed header");
      d.generated_at = *t;
      header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string_view id_part = line.substr(0, tab);
    if (id_part.empty() || id_part.size() > 20 ||
        !std::all_of(id_part.begin(), id_part.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw fail("tweet id '" + std::string(id_part) + "' is not numeric");
    }
    DehydratedRow row;
    try {
      row.tweet_id = std::stoull(std::string(id_part));
    } catch (const std::exception&) {
      throw fail("tweet id out of range");
    }
    if (tab != std::string_view::npos) {
      const std::string_view cand = line.substr(tab + 1);
      if (cand.find('\t') != std::string_view::npos) throw fail("too many fields");
      if (!cand.empty()) row.candidate_id = std::string(cand);
    }
    if (!seen.insert(row.tweet_id).second) throw fail("duplicate tweet id " + std::string(id_part));
    d.rows.push_back(std::move(row));
  }
  if (!header) throw ParseError("ID list line 1: missing header");
  return d;
}

Rehydration rehydrate(const DehydratedCorpus& file, const TweetLookup& lookup) {
  Rehydration out;
  for (const auto& row : file.rows) {
    if (auto t = lookup.lookup(row.tweet_id)) {
      out.tweets.push_back(std::move(*t));
    } else {
      out.missing.push_back(row.tweet_id);
    }
  }
  return out;
}

PrivacyFilterResult privacy_filter(CorpusStore& store, const std::string& corpus, const Roster& roster,
                                   std::optional<std::string> derived_name) {
  const auto accounts = roster.twitter_accounts();
  if (accounts.empty()) {
    throw ConfigError("privacy filter refused: roster has no verified accounts");
  }
  PrivacyFilterResult r;
  r.derived_corpus = derived_name.value_or(corpus + ".roster-only");
  if (r.derived_corpus == corpus) throw ConfigError("privacy filter target must differ from the source corpus");
  const auto records = store.scan(corpus, std::nullopt, false);
  store.ensure_corpus(r.derived_corpus);
  for (const auto& s : records) {
    if (accounts.count(s.tweet.user_id)) {
      store.append(s.tweet, r.derived_corpus, false, s.stored_at);
      ++r.kept;
    } else {
      ++r.excluded;
    }
  }
  return r;
}

std::string export_candidates(const Roster& roster) { return roster_to_csv(roster); }

}  // namespace corpuskit
