#include "corpuskit/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "corpuskit/detail/tweet_json.hpp"
#include "corpuskit/errors.hpp"
#include "corpuskit/text.hpp"

namespace corpuskit::sim {

using detail::Json;

std::string_view to_string(AccountKind k) {
  switch (k) {
    case AccountKind::candidate: return "candidate";
    case AccountKind::journalist: return "journalist";
    case AccountKind::editor: return "editor";
    case AccountKind::public_user: return "public";
    case AccountKind::emergent: return "emergent";
    case AccountKind::probe: return "probe";
  }
  return "public";
}

std::optional<AccountKind> account_kind_from(std::string_view s) {
  for (auto k : {AccountKind::candidate, AccountKind::journalist, AccountKind::editor, AccountKind::public_user,
                 AccountKind::emergent, AccountKind::probe}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Config

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
  throw ConfigError("scenario field '" + field + "': " + msg);
}

void check_fraction(const std::string& field, double v) {
  if (!(v >= 0.0 && v <= 1.0)) bad(field, "must be within [0, 1]");
}

}  // namespace

void check_config(const ScenarioConfig& c) {
  if (c.candidates > 0 && c.parties.empty()) bad("parties", "candidates need at least one party");
  if (c.duration <= Seconds{0}) bad("durationSeconds", "must be positive");
  if (!canonical_representable(c.start) || !canonical_representable(c.start + c.duration)) {
    bad("start", "simulated period must lie within years 0000-9999");
  }
  if (c.journalists + c.editors == 0) bad("counts", "at least one journalist or editor is required");
  if (c.candidates + c.journalists + c.editors + c.public_accounts + c.emergent.count == 0) {
    bad("counts", "scenario has no accounts");
  }
  if (c.topics.empty()) bad("topics", "at least one topic is required");
  std::set<std::string> topics;
  for (std::size_t i = 0; i < c.topics.size(); ++i) {
    if (c.topics[i].topic.empty()) bad("topics[" + std::to_string(i) + "].topic", "must not be empty");
    if (!(c.topics[i].share > 0.0)) bad("topics[" + std::to_string(i) + "].share", "must be positive");
    if (!topics.insert(c.topics[i].topic).second) bad("topics", "duplicate topic '" + c.topics[i].topic + "'");
  }
  std::set<std::string> tags;
  for (std::size_t i = 0; i < c.hashtags.size(); ++i) {
    const auto& h = c.hashtags[i];
    const std::string f = "hashtags[" + std::to_string(i) + "]";
    if (h.tag.empty() || normalize_hashtag(h.tag) != h.tag) bad(f + ".tag", "must be lowercase without '#'");
    const auto toks = text::tokens(h.tag);
    if (toks.size() != 1 || toks.front() != h.tag) bad(f + ".tag", "must be a single word");
    if (!topics.count(h.topic)) bad(f + ".topic", "unknown topic '" + h.topic + "'");
    if (!(h.propensity > 0.0)) bad(f + ".propensity", "must be positive");
    if (!tags.insert(h.tag).second) bad(f + ".tag", "duplicate tag '" + h.tag + "'");
  }
  check_fraction("probabilities.tag", c.tag_probability);
  check_fraction("probabilities.reply", c.reply_probability);
  check_fraction("probabilities.retweet", c.retweet_probability);
  if (c.reply_probability + c.retweet_probability > 1.0) {
    bad("probabilities.retweet", "reply and retweet probabilities sum above 1");
  }
  check_fraction("probabilities.replyWithoutHashtag", c.reply_without_hashtag);
  check_fraction("probabilities.mention", c.mention_probability);
  check_fraction("probabilities.nameHashtag", c.name_hashtag_probability);
  check_fraction("probabilities.geo", c.geo_fraction);
  check_fraction("probabilities.url", c.url_probability);
  check_fraction("probabilities.image", c.image_probability);
  if (c.languages.empty()) bad("languages", "at least one language is required");
  for (std::size_t i = 0; i < c.languages.size(); ++i) {
    if (c.languages[i].language.empty()) bad("languages[" + std::to_string(i) + "].language", "must not be empty");
    if (!(c.languages[i].share > 0.0)) bad("languages[" + std::to_string(i) + "].share", "must be positive");
  }
  check_fraction("emergent.emergesAt", c.emergent.emerges_at);
  if (c.emergent.count > 0 && c.emergent.party.empty()) bad("emergent.party", "must not be empty");
  check_fraction("faults.dropRate", c.faults.drop_rate);
  for (std::size_t i = 0; i < c.faults.disconnects.size(); ++i) {
    if (!c.faults.disconnects[i].window.valid()) {
      bad("faults.disconnects[" + std::to_string(i) + "]", "start must precede end");
    }
  }
}

namespace {

template <typename T>
T field_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw SchemaError(key, std::string("scenario field '") + key + "' has the wrong type");
  }
}

double prob(const Json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw SchemaError(key, std::string("scenario field 'probabilities.") + key + "' must be a number");
  return it->get<double>();
}

Interval parse_window(const Json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "scenario field '" + path + "' must be an object");
  return {parse_utc_field(detail::get_string(j, "start", path), path + ".start"),
          parse_utc_field(detail::get_string(j, "end", path), path + ".end")};
}

}  // namespace

ScenarioConfig parse_scenario_config(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("scenario config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("", "scenario config must be a JSON object");
  ScenarioConfig c;
  c.name = field_or<std::string>(j, "name", c.name);
  c.seed = field_or<std::uint64_t>(j, "seed", c.seed);
  c.parties = field_or<std::vector<std::string>>(j, "parties", {});
  if (auto it = j.find("counts"); it != j.end()) {
    c.candidates = field_or<std::size_t>(*it, "candidates", 0);
    c.journalists = field_or<std::size_t>(*it, "journalists", 0);
    c.editors = field_or<std::size_t>(*it, "editors", 0);
    c.public_accounts = field_or<std::size_t>(*it, "publicAccounts", 0);
    c.tweets = field_or<std::size_t>(*it, "tweets", 0);
  }
  c.start = parse_utc_field(detail::get_string(j, "start", "scenario"), "start");
  c.duration = Seconds{field_or<std::int64_t>(j, "durationSeconds", 0)};
  if (auto it = j.find("topics"); it != j.end()) {
    for (const auto& t : *it) c.topics.push_back({detail::get_string(t, "topic", "topics"), field_or(t, "share", 1.0)});
  }
  if (auto it = j.find("hashtags"); it != j.end()) {
    for (const auto& h : *it) {
      c.hashtags.push_back({detail::get_string(h, "tag", "hashtags"), detail::get_string(h, "topic", "hashtags"),
                            field_or(h, "propensity", 1.0)});
    }
  }
  if (auto it = j.find("probabilities"); it != j.end()) {
    const Json& p = *it;
    c.tag_probability = prob(p, "tag", c.tag_probability);
    c.reply_probability = prob(p, "reply", c.reply_probability);
    c.retweet_probability = prob(p, "retweet", c.retweet_probability);
    c.reply_without_hashtag = prob(p, "replyWithoutHashtag", c.reply_without_hashtag);
    c.mention_probability = prob(p, "mention", c.mention_probability);
    c.name_hashtag_probability = prob(p, "nameHashtag", c.name_hashtag_probability);
    c.geo_fraction = prob(p, "geo", c.geo_fraction);
    c.url_probability = prob(p, "url", c.url_probability);
    c.image_probability = prob(p, "image", c.image_probability);
  }
  if (auto it = j.find("languages"); it != j.end()) {
    for (const auto& l : *it) {
      c.languages.push_back({detail::get_string(l, "language", "languages"), field_or(l, "share", 1.0)});
    }
  }
  if (auto it = j.find("emergent"); it != j.end()) {
    c.emergent.party = field_or<std::string>(*it, "party", c.emergent.party);
    c.emergent.count = field_or<std::size_t>(*it, "count", 0);
    c.emergent.emerges_at = field_or(*it, "emergesAt", c.emergent.emerges_at);
  }
  if (auto it = j.find("faults"); it != j.end()) {
    c.faults.drop_rate = field_or(*it, "dropRate", 0.0);
    c.faults.seed = field_or<std::uint64_t>(*it, "seed", 0);
    if (auto d = it->find("disconnects"); d != it->end()) {
      for (std::size_t i = 0; i < d->size(); ++i) {
        const Json& w = (*d)[i];
        const std::string path = "faults.disconnects[" + std::to_string(i) + "]";
        c.faults.disconnects.push_back({parse_window(w, path), field_or<std::size_t>(w, "redeliver", 0)});
      }
    }
  }
  check_config(c);
  return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario config '" + file.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_config(ss.str());
}

std::string scenario_config_to_json(const ScenarioConfig& c) {
  Json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["parties"] = c.parties;
  j["counts"] = Json{{"candidates", c.candidates},
                     {"journalists", c.journalists},
                     {"editors", c.editors},
                     {"publicAccounts", c.public_accounts},
                     {"tweets", c.tweets}};
  j["start"] = format_utc(c.start);
  j["durationSeconds"] = c.duration.count();
  Json topics = Json::array();
  for (const auto& t : c.topics) topics.push_back(Json{{"topic", t.topic}, {"share", t.share}});
  j["topics"] = std::move(topics);
  Json tags = Json::array();
  for (const auto& h : c.hashtags) tags.push_back(Json{{"tag", h.tag}, {"topic", h.topic}, {"propensity", h.propensity}});
  j["hashtags"] = std::move(tags);
  j["probabilities"] = Json{{"tag", c.tag_probability},
                            {"reply", c.reply_probability},
                            {"retweet", c.retweet_probability},
                            {"replyWithoutHashtag", c.reply_without_hashtag},
                            {"mention", c.mention_probability},
                            {"nameHashtag", c.name_hashtag_probability},
                            {"geo", c.geo_fraction},
                            {"url", c.url_probability},
                            {"image", c.image_probability}};
  Json langs = Json::array();
  for (const auto& l : c.languages) langs.push_back(Json{{"language", l.language}, {"share", l.share}});
  j["languages"] = std::move(langs);
  j["emergent"] = Json{{"party", c.emergent.party}, {"count", c.emergent.count}, {"emergesAt", c.emergent.emerges_at}};
  Json windows = Json::array();
  for (const auto& w : c.faults.disconnects) {
    windows.push_back(Json{{"start", format_utc(w.window.start)},
                           {"end", format_utc(w.window.end)},
                           {"redeliver", w.redeliver}});
  }
  j["faults"] = Json{{"dropRate", c.faults.drop_rate}, {"seed", c.faults.seed}, {"disconnects", std::move(windows)}};
  return j.dump(2) + "\n";
}

ScenarioConfig preset(std::string_view name) {
  if (name != "bundestag-mini") throw ConfigError("unknown scenario preset '" + std::string(name) + "'");
  ScenarioConfig c;
  c.name = "bundestag-mini";
  c.seed = 20130922;
  c.parties = {"CDU", "SPD", "FDP", "Gruene", "Linke", "Piraten"};
  c.candidates = 40;
  c.journalists = 8;
  c.editors = 3;
  c.public_accounts = 200;
  c.tweets = 5000;
  c.start = parse_utc_field("2013-06-01T00:00:00Z", "start");
  c.duration = std::chrono::days{90};
  c.topics = {{"election", 0.55}, {"regional", 0.2}, {"surveillance", 0.15}, {"everyday", 0.1}};
  c.hashtags = {
      {"wahl2013", "election", 5.0},   {"btw13", "election", 4.0},     {"btw2013", "election", 2.0},
      {"bundestagswahl", "election", 2.0}, {"merkel", "election", 2.0}, {"steinbrueck", "election", 1.0},
      {"cdu", "election", 1.0},        {"spd", "election", 1.0},       {"fdp", "election", 0.5},
      {"gruene", "election", 0.5},     {"linke", "election", 0.5},     {"piraten", "election", 0.5},
      {"afd", "election", 0.5},        {"landtagswahl", "regional", 3.0}, {"landtagswahl2013", "regional", 2.0},
      {"landtagswahl13", "regional", 1.0}, {"ltw", "regional", 2.0},    {"ltwby", "regional", 1.0},
      {"ltwhe", "regional", 1.0},      {"nsa", "surveillance", 4.0},   {"snowden", "surveillance", 3.0},
      {"prism", "surveillance", 2.0},  {"neuland", "surveillance", 1.0},
  };
  c.tag_probability = 0.6;
  c.reply_probability = 0.3;
  c.retweet_probability = 0.15;
  c.reply_without_hashtag = 0.5;
  c.mention_probability = 0.3;
  c.name_hashtag_probability = 0.05;
  c.geo_fraction = 0.3;
  c.languages = {{"de", 0.85}, {"en", 0.1}, {"tr", 0.05}};
  c.url_probability = 0.2;
  c.image_probability = 0.1;
  c.emergent = {"AfD", 15, 0.6};
  return c;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  std::uint64_t bits() { return gen_(); }

  std::size_t weighted(const std::vector<double>& weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double x = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (x < weights[i]) return i;
      x -= weights[i];
    }
    return weights.size() - 1;
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[index(v.size())];
  }

 private:
  std::mt19937_64 gen_;
};

const std::vector<std::string> kFirst = {"Anna",  "Jonas",  "Lena",   "Felix", "Marie", "Lukas",  "Sophie", "Paul",
                                         "Clara", "Tobias", "Jana",   "Max",   "Eva",   "Stefan", "Julia",  "Jörg",
                                         "Katrin", "Mehmet", "Ayşe",  "Björn", "Ute",   "Günter", "Heike",  "Ralf"};
const std::vector<std::string> kLast = {"Müller", "Schmidt", "Schneider", "Fischer", "Weber",  "Meyer",  "Wagner",
                                        "Becker", "Schulz",  "Hoffmann",  "Koch",    "Richter", "Klein", "Wolf",
                                        "Schröder", "Neumann", "Schwarz", "Zimmermann", "Braun", "Krüger", "Hofmann",
                                        "Hartmann", "Lange",  "Schmitt",  "Werner",  "Krause", "Meier", "Lehmann",
                                        "Yilmaz", "Kaya",    "Öztürk",    "Jäger",   "Groß",   "Weiß"};
const std::vector<std::string> kOutlets = {"zeit", "spiegel", "faz", "sz", "taz", "welt", "dlf", "ard", "zdf", "ntv",
                                           "stern", "focus"};
const std::vector<std::string> kStates = {"Baden-Württemberg", "Bayern", "Berlin", "Brandenburg", "Bremen",
                                          "Hamburg", "Hessen", "Mecklenburg-Vorpommern", "Niedersachsen",
                                          "Nordrhein-Westfalen", "Rheinland-Pfalz", "Saarland", "Sachsen",
                                          "Sachsen-Anhalt", "Schleswig-Holstein", "Thüringen"};

const std::map<std::string, std::vector<std::string>>& topic_words() {
  static const std::map<std::string, std::vector<std::string>> words = {
      {"election", {"Wahlkampf", "heute", "in", "Berlin", "Hamburg", "München", "Köln", "Debatte", "Umfrage",
                    "Stimmen", "Programm", "Kandidaten", "Plakate", "Wähler", "Koalition", "Ergebnis", "Abend",
                    "Infostand", "Podium", "Gespräch", "Zweitstimme", "Wahlkreis"}},
      {"regional", {"Landtag", "Bayern", "Hessen", "Interview", "Sendung", "Bericht", "Analyse", "Kommentar",
                    "Studio", "Liveblog", "Redaktion", "Hochrechnung", "Wahlabend"}},
      {"surveillance", {"Überwachung", "Daten", "Geheimdienst", "Grundrechte", "Whistleblower", "Netz",
                        "Verschlüsselung", "Ausschuss", "Spähaffäre", "Privatsphäre"}},
      {"everyday", {"Kaffee", "Wetter", "Fußball", "Wochenende", "Zug", "Verspätung", "Konzert", "Sonntag",
                    "Straße", "Mittagspause"}},
  };
  return words;
}

std::string sentence(Rng& rng, const std::string& topic) {
  const auto& all = topic_words();
  auto it = all.find(topic);
  const auto& words = it != all.end() ? it->second : all.at("everyday");
  const std::size_t n = 4 + rng.index(4);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += rng.pick(words);
  }
  return out;
}

std::string first_char(const std::string& s) {
  std::size_t n = s.empty() ? 0 : 1;
  while (n < s.size() && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) ++n;
  return s.substr(0, n);
}

std::string ascii_slug(std::string_view s) {
  static const std::map<std::string, std::string> translit = {{"ä", "ae"}, {"ö", "oe"}, {"ü", "ue"}, {"Ä", "Ae"},
                                                              {"Ö", "Oe"}, {"Ü", "Ue"}, {"ß", "ss"}, {"ş", "s"}};
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    bool done = false;
    for (const auto& [from, to] : translit) {
      if (s.substr(i, from.size()) == from) {
        out += to;
        i += from.size();
        done = true;
        break;
      }
    }
    if (done) continue;
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isalnum(c) || c == '_') out += static_cast<char>(c);
    ++i;
  }
  return out;
}

struct Builder {
  const ScenarioConfig& c;
  Rng rng;
  Scenario s;
  std::set<std::string> taken;
  UserId next_id = 100000001;

  explicit Builder(const ScenarioConfig& cfg) : c(cfg), rng(cfg.seed) { s.config = cfg; }

  std::string unique(std::string name) {
    std::string candidate = name;
    for (int k = 2; !taken.insert(text::fold(candidate)).second; ++k) candidate = name + std::to_string(k);
    return candidate;
  }

  void add(AccountKind kind, std::string screen, std::string display, std::string party = {}) {
    s.accounts.push_back({next_id, unique(std::move(screen)), std::move(display), kind, std::move(party)});
    next_id += 1 + rng.index(97);
  }

  void accounts() {
    for (const auto& h : c.hashtags) taken.insert(h.tag);
    for (std::size_t i = 0; i < c.candidates; ++i) {
      const std::string& party = c.parties[i % c.parties.size()];
      const std::string first = rng.pick(kFirst), last = rng.pick(kLast);
      add(AccountKind::candidate, ascii_slug(last) + "_" + ascii_slug(party), first + " " + last, party);
    }
    for (std::size_t i = 0; i < c.journalists; ++i) {
      const std::string first = rng.pick(kFirst), last = rng.pick(kLast);
      add(AccountKind::journalist, ascii_slug(first).substr(0, 1) + ascii_slug(last) + "_" + rng.pick(kOutlets),
          first + " " + last);
    }
    for (std::size_t i = 0; i < c.editors; ++i) {
      const std::string& outlet = kOutlets[i % kOutlets.size()];
      add(AccountKind::editor, "redaktion_" + outlet, "Redaktion " + outlet);
    }
    for (std::size_t i = 0; i < c.public_accounts; ++i) {
      const std::string first = rng.pick(kFirst), last = rng.pick(kLast);
      add(AccountKind::public_user, text::fold(ascii_slug(first)) + std::to_string(10 + rng.index(90)),
          first + " " + first_char(last) + ".");
    }
    for (std::size_t i = 0; i < c.emergent.count; ++i) {
      const std::string first = rng.pick(kFirst), last = rng.pick(kLast);
      add(AccountKind::emergent, ascii_slug(last) + "_" + ascii_slug(c.emergent.party), first + " " + last,
          c.emergent.party);
    }
    add(AccountKind::probe, "observer_probe", "Collection probe");
  }

  void graph() {
    FollowGraph& g = s.graph;
    for (const auto& a : s.accounts) {
      if (a.kind == AccountKind::journalist) g.journalists.insert(a.id);
      if (a.kind == AccountKind::editor) g.editors.insert(a.id);
    }
    g.gatekeepers = g.journalists;
    g.gatekeepers.insert(g.editors.begin(), g.editors.end());
    std::size_t public_seen = 0;
    for (const auto& target : s.accounts) {
      double from_gatekeeper = 0.0, from_public = 0.0;
      switch (target.kind) {
        case AccountKind::candidate: from_gatekeeper = 0.35; from_public = 0.05; break;
        case AccountKind::emergent: from_gatekeeper = 0.1; from_public = 0.03; break;
        case AccountKind::journalist:
        case AccountKind::editor: from_gatekeeper = 0.5; from_public = 0.04; break;
        case AccountKind::public_user:
          // A handful of public accounts act as popular commentators.
          from_gatekeeper = public_seen++ < 5 ? 0.6 : 0.02;
          from_public = 0.01;
          break;
        case AccountKind::probe: continue;
      }
      for (const auto& follower : s.accounts) {
        if (follower.id == target.id || follower.kind == AccountKind::probe) continue;
        double p = 0.0;
        if (g.gatekeepers.count(follower.id)) {
          p = from_gatekeeper;
        } else if (follower.kind == AccountKind::public_user) {
          p = from_public;
        } else if (follower.kind == AccountKind::candidate || follower.kind == AccountKind::emergent) {
          p = target.party.empty() ? 0.05 : (target.party == follower.party ? 0.5 : 0.02);
        }
        if (rng.chance(p)) g.edges.insert({follower.id, target.id});
      }
    }
  }

  static double author_weight(AccountKind k) {
    switch (k) {
      case AccountKind::candidate: return 4.0;
      case AccountKind::journalist: return 3.0;
      case AccountKind::editor: return 2.0;
      case AccountKind::public_user: return 1.0;
      case AccountKind::emergent: return 3.0;
      case AccountKind::probe: return 0.0;
    }
    return 0.0;
  }

  static double mention_weight(AccountKind k) {
    switch (k) {
      case AccountKind::candidate: return 4.0;
      case AccountKind::journalist:
      case AccountKind::editor: return 1.0;
      case AccountKind::public_user: return 0.3;
      case AccountKind::emergent: return 4.0;
      case AccountKind::probe: return 0.0;
    }
    return 0.0;
  }

  std::string tag_form(const std::string& tag) {
    if (!rng.chance(0.3)) return tag;
    std::string t = tag;
    t[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
    return t;
  }

  void timeline() {
    const std::size_t n = c.tweets;
    std::vector<std::int64_t> offsets(n);
    for (auto& o : offsets) o = static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(c.duration.count())));
    std::sort(offsets.begin(), offsets.end());

    std::vector<double> author_w, mention_w;
    std::vector<std::size_t> politicians;
    for (std::size_t i = 0; i < s.accounts.size(); ++i) {
      author_w.push_back(author_weight(s.accounts[i].kind));
      mention_w.push_back(mention_weight(s.accounts[i].kind));
      if (s.accounts[i].kind == AccountKind::candidate || s.accounts[i].kind == AccountKind::emergent) {
        politicians.push_back(i);
      }
    }
    std::vector<double> topic_w;
    for (const auto& t : c.topics) topic_w.push_back(t.share);
    std::vector<double> lang_w;
    for (const auto& l : c.languages) lang_w.push_back(l.share);

    std::unordered_map<std::string, std::size_t> by_name;
    for (std::size_t i = 0; i < s.accounts.size(); ++i) by_name[text::fold(s.accounts[i].screen_name)] = i;

    std::vector<std::size_t> conversational;  // indices of originals and replies
    std::vector<std::size_t> originals;
    constexpr std::size_t kRecent = 300;
    const TweetId id_base = 340000000000000000ULL;

    for (std::size_t i = 0; i < n; ++i) {
      const Account& author = s.accounts[rng.weighted(author_w)];
      TweetRecord t;
      t.id = id_base + i * 1000 + rng.index(1000);
      t.user_id = author.id;
      t.screen_name = author.screen_name;
      t.created_at = c.start + Seconds{offsets[i]};
      ScriptInfo info;

      const double roll = rng.uniform();
      if (!conversational.empty() && roll < c.reply_probability) {
        const std::size_t lo = conversational.size() > kRecent ? conversational.size() - kRecent : 0;
        const std::size_t parent_idx = conversational[lo + rng.index(conversational.size() - lo)];
        const TweetRecord& parent = s.timeline[parent_idx];
        const ScriptInfo& pinfo = s.script[parent_idx];
        info = {pinfo.topic, pinfo.thread_tag, pinfo.thread_root};
        t.reply_to_id = parent.id;
        t.text = "@" + parent.screen_name + " " + sentence(rng, info.topic);
        if (!info.thread_tag.empty() && !rng.chance(c.reply_without_hashtag)) t.text += " #" + tag_form(info.thread_tag);
      } else if (!originals.empty() && roll < c.reply_probability + c.retweet_probability) {
        const std::size_t lo = originals.size() > kRecent ? originals.size() - kRecent : 0;
        const std::size_t src_idx = originals[lo + rng.index(originals.size() - lo)];
        const TweetRecord& src = s.timeline[src_idx];
        info = {s.script[src_idx].topic, s.script[src_idx].thread_tag, src.id};
        t.is_retweet = true;
        t.text = "RT @" + src.screen_name + ": " + src.text;
        t.urls = src.urls;
        t.has_image = src.has_image;
      } else {
        info.topic = c.topics[rng.weighted(topic_w)].topic;
        info.thread_root = t.id;
        std::string body = sentence(rng, info.topic);
        if (rng.chance(c.mention_probability)) {
          std::size_t target = rng.weighted(mention_w);
          if (s.accounts[target].id != author.id) {
            body = (rng.chance(0.5) ? "mit @" : "Danke @") + s.accounts[target].screen_name + " " + body;
          }
        }
        std::vector<const HashtagUse*> tags;
        std::vector<double> tag_w;
        for (const auto& h : c.hashtags) {
          if (h.topic == info.topic) {
            tags.push_back(&h);
            tag_w.push_back(h.propensity);
          }
        }
        if (!tags.empty() && rng.chance(c.tag_probability)) {
          info.thread_tag = tags[rng.weighted(tag_w)]->tag;
          body += " #" + tag_form(info.thread_tag);
        }
        if (!politicians.empty() && rng.chance(c.name_hashtag_probability)) {
          body += " #" + s.accounts[politicians[rng.index(politicians.size())]].screen_name;
        }
        if (rng.chance(c.url_probability)) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%08llx", static_cast<unsigned long long>(rng.bits() & 0xffffffffULL));
          t.urls.push_back(std::string("https://example.org/a/") + buf);
          body += " " + t.urls.back();
        }
        t.has_image = rng.chance(c.image_probability);
        t.text = std::move(body);
      }

      const Entities e = extract_entities(t.text);
      t.hashtags = e.hashtags;
      t.mentions = e.mentions;
      for (auto& m : t.mentions) {
        if (auto it = by_name.find(text::fold(m.screen_name)); it != by_name.end()) {
          m.user_id = s.accounts[it->second].id;
          m.display_name = s.accounts[it->second].display_name;
        }
      }
      t.language = c.languages[rng.weighted(lang_w)].language;
      if (rng.chance(c.geo_fraction)) {
        const double lat = 47.3 + rng.uniform() * 7.7, lon = 5.9 + rng.uniform() * 9.1;
        t.geo = GeoTag{std::round(lat * 1e4) / 1e4, std::round(lon * 1e4) / 1e4, "DE"};
      }

      if (t.is_retweet) {
        // retweets are neither replied to nor retweeted again
      } else {
        conversational.push_back(s.timeline.size());
        if (!t.reply_to_id) originals.push_back(s.timeline.size());
      }
      s.timeline.push_back(std::move(t));
      s.script.push_back(std::move(info));
    }
  }
};

}  // namespace

UtcTime Scenario::emergence_time() const {
  const auto secs = static_cast<std::int64_t>(std::floor(static_cast<double>(config.duration.count()) *
                                                         config.emergent.emerges_at));
  return config.start + Seconds{secs};
}

const Account* Scenario::account(UserId id) const {
  auto it = std::lower_bound(accounts.begin(), accounts.end(), id,
                             [](const Account& a, UserId v) { return a.id < v; });
  return it != accounts.end() && it->id == id ? &*it : nullptr;
}

const Account* Scenario::account_by_name(std::string_view screen_name) const {
  for (const auto& a : accounts) {
    if (text::iequals(a.screen_name, screen_name)) return &a;
  }
  return nullptr;
}

std::vector<Account> Scenario::accounts_of(AccountKind k) const {
  std::vector<Account> out;
  for (const auto& a : accounts) {
    if (a.kind == k) out.push_back(a);
  }
  return out;
}

namespace {

std::optional<std::size_t> index_of(const std::vector<TweetRecord>& timeline, TweetId id) {
  // Timelines from build_scenario are id-ascending; fall back to a scan for
  // hand-written worlds.
  auto it = std::lower_bound(timeline.begin(), timeline.end(), id,
                             [](const TweetRecord& t, TweetId v) { return t.id < v; });
  if (it != timeline.end() && it->id == id) return static_cast<std::size_t>(it - timeline.begin());
  for (std::size_t i = 0; i < timeline.size(); ++i) {
    if (timeline[i].id == id) return i;
  }
  return std::nullopt;
}

}  // namespace

const TweetRecord* Scenario::tweet(TweetId id) const {
  auto i = index_of(timeline, id);
  return i ? &timeline[*i] : nullptr;
}

const ScriptInfo* Scenario::script_of(TweetId id) const {
  auto i = index_of(timeline, id);
  return i && *i < script.size() ? &script[*i] : nullptr;
}

Scenario build_scenario(const ScenarioConfig& c) {
  check_config(c);
  Builder b(c);
  b.accounts();
  b.graph();
  b.timeline();
  return std::move(b.s);
}

std::set<TweetId> ground_truth(const Scenario& s, const CorpusDefinition& d) {
  std::set<TweetId> out;
  for (const auto& t : s.timeline) {
    if (matches(t, d)) out.insert(t.id);
  }
  return out;
}

std::set<TweetId> authored_by(const Scenario& s, const std::set<UserId>& authors) {
  std::set<TweetId> out;
  for (const auto& t : s.timeline) {
    if (authors.count(t.user_id)) out.insert(t.id);
  }
  return out;
}

std::set<TweetId> conversation(const Scenario& s, std::string_view tag) {
  const std::string wanted = normalize_hashtag(tag);
  std::set<TweetId> out;
  for (std::size_t i = 0; i < s.timeline.size(); ++i) {
    if (i < s.script.size() && s.script[i].thread_tag == wanted) out.insert(s.timeline[i].id);
  }
  return out;
}

std::set<TweetId> topic_tweets(const Scenario& s, std::string_view topic) {
  std::set<TweetId> out;
  for (std::size_t i = 0; i < s.timeline.size(); ++i) {
    if (i < s.script.size() && s.script[i].topic == topic) out.insert(s.timeline[i].id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bias

std::vector<BiasRow> bias_report(const Scenario& s, const std::vector<BiasInput>& inputs) {
  std::vector<BiasRow> rows;
  for (const auto& in : inputs) {
    BiasRow r;
    r.corpus = in.corpus;
    r.reference = in.reference;
    std::set<TweetId> stored;
    for (TweetId id : in.stored) {
      if (s.tweet(id)) stored.insert(id);
    }
    r.stored = stored.size();
    r.expected = in.expected.size();
    std::set_difference(in.expected.begin(), in.expected.end(), stored.begin(), stored.end(),
                        std::back_inserter(r.missing));
    std::set_difference(stored.begin(), stored.end(), in.expected.begin(), in.expected.end(),
                        std::back_inserter(r.extra));
    r.hits = r.expected - r.missing.size();
    if (r.expected) r.recall = static_cast<double>(r.hits) / static_cast<double>(r.expected);
    if (r.stored) r.precision = static_cast<double>(r.hits) / static_cast<double>(r.stored);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string bias_report_json(const std::vector<BiasRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["corpus"] = r.corpus;
    j["reference"] = r.reference;
    j["stored"] = r.stored;
    j["expected"] = r.expected;
    j["hits"] = r.hits;
    j["recall"] = r.recall ? Json(*r.recall) : Json(nullptr);
    j["precision"] = r.precision ? Json(*r.precision) : Json(nullptr);
    j["missing"] = r.missing;
    j["extra"] = r.extra;
    out.push_back(std::move(j));
  }
  return Json{{"rows", std::move(out)}}.dump(2) + "\n";
}

std::string bias_report_text(const std::vector<BiasRow>& rows) {
  std::string out = "corpus\treference\tstored\texpected\thits\trecall\tprecision\n";
  const auto fmt = [](const std::optional<double>& v) {
    if (!v) return std::string("undefined");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    out += r.corpus + "\t" + r.reference + "\t" + std::to_string(r.stored) + "\t" + std::to_string(r.expected) +
           "\t" + std::to_string(r.hits) + "\t" + fmt(r.recall) + "\t" + fmt(r.precision) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// World files

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot write '" + p.string() + "'", false);
  out << content;
  if (!out.flush()) throw StoreError("cannot write '" + p.string() + "'", true);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + p.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string timeline_to_ndjson(const Scenario& s) {
  std::string out;
  for (const auto& t : s.timeline) out += serialize_tweet(t) + "\n";
  return out;
}

void write_world(const Scenario& s, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw StoreError("cannot create '" + dir.string() + "': " + ec.message(), false);
  write_file(dir / "config.json", scenario_config_to_json(s.config));
  std::string accounts;
  for (const auto& a : s.accounts) {
    Json j{{"id", a.id}, {"screenName", a.screen_name}, {"name", a.display_name}, {"kind", to_string(a.kind)}};
    if (!a.party.empty()) j["party"] = a.party;
    accounts += j.dump() + "\n";
  }
  write_file(dir / "accounts.ndjson", accounts);
  write_file(dir / "follows.tsv", edge_list_to_text(s.graph.edges));
  write_file(dir / "groups.json", groups_to_json(s.graph));
  std::string timeline;
  for (std::size_t i = 0; i < s.timeline.size(); ++i) {
    Json j;
    j["tweet"] = detail::tweet_to_json(s.timeline[i]);
    j["topic"] = s.script[i].topic;
    j["threadTag"] = s.script[i].thread_tag;
    j["threadRoot"] = s.script[i].thread_root;
    timeline += j.dump() + "\n";
  }
  write_file(dir / "timeline.ndjson", timeline);
}

Scenario read_world(const std::filesystem::path& dir) {
  Scenario s;
  s.config = parse_scenario_config(read_file(dir / "config.json"));
  {
    std::istringstream in(read_file(dir / "accounts.ndjson"));
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      if (line.empty()) continue;
      const std::string where = "accounts.ndjson line " + std::to_string(n);
      Json j;
      try {
        j = Json::parse(line);
      } catch (const Json::parse_error& e) {
        throw ParseError(where + ": " + e.what());
      }
      Account a;
      a.id = detail::get_u64(j, "id", where);
      a.screen_name = detail::get_string(j, "screenName", where);
      a.display_name = detail::get_string(j, "name", where);
      auto kind = account_kind_from(detail::get_string(j, "kind", where));
      if (!kind) throw SchemaError("kind", where + ": unknown account kind");
      a.kind = *kind;
      if (j.contains("party")) a.party = detail::get_string(j, "party", where);
      s.accounts.push_back(std::move(a));
    }
    std::sort(s.accounts.begin(), s.accounts.end(), [](const Account& a, const Account& b) { return a.id < b.id; });
  }
  s.graph = load_follow_graph(dir / "follows.tsv", dir / "groups.json");
  {
    std::istringstream in(read_file(dir / "timeline.ndjson"));
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      if (line.empty()) continue;
      const std::string where = "timeline.ndjson line " + std::to_string(n);
      Json j;
      try {
        j = Json::parse(line);
      } catch (const Json::parse_error& e) {
        throw ParseError(where + ": " + e.what());
      }
      if (!j.contains("tweet")) throw SchemaError("tweet", where + ": missing 'tweet'");
      s.timeline.push_back(detail::tweet_from_json(j["tweet"]));
      s.script.push_back({j.value("topic", std::string()), j.value("threadTag", std::string()),
                          j.contains("threadRoot") ? detail::get_u64(j, "threadRoot", where) : 0});
    }
  }
  for (std::size_t i = 1; i < s.timeline.size(); ++i) {
    const auto& a = s.timeline[i - 1];
    const auto& b = s.timeline[i];
    if (std::tie(b.created_at, b.id) < std::tie(a.created_at, a.id)) {
      throw ConfigError("timeline.ndjson: tweet " + std::to_string(b.id) + " is out of time order");
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Rosters

Roster scenario_roster(const Scenario& s) {
  Roster r;
  std::size_t n = 0;
  for (const auto& a : s.accounts) {
    if (a.kind != AccountKind::candidate && a.kind != AccountKind::emergent) continue;
    ++n;
    CandidateRecord c;
    char id[16];
    std::snprintf(id, sizeof id, "C%04zu", n);
    c.candidate_id = id;
    c.name = a.display_name;
    c.party = a.party;
    c.candidature = n % 3 == 0 ? Candidature::both : (n % 3 == 1 ? Candidature::list : Candidature::direct);
    if (c.candidature != Candidature::list) c.constituency = "WK" + std::to_string(1 + n % 299);
    c.state = kStates[n % kStates.size()];
    VerifiedLink link;
    link.account = {a.id, a.screen_name};
    link.evidence = {Evidence::party_reference, Evidence::website_link};
    link.is_professional = true;
    link.verified_badge = n % 4 == 0;
    link.decided_at = a.kind == AccountKind::emergent ? s.emergence_time() : s.start();
    c.twitter = link;
    if (a.kind == AccountKind::emergent) c.added_at = s.emergence_time();
    r.candidates.push_back(std::move(c));
  }
  std::sort(r.candidates.begin(), r.candidates.end(),
            [](const CandidateRecord& a, const CandidateRecord& b) { return a.candidate_id < b.candidate_id; });
  return r;
}

DemoRoster make_demo_roster(std::uint64_t seed) {
  constexpr std::size_t kCandidates = 2346, kWithTwitter = 1009, kAgents = 76;
  static const std::vector<std::string> parties = {"CDU", "CSU", "SPD", "FDP", "GRÜNE", "DIE LINKE", "PIRATEN", "AfD"};
  Rng rng(seed);
  std::vector<std::size_t> order(kCandidates);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = kCandidates; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  std::set<std::size_t> linked(order.begin(), order.begin() + kWithTwitter);

  DemoRoster out;
  std::set<std::string> names;
  UserId next = 200000001;
  const UtcTime decided = parse_utc_field("2013-08-01T00:00:00Z", "decided");
  for (std::size_t i = 0; i < kCandidates; ++i) {
    CandidateRecord c;
    char id[16];
    std::snprintf(id, sizeof id, "D%04zu", i + 1);
    c.candidate_id = id;
    const std::string first = rng.pick(kFirst), last = rng.pick(kLast);
    c.name = first + " " + last;
    c.party = parties[rng.index(parties.size())];
    const std::size_t kind = rng.index(3);
    c.candidature = kind == 0 ? Candidature::direct : (kind == 1 ? Candidature::list : Candidature::both);
    if (c.candidature != Candidature::list) c.constituency = "WK" + std::to_string(1 + rng.index(299));
    c.state = c.party == "CSU" ? "Bayern" : rng.pick(kStates);
    if (linked.count(i)) {
      VerifiedLink link;
      std::string screen = ascii_slug(first).substr(0, 1) + ascii_slug(last) + "_" + ascii_slug(c.party);
      for (int k = 2; !names.insert(text::fold(screen)).second; ++k) {
        screen = ascii_slug(first).substr(0, 1) + ascii_slug(last) + std::to_string(k) + "_" + ascii_slug(c.party);
      }
      link.account = {next, screen};
      next += 1 + rng.index(50);
      link.evidence.insert(Evidence::party_reference);
      if (rng.chance(0.7)) link.evidence.insert(Evidence::website_link);
      if (rng.chance(0.5)) link.evidence.insert(Evidence::image_or_constituency_match);
      link.verified_badge = rng.chance(0.08);
      link.is_professional = true;
      link.decided_at = decided;
      c.twitter = link;
    }
    out.candidates.candidates.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < kAgents; ++i) {
    std::string screen = kOutlets[i % kOutlets.size()] + "_" + text::fold(ascii_slug(rng.pick(kLast)));
    for (int k = 2; !names.insert(text::fold(screen)).second; ++k) {
      screen = kOutlets[i % kOutlets.size()] + "_" + std::to_string(k);
    }
    out.media_agents.push_back({next, screen});
    next += 1 + rng.index(50);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Source

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kOrganicSalt = 0x6f7267616e6963ULL;
constexpr std::uint64_t kProbeSalt = 0x70726f6265ULL;
constexpr std::size_t kBlock = 100;

// Marks exactly round(rate * m) of the m members of a block, chosen by rank
// of a seeded hash.
std::vector<bool> block_mask(std::size_t first, std::size_t m, double rate, std::uint64_t seed, std::uint64_t salt) {
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(m)));
  std::vector<std::pair<std::uint64_t, std::size_t>> ranked;
  for (std::size_t j = 0; j < m; ++j) ranked.push_back({mix(mix(seed ^ salt) ^ (first + j)), j});
  std::sort(ranked.begin(), ranked.end());
  std::vector<bool> mask(m, false);
  for (std::size_t j = 0; j < k && j < m; ++j) mask[ranked[j].second] = true;
  return mask;
}

bool token_hit(const std::vector<std::string>& toks, const std::string& term) {
  const auto want = text::tokens(term);
  if (want.empty()) return false;
  return std::all_of(want.begin(), want.end(),
                     [&](const std::string& w) { return std::find(toks.begin(), toks.end(), w) != toks.end(); });
}

bool wanted(const StreamQuery& q, const TweetRecord& t) {
  switch (q.mode) {
    case StreamQuery::Mode::firehose: return true;
    case StreamQuery::Mode::sample: return sample_decision(t.id, q.sample_rate, q.sample_seed);
    case StreamQuery::Mode::filter: break;
  }
  if (!q.countries.empty() || !q.languages.empty()) {
    if (!q.countries.empty()) {
      if (!t.geo) return false;
      if (std::none_of(q.countries.begin(), q.countries.end(),
                       [&](const std::string& c) { return text::iequals(c, t.geo->country); })) {
        return false;
      }
    }
    if (!q.languages.empty()) {
      if (!t.language) return false;
      if (std::none_of(q.languages.begin(), q.languages.end(),
                       [&](const std::string& l) { return text::iequals(l, *t.language); })) {
        return false;
      }
    }
    if (q.follow_ids.empty() && q.track_terms.empty()) return true;
  }
  for (UserId id : q.follow_ids) {
    if (t.user_id == id) return true;
    for (const auto& m : t.mentions) {
      if (m.user_id == id) return true;
    }
  }
  if (q.track_terms.empty()) return false;
  const auto toks = text::tokens(t.text);
  for (const auto& term : q.track_terms) {
    if (!term.empty() && term.front() == '#') {
      const std::string tag = normalize_hashtag(term);
      for (const auto& h : t.hashtags) {
        if (text::fold(h.text) == tag) return true;
      }
    } else if (token_hit(toks, term)) {
      return true;
    }
  }
  return false;
}

}  // namespace

class SimulatedSource::Cursor : public Subscription {
 public:
  Cursor(SimulatedSource& src, StreamQuery q, UtcTime since) : src_(src), query_(std::move(q)), floor_(since) {
    const auto& windows = src_.faults_.disconnects;
    fired_.assign(windows.size(), false);
    for (std::size_t i = 0; i < windows.size(); ++i) fired_[i] = windows[i].window.start < since;
    organic_ = first_index_at(since);
    for (const auto& w : windows) redeliver_cap_ = std::max(redeliver_cap_, w.redeliver);
  }

  StreamEvent next() override {
    if (cancelled_) return end_event();
    if (active_) return {StreamEvent::Kind::disconnected, src_.faults_.disconnects[*active_].window.start, {}};
    if (!replay_.empty()) {
      TweetRecord t = std::move(replay_.front());
      replay_.pop_front();
      const UtcTime at = t.created_at;
      return {StreamEvent::Kind::tweet, at, std::move(t)};
    }
    const auto& timeline = src_.scenario_.timeline;
    for (;;) {
      if (cancelled_) return end_event();
      while (organic_ < timeline.size() && !wanted(query_, timeline[organic_])) ++organic_;
      std::optional<Probe> probe = next_probe();
      const TweetRecord* organic = organic_ < timeline.size() ? &timeline[organic_] : nullptr;
      bool take_probe = false;
      if (probe && (!organic || std::tie(probe->tweet.created_at, probe->tweet.id) <
                                    std::tie(organic->created_at, organic->id))) {
        take_probe = true;
      }
      const TweetRecord* candidate = take_probe ? &probe->tweet : organic;

      if (auto w = due_window(candidate)) {
        fired_[*w] = true;
        active_ = *w;
        return {StreamEvent::Kind::disconnected, src_.faults_.disconnects[*w].window.start, {}};
      }
      if (!candidate) return end_event();

      bool drop;
      TweetRecord t;
      if (take_probe) {
        last_probe_ = std::make_pair(probe->tweet.created_at, probe->tweet.id);
        drop = src_.drops_probe(probe->seq);
        t = std::move(probe->tweet);
      } else {
        drop = src_.dropped_[organic_];
        t = *organic;
        ++organic_;
      }
      if (drop) {
        ++dropped_;
        continue;
      }
      pace(t.created_at);
      if (cancelled_) return end_event();
      if (redeliver_cap_) {
        recent_.push_back(t);
        if (recent_.size() > redeliver_cap_) recent_.pop_front();
      }
      const UtcTime at = t.created_at;
      return {StreamEvent::Kind::tweet, at, std::move(t)};
    }
  }

  bool reconnect(UtcTime at) override {
    if (!active_) return true;
    if (!src_.reachable(at)) return false;
    const std::size_t n = src_.faults_.disconnects[*active_].redeliver;
    active_.reset();
    const auto& windows = src_.faults_.disconnects;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (windows[i].window.start < at) fired_[i] = true;
    }
    floor_ = std::max(floor_, at);
    organic_ = std::max(organic_, first_index_at(floor_));
    const std::size_t k = std::min(n, recent_.size());
    replay_.assign(recent_.end() - static_cast<std::ptrdiff_t>(k), recent_.end());
    return true;
  }

  std::uint64_t dropped() const override { return dropped_; }

  void cancel() override {
    cancelled_ = true;
    std::lock_guard lock(pace_mutex_);
    pace_cv_.notify_all();
  }

 private:
  static StreamEvent end_event() { return {StreamEvent::Kind::end, {}, {}}; }

  std::size_t first_index_at(UtcTime t) const {
    const auto& timeline = src_.scenario_.timeline;
    auto it = std::lower_bound(timeline.begin(), timeline.end(), t,
                               [](const TweetRecord& r, UtcTime v) { return r.created_at < v; });
    return static_cast<std::size_t>(it - timeline.begin());
  }

  std::optional<Probe> next_probe() {
    std::lock_guard lock(src_.mutex_);
    for (const auto& p : src_.probes_) {
      if (p.tweet.created_at < floor_) continue;
      if (last_probe_ && std::make_pair(p.tweet.created_at, p.tweet.id) <= *last_probe_) continue;
      if (!wanted(query_, p.tweet)) continue;
      return p;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> due_window(const TweetRecord* candidate) const {
    const auto& windows = src_.faults_.disconnects;
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (fired_[i]) continue;
      const UtcTime start = windows[i].window.start;
      const bool due = candidate ? start <= candidate->created_at : start < src_.scenario_.end();
      if (due && (!best || start < windows[*best].window.start)) best = i;
    }
    return best;
  }

  void pace(UtcTime at) {
    if (src_.clock_ != Clock::realtime) return;
    const auto now = std::chrono::steady_clock::now();
    if (!anchor_) anchor_ = std::make_pair(at, now);
    const auto due = anchor_->second + (at - anchor_->first);
    std::unique_lock lock(pace_mutex_);
    pace_cv_.wait_until(lock, due, [&] { return cancelled_.load(); });
  }

  SimulatedSource& src_;
  StreamQuery query_;
  UtcTime floor_;
  std::size_t organic_ = 0;
  std::optional<std::pair<UtcTime, TweetId>> last_probe_;
  std::vector<bool> fired_;
  std::optional<std::size_t> active_;
  std::size_t redeliver_cap_ = 0;
  std::deque<TweetRecord> recent_;
  std::deque<TweetRecord> replay_;
  std::atomic<std::uint64_t> dropped_{0};
  std::atomic<bool> cancelled_{false};
  std::mutex pace_mutex_;
  std::condition_variable pace_cv_;
  std::optional<std::pair<UtcTime, std::chrono::steady_clock::time_point>> anchor_;
};

SimulatedSource::SimulatedSource(const Scenario& s, Clock clock) : SimulatedSource(s, s.config.faults, clock) {}

SimulatedSource::SimulatedSource(const Scenario& s, FaultSchedule faults, Clock clock)
    : scenario_(s), faults_(std::move(faults)), clock_(clock) {
  if (!(faults_.drop_rate >= 0.0 && faults_.drop_rate <= 1.0)) {
    throw ConfigError("fault schedule: drop rate must be within [0, 1]");
  }
  dropped_ = build_drop_mask(s.timeline.size(), kOrganicSalt);
}

SimulatedSource::~SimulatedSource() = default;

std::vector<bool> SimulatedSource::build_drop_mask(std::size_t n, std::uint64_t salt) const {
  std::vector<bool> mask(n, false);
  if (faults_.drop_rate <= 0.0) return mask;
  for (std::size_t first = 0; first < n; first += kBlock) {
    const std::size_t m = std::min(kBlock, n - first);
    const auto block = block_mask(first, m, faults_.drop_rate, faults_.seed, salt);
    for (std::size_t j = 0; j < m; ++j) mask[first + j] = block[j];
  }
  return mask;
}

bool SimulatedSource::drops_event(std::size_t index) const { return index < dropped_.size() && dropped_[index]; }

bool SimulatedSource::drops_probe(std::size_t seq) const {
  if (faults_.drop_rate <= 0.0) return false;
  const std::size_t first = seq / kBlock * kBlock;
  return block_mask(first, kBlock, faults_.drop_rate, faults_.seed, kProbeSalt)[seq - first];
}

bool SimulatedSource::reachable(UtcTime t) const {
  return std::none_of(faults_.disconnects.begin(), faults_.disconnects.end(),
                      [&](const DisconnectWindow& w) { return w.window.contains(t); });
}

std::unique_ptr<Subscription> SimulatedSource::subscribe(const StreamQuery& query, UtcTime since) {
  if (!reachable(since)) throw SourceError("source unreachable at " + format_utc(since));
  return std::make_unique<Cursor>(*this, query, since);
}

std::vector<TweetRecord> SimulatedSource::backfill_timeline(UserId user_id, UtcTime since, UtcTime until) {
  std::vector<TweetRecord> out;
  std::lock_guard lock(mutex_);
  for (const auto& t : scenario_.timeline) {
    if (t.user_id == user_id && t.created_at >= since && t.created_at < until && !removed_.count(t.id)) {
      out.push_back(t);
    }
  }
  for (const auto& p : probes_) {
    if (p.tweet.user_id == user_id && p.tweet.created_at >= since && p.tweet.created_at < until) {
      out.push_back(p.tweet);
    }
  }
  std::sort(out.begin(), out.end(), [](const TweetRecord& a, const TweetRecord& b) {
    return std::tie(a.created_at, a.id) < std::tie(b.created_at, b.id);
  });
  return out;
}

void SimulatedSource::post_probe(const TweetRecord& probe) {
  std::lock_guard lock(mutex_);
  if (refuse_probes_) throw SourceError("source refused probe " + std::to_string(probe.id));
  if (probe.created_at < scenario_.start() || probe.created_at >= scenario_.end()) {
    throw SourceError("probe " + std::to_string(probe.id) + " lies outside the simulated period");
  }
  if (scenario_.tweet(probe.id) ||
      std::any_of(probes_.begin(), probes_.end(), [&](const Probe& p) { return p.tweet.id == probe.id; })) {
    throw SourceError("probe id " + std::to_string(probe.id) + " is already taken");
  }
  Probe p{probe, probes_.size()};
  auto pos = std::upper_bound(probes_.begin(), probes_.end(), p, [](const Probe& a, const Probe& b) {
    return std::tie(a.tweet.created_at, a.tweet.id) < std::tie(b.tweet.created_at, b.tweet.id);
  });
  probes_.insert(pos, std::move(p));
}

std::optional<TweetRecord> SimulatedSource::lookup(TweetId id) const {
  std::lock_guard lock(mutex_);
  if (removed_.count(id)) return std::nullopt;
  if (const TweetRecord* t = scenario_.tweet(id)) return *t;
  for (const auto& p : probes_) {
    if (p.tweet.id == id) return p.tweet;
  }
  return std::nullopt;
}

void SimulatedSource::refuse_probes(bool refuse) {
  std::lock_guard lock(mutex_);
  refuse_probes_ = refuse;
}

void SimulatedSource::remove(TweetId id) {
  std::lock_guard lock(mutex_);
  removed_.insert(id);
}

}  // namespace corpuskit::sim
