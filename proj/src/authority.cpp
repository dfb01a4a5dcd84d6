#include "corpuskit/authority.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "corpuskit/detail/tweet_json.hpp"
#include "corpuskit/errors.hpp"

namespace corpuskit {

using detail::Json;

Fraction Fraction::parse(std::string_view text) {
  const auto bad = [&] { return ConfigError("threshold '" + std::string(text) + "' is not a fraction"); };
  const auto digits = [](std::string_view s) {
    return !s.empty() && s.size() <= 18 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  Fraction f;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto a = text.substr(0, slash), b = text.substr(slash + 1);
    if (!digits(a) || !digits(b)) throw bad();
    f = {std::stoull(std::string(a)), std::stoull(std::string(b))};
  } else {
    const auto dot = text.find('.');
    const auto whole = text.substr(0, dot);
    const auto frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if ((!whole.empty() && !digits(whole)) || (!frac.empty() && !digits(frac)) || (whole.empty() && frac.empty()) ||
        frac.size() > 12) {
      throw bad();
    }
    std::uint64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::uint64_t w = whole.empty() ? 0 : std::stoull(std::string(whole));
    const std::uint64_t fr = frac.empty() ? 0 : std::stoull(std::string(frac));
    f = {w * den + fr, den};
  }
  if (f.den == 0) throw bad();
  const auto g = std::gcd(f.num, f.den);
  if (g > 1) f = {f.num / g, f.den / g};
  return f;
}

bool Fraction::reached_by(std::uint64_t count, std::uint64_t total) const {
  // count/total >= num/den  <=>  count*den >= num*total
  return static_cast<unsigned __int128>(count) * den >= static_cast<unsigned __int128>(num) * total;
}

void check_graph(const FollowGraph& g) {
  for (const auto& [a, b] : g.edges) {
    if (a == b) throw ConfigError("follow graph: self-edge on account " + std::to_string(a));
  }
  for (auto id : g.journalists) {
    if (!g.gatekeepers.count(id)) throw ConfigError("follow graph: journalist " + std::to_string(id) + " is not a gatekeeper");
  }
  for (auto id : g.editors) {
    if (!g.gatekeepers.count(id)) throw ConfigError("follow graph: editor " + std::to_string(id) + " is not a gatekeeper");
  }
}

std::set<std::pair<UserId, UserId>> parse_edge_list(std::string_view text) {
  std::set<std::pair<UserId, UserId>> edges;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    const auto num = [&](std::string_view s) -> UserId {
      if (s.empty() || s.size() > 20 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw ParseError("edge list line " + std::to_string(line_no) + ": expected follower<TAB>followed");
      }
      return std::stoull(std::string(s));
    };
    if (tab == std::string_view::npos) {
      throw ParseError("edge list line " + std::to_string(line_no) + ": expected follower<TAB>followed");
    }
    edges.emplace(num(line.substr(0, tab)), num(line.substr(tab + 1)));
  }
  return edges;
}

void parse_groups(std::string_view json_text, FollowGraph& g) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("group file is not valid JSON: ") + e.what());
  }
  const auto ids = [&](const char* key, std::set<UserId>& out, bool required) {
    auto it = root.find(key);
    if (it == root.end()) {
      if (required) throw SchemaError(key, std::string("group file lacks '") + key + "'");
      return;
    }
    if (!it->is_array()) throw SchemaError(key, std::string("'") + key + "' must be an array of ids");
    for (const auto& v : *it) {
      if (!v.is_number_unsigned()) throw SchemaError(key, std::string("'") + key + "' must hold account ids");
      out.insert(v.get<UserId>());
    }
  };
  ids("gatekeepers", g.gatekeepers, true);
  ids("journalists", g.journalists, false);
  ids("editors", g.editors, false);
}

FollowGraph load_follow_graph(const std::filesystem::path& edges, const std::filesystem::path& groups) {
  const auto read = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  FollowGraph g;
  g.edges = parse_edge_list(read(edges));
  parse_groups(read(groups), g);
  check_graph(g);
  return g;
}

std::string edge_list_to_text(const std::set<std::pair<UserId, UserId>>& edges) {
  std::string out;
  for (const auto& [a, b] : edges) out += std::to_string(a) + "\t" + std::to_string(b) + "\n";
  return out;
}

std::string groups_to_json(const FollowGraph& g) {
  return Json{{"gatekeepers", g.gatekeepers}, {"journalists", g.journalists}, {"editors", g.editors}}.dump(2) + "\n";
}

std::string_view to_string(AuthorityRule r) {
  switch (r) {
    case AuthorityRule::gatekeepers: return "gatekeepers";
    case AuthorityRule::journalists: return "journalists";
    case AuthorityRule::editors: return "editors";
  }
  return "gatekeepers";
}

AuthorityResult derive_information_authorities(const FollowGraph& g, const AuthorityOptions& options) {
  check_graph(g);
  if (g.gatekeepers.empty()) throw ConfigError("authority derivation needs at least one gatekeeper");
  const Fraction& t = options.threshold;
  if (t.num == 0 || t.num > t.den) throw ConfigError("threshold must lie in (0, 1]");

  AuthorityResult r;
  r.threshold = t;
  r.gatekeeper_count = g.gatekeepers.size();
  r.journalist_count = g.journalists.size();
  r.editor_count = g.editors.size();
  if (g.journalists.empty()) r.notes.push_back("journalist rule skipped: no journalists labeled");
  if (g.editors.empty()) r.notes.push_back("editor rule skipped: no editors labeled");
  if (options.exclude_gatekeepers) r.notes.push_back("gatekeepers excluded from the authority list");

  for (const auto& [follower, followed] : g.edges) {
    if (!g.gatekeepers.count(follower)) continue;
    auto& s = r.support[followed];
    ++s.gatekeepers;
    if (g.journalists.count(follower)) ++s.journalists;
    if (g.editors.count(follower)) ++s.editors;
  }
  for (auto& [account, s] : r.support) {
    if (t.reached_by(s.gatekeepers, r.gatekeeper_count)) s.rules.push_back(AuthorityRule::gatekeepers);
    if (r.journalist_count && t.reached_by(s.journalists, r.journalist_count)) {
      s.rules.push_back(AuthorityRule::journalists);
    }
    if (r.editor_count && t.reached_by(s.editors, r.editor_count)) s.rules.push_back(AuthorityRule::editors);
    if (!s.rules.empty() && !(options.exclude_gatekeepers && g.gatekeepers.count(account))) {
      r.authorities.insert(account);
    }
  }
  return r;
}

std::string authority_report_json(const AuthorityResult& r) {
  const auto frac = [](std::uint64_t n, std::uint64_t d) -> Json {
    if (d == 0) return nullptr;
    return static_cast<double>(n) / static_cast<double>(d);
  };
  Json accounts = Json::array();
  for (const auto& [id, s] : r.support) {
    Json rules = Json::array();
    for (auto rule : s.rules) rules.push_back(std::string(to_string(rule)));
    accounts.push_back(Json{{"id", id},
                            {"authority", r.authorities.count(id) > 0},
                            {"gatekeeperFollowers", s.gatekeepers},
                            {"gatekeeperShare", frac(s.gatekeepers, r.gatekeeper_count)},
                            {"journalistShare", frac(s.journalists, r.journalist_count)},
                            {"editorShare", frac(s.editors, r.editor_count)},
                            {"rules", std::move(rules)}});
  }
  Json j;
  j["threshold"] = std::to_string(r.threshold.num) + "/" + std::to_string(r.threshold.den);
  j["gatekeepers"] = r.gatekeeper_count;
  j["journalists"] = r.journalist_count;
  j["editors"] = r.editor_count;
  j["authorities"] = r.authorities;
  j["notes"] = r.notes;
  j["accounts"] = std::move(accounts);
  return j.dump(2) + "\n";
}

std::vector<WallPost> parse_wall_posts(std::string_view ndjson) {
  std::vector<WallPost> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < ndjson.size()) {
    std::size_t nl = ndjson.find('\n', pos);
    if (nl == std::string_view::npos) nl = ndjson.size();
    const std::string_view line = ndjson.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "wall posts line " + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    WallPost p;
    try {
      p.id = detail::get_string(j, "id", "");
      p.wall = detail::get_string(j, "wall", "");
      p.author = detail::get_u64(j, "author", "");
      const std::string kind = detail::get_string(j, "kind", "");
      if (kind == "post") {
        p.kind = WallPost::Kind::post;
      } else if (kind == "comment") {
        p.kind = WallPost::Kind::comment;
      } else {
        throw SchemaError("kind", "kind must be 'post' or 'comment'");
      }
      p.created_at = parse_utc_field(detail::get_string(j, "createdAt", ""), "createdAt");
    } catch (const ConfigError& e) {
      throw SchemaError("", where + ": " + e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string wall_post_to_json(const WallPost& p) {
  return Json{{"id", p.id},
              {"wall", p.wall},
              {"author", p.author},
              {"kind", p.kind == WallPost::Kind::post ? "post" : "comment"},
              {"createdAt", format_utc(p.created_at)}}
      .dump();
}

std::size_t engagement_breadth(std::span<const WallPost> posts, UserId actor) {
  std::set<std::string_view> walls;
  for (const auto& p : posts) {
    if (p.author == actor) walls.insert(p.wall);
  }
  return walls.size();
}

EngagementDepth engagement_depth(std::span<const WallPost> posts, UserId actor) {
  EngagementDepth d;
  for (const auto& p : posts) {
    if (p.author != actor) continue;
    ++d.total;
    ++d.per_wall[p.wall];
  }
  return d;
}

std::map<std::size_t, std::size_t> breadth_histogram(std::span<const WallPost> posts) {
  std::map<UserId, std::set<std::string_view>> walls;
  for (const auto& p : posts) walls[p.author].insert(p.wall);
  std::map<std::size_t, std::size_t> hist;
  for (const auto& [actor, w] : walls) ++hist[w.size()];
  return hist;
}

}  // namespace corpuskit
