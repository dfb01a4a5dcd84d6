#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpuskit/time.hpp"
#include "corpuskit/tweet.hpp"

namespace corpuskit {

/// Exact non-negative rational used for threshold comparisons.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  /// Accepts "a/b" or a decimal such as "0.25" (converted exactly).
  static Fraction parse(std::string_view text);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  /// count / total >= *this, compared by cross-multiplication.
  bool reached_by(std::uint64_t count, std::uint64_t total) const;

  friend bool operator==(const Fraction&, const Fraction&) = default;
};

struct FollowGraph {
  std::set<std::pair<UserId, UserId>> edges;  // (follower, followed)
  std::set<UserId> gatekeepers;
  std::set<UserId> journalists;  // subset of gatekeepers
  std::set<UserId> editors;      // subset of gatekeepers
};

/// Throws ConfigError on self-edges or a journalist/editor outside the gatekeepers.
void check_graph(const FollowGraph& g);

/// Edge list: one "follower<TAB>followed" pair per line; '#' starts a comment.
std::set<std::pair<UserId, UserId>> parse_edge_list(std::string_view text);
/// {"gatekeepers": [...], "journalists": [...], "editors": [...]}
void parse_groups(std::string_view json_text, FollowGraph& g);
FollowGraph load_follow_graph(const std::filesystem::path& edges, const std::filesystem::path& groups);

std::string edge_list_to_text(const std::set<std::pair<UserId, UserId>>& edges);
std::string groups_to_json(const FollowGraph& g);

enum class AuthorityRule { gatekeepers, journalists, editors };
std::string_view to_string(AuthorityRule r);

struct AuthoritySupport {
  std::uint64_t gatekeepers = 0;
  std::uint64_t journalists = 0;
  std::uint64_t editors = 0;
  std::vector<AuthorityRule> rules;  // qualifying rules, empty if none
};

struct AuthorityOptions {
  Fraction threshold{1, 4};
  bool exclude_gatekeepers = false;
};

struct AuthorityResult {
  Fraction threshold;
  std::uint64_t gatekeeper_count = 0;
  std::uint64_t journalist_count = 0;
  std::uint64_t editor_count = 0;
  std::set<UserId> authorities;
  // Every account followed by at least one gatekeeper.
  std::map<UserId, AuthoritySupport> support;
  std::vector<std::string> notes;
};

/// An account qualifies when the share of gatekeepers, of journalists, or of
/// editors following it reaches the threshold (inclusive). Empty journalist or
/// editor groups skip their rule. Throws ConfigError for an empty gatekeeper
/// set or a threshold outside (0, 1].
AuthorityResult derive_information_authorities(const FollowGraph& g, const AuthorityOptions& options = {});

std::string authority_report_json(const AuthorityResult& r);

// ---- engagement on wall-style platforms ------------------------------------

struct WallPost {
  enum class Kind { post, comment };

  std::string id;
  std::string wall;  // wall owner
  UserId author = 0;
  Kind kind = Kind::post;
  UtcTime created_at{};
};

std::vector<WallPost> parse_wall_posts(std::string_view ndjson);
std::string wall_post_to_json(const WallPost& p);

/// Distinct walls on which the actor wrote at least one post or comment.
std::size_t engagement_breadth(std::span<const WallPost> posts, UserId actor);

struct EngagementDepth {
  std::size_t total = 0;
  std::map<std::string, std::size_t> per_wall;
};

/// Raw contribution count over the corpus, with the per-wall split.
EngagementDepth engagement_depth(std::span<const WallPost> posts, UserId actor);

/// breadth -> number of actors with that breadth, over every author present.
std::map<std::size_t, std::size_t> breadth_histogram(std::span<const WallPost> posts);

}  // namespace corpuskit
