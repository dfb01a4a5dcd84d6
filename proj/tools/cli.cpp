#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "collect.hpp"
#include "corpuskit/archive.hpp"
#include "corpuskit/authority.hpp"
#include "corpuskit/completeness.hpp"
#include "corpuskit/detail/tweet_json.hpp"
#include "corpuskit/errors.hpp"
#include "corpuskit/roster.hpp"
#include "corpuskit/sim.hpp"
#include "corpuskit/store.hpp"

namespace corpuskit::cli {

using detail::Json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string clock = "accelerated";

  sim::Clock clock_kind() const { return clock == "realtime" ? sim::Clock::realtime : sim::Clock::accelerated; }
};

std::optional<UtcTime> opt_time(const std::string& text, const char* flag) {
  if (text.empty()) return std::nullopt;
  return parse_utc_field(text, flag);
}

void emit(std::ostream& out, const std::optional<std::string>& path, const std::string& content) {
  if (path && !path->empty()) {
    write_text(*path, content);
  } else {
    out << content;
  }
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

// ---- sim -------------------------------------------------------------------

struct SimBuild {
  std::string config, preset, out;
};

int sim_build(const SimBuild& a, const Globals& g, std::ostream& err) {
  if (a.config.empty() == a.preset.empty()) throw ConfigError("sim build: give exactly one of --config or --preset");
  sim::ScenarioConfig c = a.config.empty() ? sim::preset(a.preset) : sim::load_scenario_config(a.config);
  if (g.seed) c.seed = *g.seed;
  const sim::Scenario s = sim::build_scenario(c);
  sim::write_world(s, a.out);
  log_event(err, "info", "scenario written",
            {{"out", a.out}, {"tweets", std::to_string(s.timeline.size())},
             {"accounts", std::to_string(s.accounts.size())}});
  return 0;
}

struct SimExport {
  std::string world, what = "timeline", out, evidence, groups, preset;
};

int sim_export(const SimExport& a, std::ostream& out, std::ostream& err) {
  if (a.what == "config" && !a.preset.empty()) {
    emit(out, a.out, sim::scenario_config_to_json(sim::preset(a.preset)));
    return 0;
  }
  if (a.world.empty()) throw ConfigError("sim export: --world is required");
  const sim::Scenario s = sim::read_world(a.world);
  if (a.what == "timeline") {
    emit(out, a.out, sim::timeline_to_ndjson(s));
  } else if (a.what == "config") {
    emit(out, a.out, sim::scenario_config_to_json(s.config));
  } else if (a.what == "roster") {
    if (a.evidence.empty()) throw ConfigError("sim export --what roster needs --evidence");
    const Roster r = sim::scenario_roster(s);
    emit(out, a.out, roster_to_csv(r));
    write_text(a.evidence, evidence_to_json(r));
  } else if (a.what == "graph") {
    if (a.groups.empty()) throw ConfigError("sim export --what graph needs --groups");
    emit(out, a.out, edge_list_to_text(s.graph.edges));
    write_text(a.groups, groups_to_json(s.graph));
  } else {
    throw ConfigError("sim export: unknown --what '" + a.what + "'");
  }
  log_event(err, "info", "world exported", {{"what", a.what}});
  return 0;
}

// ---- collect ---------------------------------------------------------------

struct CollectArgs {
  std::string corpora, world, store, manifest, plan, log, probe_log, dehydrate_dir, report;
  std::size_t probes = 0;
  std::int64_t interval = 600;
  std::size_t shard_size = 0;
};

CollectOptions to_options(const CollectArgs& a, const Globals& g, const std::string& command) {
  CollectOptions o;
  o.corpora = a.corpora;
  o.world = a.world;
  o.store = a.store;
  o.manifest = a.manifest;
  o.plan = opt_path(a.plan);
  o.run_log = opt_path(a.log);
  o.probe_log = opt_path(a.probe_log);
  o.dehydrate_dir = opt_path(a.dehydrate_dir);
  o.probes = a.probes;
  if (a.interval <= 0) throw ConfigError("--probe-interval must be positive");
  o.probe_interval = Seconds{a.interval};
  o.shard_size = a.shard_size;
  o.seed = g.seed;
  o.clock = g.clock_kind();
  o.command = command;
  return o;
}

int collect_run(const CollectArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const CollectResult r = collect(to_options(a, g, "collect run"), err);
  if (!r.completeness.empty()) out << completeness_to_text(r.completeness);
  if (r.exit_code == 0) log_event(err, "info", "collection finished", {{"manifest", a.manifest}});
  return r.exit_code;
}

struct AmendArgs {
  std::string plan, request;
  bool no_backfill = false;
};

int collect_amend(const AmendArgs& a, std::ostream& err) {
  // The request file uses the plan-entry schema for a single amendment.
  const std::string request = read_text(a.request);
  Json j;
  try {
    j = Json::parse(request);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("amendment request is not valid JSON: ") + e.what());
  }
  auto added = parse_plan(Json{{"amendments", Json::array({j})}}.dump());
  if (a.no_backfill) added.front().request.backfill = false;
  std::vector<PlannedAmendment> plan;
  if (fs::exists(a.plan)) plan = parse_plan(read_text(a.plan));
  plan.push_back(added.front());
  write_text(a.plan, plan_to_json(plan));
  log_event(err, "info", "amendment planned",
            {{"corpus", added.front().corpus}, {"at", format_utc(added.front().request.at)},
             {"backfill", added.front().request.backfill ? "true" : "false"}});
  return 0;
}

struct StatusArgs {
  std::string manifest, store;
};

int collect_status(const StatusArgs& a, std::ostream& out) {
  if (a.manifest.empty() == a.store.empty()) throw ConfigError("collect status: give exactly one of --manifest or --store");
  if (!a.store.empty()) {
    CorpusStore store{fs::path(a.store)};
    out << "corpus\trecords\tprobes\n";
    for (const auto& c : store.corpora()) {
      const auto all = store.count(c, true), plain = store.count(c, false);
      out << c << '\t' << plain << '\t' << (all - plain) << '\n';
    }
    return 0;
  }
  Json m;
  try {
    m = Json::parse(read_text(a.manifest));
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
  }
  out << "run " << m.value("runId", std::string("?")) << " status " << m.value("status", std::string("?")) << '\n';
  out << "corpus\tseen\tmatched\tstored\tduplicates\tdropped\tcompleteness\n";
  if (m.contains("corpora")) {
    for (auto it = m["corpora"].begin(); it != m["corpora"].end(); ++it) {
      const Json& c = it.value()["counters"];
      std::string ratio = "-";
      if (it.value()["completeness"].is_object()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", it.value()["completeness"]["completeness"].get<double>());
        ratio = buf;
      }
      out << it.key() << '\t' << c["seen"] << '\t' << c["matched"] << '\t' << c["stored"] << '\t' << c["duplicates"]
          << '\t' << c["droppedBySource"] << '\t' << ratio << '\n';
    }
  }
  if (m.contains("observers")) {
    for (const auto& o : m["observers"]) {
      for (const auto& gap : o["gaps"]) {
        out << "gap\t" << o["observer"].get<std::string>() << '\t' << gap["start"].get<std::string>() << '\t'
            << gap["end"].get<std::string>() << (gap["terminal"].get<bool>() ? "\tterminal" : "") << '\n';
      }
      for (const auto& am : o["amendments"]) {
        out << "amendment\t" << o["observer"].get<std::string>() << '\t' << am["effectiveAt"].get<std::string>()
            << '\t' << am["addedAccounts"].size() << " accounts\n";
      }
    }
  }
  return 0;
}

// ---- probe -----------------------------------------------------------------

int probe_run(CollectArgs a, const Globals& g, std::ostream& out, std::ostream& err) {
  if (a.probes == 0) throw ConfigError("probe run: --probes must be positive");
  const CollectResult r = collect(to_options(a, g, "probe run"), err);
  if (!r.completeness.empty()) {
    out << completeness_to_text(r.completeness);
    if (!a.report.empty()) write_text(a.report, completeness_to_json(r.completeness));
  }
  return r.exit_code;
}

struct ProbeReportArgs {
  std::string store, probe_log, corpus, start, end, json;
  std::int64_t bin = 3600;
};

int probe_report(const ProbeReportArgs& a, std::ostream& out) {
  const auto probes = parse_probe_log(read_text(a.probe_log));
  CorpusStore store{fs::path(a.store)};
  std::vector<std::string> corpora;
  for (const auto& p : probes) {
    if ((a.corpus.empty() || p.corpus == a.corpus) &&
        std::find(corpora.begin(), corpora.end(), p.corpus) == corpora.end()) {
      corpora.push_back(p.corpus);
    }
  }
  if (corpora.empty()) {
    throw VerificationError("completeness undefined: probe log has no probes" +
                            (a.corpus.empty() ? std::string() : " for corpus '" + a.corpus + "'"));
  }
  std::vector<CompletenessReport> reports;
  for (const auto& c : corpora) {
    std::optional<Interval> window;
    for (const auto& p : probes) {
      if (p.corpus != c) continue;
      if (!window) window = Interval{p.injected_at, p.injected_at + Seconds{1}};
      window->start = std::min(window->start, p.injected_at);
      window->end = std::max(window->end, p.injected_at + Seconds{1});
    }
    if (auto s = opt_time(a.start, "--start")) window->start = *s;
    if (auto e = opt_time(a.end, "--end")) window->end = *e;
    reports.push_back(compute_completeness(store, probes, c, *window, Seconds{a.bin}));
  }
  out << completeness_to_text(reports);
  if (!a.json.empty()) write_text(a.json, completeness_to_json(reports));
  return 0;
}

// ---- store -----------------------------------------------------------------

struct ScanArgs {
  std::string store, corpus, start, end;
  bool include_probes = false;
};

int store_scan(const ScanArgs& a, std::ostream& out) {
  CorpusStore store{fs::path(a.store)};
  std::optional<Interval> window;
  auto s = opt_time(a.start, "--start");
  auto e = opt_time(a.end, "--end");
  if (s || e) window = Interval{s.value_or(UtcTime::min()), e.value_or(UtcTime::max())};
  for (const auto& t : store.scan(a.corpus, window, a.include_probes)) out << stored_tweet_to_json(t) << '\n';
  return 0;
}

struct DehydrateArgs {
  std::string store, corpus, out, roster, evidence, generated;
};

std::optional<Roster> maybe_roster(const std::string& csv, const std::string& evidence) {
  if (csv.empty()) return std::nullopt;
  return load_roster(csv, opt_path(evidence));
}

int store_dehydrate(const DehydrateArgs& a, std::ostream& out, std::ostream& err) {
  CorpusStore store{fs::path(a.store)};
  const auto roster = maybe_roster(a.roster, a.evidence);
  UtcTime generated{};
  if (auto g = opt_time(a.generated, "--generated")) {
    generated = *g;
  } else {
    bool any = false;
    for (const auto& t : store.scan(a.corpus, std::nullopt, true)) {
      generated = any ? std::max(generated, t.stored_at) : t.stored_at;
      any = true;
    }
  }
  const auto d = dehydrate(store, a.corpus, roster ? &*roster : nullptr, generated);
  emit(out, a.out, dehydrated_to_text(d));
  log_event(err, "info", "corpus dehydrated", {{"corpus", a.corpus}, {"rows", std::to_string(d.count())}});
  return 0;
}

struct RehydrateArgs {
  std::string ids, world, deleted, store, corpus, out, missing;
};

int store_rehydrate(const RehydrateArgs& a, std::ostream& out, std::ostream& err) {
  const auto file = parse_dehydrated(read_text(a.ids));
  Rehydration r;
  if (!a.world.empty()) {
    const sim::Scenario s = sim::read_world(a.world);
    sim::SimulatedSource source(s);
    if (!a.deleted.empty()) {
      std::istringstream in(read_text(a.deleted));
      std::string line;
      for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.empty() || line[0] == '#') continue;
        try {
          std::size_t used = 0;
          const auto id = std::stoull(line, &used);
          if (used != line.size()) throw std::invalid_argument(line);
          source.remove(id);
        } catch (const std::logic_error&) {
          throw ParseError("deleted-ids line " + std::to_string(n) + ": '" + line + "' is not a tweet id");
        }
      }
    }
    r = rehydrate(file, source);
  } else if (!a.store.empty()) {
    CorpusStore store{fs::path(a.store)};
    r = rehydrate(file, StoreLookup(store, a.corpus.empty() ? file.corpus : a.corpus));
  } else {
    throw ConfigError("store rehydrate: give --world or --store");
  }
  std::string body;
  for (const auto& t : r.tweets) body += serialize_tweet(t) + "\n";
  emit(out, a.out, body);
  std::string missing;
  for (auto id : r.missing) missing += std::to_string(id) + "\n";
  if (!a.missing.empty()) write_text(a.missing, missing);
  log_event(err, r.missing.empty() ? "info" : "warn", "rehydration finished",
            {{"resolved", std::to_string(r.tweets.size())}, {"missing", std::to_string(r.missing.size())}});
  return 0;
}

struct PrivacyArgs {
  std::string store, corpus, roster, evidence, target;
};

int store_privacy_filter(const PrivacyArgs& a, std::ostream& out) {
  CorpusStore store{fs::path(a.store)};
  const Roster roster = load_roster(a.roster, opt_path(a.evidence));
  const auto r = privacy_filter(store, a.corpus, roster,
                                a.target.empty() ? std::nullopt : std::optional<std::string>(a.target));
  out << Json{{"derivedCorpus", r.derived_corpus}, {"kept", r.kept}, {"excluded", r.excluded}}.dump() << '\n';
  return 0;
}

struct ExportCandidatesArgs {
  std::string roster, evidence, out;
};

int store_export_candidates(const ExportCandidatesArgs& a, std::ostream& out) {
  const Roster roster = load_roster(a.roster, opt_path(a.evidence));
  emit(out, a.out, export_candidates(roster));
  return 0;
}

// ---- analyses --------------------------------------------------------------

struct AuthorityArgs {
  std::string graph, groups, threshold = "0.25", out;
  bool exclude_gatekeepers = false;
};

int authorities(const AuthorityArgs& a, std::ostream& out) {
  const FollowGraph g = load_follow_graph(a.graph, a.groups);
  AuthorityOptions opts;
  opts.threshold = Fraction::parse(a.threshold);
  opts.exclude_gatekeepers = a.exclude_gatekeepers;
  emit(out, a.out, authority_report_json(derive_information_authorities(g, opts)) + "\n");
  return 0;
}

struct EngagementArgs {
  std::string posts, out;
};

int engagement(const EngagementArgs& a, std::ostream& out) {
  const auto posts = parse_wall_posts(read_text(a.posts));
  std::set<UserId> actors;
  for (const auto& p : posts) actors.insert(p.author);
  Json rows = Json::array();
  for (UserId actor : actors) {
    const auto depth = engagement_depth(posts, actor);
    rows.push_back(Json{{"actor", actor},
                        {"breadth", engagement_breadth(posts, actor)},
                        {"depth", depth.total},
                        {"perWall", depth.per_wall}});
  }
  Json hist = Json::array();
  for (const auto& [breadth, n] : breadth_histogram(posts)) hist.push_back(Json{{"breadth", breadth}, {"actors", n}});
  emit(out, a.out, Json{{"actors", std::move(rows)}, {"breadthHistogram", std::move(hist)}}.dump(2) + "\n");
  return 0;
}

struct BiasArgs {
  std::string world, store, corpora, plan, references, json;
};

int bias_report_cmd(const BiasArgs& a, std::ostream& out) {
  const sim::Scenario s = sim::read_world(a.world);
  auto defs = load_corpus_config(a.corpora);
  if (!a.plan.empty()) defs = amended_definitions(defs, parse_plan(read_text(a.plan)));
  CorpusStore store{fs::path(a.store)};
  const auto stored_ids = [&](const std::string& corpus) {
    std::set<TweetId> ids;
    for (const auto& t : store.scan(corpus)) ids.insert(t.tweet.id);
    return ids;
  };
  const auto find_def = [&](const std::string& name) -> const CorpusDefinition& {
    auto it = std::find_if(defs.begin(), defs.end(), [&](const CorpusDefinition& d) { return d.name == name; });
    if (it == defs.end()) throw ConfigError("bias report: unknown corpus '" + name + "'");
    return *it;
  };
  std::vector<sim::BiasInput> inputs;
  if (a.references.empty()) {
    for (const auto& d : defs) inputs.push_back({d.name, "ground truth", stored_ids(d.name), sim::ground_truth(s, d)});
  } else {
    Json j;
    try {
      j = Json::parse(read_text(a.references));
    } catch (const Json::parse_error& e) {
      throw ParseError(std::string("reference file is not valid JSON: ") + e.what());
    }
    if (!j.contains("references") || !j["references"].is_array()) {
      throw SchemaError("references", "reference file needs a 'references' array");
    }
    std::size_t i = 0;
    for (const auto& r : j["references"]) {
      const std::string path = "references[" + std::to_string(i++) + "]";
      const std::string corpus = detail::get_string(r, "corpus", path);
      const std::string type = detail::get_string(r, "type", path);
      sim::BiasInput in{corpus, r.value("label", type), stored_ids(corpus), {}};
      if (type == "groundTruth") {
        in.expected = sim::ground_truth(s, find_def(corpus));
      } else if (type == "conversation") {
        in.expected = sim::conversation(s, detail::get_string(r, "tag", path));
      } else if (type == "topic") {
        in.expected = sim::topic_tweets(s, detail::get_string(r, "topic", path));
      } else if (type == "authoredBy") {
        std::set<UserId> authors;
        for (const auto& k : r.value("kinds", std::vector<std::string>{})) {
          auto kind = sim::account_kind_from(k);
          if (!kind) throw SchemaError(path + ".kinds", path + ": unknown account kind '" + k + "'");
          for (const auto& acc : s.accounts_of(*kind)) authors.insert(acc.id);
        }
        for (auto id : r.value("accounts", std::vector<std::uint64_t>{})) authors.insert(id);
        in.expected = sim::authored_by(s, authors);
      } else {
        throw SchemaError(path + ".type", path + ": unknown reference type '" + type + "'");
      }
      inputs.push_back(std::move(in));
    }
  }
  const auto rows = sim::bias_report(s, inputs);
  out << sim::bias_report_text(rows);
  if (!a.json.empty()) write_text(a.json, sim::bias_report_json(rows));
  return 0;
}

// ---- roster ----------------------------------------------------------------

struct RosterLoadArgs {
  std::string csv, evidence, updates, updates_evidence, out, out_evidence, plan_corpus, plan, at;
};

int roster_load(const RosterLoadArgs& a, std::ostream& out, std::ostream& err) {
  Roster roster = load_roster(a.csv, opt_path(a.evidence));
  std::vector<AccountRef> added;
  std::optional<UtcTime> latest;
  if (!a.updates.empty()) {
    const Roster updates = load_roster(a.updates, opt_path(a.updates_evidence));
    auto merged = merge_roster_updates(roster, updates);
    roster = std::move(merged.roster);
    added = std::move(merged.new_accounts);
    latest = merged.latest_addition;
  }
  std::map<std::string, std::pair<std::size_t, std::size_t>> parties;
  for (const auto& c : roster.candidates) {
    auto& p = parties[c.party];
    ++p.first;
    if (c.twitter) ++p.second;
  }
  Json by_party = Json::object();
  for (const auto& [party, n] : parties) by_party[party] = Json{{"candidates", n.first}, {"twitter", n.second}};
  Json new_accounts = Json::array();
  for (const auto& acc : added) new_accounts.push_back(Json{{"id", acc.user_id}, {"screenName", acc.screen_name}});
  out << Json{{"candidates", roster.candidates.size()},
              {"twitterAccounts", roster.twitter_accounts().size()},
              {"parties", std::move(by_party)},
              {"newAccounts", std::move(new_accounts)}}
             .dump(2)
      << '\n';
  if (!a.out.empty()) {
    write_text(a.out, roster_to_csv(roster));
    if (!a.out_evidence.empty()) write_text(a.out_evidence, evidence_to_json(roster));
  }
  if (!a.plan.empty() && !added.empty()) {
    if (a.plan_corpus.empty()) throw ConfigError("roster load: --plan needs --corpus");
    const auto at = opt_time(a.at, "--at");
    if (!at && !latest) throw ConfigError("roster load: no --at given and the updates carry no added_at");
    std::vector<PlannedAmendment> plan;
    if (fs::exists(a.plan)) plan = parse_plan(read_text(a.plan));
    PlannedAmendment p;
    p.corpus = a.plan_corpus;
    p.request.accounts = added;
    p.request.at = at ? *at : *latest;
    plan.push_back(std::move(p));
    write_text(a.plan, plan_to_json(plan));
    log_event(err, "info", "roster additions planned as amendment",
              {{"corpus", a.plan_corpus}, {"accounts", std::to_string(added.size())}});
  }
  return 0;
}

struct RosterResolveArgs {
  std::string sets, out;
};

int roster_resolve(const RosterResolveArgs& a, std::ostream& out) {
  const auto sets = parse_account_sets(read_text(a.sets));
  std::vector<Resolution> results;
  for (const auto& s : sets) results.push_back(resolve_account(s));
  emit(out, a.out, resolutions_to_json(sets, results) + "\n");
  return 0;
}

struct RosterDemoArgs {
  std::string csv, evidence, agents;
};

int roster_demo(const RosterDemoArgs& a, const Globals& g, std::ostream& err) {
  const auto demo = sim::make_demo_roster(g.seed.value_or(2013));
  write_text(a.csv, roster_to_csv(demo.candidates));
  write_text(a.evidence, evidence_to_json(demo.candidates));
  if (!a.agents.empty()) {
    Json agents = Json::array();
    for (const auto& m : demo.media_agents) agents.push_back(Json{{"id", m.user_id}, {"screenName", m.screen_name}});
    write_text(a.agents, Json{{"agents", std::move(agents)}}.dump(2) + "\n");
  }
  log_event(err, "info", "demo roster written",
            {{"candidates", std::to_string(demo.candidates.candidates.size())},
             {"twitter", std::to_string(demo.candidates.twitter_accounts().size())},
             {"agents", std::to_string(demo.media_agents.size())}});
  return 0;
}

std::string category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::source: return "source";
    case ErrorCategory::store: return "store";
    case ErrorCategory::verification: return "verification";
  }
  return "verification";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"corpuskit: collect, verify and archive social media corpora", "corpuskit"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed override (scenario seed for sim build, fault seed for runs)");
  app.add_option("--clock", g.clock, "Simulated clock")->check(CLI::IsMember({"accelerated", "realtime"}));

  std::function<int()> action;

  // sim
  auto* sim_cmd = app.add_subcommand("sim", "Scenario simulator");
  sim_cmd->require_subcommand(1);
  SimBuild sb;
  auto* sim_build_cmd = sim_cmd->add_subcommand("build", "Generate a world directory from a scenario config");
  sim_build_cmd->add_option("--config", sb.config, "Scenario config JSON");
  sim_build_cmd->add_option("--preset", sb.preset, "Named preset (bundestag-mini)");
  sim_build_cmd->add_option("--out", sb.out, "World directory")->required();
  sim_build_cmd->callback([&] { action = [&] { return sim_build(sb, g, err); }; });
  SimExport se;
  auto* sim_export_cmd = sim_cmd->add_subcommand("export", "Export world contents");
  sim_export_cmd->add_option("--world", se.world, "World directory");
  sim_export_cmd->add_option("--what", se.what, "timeline | config | roster | graph")
      ->check(CLI::IsMember({"timeline", "config", "roster", "graph"}));
  sim_export_cmd->add_option("--preset", se.preset, "Export a preset config instead of a world's");
  sim_export_cmd->add_option("--out", se.out, "Output file (stdout if omitted)");
  sim_export_cmd->add_option("--evidence", se.evidence, "Evidence sidecar output for --what roster");
  sim_export_cmd->add_option("--groups", se.groups, "Groups output for --what graph");
  sim_export_cmd->callback([&] { action = [&] { return sim_export(se, out, err); }; });

  // collect
  auto* collect_cmd = app.add_subcommand("collect", "Run and steer collections");
  collect_cmd->require_subcommand(1);
  CollectArgs ca;
  const auto add_collect_options = [](CLI::App* c, CollectArgs& a) {
    c->add_option("--corpora", a.corpora, "Corpus config JSON")->required();
    c->add_option("--world", a.world, "World directory")->required();
    c->add_option("--store", a.store, "Store directory")->required();
    c->add_option("--manifest", a.manifest, "Run manifest output")->required();
    c->add_option("--plan", a.plan, "Amendment plan JSON");
    c->add_option("--log", a.log, "Observer run log (NDJSON)");
    c->add_option("--probe-log", a.probe_log, "Probe log output (NDJSON)");
    c->add_option("--probe-interval", a.interval, "Seconds between probes");
    c->add_option("--shard-size", a.shard_size, "Accounts per observer for account corpora (0: one per corpus)");
    c->add_option("--dehydrate-dir", a.dehydrate_dir, "Write <corpus>.ids ID lists here after the run");
  };
  auto* collect_run_cmd = collect_cmd->add_subcommand("run", "Collect every corpus from a simulated world");
  add_collect_options(collect_run_cmd, ca);
  collect_run_cmd->add_option("--probes", ca.probes, "Probes per corpus (0: none)");
  collect_run_cmd->callback([&] { action = [&] { return collect_run(ca, g, out, err); }; });
  AmendArgs aa;
  auto* amend_cmd = collect_cmd->add_subcommand("amend", "Append an amendment (accounts or keywords) to a plan file");
  amend_cmd->add_option("--plan", aa.plan, "Plan file to append to")->required();
  amend_cmd->add_option("--request", aa.request, "Amendment request JSON")->required();
  amend_cmd->add_flag("--no-backfill", aa.no_backfill, "Do not backfill added accounts");
  amend_cmd->callback([&] { action = [&] { return collect_amend(aa, err); }; });
  StatusArgs sa;
  auto* status_cmd = collect_cmd->add_subcommand("status", "Summarize a run manifest or a store");
  status_cmd->add_option("--manifest", sa.manifest, "Run manifest");
  status_cmd->add_option("--store", sa.store, "Store directory");
  status_cmd->callback([&] { action = [&] { return collect_status(sa, out); }; });

  // probe
  auto* probe_cmd = app.add_subcommand("probe", "Completeness probing");
  probe_cmd->require_subcommand(1);
  CollectArgs pa;
  pa.probes = 100;
  auto* probe_run_cmd = probe_cmd->add_subcommand("run", "Collect with probes and report completeness");
  add_collect_options(probe_run_cmd, pa);
  probe_run_cmd->add_option("--probes", pa.probes, "Probes per corpus");
  probe_run_cmd->add_option("--report", pa.report, "Completeness report JSON output");
  probe_run_cmd->callback([&] { action = [&] { return probe_run(pa, g, out, err); }; });
  ProbeReportArgs pr;
  auto* probe_report_cmd = probe_cmd->add_subcommand("report", "Completeness from a store and a probe log");
  probe_report_cmd->add_option("--store", pr.store, "Store directory")->required();
  probe_report_cmd->add_option("--probe-log", pr.probe_log, "Probe log (NDJSON)")->required();
  probe_report_cmd->add_option("--corpus", pr.corpus, "Restrict to one corpus");
  probe_report_cmd->add_option("--start", pr.start, "Window start (UTC)");
  probe_report_cmd->add_option("--end", pr.end, "Window end (UTC, exclusive)");
  probe_report_cmd->add_option("--bin", pr.bin, "Breakdown bin width in seconds");
  probe_report_cmd->add_option("--json", pr.json, "JSON report output");
  probe_report_cmd->callback([&] { action = [&] { return probe_report(pr, out); }; });

  // store
  auto* store_cmd = app.add_subcommand("store", "Inspect and export the corpus store");
  store_cmd->require_subcommand(1);
  ScanArgs sc;
  auto* scan_cmd = store_cmd->add_subcommand("scan", "Print stored records as NDJSON");
  scan_cmd->add_option("--store", sc.store, "Store directory")->required();
  scan_cmd->add_option("--corpus", sc.corpus, "Corpus name")->required();
  scan_cmd->add_option("--start", sc.start, "Window start (UTC)");
  scan_cmd->add_option("--end", sc.end, "Window end (UTC, exclusive)");
  scan_cmd->add_flag("--include-probes", sc.include_probes, "Include probe records");
  scan_cmd->callback([&] { action = [&] { return store_scan(sc, out); }; });
  DehydrateArgs da;
  auto* dehydrate_cmd = store_cmd->add_subcommand("dehydrate", "Export a corpus as an ID list");
  dehydrate_cmd->add_option("--store", da.store, "Store directory")->required();
  dehydrate_cmd->add_option("--corpus", da.corpus, "Corpus name")->required();
  dehydrate_cmd->add_option("--out", da.out, "ID list output (stdout if omitted)");
  dehydrate_cmd->add_option("--roster", da.roster, "Roster CSV for candidate ids");
  dehydrate_cmd->add_option("--evidence", da.evidence, "Roster evidence sidecar");
  dehydrate_cmd->add_option("--generated", da.generated, "Header timestamp (default: latest stored_at)");
  dehydrate_cmd->callback([&] { action = [&] { return store_dehydrate(da, out, err); }; });
  RehydrateArgs ra;
  auto* rehydrate_cmd = store_cmd->add_subcommand("rehydrate", "Resolve an ID list back to tweets");
  rehydrate_cmd->add_option("--ids", ra.ids, "ID list")->required();
  rehydrate_cmd->add_option("--world", ra.world, "Resolve against a simulated world");
  rehydrate_cmd->add_option("--deleted", ra.deleted, "Ids deleted from the world before resolving");
  rehydrate_cmd->add_option("--store", ra.store, "Resolve against a store instead");
  rehydrate_cmd->add_option("--corpus", ra.corpus, "Store corpus (default: the list's corpus)");
  rehydrate_cmd->add_option("--out", ra.out, "Tweet NDJSON output (stdout if omitted)");
  rehydrate_cmd->add_option("--missing", ra.missing, "Missing-id list output");
  rehydrate_cmd->callback([&] { action = [&] { return store_rehydrate(ra, out, err); }; });
  PrivacyArgs pv;
  auto* privacy_cmd = store_cmd->add_subcommand("privacy-filter", "Derive a corpus of roster-authored tweets");
  privacy_cmd->add_option("--store", pv.store, "Store directory")->required();
  privacy_cmd->add_option("--corpus", pv.corpus, "Corpus name")->required();
  privacy_cmd->add_option("--roster", pv.roster, "Roster CSV")->required();
  privacy_cmd->add_option("--evidence", pv.evidence, "Roster evidence sidecar");
  privacy_cmd->add_option("--target", pv.target, "Derived corpus name");
  privacy_cmd->callback([&] { action = [&] { return store_privacy_filter(pv, out); }; });
  ExportCandidatesArgs ec;
  auto* export_cmd = store_cmd->add_subcommand("export-candidates", "Export the candidate list as CSV");
  export_cmd->add_option("--roster", ec.roster, "Roster CSV")->required();
  export_cmd->add_option("--evidence", ec.evidence, "Roster evidence sidecar");
  export_cmd->add_option("--out", ec.out, "CSV output (stdout if omitted)");
  export_cmd->callback([&] { action = [&] { return store_export_candidates(ec, out); }; });

  // analyses
  AuthorityArgs au;
  auto* auth_cmd = app.add_subcommand("authorities", "Derive information authorities from a follow graph");
  auth_cmd->add_option("--graph", au.graph, "Follow edges (TSV)")->required();
  auth_cmd->add_option("--groups", au.groups, "Gatekeeper groups JSON")->required();
  auth_cmd->add_option("--threshold", au.threshold, "Share of a group, e.g. 0.25 or 1/4");
  auth_cmd->add_flag("--exclude-gatekeepers", au.exclude_gatekeepers, "Drop gatekeepers from the result");
  auth_cmd->add_option("--out", au.out, "Report output (stdout if omitted)");
  auth_cmd->callback([&] { action = [&] { return authorities(au, out); }; });
  EngagementArgs en;
  auto* eng_cmd = app.add_subcommand("engagement", "Breadth and depth of engagement on walls");
  eng_cmd->add_option("--posts", en.posts, "Wall posts (NDJSON)")->required();
  eng_cmd->add_option("--out", en.out, "Report output (stdout if omitted)");
  eng_cmd->callback([&] { action = [&] { return engagement(en, out); }; });
  auto* bias_cmd = app.add_subcommand("bias", "Collection bias measurement");
  bias_cmd->require_subcommand(1);
  BiasArgs ba;
  auto* bias_report_sub = bias_cmd->add_subcommand("report", "Recall and precision against reference sets");
  bias_report_sub->add_option("--world", ba.world, "World directory")->required();
  bias_report_sub->add_option("--store", ba.store, "Store directory")->required();
  bias_report_sub->add_option("--corpora", ba.corpora, "Corpus config JSON")->required();
  bias_report_sub->add_option("--plan", ba.plan, "Amendment plan applied during collection");
  bias_report_sub->add_option("--references", ba.references, "Reference set definitions JSON");
  bias_report_sub->add_option("--json", ba.json, "JSON report output");
  bias_report_sub->callback([&] { action = [&] { return bias_report_cmd(ba, out); }; });

  // roster
  auto* roster_cmd = app.add_subcommand("roster", "Candidate rosters");
  roster_cmd->require_subcommand(1);
  RosterLoadArgs rl;
  auto* roster_load_cmd = roster_cmd->add_subcommand("load", "Validate a roster, optionally merging updates");
  roster_load_cmd->add_option("--csv", rl.csv, "Roster CSV")->required();
  roster_load_cmd->add_option("--evidence", rl.evidence, "Evidence sidecar");
  roster_load_cmd->add_option("--updates", rl.updates, "Roster CSV with additions");
  roster_load_cmd->add_option("--updates-evidence", rl.updates_evidence, "Evidence sidecar for the additions");
  roster_load_cmd->add_option("--out", rl.out, "Merged roster CSV output");
  roster_load_cmd->add_option("--out-evidence", rl.out_evidence, "Merged evidence output");
  roster_load_cmd->add_option("--plan", rl.plan, "Append an amendment for the added accounts to this plan");
  roster_load_cmd->add_option("--corpus", rl.plan_corpus, "Corpus the amendment targets");
  roster_load_cmd->add_option("--at", rl.at, "Amendment time (default: latest added_at)");
  roster_load_cmd->callback([&] { action = [&] { return roster_load(rl, out, err); }; });
  RosterResolveArgs rr;
  auto* resolve_cmd = roster_cmd->add_subcommand("resolve", "Resolve candidate accounts from evidence");
  resolve_cmd->add_option("--sets", rr.sets, "Account candidate sets JSON")->required();
  resolve_cmd->add_option("--out", rr.out, "Resolution output (stdout if omitted)");
  resolve_cmd->callback([&] { action = [&] { return roster_resolve(rr, out); }; });
  RosterDemoArgs rd;
  auto* demo_cmd = roster_cmd->add_subcommand("demo", "Write the synthetic full-scale demo roster");
  demo_cmd->add_option("--csv", rd.csv, "Roster CSV output")->required();
  demo_cmd->add_option("--evidence", rd.evidence, "Evidence sidecar output")->required();
  demo_cmd->add_option("--agents", rd.agents, "Media agents JSON output");
  demo_cmd->callback([&] { action = [&] { return roster_demo(rd, g, err); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    log_event(err, "error", e.what(), {{"category", "config"}});
    return static_cast<int>(ErrorCategory::config);
  }
  if (!action) {
    log_event(err, "error", "no command given", {{"category", "config"}});
    return static_cast<int>(ErrorCategory::config);
  }
  try {
    return action();
  } catch (const Error& e) {
    log_event(err, "error", e.what(), {{"category", category_name(e.category())}});
    return static_cast<int>(e.category());
  } catch (const fs::filesystem_error& e) {
    log_event(err, "error", e.what(), {{"category", "store"}});
    return static_cast<int>(ErrorCategory::store);
  } catch (const std::exception& e) {
    log_event(err, "error", e.what(), {{"category", "verification"}});
    return static_cast<int>(ErrorCategory::verification);
  }
}

}  // namespace corpuskit::cli
