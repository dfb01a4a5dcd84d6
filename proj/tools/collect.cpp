#include "collect.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "corpuskit/archive.hpp"
#include "corpuskit/detail/tweet_json.hpp"
#include "corpuskit/errors.hpp"

namespace corpuskit::cli {

using detail::Json;

constexpr const char* kToolVersion = "1.0.0";

void log_event(std::ostream& err, std::string_view level, std::string_view message,
               const std::map<std::string, std::string>& fields) {
  Json j;
  j["level"] = level;
  j["msg"] = message;
  for (const auto& [k, v] : fields) j[k] = v;
  err << j.dump() << '\n';
}

namespace {

std::string hex(const unsigned char* data, unsigned int n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < n; ++i) {
    out += digits[data[i] >> 4];
    out += digits[data[i] & 0xF];
  }
  return out;
}

}  // namespace

std::string sha256_text(std::string_view text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  if (EVP_Digest(text.data(), text.size(), md, &n, EVP_sha256(), nullptr) != 1) {
    throw VerificationError("SHA-256 computation failed");
  }
  return hex(md, n);
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + file.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_file(const fs::path& file) { return sha256_text(read_text(file)); }

void write_text(const fs::path& file, const std::string& content) {
  if (file.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot write '" + file.string() + "'", false);
  out << content;
  if (!out.flush()) throw StoreError("cannot write '" + file.string() + "'", true);
}

std::vector<PlannedAmendment> parse_plan(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("plan file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("amendments") || !j["amendments"].is_array()) {
    throw SchemaError("amendments", "plan file needs an 'amendments' array");
  }
  std::vector<PlannedAmendment> out;
  std::size_t i = 0;
  for (const auto& a : j["amendments"]) {
    const std::string path = "amendments[" + std::to_string(i++) + "]";
    PlannedAmendment p;
    p.corpus = detail::get_string(a, "corpus", path);
    p.request.at = parse_utc_field(detail::get_string(a, "at", path), path + ".at");
    if (auto it = a.find("accounts"); it != a.end()) {
      if (!it->is_array()) throw SchemaError(path + ".accounts", path + ".accounts must be an array");
      for (const auto& acc : *it) {
        p.request.accounts.push_back({detail::get_u64(acc, "id", path + ".accounts"),
                                      acc.contains("screenName") ? detail::get_string(acc, "screenName", path) : ""});
      }
    }
    for (const char* key : {"hashtags", "terms"}) {
      if (auto it = a.find(key); it != a.end()) {
        if (!it->is_array()) throw SchemaError(path + "." + key, path + "." + key + " must be an array");
        auto& target = std::string_view(key) == "hashtags" ? p.request.hashtags : p.request.terms;
        for (const auto& v : *it) {
          if (!v.is_string()) throw SchemaError(path + "." + key, path + "." + key + " must hold strings");
          target.push_back(v.get<std::string>());
        }
      }
    }
    if (auto it = a.find("backfill"); it != a.end()) {
      if (!it->is_boolean()) throw SchemaError(path + ".backfill", path + ".backfill must be a boolean");
      p.request.backfill = it->get<bool>();
    }
    if (p.request.accounts.empty() && p.request.hashtags.empty() && p.request.terms.empty()) {
      throw ConfigError(path + ": amendment adds nothing");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string plan_to_json(const std::vector<PlannedAmendment>& plan) {
  Json arr = Json::array();
  for (const auto& p : plan) {
    Json j;
    j["corpus"] = p.corpus;
    j["at"] = format_utc(p.request.at);
    Json accounts = Json::array();
    for (const auto& a : p.request.accounts) accounts.push_back(Json{{"id", a.user_id}, {"screenName", a.screen_name}});
    j["accounts"] = std::move(accounts);
    j["hashtags"] = p.request.hashtags;
    j["terms"] = p.request.terms;
    j["backfill"] = p.request.backfill;
    arr.push_back(std::move(j));
  }
  return Json{{"amendments", std::move(arr)}}.dump(2) + "\n";
}

std::vector<CorpusDefinition> amended_definitions(std::vector<CorpusDefinition> defs,
                                                  const std::vector<PlannedAmendment>& plan) {
  for (const auto& p : plan) {
    auto it = std::find_if(defs.begin(), defs.end(), [&](const CorpusDefinition& d) { return d.name == p.corpus; });
    if (it == defs.end()) throw ConfigError("plan refers to unknown corpus '" + p.corpus + "'");
    *it = widen(*it, p.request.accounts, p.request.hashtags, p.request.terms);
  }
  return defs;
}

namespace {

struct Unit {
  std::string corpus;
  CorpusDefinition def;
  std::string observer_id;
  std::vector<AmendmentRequest> planned;
};

std::vector<Unit> plan_units(const std::vector<CorpusDefinition>& defs, std::size_t shard_size) {
  std::vector<Unit> units;
  for (const auto& d : defs) {
    const auto* q = std::get_if<AccountQuery>(&d.strategy);
    if (shard_size == 0 || !q || q->accounts.size() <= shard_size) {
      units.push_back({d.name, d, d.name, {}});
      continue;
    }
    for (std::size_t first = 0, k = 0; first < q->accounts.size(); first += shard_size, ++k) {
      CorpusDefinition part = d;
      auto& accounts = std::get<AccountQuery>(part.strategy).accounts;
      const std::size_t last = std::min(q->accounts.size(), first + shard_size);
      accounts.assign(q->accounts.begin() + static_cast<std::ptrdiff_t>(first),
                      q->accounts.begin() + static_cast<std::ptrdiff_t>(last));
      units.push_back({d.name, std::move(part), d.name + "#" + std::to_string(k), {}});
    }
  }
  return units;
}

Json gap_json(const GapRecord& g) {
  return Json{{"start", format_utc(g.interval.start)},
              {"end", format_utc(g.interval.end)},
              {"attempts", g.attempts},
              {"terminal", g.terminal},
              {"reason", g.reason}};
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

CollectResult collect(const CollectOptions& o, std::ostream& err) {
  CollectResult result;
  Json manifest;
  manifest["tool"] = "corpuskit";
  manifest["version"] = kToolVersion;
  manifest["command"] = o.command;
  manifest["clock"] = o.clock == sim::Clock::realtime ? "realtime" : "accelerated";
  Json inputs = Json::array();
  const auto input = [&](const std::string& role, const fs::path& p) {
    inputs.push_back(Json{{"role", role}, {"path", p.generic_string()}, {"sha256", sha256_file(p)}});
  };
  manifest["options"] = Json{{"probes", o.probes},
                             {"probeIntervalSeconds", o.probe_interval.count()},
                             {"shardSize", o.shard_size}};
  Json corpora_json = Json::object();
  Json observers_json = Json::array();
  std::optional<std::pair<ErrorCategory, std::string>> failure;

  try {
    input("corpora", o.corpora);
    const auto defs = load_corpus_config(o.corpora);
    if (defs.empty()) throw ConfigError("corpus configuration defines no corpora");
    for (const char* name : {"config.json", "accounts.ndjson", "follows.tsv", "groups.json", "timeline.ndjson"}) {
      input("world", o.world / name);
    }
    const sim::Scenario s = sim::read_world(o.world);
    std::vector<PlannedAmendment> plan;
    if (o.plan) {
      input("plan", *o.plan);
      plan = parse_plan(read_text(*o.plan));
      amended_definitions(defs, plan);  // validates corpus names and widening rules
    }
    sim::FaultSchedule faults = s.config.faults;
    if (o.seed) faults.seed = *o.seed;
    manifest["seed"] = faults.seed;
    manifest["scenarioSeed"] = s.config.seed;

    UtcTime start = defs.front().window.start, end = defs.front().window.end;
    for (const auto& d : defs) {
      start = std::min(start, d.window.start);
      end = std::max(end, d.window.end);
    }
    manifest["start"] = format_utc(start);
    manifest["end"] = format_utc(end);

    sim::SimulatedSource source(s, faults, o.clock);
    CorpusStore store(o.store);
    std::unique_ptr<RunLog> run_log = o.run_log ? std::make_unique<RunLog>(*o.run_log) : std::make_unique<RunLog>();
    ProbeRegistry registry;

    AccountRef probe_account{1, "observer_probe"};
    if (auto probes = s.accounts_of(sim::AccountKind::probe); !probes.empty()) {
      probe_account = {probes.front().id, probes.front().screen_name};
    }

    std::vector<CorpusDefinition> effective;
    for (const auto& d : defs) {
      store.ensure_corpus(d.name);
      effective.push_back(o.probes ? with_probe_account(d, probe_account) : d);
    }
    std::vector<Unit> units = plan_units(effective, o.shard_size);
    for (const auto& p : plan) {
      auto it = std::find_if(units.begin(), units.end(), [&](const Unit& u) { return u.corpus == p.corpus; });
      it->planned.push_back(p.request);
    }

    std::map<std::string, std::vector<ProbeRecord>> probe_logs;
    if (o.probes) {
      std::uint64_t seq = 0;
      for (const auto& d : effective) {
        ProbeOptions po;
        po.interval = o.probe_interval;
        po.account = probe_account;
        po.first_seq = seq;
        auto log = inject_probes(d, source, o.probes, po);
        seq += o.probes;
        registry.add(log);
        probe_logs[d.name] = std::move(log);
        log_event(err, "info", "probes injected", {{"corpus", d.name}, {"count", std::to_string(o.probes)}});
      }
      if (o.probe_log) write_text(*o.probe_log, probe_log_to_ndjson(registry.all()));
    }

    std::vector<std::unique_ptr<ObserverHandle>> handles;
    for (const auto& u : units) {
      ObserverOptions opts;
      opts.observer_id = u.observer_id;
      opts.planned_amendments = u.planned;
      opts.log = run_log.get();
      if (o.probes) opts.is_probe = [&registry](TweetId id) { return registry.contains(id); };
      if (o.clock == sim::Clock::realtime) {
        opts.wait = [](UtcTime from, UtcTime to) {
          std::this_thread::sleep_for(std::min<Seconds>(to - from, Seconds{60}));
        };
      }
      handles.push_back(run_observer(u.def, source, store, std::move(opts)));
      log_event(err, "info", "observer started", {{"observer", u.observer_id}, {"corpus", u.corpus}});
    }
    for (auto& h : handles) h->wait_drained();
    std::vector<ObserverSnapshot> snaps;
    for (auto& h : handles) snaps.push_back(h->stop());

    for (const auto& d : defs) {
      std::uint64_t seen = 0, matched = 0, recovered = 0, dropped = 0;
      std::size_t observers = 0;
      for (const auto& snap : snaps) {
        if (snap.corpus != d.name) continue;
        ++observers;
        seen += snap.counters.seen;
        matched += snap.counters.matched;
        recovered += snap.counters.backfilled + snap.counters.backfill_duplicates;
        dropped += snap.counters.dropped_by_source;
      }
      const std::size_t stored = store.count(d.name, true);
      const std::size_t probes_stored = stored - store.count(d.name, false);
      Json c;
      c["strategy"] = strategy_name(d.strategy);
      c["observers"] = observers;
      c["counters"] = Json{{"seen", seen},
                           {"matched", matched},
                           {"backfillRecovered", recovered},
                           {"stored", stored},
                           {"probesStored", probes_stored},
                           {"duplicates", matched + recovered - stored},
                           {"droppedBySource", dropped}};
      c["completeness"] = nullptr;
      if (auto it = probe_logs.find(d.name); it != probe_logs.end() && !it->second.empty()) {
        auto report = compute_completeness(store, it->second, d.name, d.window);
        c["completeness"] = Json{{"created", report.created},
                                 {"stored", report.stored},
                                 {"completeness", report.completeness}};
        result.completeness.push_back(std::move(report));
      }
      corpora_json[d.name] = std::move(c);
    }
    for (const auto& snap : snaps) {
      Json gaps = Json::array();
      for (const auto& g : snap.gaps) gaps.push_back(gap_json(g));
      Json amendments = Json::array();
      for (const auto& a : snap.amendments) amendments.push_back(Json::parse(amendment_to_json(a)));
      observers_json.push_back(Json{{"observer", snap.observer_id},
                                    {"corpus", snap.corpus},
                                    {"state", to_string(snap.state)},
                                    {"seen", snap.counters.seen},
                                    {"matched", snap.counters.matched},
                                    {"gaps", std::move(gaps)},
                                    {"amendments", std::move(amendments)},
                                    {"error", snap.error ? Json(*snap.error) : Json(nullptr)}});
      if (snap.error && !failure) {
        failure = std::make_pair(snap.error_category.value_or(ErrorCategory::source),
                                 "observer '" + snap.observer_id + "': " + *snap.error);
      }
    }

    if (o.dehydrate_dir) {
      for (const auto& d : defs) {
        UtcTime generated = d.window.start;
        for (const auto& t : store.scan(d.name, std::nullopt, true)) generated = std::max(generated, t.stored_at);
        write_text(*o.dehydrate_dir / (d.name + ".ids"), dehydrated_to_text(dehydrate(store, d.name, nullptr, generated)));
      }
    }
  } catch (const Error& e) {
    failure = std::make_pair(e.category(), std::string(e.what()));
  } catch (const fs::filesystem_error& e) {
    failure = std::make_pair(ErrorCategory::store, std::string(e.what()));
  } catch (const std::exception& e) {
    failure = std::make_pair(ErrorCategory::verification, std::string(e.what()));
  }

  std::string id_material;
  for (const auto& in : inputs) id_material += in["sha256"].get<std::string>();
  id_material += manifest.value("seed", Json(0)).dump() + manifest["options"].dump();
  Json out;
  out["runId"] = sha256_text(id_material).substr(0, 16);
  for (auto it = manifest.begin(); it != manifest.end(); ++it) out[it.key()] = it.value();
  out["inputs"] = std::move(inputs);
  out["corpora"] = std::move(corpora_json);
  out["observers"] = std::move(observers_json);
  out["status"] = failure ? "failed" : "ok";
  out["error"] = failure ? Json{{"category", category_name(failure->first)}, {"message", failure->second}}
                         : Json(nullptr);
  result.manifest_json = out.dump(2) + "\n";
  result.exit_code = failure ? static_cast<int>(failure->first) : 0;
  if (failure) {
    log_event(err, "error", failure->second, {{"category", category_name(failure->first)}});
  }
  try {
    write_text(o.manifest, result.manifest_json);
  } catch (const Error& e) {
    log_event(err, "error", e.what(), {{"category", "store"}});
    if (!result.exit_code) result.exit_code = static_cast<int>(ErrorCategory::store);
  }
  return result;
}

}  // namespace corpuskit::cli
