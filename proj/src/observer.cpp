#include "corpuskit/observer.hpp"

#include <algorithm>
#include <condition_variable>
#include <future>
#include <thread>

#include "corpuskit/detail/tweet_json.hpp"

namespace corpuskit {

using detail::Json;

Seconds BackoffPolicy::delay(int attempt) const {
  Seconds d = initial;
  for (int i = 1; i < attempt && d < cap; ++i) d *= 2;
  return std::min(d, cap);
}

std::string_view to_string(ObserverState s) {
  switch (s) {
    case ObserverState::starting: return "starting";
    case ObserverState::running: return "running";
    case ObserverState::reconnecting: return "reconnecting";
    case ObserverState::stopped: return "stopped";
  }
  return "stopped";
}

RunLog::RunLog() = default;

RunLog::RunLog(const std::filesystem::path& file) : out_(file, std::ios::binary | std::ios::trunc), enabled_(true) {
  if (!out_) throw StoreError("cannot open run log '" + file.string() + "'", false);
}

void RunLog::event(std::string_view kind, const std::string& observer, const std::string& corpus, UtcTime at,
                   const std::string& extra_json) {
  if (!enabled_) return;
  Json j;
  j["at"] = format_utc(at);
  j["event"] = kind;
  j["observer"] = observer;
  j["corpus"] = corpus;
  std::string line = j.dump();
  if (!extra_json.empty()) {
    line.pop_back();
    line += "," + extra_json + "}";
  }
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
}

namespace {

struct Pending {
  AmendmentRequest request;
  std::shared_ptr<std::promise<AmendmentEvent>> promise;
  std::uint64_t seq = 0;
};

std::string id_field(TweetId id) { return "\"id\":" + std::to_string(id); }

}  // namespace

struct ObserverHandle::Impl {
  Impl(const CorpusDefinition& d, StreamSource& src, TweetSink& snk, ObserverOptions o)
      : source(src), sink(snk), opts(std::move(o)) {
    snap.observer_id = opts.observer_id;
    snap.corpus = d.name;
    snap.definition = d;
    snap.position = d.window.start;
    if (!opts.log) opts.log = &null_log;
  }

  StreamSource& source;
  TweetSink& sink;
  ObserverOptions opts;
  RunLog null_log;

  mutable std::mutex mu;
  std::condition_variable cv;
  ObserverSnapshot snap;
  std::vector<Pending> pending;
  std::uint64_t next_seq = 0;
  bool stop_requested = false;
  std::shared_ptr<Subscription> current;
  std::thread thread;

  std::mutex stop_mu;
  std::optional<ObserverSnapshot> final_snapshot;

  // Observer-thread state.
  CorpusDefinition def;
  std::uint64_t dropped_base = 0;

  void log(std::string_view kind, UtcTime at, const std::string& extra = {}) {
    opts.log->event(kind, opts.observer_id, def.name, at, extra);
  }

  template <typename F>
  void update(F&& f) {
    std::lock_guard lock(mu);
    f(snap);
  }

  bool stopping() {
    std::lock_guard lock(mu);
    return stop_requested;
  }

  void set_subscription(std::shared_ptr<Subscription> sub) {
    std::lock_guard lock(mu);
    if (current) dropped_base += current->dropped();
    current = std::move(sub);
  }

  void sync_dropped() {
    std::lock_guard lock(mu);
    snap.counters.dropped_by_source = dropped_base + (current ? current->dropped() : 0);
  }

  void wait(UtcTime from, UtcTime to) {
    if (opts.wait) opts.wait(from, to);
  }

  // Retries `attempt` with backoff starting from a gap that opened at
  // `gap_start`. Returns the resume instant, or nullopt when the observer gave
  // up (terminal gap recorded) or the window closed first.
  template <typename Attempt>
  std::optional<UtcTime> ride_out_gap(UtcTime gap_start, const std::string& reason, Attempt&& attempt) {
    update([](ObserverSnapshot& s) { s.state = ObserverState::reconnecting; });
    log("gap-open", gap_start, "\"reason\":" + Json(reason).dump());
    UtcTime t = gap_start;
    for (int k = 1; k <= opts.backoff.max_retries; ++k) {
      if (stopping()) return std::nullopt;
      const UtcTime previous = t;
      t += opts.backoff.delay(k);
      if (t >= def.window.end) {
        GapRecord g{{gap_start, def.window.end}, k, false, reason + "; collection window closed while reconnecting"};
        update([&](ObserverSnapshot& s) { s.gaps.push_back(g); });
        log("gap-close", def.window.end, "\"attempts\":" + std::to_string(k));
        return std::nullopt;
      }
      wait(previous, t);
      if (attempt(t)) {
        GapRecord g{{gap_start, t}, k, false, reason};
        update([&](ObserverSnapshot& s) {
          s.gaps.push_back(g);
          s.state = ObserverState::running;
          s.position = t;
        });
        log("gap-close", t, "\"attempts\":" + std::to_string(k));
        return t;
      }
    }
    GapRecord g{{gap_start, def.window.end}, opts.backoff.max_retries, true,
                reason + "; source unreachable after " + std::to_string(opts.backoff.max_retries) + " retries"};
    update([&](ObserverSnapshot& s) {
      s.gaps.push_back(g);
      s.state = ObserverState::stopped;
      s.error = g.reason;
      s.error_category = ErrorCategory::source;
    });
    log("gap-close", def.window.end, "\"terminal\":true");
    return std::nullopt;
  }

  // Opens a subscription for the current definition at `since`. False when
  // the observer stopped or the window closed.
  bool connect(UtcTime since) {
    const StreamQuery q = compile_query(def);
    const auto try_subscribe = [&](UtcTime at) {
      try {
        set_subscription(std::shared_ptr<Subscription>(source.subscribe(q, at)));
        return true;
      } catch (const SourceError&) {
        return false;
      }
    };
    if (try_subscribe(since)) {
      log("subscribed", since,
          "\"follow\":" + Json(q.follow_ids).dump() + ",\"track\":" + Json(q.track_terms).dump());
      return true;
    }
    auto resumed = ride_out_gap(since, "subscribe failed", try_subscribe);
    if (!resumed) return false;
    log("subscribed", *resumed,
        "\"follow\":" + Json(q.follow_ids).dump() + ",\"track\":" + Json(q.track_terms).dump());
    return true;
  }

  AppendResult append_with_retry(const TweetRecord& t, bool is_probe, UtcTime stored_at) {
    for (int attempt = 0;; ++attempt) {
      try {
        return sink.append(t, def.name, is_probe, stored_at);
      } catch (const StoreError& e) {
        if (!e.retriable() || attempt >= opts.sink_retries) throw;
      }
    }
  }

  bool probe(TweetId id) const { return opts.is_probe && opts.is_probe(id); }

  void process(const TweetRecord& t, UtcTime at) {
    update([&](ObserverSnapshot& s) {
      ++s.counters.seen;
      s.position = std::max(s.position, at);
    });
    if (!matches(t, def)) return;
    update([](ObserverSnapshot& s) { ++s.counters.matched; });
    log("matched", at, id_field(t.id));
    const AppendResult r = append_with_retry(t, probe(t.id), at);
    if (r == AppendResult::appended) {
      update([](ObserverSnapshot& s) { ++s.counters.stored; });
      log("stored", at, id_field(t.id));
    } else {
      update([](ObserverSnapshot& s) { ++s.counters.duplicates; });
      log("duplicate", at, id_field(t.id));
    }
  }

  AmendmentEvent apply(const AmendmentRequest& req, UtcTime position) {
    const CorpusDefinition widened = widen(def, req.accounts, req.hashtags, req.terms);
    AmendmentEvent ev;
    ev.corpus = def.name;
    ev.requested_at = req.at;
    ev.effective_at = std::max(req.at, position);
    ev.backfill = req.backfill;
    const auto* before = std::get_if<AccountQuery>(&def.strategy);
    for (const auto& a : req.accounts) {
      const bool known = before && std::any_of(before->accounts.begin(), before->accounts.end(),
                                               [&](const AccountRef& b) { return b.user_id == a.user_id; });
      if (!known) ev.added_accounts.push_back(a);
    }
    ev.added_hashtags = req.hashtags;
    ev.added_terms = req.terms;
    def = widened;

    if (req.backfill) {
      const UtcTime until = std::min(ev.effective_at, def.window.end);
      for (const auto& a : ev.added_accounts) {
        AccountBackfill summary{a, 0, std::nullopt};
        if (def.window.start < until) {
          for (const auto& t : source.backfill_timeline(a.user_id, def.window.start, until)) {
            if (!matches(t, def)) continue;
            ++summary.recovered;
            if (!summary.earliest || t.created_at < *summary.earliest) summary.earliest = t.created_at;
            const AppendResult r = append_with_retry(t, probe(t.id), ev.effective_at);
            update([&](ObserverSnapshot& s) {
              ++(r == AppendResult::appended ? s.counters.backfilled : s.counters.backfill_duplicates);
            });
          }
        }
        ev.backfill_summary.push_back(std::move(summary));
      }
    }
    const std::string when = format_utc(ev.effective_at);
    if (!ev.added_accounts.empty()) {
      ev.limitation = "mentions of and name-hashtags for the added accounts before " + when +
                      " are not recoverable: the source offers no historical search";
      if (!req.backfill) ev.limitation += "; authored tweets before " + when + " were not backfilled";
    }
    if (!req.hashtags.empty() || !req.terms.empty()) {
      if (!ev.limitation.empty()) ev.limitation += "; ";
      ev.limitation += "tweets carrying the added keywords before " + when + " are not recoverable";
    }
    update([&](ObserverSnapshot& s) {
      s.definition = def;
      s.amendments.push_back(ev);
      s.position = ev.effective_at;
    });
    log("amendment", ev.effective_at, "\"detail\":" + amendment_to_json(ev));
    return ev;
  }

  // Removes and returns the earliest pending amendments (all sharing the
  // smallest `at`) if that instant is <= horizon.
  std::vector<Pending> take_due(UtcTime horizon) {
    std::lock_guard lock(mu);
    std::vector<Pending> due;
    if (pending.empty() || pending.front().request.at > horizon) return due;
    const UtcTime at = pending.front().request.at;
    auto it = pending.begin();
    while (it != pending.end() && it->request.at == at) ++it;
    due.assign(std::make_move_iterator(pending.begin()), std::make_move_iterator(it));
    pending.erase(pending.begin(), it);
    return due;
  }

  std::optional<UtcTime> apply_batch(std::vector<Pending>& due, UtcTime position) {
    std::optional<UtcTime> effective;
    for (auto& p : due) {
      try {
        AmendmentEvent ev = apply(p.request, position);
        effective = effective ? std::min(*effective, ev.effective_at) : ev.effective_at;
        if (p.promise) p.promise->set_value(std::move(ev));
      } catch (const StoreError&) {
        if (p.promise) p.promise->set_exception(std::current_exception());
        throw;
      } catch (const Error&) {
        if (p.promise) p.promise->set_exception(std::current_exception());
      }
    }
    return effective;
  }

  UtcTime position() {
    std::lock_guard lock(mu);
    return snap.position;
  }

  void run() {
    try {
      if (!connect(def.window.start)) return;
      update([](ObserverSnapshot& s) { s.state = ObserverState::running; });
      bool drained = false;
      while (!drained) {
        if (stopping()) return;
        std::shared_ptr<Subscription> sub;
        {
          std::lock_guard lock(mu);
          sub = current;
        }
        StreamEvent ev = sub->next();
        sync_dropped();
        if (ev.kind == StreamEvent::Kind::tweet && ev.tweet.created_at >= def.window.end) {
          ev.kind = StreamEvent::Kind::end;
        }
        if (ev.kind == StreamEvent::Kind::end && stopping()) return;
        const UtcTime horizon = ev.kind == StreamEvent::Kind::end ? def.window.end : ev.at;

        auto due = take_due(horizon);
        if (!due.empty()) {
          auto effective = apply_batch(due, position());
          if (effective && *effective < def.window.end) {
            if (!connect(*effective)) return;
            continue;
          }
        }

        switch (ev.kind) {
          case StreamEvent::Kind::tweet:
            process(ev.tweet, ev.at);
            break;
          case StreamEvent::Kind::disconnected: {
            auto resumed = ride_out_gap(ev.at, "source disconnected", [&](UtcTime t) { return sub->reconnect(t); });
            if (!resumed) {
              if (stopping()) return;
              std::lock_guard lock(mu);
              if (snap.state == ObserverState::stopped) return;
              drained = true;
            }
            break;
          }
          case StreamEvent::Kind::end:
            drained = true;
            break;
        }
      }

      update([&](ObserverSnapshot& s) {
        s.drained = true;
        s.position = std::max(s.position, def.window.end);
      });
      cv.notify_all();
      log("drained", def.window.end);

      // Idle: apply amendments as they arrive until stopped.
      for (;;) {
        std::vector<Pending> batch;
        {
          std::unique_lock lock(mu);
          cv.wait(lock, [&] { return stop_requested || !pending.empty(); });
          if (stop_requested) return;
          batch = std::move(pending);
          pending.clear();
        }
        apply_batch(batch, position());
      }
    } catch (const Error& e) {
      update([&](ObserverSnapshot& s) {
        s.state = ObserverState::stopped;
        s.error = e.what();
        s.error_category = e.category();
      });
      log("failed", position(), "\"error\":" + Json(std::string(e.what())).dump());
    } catch (const std::exception& e) {
      update([&](ObserverSnapshot& s) {
        s.state = ObserverState::stopped;
        s.error = e.what();
        s.error_category = ErrorCategory::verification;
      });
    }
  }

  void main() {
    run();
    std::vector<Pending> orphaned;
    {
      std::lock_guard lock(mu);
      if (snap.state == ObserverState::stopped || stop_requested) {
        snap.state = ObserverState::stopped;
        orphaned = std::move(pending);
        pending.clear();
      }
      snap.drained = true;
    }
    for (auto& p : orphaned) {
      if (p.promise) {
        p.promise->set_exception(std::make_exception_ptr(
            ConfigError("observer '" + opts.observer_id + "' stopped before the amendment was applied")));
      }
    }
    cv.notify_all();
  }
};

ObserverHandle::ObserverHandle(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

ObserverHandle::~ObserverHandle() {
  if (impl_) stop();
}

AmendmentEvent ObserverHandle::amend(const AmendmentRequest& request) {
  if (request.accounts.empty() && request.hashtags.empty() && request.terms.empty()) {
    throw ConfigError("amendment adds nothing");
  }
  auto promise = std::make_shared<std::promise<AmendmentEvent>>();
  auto future = promise->get_future();
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->stop_requested || impl_->snap.state == ObserverState::stopped) {
      throw ConfigError("observer '" + impl_->opts.observer_id + "' is stopped; amendment rejected");
    }
    widen(impl_->snap.definition, request.accounts, request.hashtags, request.terms);
    impl_->pending.push_back(Pending{request, promise, impl_->next_seq++});
    std::stable_sort(impl_->pending.begin(), impl_->pending.end(),
                     [](const Pending& a, const Pending& b) { return a.request.at < b.request.at; });
  }
  impl_->cv.notify_all();
  return future.get();
}

ObserverSnapshot ObserverHandle::snapshot() const {
  std::lock_guard lock(impl_->mu);
  return impl_->snap;
}

ObserverSnapshot ObserverHandle::wait_drained() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [&] { return impl_->snap.drained || impl_->snap.state == ObserverState::stopped; });
  return impl_->snap;
}

ObserverSnapshot ObserverHandle::stop() {
  std::lock_guard stop_lock(impl_->stop_mu);
  if (impl_->final_snapshot) return *impl_->final_snapshot;
  {
    std::lock_guard lock(impl_->mu);
    impl_->stop_requested = true;
    if (impl_->current) impl_->current->cancel();
  }
  impl_->cv.notify_all();
  if (impl_->thread.joinable()) impl_->thread.join();
  {
    std::lock_guard lock(impl_->mu);
    impl_->snap.state = ObserverState::stopped;
    impl_->snap.counters.dropped_by_source =
        impl_->dropped_base + (impl_->current ? impl_->current->dropped() : 0);
    impl_->final_snapshot = impl_->snap;
  }
  impl_->log("stopped", impl_->final_snapshot->position);
  return *impl_->final_snapshot;
}

std::unique_ptr<ObserverHandle> run_observer(const CorpusDefinition& d, StreamSource& source, TweetSink& sink,
                                             ObserverOptions options) {
  check_definition(d);
  for (const auto& a : options.planned_amendments) widen(d, a.accounts, a.hashtags, a.terms);
  auto impl = std::make_shared<ObserverHandle::Impl>(d, source, sink, std::move(options));
  impl->def = d;
  for (const auto& a : impl->opts.planned_amendments) {
    impl->pending.push_back(Pending{a, nullptr, impl->next_seq++});
  }
  std::stable_sort(impl->pending.begin(), impl->pending.end(),
                   [](const Pending& a, const Pending& b) { return a.request.at < b.request.at; });
  impl->thread = std::thread([raw = impl.get()] { raw->main(); });
  return std::make_unique<ObserverHandle>(std::move(impl));
}

std::string amendment_to_json(const AmendmentEvent& a) {
  Json accounts = Json::array();
  for (const auto& acc : a.added_accounts) accounts.push_back(Json{{"id", acc.user_id}, {"screenName", acc.screen_name}});
  Json summary = Json::array();
  for (const auto& s : a.backfill_summary) {
    Json j{{"id", s.account.user_id}, {"screenName", s.account.screen_name}, {"recovered", s.recovered}};
    j["earliest"] = s.earliest ? Json(format_utc(*s.earliest)) : Json(nullptr);
    summary.push_back(std::move(j));
  }
  Json j;
  j["corpus"] = a.corpus;
  j["requestedAt"] = format_utc(a.requested_at);
  j["effectiveAt"] = format_utc(a.effective_at);
  j["addedAccounts"] = std::move(accounts);
  j["addedHashtags"] = a.added_hashtags;
  j["addedTerms"] = a.added_terms;
  j["backfill"] = a.backfill;
  j["backfillSummary"] = std::move(summary);
  j["limitation"] = a.limitation;
  return j.dump();
}

std::string snapshot_to_json(const ObserverSnapshot& s) {
  Json gaps = Json::array();
  for (const auto& g : s.gaps) {
    gaps.push_back(Json{{"start", format_utc(g.interval.start)},
                        {"end", format_utc(g.interval.end)},
                        {"attempts", g.attempts},
                        {"terminal", g.terminal},
                        {"reason", g.reason}});
  }
  Json amendments = Json::array();
  for (const auto& a : s.amendments) amendments.push_back(Json::parse(amendment_to_json(a)));
  Json j;
  j["observer"] = s.observer_id;
  j["corpus"] = s.corpus;
  j["state"] = to_string(s.state);
  j["counters"] = Json{{"seen", s.counters.seen},
                       {"matched", s.counters.matched},
                       {"stored", s.counters.stored},
                       {"duplicates", s.counters.duplicates},
                       {"droppedBySource", s.counters.dropped_by_source},
                       {"backfilled", s.counters.backfilled},
                       {"backfillDuplicates", s.counters.backfill_duplicates}};
  j["gaps"] = std::move(gaps);
  j["amendments"] = std::move(amendments);
  j["error"] = s.error ? Json(*s.error) : Json(nullptr);
  return j.dump();
}

}  // namespace corpuskit
