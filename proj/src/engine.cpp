#include "diffusion/engine.hpp"

#include <array>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include <json.hpp>

#include "diffusion/errors.hpp"

namespace diffusion {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::TaskArrival: return "task-arrival";
    case EventKind::TransferComplete: return "transfer-complete";
    case EventKind::TransferStart: return "transfer-start";
    case EventKind::MetadataComplete: return "metadata-complete";
    case EventKind::ComputeComplete: return "compute-complete";
    case EventKind::IndexFlush: return "index-flush";
    case EventKind::ProvisionTick: return "provision-tick";
    case EventKind::ExecutorReady: return "executor-ready";
  }
  return "?";
}

std::string_view to_string(LogRecord::Type type) {
  using T = LogRecord::Type;
  switch (type) {
    case T::Dispatch: return "dispatch";
    case T::Access: return "access";
    case T::Transfer: return "transfer";
    case T::Insert: return "insert";
    case T::Evict: return "evict";
    case T::CorrectiveRemove: return "corrective-remove";
    case T::TaskComplete: return "task-complete";
    case T::IndexFlush: return "index-flush";
    case T::Allocate: return "allocate";
    case T::Release: return "release";
    case T::Ready: return "ready";
  }
  return "?";
}

std::string to_ndjson(const LogRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.time;
  j["type"] = to_string(r.type);
  j["task"] = to_underlying(r.task);
  j["executor"] = to_underlying(r.executor);
  j["object"] = to_underlying(r.object);
  j["source"] = to_underlying(r.source);
  j["tier"] = to_string(r.tier);
  j["bytes"] = r.bytes;
  j["value"] = r.value;
  j["count"] = r.count;
  return j.dump();
}

void Scenario::validate() const {
  try {
    resources.validate();
    if (provisioner) provisioner->validate();
  } catch (const ConfigError& e) {
    throw ScenarioError(e.what());
  }
  if (!provisioner && executors == 0) throw ScenarioError("scenario needs at least one executor");
  if (provisioner && warm_caches) throw ScenarioError("warm caches require a static executor pool");
  if (!(update_interval >= 0) || !std::isfinite(update_interval)) {
    throw ScenarioError("index update interval must be >= 0");
  }
  if (!(bucket_width > 0)) throw ScenarioError("throughput bucket width must be > 0");
  if (!(arrival_rate >= 0) || !std::isfinite(arrival_rate)) throw ScenarioError("arrival rate must be >= 0");
  if (cache.capacity == 0) throw ScenarioError("cache capacity must be > 0");
  if (uses_caches(dispatch.policy)) {
    for (const auto& o : workload.objects()) {
      if (o.working_size > cache.capacity) {
        throw ScenarioError("object " + std::to_string(to_underlying(o.id)) + " (" +
                            std::to_string(o.working_size) + " bytes) is larger than every executor cache (" +
                            std::to_string(cache.capacity) + " bytes)");
      }
    }
  }
}

SourceChoice choose_source(ExecutorId self, bool cached_locally, std::span<const ExecutorId> hinted,
                           const std::function<bool(ExecutorId)>& peer_holds) {
  SourceChoice choice{Tier::Persistent, std::nullopt, {}};
  if (cached_locally) {
    choice.tier = Tier::Local;
    return choice;
  }
  for (ExecutorId peer : hinted) {
    if (peer == self) continue;
    if (peer_holds(peer)) {
      choice.tier = Tier::Peer;
      choice.peer = peer;
      return choice;
    }
    choice.stale.push_back(peer);
  }
  return choice;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Phase : std::uint8_t { Idle, Metadata, Fetch, LocalRead, Compute };

struct Executor {
  ExecutorId id{};
  ExecutorState state = ExecutorState::Idle;
  CacheState cache;
  SimTime idle_since = 0;

  const Task* task = nullptr;
  std::vector<Hint> hints;
  std::size_t next_object = 0;
  SimTime dispatched_at = 0;

  Phase phase = Phase::Idle;
  ObjectId object{};
  Tier tier = Tier::Local;
  Bytes tier_bytes = 0;
  SimTime object_started = 0;
};

struct Flow {
  std::uint64_t id;
  Tier tier;
  ExecutorId receiver;
  ExecutorId server;  // peer transfers only
  ObjectId object;
  Bytes bytes;
  double remaining;
  double rate = 0;
  SimTime active_at;
  bool active;
};

struct Event {
  SimTime time;
  EventKind kind;
  std::uint64_t seq;
  std::uint32_t subject;  // executor id or task index

  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    return seq > o.seq;
  }
};

class Simulation {
 public:
  Simulation(const Scenario& scenario, const RunOptions& options)
      : sc_(scenario),
        opts_(options),
        caching_(uses_caches(scenario.dispatch.policy)),
        index_(scenario.update_interval),
        persistent_cap_(scenario.resources.persistent_cap(scenario.io_mode)),
        local_bw_(scenario.resources.local_bw(scenario.io_mode)) {
    report_.scenario = sc_.name;
    report_.policy = std::string(to_string(sc_.dispatch.policy));
    report_.locality = sc_.workload.locality();
    report_.throughput.bucket_width = sc_.bucket_width;
    if (sc_.dispatch.byte_weighted) {
      weight_ = [this](ObjectId id) { return static_cast<double>(sc_.workload.object(id).working_size); };
    }
  }

  MetricsReport run(RunDiagnostics* diag) {
    start();
    while (true) {
      if (all_done() && flows_.empty()) break;
      const SimTime t_flow = next_flow_time();
      const SimTime t_event = events_.empty() ? kInf : events_.top().time;
      if (t_flow == kInf && t_event == kInf) break;
      if (t_flow <= t_event) {
        advance(t_flow);
        process_flows();
      } else {
        advance(t_event);
        Event e = events_.top();
        events_.pop();
        process(e);
      }
      ++diag_.events;
      schedule();
      if (opts_.verify_coherence && index_.synchronous()) check_coherence();
    }
    finish();
    if (diag) *diag = diag_;
    return std::move(report_);
  }

 private:
  // ---- setup / teardown ------------------------------------------------

  void start() {
    if (sc_.provisioner) {
      provision();
      push(sc_.provisioner->tick_interval, EventKind::ProvisionTick, 0);
    } else {
      for (std::size_t i = 0; i < sc_.executors; ++i) {
        auto& e = new_executor();
        e.state = ExecutorState::Idle;
      }
      note_pool();
      if (sc_.warm_caches) warm();
    }
    push(0, EventKind::TaskArrival, 0);
    if (!index_.synchronous()) push(sc_.update_interval, EventKind::IndexFlush, 0);
  }

  void finish() {
    index_.apply_all();
    if (opts_.verify_coherence) check_coherence();
    report_.makespan = last_completion_;
    report_.executors = peak_pool_;
    if (report_.tasks_completed > 0) {
      const double n = static_cast<double>(report_.tasks_completed);
      report_.mean_task_time = task_time_sum_ / n;
      report_.time_per_task_per_cpu = report_.makespan * static_cast<double>(peak_pool_) / n;
    }
    if (report_.decisions.decisions > 0) {
      report_.decisions.wall_ns_mean = decision_ns_total_ / static_cast<double>(report_.decisions.decisions);
    }
    // Series end at the makespan.
    const auto buckets = static_cast<std::size_t>(std::ceil(report_.makespan / sc_.bucket_width));
    for (Tier t : {Tier::Local, Tier::Peer, Tier::Persistent}) report_.throughput.of(t).resize(buckets, 0.0);
  }

  Executor& new_executor() {
    Executor e;
    e.id = ExecutorId{static_cast<std::uint32_t>(execs_.size())};
    CacheConfig cc = sc_.cache;
    cc.seed = sc_.cache.seed ^ (sc_.seed * 0x9E3779B97F4A7C15ULL) ^ execs_.size();
    e.cache = CacheState(cc);
    e.state = ExecutorState::Booting;
    execs_.push_back(std::move(e));
    return execs_.back();
  }

  void warm() {
    std::vector<bool> seen(sc_.workload.objects().size(), false);
    std::size_t next = 0;
    for (const auto& t : sc_.workload.tasks()) {
      for (ObjectId id : t.required_objects) {
        const std::size_t pos = sc_.workload.object_index(id);
        if (seen[pos]) continue;
        seen[pos] = true;
        auto& e = execs_[next++ % execs_.size()];
        const auto& obj = sc_.workload.objects()[pos];
        if (e.cache.capacity() - e.cache.used() < obj.working_size) continue;
        e.cache.insert(id, obj.working_size);
        index_.add(e.id, id);
      }
    }
  }

  bool all_done() const { return report_.tasks_completed == sc_.workload.tasks().size(); }

  // ---- events ----------------------------------------------------------

  void push(SimTime t, EventKind kind, std::uint32_t subject) { events_.push({t, kind, seq_++, subject}); }

  void log(LogRecord r) {
    if (!opts_.sink) return;
    r.time = now_;
    opts_.sink(r);
  }

  void process(const Event& ev) {
    switch (ev.kind) {
      case EventKind::TaskArrival: on_arrival(ev.subject); break;
      case EventKind::MetadataComplete: begin_object(execs_[ev.subject]); break;
      case EventKind::ComputeComplete: on_compute_complete(execs_[ev.subject]); break;
      case EventKind::IndexFlush: on_flush(); break;
      case EventKind::ProvisionTick:
        provision();
        if (!all_done()) push(now_ + sc_.provisioner->tick_interval, EventKind::ProvisionTick, 0);
        break;
      case EventKind::ExecutorReady: on_ready(execs_[ev.subject]); break;
      case EventKind::TransferComplete:
      case EventKind::TransferStart: break;  // flows are driven by process_flows()
    }
  }

  void on_arrival(std::uint32_t task_index) {
    const auto& tasks = sc_.workload.tasks();
    if (sc_.arrival_rate <= 0) {
      for (const auto& t : tasks) queue_.enqueue(t);
    } else if (task_index < tasks.size()) {
      queue_.enqueue(tasks[task_index]);
      if (task_index + 1 < tasks.size()) {
        push(static_cast<double>(task_index + 1) / sc_.arrival_rate, EventKind::TaskArrival, task_index + 1);
      }
    }
    dirty_ = true;
  }

  void on_flush() {
    const std::size_t applied = index_.apply_all();
    if (applied > 0) {
      dirty_ = true;
      LogRecord r;
      r.type = LogRecord::Type::IndexFlush;
      r.bytes = applied;
      log(r);
    }
    if (opts_.verify_coherence) check_coherence();
    if (!all_done()) push(now_ + sc_.update_interval, EventKind::IndexFlush, 0);
  }

  void on_ready(Executor& e) {
    if (e.state != ExecutorState::Booting) return;
    e.state = ExecutorState::Idle;
    e.idle_since = now_;
    // Retained cache contents become visible again.
    for (ObjectId id : sorted(e.cache.resident())) index_.add(e.id, id);
    dirty_ = true;
    LogRecord r;
    r.type = LogRecord::Type::Ready;
    r.executor = e.id;
    log(r);
  }

  static std::vector<ObjectId> sorted(std::vector<ObjectId> ids) {
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  // ---- provisioning ----------------------------------------------------

  void provision() {
    const auto& cfg = *sc_.provisioner;
    std::vector<PoolMember> pool;
    pool.reserve(execs_.size());
    for (const auto& e : execs_) pool.push_back({e.id, e.state, e.idle_since});
    for (const auto& action : provision_evaluate(cfg, queue_.size(), pool, now_)) {
      if (const auto* alloc = std::get_if<Allocate>(&action)) {
        for (std::size_t i = 0; i < alloc->count; ++i) allocate_one();
      } else {
        for (ExecutorId id : std::get<Release>(action).executors) release(execs_[to_underlying(id)]);
      }
    }
    note_pool();
  }

  void allocate_one() {
    Executor* e = nullptr;
    if (!parked_.empty()) {
      e = &execs_[to_underlying(*parked_.begin())];
      parked_.erase(parked_.begin());
      e->state = ExecutorState::Booting;
    } else {
      e = &new_executor();
    }
    push(now_ + sc_.provisioner->startup_delay, EventKind::ExecutorReady, to_underlying(e->id));
    LogRecord r;
    r.type = LogRecord::Type::Allocate;
    r.executor = e->id;
    log(r);
  }

  void release(Executor& e) {
    if (e.state != ExecutorState::Idle) return;
    e.state = ExecutorState::Released;
    index_.deregister(e.id);
    if (sc_.provisioner->release_cache_policy == ReleaseCachePolicy::Discard) {
      e.cache.clear();
    } else {
      parked_.insert(e.id);
    }
    LogRecord r;
    r.type = LogRecord::Type::Release;
    r.executor = e.id;
    log(r);
  }

  std::size_t pool_size() const {
    std::size_t n = 0;
    for (const auto& e : execs_) n += e.state != ExecutorState::Released;
    return n;
  }

  void note_pool() {
    const std::size_t n = pool_size();
    peak_pool_ = std::max(peak_pool_, n);
    if (report_.pool_series.empty() || report_.pool_series.back().pool != n) {
      report_.pool_series.push_back({now_, n, queue_.size()});
    }
  }

  // ---- scheduling ------------------------------------------------------

  void schedule() {
    if (!dirty_) return;
    dirty_ = false;
    if (queue_.empty()) return;

    std::vector<ExecutorSlot> slots;
    std::size_t idle = 0;
    for (const auto& e : execs_) {
      if (e.state == ExecutorState::Idle || e.state == ExecutorState::Busy) {
        slots.push_back({e.id, e.state == ExecutorState::Idle});
        idle += e.state == ExecutorState::Idle;
      }
    }
    if (idle == 0) return;

    const bool scans = sc_.dispatch.policy == DispatchPolicy::MaxCacheHit ||
                       (sc_.dispatch.policy == DispatchPolicy::MaxComputeUtil && sc_.dispatch.window_match);
    const auto view = queue_.peek(scans ? sc_.dispatch.lookahead : idle);

    const auto t0 = std::chrono::steady_clock::now();
    SelectResult result = select(sc_.dispatch, view, slots, index_, weight_);
    const double ns = std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count();

    auto& stats = report_.decisions;
    stats.index_lookups += result.index_lookups;
    if (result.decisions.empty() && result.deferred.empty()) return;
    decision_ns_total_ += ns;
    stats.wall_ns_max = std::max(stats.wall_ns_max, ns);
    stats.decisions += result.decisions.size();

    queue_.note_deferred(result.deferred);
    std::vector<std::size_t> taken;
    taken.reserve(result.decisions.size());
    for (const auto& d : result.decisions) taken.push_back(d.queue_position);
    queue_.remove(std::move(taken));

    for (auto& d : result.decisions) dispatch(*view[d.queue_position].task, std::move(d));
  }

  void dispatch(const Task& task, DispatchDecision&& d) {
    Executor& e = execs_[to_underlying(d.executor)];
    e.state = ExecutorState::Busy;
    e.task = &task;
    e.hints = std::move(d.hints);
    e.next_object = 0;
    e.dispatched_at = now_;

    LogRecord r;
    r.type = LogRecord::Type::Dispatch;
    r.task = task.id;
    r.executor = e.id;
    r.value = d.overlap;
    r.count = 0;
    for (const auto& h : e.hints) r.count += h.sources.size();
    log(r);

    if (sc_.wrapper) {
      metadata_free_at_ = std::max(metadata_free_at_, now_) + sc_.resources.metadata_op_time;
      e.phase = Phase::Metadata;
      push(metadata_free_at_, EventKind::MetadataComplete, to_underlying(e.id));
    } else {
      begin_object(e);
    }
  }

  // ---- input acquisition -----------------------------------------------

  std::span<const ExecutorId> hinted(const Executor& e, ObjectId obj) const {
    for (const auto& h : e.hints) {
      if (h.object == obj) return h.sources;
    }
    return {};
  }

  void begin_object(Executor& e) {
    const Task& task = *e.task;
    if (e.next_object == task.required_objects.size()) {
      e.phase = Phase::Compute;
      push(now_ + task.compute_time, EventKind::ComputeComplete, to_underlying(e.id));
      return;
    }

    const ObjectId obj = task.required_objects[e.next_object];
    const DataObject& data = sc_.workload.object(obj);
    e.object = obj;
    e.object_started = now_;
    e.tier_bytes = 0;

    if (!caching_) {
      ++report_.cache_misses;
      e.tier = Tier::Persistent;
      e.phase = Phase::Fetch;
      start_flow(Tier::Persistent, e.id, e.id, obj, data.transfer_size, true);
      return;
    }

    const bool local = e.cache.lookup(obj) == LookupResult::Hit;
    auto holds = [&](ExecutorId peer) {
      const auto p = to_underlying(peer);
      if (p >= execs_.size()) return false;
      const auto& x = execs_[p];
      return (x.state == ExecutorState::Idle || x.state == ExecutorState::Busy) && x.cache.contains(obj);
    };
    const SourceChoice choice = choose_source(e.id, local, hinted(e, obj), holds);

    for (ExecutorId stale : choice.stale) {
      ++report_.stale_hints;
      const auto& x = execs_[to_underlying(stale)];
      // Deregistered executors have no index entries left to correct.
      if (x.state != ExecutorState::Idle && x.state != ExecutorState::Busy) continue;
      index_.record(stale, {UpdateKind::Remove, obj});
      if (index_.synchronous()) dirty_ = true;
      LogRecord r;
      r.type = LogRecord::Type::CorrectiveRemove;
      r.executor = e.id;
      r.source = stale;
      r.object = obj;
      log(r);
    }

    e.tier = choice.tier;
    switch (choice.tier) {
      case Tier::Local:
        ++report_.cache_hits_local;
        e.phase = Phase::LocalRead;
        start_flow(Tier::Local, e.id, e.id, obj, data.working_size, false);
        break;
      case Tier::Peer:
        ++report_.cache_hits_peer;
        e.phase = Phase::Fetch;
        start_flow(Tier::Peer, e.id, *choice.peer, obj, data.transfer_size, true);
        break;
      case Tier::Persistent:
        ++report_.cache_misses;
        e.phase = Phase::Fetch;
        start_flow(Tier::Persistent, e.id, e.id, obj, data.transfer_size, true);
        break;
    }
  }

  void on_flow_done(const Flow& f) {
    Executor& e = execs_[to_underlying(f.receiver)];
    switch (f.tier) {
      case Tier::Local: report_.bytes_local += f.bytes; break;
      case Tier::Peer: report_.bytes_peer += f.bytes; break;
      case Tier::Persistent: report_.bytes_persistent += f.bytes; break;
    }
    e.tier_bytes += f.bytes;
    if (f.tier != Tier::Local) {
      LogRecord r;
      r.type = LogRecord::Type::Transfer;
      r.task = e.task->id;
      r.executor = e.id;
      r.source = f.server;
      r.object = f.object;
      r.tier = f.tier;
      r.bytes = f.bytes;
      log(r);
    }

    if (e.phase == Phase::Fetch && caching_) {
      admit(e, f.object);
      e.phase = Phase::LocalRead;
      start_flow(Tier::Local, e.id, e.id, f.object, sc_.workload.object(f.object).working_size, false);
      return;
    }

    LogRecord r;
    r.type = LogRecord::Type::Access;
    r.task = e.task->id;
    r.executor = e.id;
    r.object = e.object;
    r.tier = e.tier;
    r.bytes = e.tier_bytes;
    r.value = now_ - e.object_started;
    log(r);

    ++e.next_object;
    begin_object(e);
  }

  void admit(Executor& e, ObjectId obj) {
    if (e.cache.contains(obj)) return;
    const Bytes size = sc_.workload.object(obj).working_size;
    for (ObjectId victim : e.cache.insert(obj, size)) {
      ++report_.evictions;
      index_.record(e.id, {UpdateKind::Remove, victim});
      LogRecord r;
      r.type = LogRecord::Type::Evict;
      r.executor = e.id;
      r.object = victim;
      log(r);
    }
    index_.record(e.id, {UpdateKind::Add, obj});
    if (index_.synchronous()) dirty_ = true;
    LogRecord r;
    r.type = LogRecord::Type::Insert;
    r.executor = e.id;
    r.object = obj;
    r.bytes = size;
    log(r);
  }

  void on_compute_complete(Executor& e) {
    ++report_.tasks_completed;
    task_time_sum_ += now_ - e.dispatched_at;
    last_completion_ = now_;
    LogRecord r;
    r.type = LogRecord::Type::TaskComplete;
    r.task = e.task->id;
    r.executor = e.id;
    log(r);

    e.task = nullptr;
    e.hints.clear();
    e.phase = Phase::Idle;
    e.state = ExecutorState::Idle;
    e.idle_since = now_;
    dirty_ = true;
  }

  // ---- bandwidth model -------------------------------------------------

  void start_flow(Tier tier, ExecutorId receiver, ExecutorId server, ObjectId obj, Bytes bytes, bool latency) {
    const SimTime delay = latency ? sc_.resources.per_transfer_latency : 0.0;
    flows_.push_back(Flow{next_flow_id_++, tier, receiver, server, obj, bytes, static_cast<double>(bytes), 0.0,
                          now_ + delay, delay <= 0});
    rerate();
  }

  // Instantaneous fair share, recomputed whenever the set of active
  // transfers changes.
  void rerate() {
    std::size_t persistent = 0;
    peer_load_.assign(execs_.size(), 0);
    for (const auto& f : flows_) {
      if (!f.active) continue;
      if (f.tier == Tier::Persistent) ++persistent;
      if (f.tier == Tier::Peer) {
        ++peer_load_[to_underlying(f.receiver)];
        ++peer_load_[to_underlying(f.server)];
      }
    }
    diag_.max_persistent_transfers = std::max(diag_.max_persistent_transfers, persistent);
    const double persistent_rate = std::min(
        shared_bandwidth_share(persistent, persistent_cap_, sc_.resources.persistent_io_servers), local_bw_);
    const double peer_bw = sc_.resources.peer_net_bw;
    for (auto& f : flows_) {
      if (!f.active) continue;
      switch (f.tier) {
        case Tier::Local: f.rate = local_bw_; break;
        case Tier::Persistent: f.rate = persistent_rate; break;
        case Tier::Peer: {
          const auto busiest = std::max(peer_load_[to_underlying(f.receiver)], peer_load_[to_underlying(f.server)]);
          f.rate = peer_bw / static_cast<double>(busiest);
          break;
        }
      }
    }
  }

  SimTime next_flow_time() const {
    SimTime t = kInf;
    for (const auto& f : flows_) {
      t = std::min(t, f.active ? now_ + transfer_seconds(f.remaining, f.rate) : f.active_at);
    }
    return t;
  }

  void advance(SimTime t) {
    if (t <= now_) return;
    const double dt = t - now_;
    std::array<double, 3> rate_by_tier{};  // bytes per second
    for (auto& f : flows_) {
      if (!f.active) continue;
      const double moved = f.rate / 8.0 * dt;
      f.remaining -= moved;
      rate_by_tier[static_cast<std::size_t>(f.tier)] += f.rate / 8.0;
    }
    for (Tier tier : {Tier::Local, Tier::Peer, Tier::Persistent}) {
      const double rate = rate_by_tier[static_cast<std::size_t>(tier)];
      if (rate > 0) spread(report_.throughput.of(tier), rate, now_, t);
    }
    // Queue/pool samples at every bucket boundary crossed.
    const double w = sc_.bucket_width;
    for (double b = std::floor(now_ / w) + 1; b * w <= t; b += 1) {
      report_.pool_series.push_back({b * w, pool_size(), queue_.size()});
    }
    now_ = t;
  }

  void spread(std::vector<double>& buckets, double rate, SimTime from, SimTime to) const {
    const double w = sc_.bucket_width;
    auto i = static_cast<std::size_t>(std::floor(from / w));
    while (from < to) {
      const double end = std::min(to, static_cast<double>(i + 1) * w);
      if (buckets.size() <= i) buckets.resize(i + 1, 0.0);
      buckets[i] += rate * (end - from);
      from = end;
      ++i;
    }
  }

  void process_flows() {
    std::vector<Flow> done;
    bool activated = false;
    for (auto it = flows_.begin(); it != flows_.end();) {
      if (!it->active && it->active_at <= now_) {
        it->active = true;
        activated = true;
      }
      if (it->active && it->remaining <= 1e-9 * std::max(1.0, static_cast<double>(it->bytes))) {
        done.push_back(*it);
        it = flows_.erase(it);
      } else {
        ++it;
      }
    }
    if (activated || !done.empty()) rerate();
    std::sort(done.begin(), done.end(), [](const Flow& a, const Flow& b) { return a.id < b.id; });
    for (const auto& f : done) on_flow_done(f);
  }

  // ---- verification ----------------------------------------------------

  void check_coherence() {
    ++diag_.coherence_checks;
    if (!index_.synchronous() && index_.pending_total() > 0) return;
    std::map<ObjectId, std::vector<ExecutorId>> truth;
    for (const auto& e : execs_) {
      if (e.state != ExecutorState::Idle && e.state != ExecutorState::Busy) continue;
      for (ObjectId id : e.cache.resident()) truth[id].push_back(e.id);
    }
    for (auto& kv : truth) std::sort(kv.second.begin(), kv.second.end());
    if (truth != index_.snapshot()) ++diag_.coherence_violations;
  }

  const Scenario& sc_;
  const RunOptions& opts_;
  const bool caching_;
  LocationIndex index_;
  WaitQueue queue_;
  std::vector<Executor> execs_;
  std::set<ExecutorId> parked_;
  std::vector<Flow> flows_;
  std::vector<std::size_t> peer_load_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  ObjectWeight weight_;

  const double persistent_cap_;
  const double local_bw_;

  MetricsReport report_;
  RunDiagnostics diag_;
  SimTime now_ = 0;
  SimTime last_completion_ = 0;
  SimTime metadata_free_at_ = 0;
  double task_time_sum_ = 0;
  double decision_ns_total_ = 0;
  std::size_t peak_pool_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t next_flow_id_ = 0;
  bool dirty_ = false;
};

}  // namespace

MetricsReport run(const Scenario& scenario, const RunOptions& options, RunDiagnostics* diagnostics) {
  scenario.validate();
  Simulation sim(scenario, options);
  return sim.run(diagnostics);
}

}  // namespace diffusion
