#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>
#include <vector>

#include "diffusion/rng.hpp"
#include "diffusion/scheduler.hpp"
#include "oracles.hpp"

using namespace diffusion;

namespace {

ObjectId oid(std::uint32_t v) { return ObjectId{v}; }
ExecutorId eid(std::uint32_t v) { return ExecutorId{v}; }

Task make_task(std::uint32_t id, std::vector<std::uint32_t> objects) {
  Task t{TaskId{id}, {}, 0};
  for (auto o : objects) t.required_objects.push_back(oid(o));
  return t;
}

std::vector<QueuedTask> queue_of(const std::vector<Task>& tasks) {
  std::vector<QueuedTask> q;
  for (const auto& t : tasks) q.push_back({&t, 0});
  return q;
}

SchedulerConfig config(DispatchPolicy p) {
  SchedulerConfig c;
  c.policy = p;
  return c;
}

}  // namespace

TEST_CASE("unique best candidate under max-compute-util") {
  LocationIndex idx(0.0);
  idx.add(eid(1), oid(0));
  const std::vector<Task> tasks{make_task(0, {0})};
  const auto q = queue_of(tasks);
  const std::vector<ExecutorSlot> slots{{eid(1), true}, {eid(2), true}};
  const auto r = select(config(DispatchPolicy::MaxComputeUtil), q, slots, idx);
  REQUIRE(r.decisions.size() == 1);
  CHECK(r.decisions[0].executor == eid(1));
  CHECK(r.decisions[0].hints == std::vector<Hint>{{oid(0), {eid(1)}}});
  CHECK(r.decisions[0].overlap == 1);
}

TEST_CASE("busy holder: max-cache-hit defers, max-compute-util dispatches") {
  LocationIndex idx(0.0);
  idx.add(eid(1), oid(0));
  const std::vector<Task> tasks{make_task(0, {0})};
  const auto q = queue_of(tasks);
  const std::vector<ExecutorSlot> slots{{eid(1), false}, {eid(2), true}};

  const auto mch = select(config(DispatchPolicy::MaxCacheHit), q, slots, idx);
  CHECK(mch.decisions.empty());
  CHECK(mch.deferred == std::vector<std::size_t>{0});

  const auto mcu = select(config(DispatchPolicy::MaxComputeUtil), q, slots, idx);
  REQUIRE(mcu.decisions.size() == 1);
  CHECK(mcu.decisions[0].executor == eid(2));
  CHECK(mcu.decisions[0].hints == std::vector<Hint>{{oid(0), {eid(1)}}});
  CHECK(mcu.decisions[0].overlap == 0);
}

TEST_CASE("max_defer bound forces placement") {
  LocationIndex idx(0.0);
  idx.add(eid(1), oid(0));
  const std::vector<Task> tasks{make_task(0, {0})};
  std::vector<QueuedTask> q{{&tasks[0], 3}};
  const std::vector<ExecutorSlot> slots{{eid(1), false}, {eid(2), true}};
  auto c = config(DispatchPolicy::MaxCacheHit);
  c.max_defer = 4;
  CHECK(select(c, q, slots, idx).decisions.empty());
  q[0].deferrals = 4;
  const auto r = select(c, q, slots, idx);
  REQUIRE(r.decisions.size() == 1);
  CHECK(r.decisions[0].forced);
  CHECK(r.decisions[0].executor == eid(2));
}

TEST_CASE("first-available and first-cache-available") {
  LocationIndex idx(0.0);
  idx.add(eid(9), oid(0));
  const std::vector<Task> tasks{make_task(0, {0, 1}), make_task(1, {0})};
  const auto q = queue_of(tasks);
  const std::vector<ExecutorSlot> slots{{eid(9), true}, {eid(4), true}, {eid(6), false}};

  const auto fa = select(config(DispatchPolicy::FirstAvailable), q, slots, idx);
  REQUIRE(fa.decisions.size() == 2);
  CHECK(fa.decisions[0].executor == eid(4));
  CHECK(fa.decisions[1].executor == eid(9));
  for (const auto& d : fa.decisions) CHECK(d.hints.empty());
  CHECK(fa.index_lookups == 0);

  const auto fca = select(config(DispatchPolicy::FirstCacheAvailable), q, slots, idx);
  REQUIRE(fca.decisions.size() == 2);
  CHECK(fca.decisions[0].executor == eid(4));
  CHECK(fca.decisions[0].hints == std::vector<Hint>{{oid(0), {eid(9)}}, {oid(1), {}}});
  CHECK(fca.decisions[1].executor == eid(9));
}

TEST_CASE("empty idle set yields no decisions") {
  LocationIndex idx(0.0);
  const std::vector<Task> tasks{make_task(0, {0})};
  const auto q = queue_of(tasks);
  const std::vector<ExecutorSlot> slots{{eid(1), false}};
  for (auto p : {DispatchPolicy::FirstAvailable, DispatchPolicy::FirstCacheAvailable,
                 DispatchPolicy::MaxComputeUtil}) {
    CHECK(select(config(p), q, slots, idx).decisions.empty());
  }
  CHECK(select(config(DispatchPolicy::FirstAvailable), q, {}, idx).decisions.empty());
}

TEST_CASE("duplicate executor ids are a logic error") {
  LocationIndex idx(0.0);
  const std::vector<Task> tasks{make_task(0, {0})};
  const auto q = queue_of(tasks);
  const std::vector<ExecutorSlot> slots{{eid(1), true}, {eid(1), false}};
  CHECK_THROWS_AS(select(config(DispatchPolicy::FirstAvailable), q, slots, idx), std::logic_error);
}

TEST_CASE("policy contracts against brute force on random small states") {
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    CAPTURE(seed);
    const auto s = oracle::random_dispatch_state(seed);
    for (auto policy : {DispatchPolicy::FirstAvailable, DispatchPolicy::FirstCacheAvailable,
                        DispatchPolicy::MaxCacheHit, DispatchPolicy::MaxComputeUtil}) {
      CAPTURE(to_string(policy));
      const auto bad = oracle::dispatch_violations(s, config(policy));
      const std::string first = bad.empty() ? "" : bad.front();
      CHECK_MESSAGE(bad.empty(), first);
    }
  }
}

TEST_CASE("window matching keeps dominance and conservation") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    CAPTURE(seed);
    auto c = config(DispatchPolicy::MaxComputeUtil);
    c.window_match = true;
    const auto bad = oracle::dispatch_violations(oracle::random_dispatch_state(seed), c);
    const std::string first = bad.empty() ? "" : bad.front();
    CHECK_MESSAGE(bad.empty(), first);
  }
}

TEST_CASE("first-available matches round-robin over idle executors on a 1000-task trace") {
  Rng rng(1234);
  std::vector<Task> tasks;
  for (std::uint32_t t = 0; t < 1000; ++t) tasks.push_back(make_task(t, {static_cast<std::uint32_t>(rng.below(50))}));

  // Drive the real selector and an oracle with identical completion events.
  LocationIndex idx(0.0);
  const std::uint32_t executors = 7;
  std::vector<bool> busy(executors, false), oracle_busy(executors, false);
  std::multiset<std::pair<std::uint32_t, std::uint32_t>> got, want;
  std::size_t head = 0, oracle_head = 0;
  while (head < tasks.size()) {
    std::vector<ExecutorSlot> slots;
    for (std::uint32_t e = 0; e < executors; ++e) slots.push_back({eid(e), !busy[e]});
    std::vector<QueuedTask> q;
    for (std::size_t i = head; i < tasks.size(); ++i) q.push_back({&tasks[i], 0});
    const auto r = select(config(DispatchPolicy::FirstAvailable), q, slots, idx);
    for (const auto& d : r.decisions) {
      got.insert({to_underlying(d.task), to_underlying(d.executor)});
      busy[to_underlying(d.executor)] = true;
    }
    head += r.decisions.size();

    for (std::uint32_t e = 0; e < executors && oracle_head < tasks.size(); ++e) {
      if (oracle_busy[e]) continue;
      want.insert({to_underlying(tasks[oracle_head++].id), e});
      oracle_busy[e] = true;
    }
    // Random subset of executors completes.
    for (std::uint32_t e = 0; e < executors; ++e) {
      if (rng.below(2) == 0) busy[e] = oracle_busy[e] = false;
    }
  }
  CHECK(got.size() == 1000);
  CHECK(got == want);
}

TEST_CASE("wait queue is FIFO and conserves tasks") {
  std::vector<Task> tasks;
  for (std::uint32_t t = 0; t < 100; ++t) tasks.push_back(make_task(t, {t}));
  WaitQueue q;
  CHECK(q.enqueue(tasks[0]) == 1);
  for (std::size_t i = 1; i < 100; ++i) CHECK(q.enqueue(tasks[i]) == i + 1);
  const auto view = q.peek(100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(view[i].task == &tasks[i]);

  // Interleaved dispatch: enqueued = dispatched + queued at every step.
  Rng rng(8);
  std::size_t enqueued = 100, dispatched = 0;
  std::vector<Task> more;
  more.reserve(500);
  for (int step = 0; step < 500; ++step) {
    if (rng.below(2) == 0) {
      more.push_back(make_task(1000 + static_cast<std::uint32_t>(step), {0}));
      q.enqueue(more.back());
      ++enqueued;
    } else if (!q.empty()) {
      std::vector<std::size_t> pos{0};
      if (q.size() > 3 && rng.below(2) == 0) pos.push_back(2);
      q.remove(pos);
      dispatched += pos.size();
    }
    CHECK(enqueued == dispatched + q.size());
  }
}

TEST_CASE("queue removal keeps relative order and counts deferrals") {
  std::vector<Task> tasks;
  for (std::uint32_t t = 0; t < 6; ++t) tasks.push_back(make_task(t, {t}));
  WaitQueue q;
  for (const auto& t : tasks) q.enqueue(t);
  const std::vector<std::size_t> deferred{0, 2};
  q.note_deferred(deferred);
  q.remove({3, 1});
  const auto view = q.peek(10);
  REQUIRE(view.size() == 4);
  CHECK(view[0].task == &tasks[0]);
  CHECK(view[0].deferrals == 1);
  CHECK(view[1].task == &tasks[2]);
  CHECK(view[1].deferrals == 1);
  CHECK(view[2].task == &tasks[4]);
  CHECK(view[3].task == &tasks[5]);
  CHECK(view[3].deferrals == 0);
}

TEST_CASE("concurrent producers") {
  std::vector<Task> tasks;
  for (std::uint32_t t = 0; t < 4000; ++t) tasks.push_back(make_task(t, {0}));
  WaitQueue q;
  std::vector<std::thread> producers;
  for (int p = 0; p < 4; ++p) {
    producers.emplace_back([&, p] {
      for (int i = 0; i < 1000; ++i) q.enqueue(tasks[static_cast<std::size_t>(p * 1000 + i)]);
    });
  }
  for (auto& t : producers) t.join();
  CHECK(q.size() == 4000);
}

TEST_CASE("byte-weighted scoring prefers the larger cached object") {
  LocationIndex idx(0.0);
  idx.add(eid(1), oid(0));
  idx.add(eid(2), oid(1));
  const std::vector<Task> tasks{make_task(0, {0, 1})};
  const auto q = queue_of(tasks);
  const std::vector<ExecutorSlot> slots{{eid(1), true}, {eid(2), true}};
  auto c = config(DispatchPolicy::MaxComputeUtil);
  CHECK(select(c, q, slots, idx).decisions[0].executor == eid(1));  // tie: lowest id
  c.byte_weighted = true;
  const ObjectWeight weight = [](ObjectId o) { return o == ObjectId{1} ? 10.0 : 1.0; };
  CHECK(select(c, q, slots, idx, weight).decisions[0].executor == eid(2));
}

TEST_CASE("policy names round-trip") {
  for (auto p : {DispatchPolicy::FirstAvailable, DispatchPolicy::FirstCacheAvailable, DispatchPolicy::MaxCacheHit,
                 DispatchPolicy::MaxComputeUtil}) {
    CHECK(parse_dispatch_policy(to_string(p)) == p);
  }
  CHECK_FALSE(parse_dispatch_policy("round-robin"));
  CHECK_FALSE(uses_caches(DispatchPolicy::FirstAvailable));
  CHECK(uses_caches(DispatchPolicy::MaxCacheHit));
}
