#pragma once

// Brute-force reference models shared by the unit suites and the acceptance
// binary. Checks report violations as
// strings instead of asserting, so callers decide how to surface them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffusion/cache.hpp"
#include "diffusion/index.hpp"
#include "diffusion/rng.hpp"
#include "diffusion/scheduler.hpp"

namespace oracle {

using namespace diffusion;

// Entries live in a flat vector; the victim is found by scanning for the
// minimum of the policy's ordering.
struct Cache {
  struct Item {
    ObjectId id;
    Bytes size;
    std::uint64_t inserted;
    std::uint64_t touched;
    std::uint64_t uses;
  };

  EvictionPolicy policy;
  Bytes capacity;
  std::vector<Item> items;
  std::uint64_t clock = 0;

  Bytes used() const {
    Bytes u = 0;
    for (const auto& i : items) u += i.size;
    return u;
  }

  bool lookup(ObjectId id) {
    for (auto& i : items) {
      if (i.id == id) {
        i.touched = ++clock;
        ++i.uses;
        return true;
      }
    }
    return false;
  }

  bool worse(const Item& a, const Item& b) const {
    switch (policy) {
      case EvictionPolicy::Fifo: return a.inserted < b.inserted;
      case EvictionPolicy::Lru: return a.touched < b.touched;
      case EvictionPolicy::Lfu: return a.uses != b.uses ? a.uses < b.uses : a.touched < b.touched;
      case EvictionPolicy::Random: break;
    }
    throw std::logic_error("oracle has no deterministic random policy");
  }

  std::vector<ObjectId> insert(ObjectId id, Bytes size) {
    std::vector<ObjectId> out;
    while (used() + size > capacity) {
      std::size_t victim = 0;
      for (std::size_t k = 1; k < items.size(); ++k) {
        if (worse(items[k], items[victim])) victim = k;
      }
      out.push_back(items[victim].id);
      items.erase(items.begin() + static_cast<std::ptrdiff_t>(victim));
    }
    ++clock;
    items.push_back({id, size, clock, clock, 1});
    return out;
  }
};

// Random trace over at most `universe` objects: look up, insert on miss.
// Returns a description of the first disagreement with the oracle.
inline std::optional<std::string> replay_cache(EvictionPolicy policy, std::uint64_t seed, std::uint32_t universe,
                                               bool mixed_sizes, int steps = 2000) {
  Rng rng(seed);
  const Bytes capacity = 5 * kMB;
  CacheState cache({capacity, policy, seed});
  Cache model{policy, capacity, {}, 0};
  for (int step = 0; step < steps; ++step) {
    const ObjectId id{static_cast<std::uint32_t>(rng.below(universe))};
    const Bytes size = mixed_sizes ? (1 + to_underlying(id) % 3) * kMB : kMB;
    const std::string at = "step " + std::to_string(step) + ": ";
    const bool hit = cache.lookup(id) == LookupResult::Hit;
    if (hit != model.lookup(id)) return at + "hit/miss differs";
    if (!hit && cache.insert(id, size) != model.insert(id, size)) return at + "eviction sequence differs";
    if (cache.used() != model.used()) return at + "occupancy differs";
    if (cache.used() > capacity) return at + "over capacity";
  }
  return std::nullopt;
}

inline Task make_task(std::uint32_t id, const std::vector<std::uint32_t>& objects) {
  Task t{TaskId{id}, {}, 0};
  for (auto o : objects) t.required_objects.push_back(ObjectId{o});
  return t;
}

struct DispatchState {
  std::vector<Task> tasks;
  std::vector<ExecutorSlot> slots;
  LocationIndex index{0.0};
  std::map<ObjectId, std::set<ExecutorId>> holders;

  std::vector<QueuedTask> queue() const {
    std::vector<QueuedTask> q;
    for (const auto& t : tasks) q.push_back({&t, 0});
    return q;
  }

  // Required objects of t that e holds, straight from the holder map.
  std::size_t overlap(const Task& t, ExecutorId e) const {
    std::size_t n = 0;
    for (ObjectId o : t.required_objects) {
      auto it = holders.find(o);
      if (it != holders.end() && it->second.contains(e)) ++n;
    }
    return n;
  }
};

// Up to 20 objects, a few executors with random cache contents and idleness.
inline DispatchState random_dispatch_state(std::uint64_t seed) {
  Rng rng(seed);
  DispatchState s;
  const auto objects = 2 + static_cast<std::uint32_t>(rng.below(19));
  const auto executors = 1 + static_cast<std::uint32_t>(rng.below(8));
  for (std::uint32_t e = 0; e < executors; ++e) {
    // Sparse, shuffled ids exercise the id-based tie-breaking.
    s.slots.push_back({ExecutorId{e * 3 + 1}, rng.below(2) == 0});
  }
  Rng order(seed + 1000);
  order.shuffle(s.slots);
  for (const auto& slot : s.slots) {
    for (std::uint32_t o = 0; o < objects; ++o) {
      if (rng.below(3) == 0) {
        s.index.add(slot.id, ObjectId{o});
        s.holders[ObjectId{o}].insert(slot.id);
      }
    }
  }
  const auto n_tasks = 1 + static_cast<std::uint32_t>(rng.below(12));
  for (std::uint32_t t = 0; t < n_tasks; ++t) {
    std::set<std::uint32_t> req;
    const auto k = 1 + rng.below(3);
    while (req.size() < std::min<std::uint64_t>(k, objects)) req.insert(static_cast<std::uint32_t>(rng.below(objects)));
    s.tasks.push_back(make_task(t, {req.begin(), req.end()}));
  }
  return s;
}

// Walks the queue in order and checks every decision and deferral of one
// select() round against the policy contract.
inline std::vector<std::string> dispatch_violations(const DispatchState& s, const SchedulerConfig& config) {
  std::vector<std::string> bad;
  auto fail = [&](std::size_t pos, const std::string& what) {
    bad.push_back("position " + std::to_string(pos) + ": " + what);
  };
  const auto q = s.queue();
  const auto r = select(config, q, s.slots, s.index);
  if (select(config, q, s.slots, s.index).decisions != r.decisions) bad.push_back("non-deterministic");

  std::set<ExecutorId> idle;
  for (const auto& slot : s.slots) {
    if (slot.idle) idle.insert(slot.id);
  }
  const DispatchPolicy policy = config.policy;

  if (config.window_match) {
    // Dominance and conservation; queue order is not preserved.
    std::set<ExecutorId> free = idle;
    std::set<std::size_t> positions;
    if (r.decisions.size() != std::min(free.size(), q.size())) bad.push_back("not work conserving");
    if (!r.deferred.empty()) bad.push_back("window matching deferred a task");
    for (const auto& d : r.decisions) {
      if (!free.contains(d.executor)) {
        fail(d.queue_position, "executor not free");
        continue;
      }
      if (!positions.insert(d.queue_position).second) fail(d.queue_position, "task dispatched twice");
      const Task& task = s.tasks[d.queue_position];
      for (ExecutorId e : free) {
        if (s.overlap(task, d.executor) < s.overlap(task, e)) fail(d.queue_position, "dominated executor chosen");
      }
      free.erase(d.executor);
    }
    return bad;
  }

  std::set<ExecutorId> free = idle;
  const std::set<std::size_t> deferred(r.deferred.begin(), r.deferred.end());
  std::size_t d = 0;
  for (std::size_t pos = 0; pos < q.size(); ++pos) {
    const Task& task = s.tasks[pos];
    if (deferred.contains(pos)) {
      if (policy != DispatchPolicy::MaxCacheHit) fail(pos, "only max-cache-hit may defer");
      // Deferred only when every best executor is busy or already taken.
      std::size_t top = 0;
      for (const auto& slot : s.slots) top = std::max(top, s.overlap(task, slot.id));
      if (top == 0) fail(pos, "deferred a task nobody caches");
      for (const auto& slot : s.slots) {
        if (s.overlap(task, slot.id) == top && free.contains(slot.id)) fail(pos, "deferred while a best executor is free");
      }
      continue;
    }
    if (d == r.decisions.size() || r.decisions[d].queue_position != pos) {
      // Undispatched, undeferred tasks only remain once every idle executor is taken.
      if (!free.empty()) fail(pos, "skipped while executors are free");
      break;
    }
    const auto& dec = r.decisions[d++];
    if (!free.contains(dec.executor)) {
      fail(pos, "executor not free");
      continue;
    }
    if (dec.task != task.id) fail(pos, "task id mismatch");
    const auto chosen = s.overlap(task, dec.executor);
    if (policy != DispatchPolicy::FirstAvailable && dec.overlap != static_cast<double>(chosen)) {
      fail(pos, "reported overlap differs from ground truth");
    }
    switch (policy) {
      case DispatchPolicy::FirstAvailable:
      case DispatchPolicy::FirstCacheAvailable:
        if (dec.executor != *free.begin()) fail(pos, "not the lowest free executor");
        break;
      case DispatchPolicy::MaxComputeUtil:
        for (ExecutorId e : free) {
          if (chosen < s.overlap(task, e)) fail(pos, "dominated executor chosen");
          if (s.overlap(task, e) == chosen && e < dec.executor) fail(pos, "tie not broken by lowest id");
        }
        break;
      case DispatchPolicy::MaxCacheHit:
        for (const auto& slot : s.slots) {
          if (chosen < s.overlap(task, slot.id)) fail(pos, "not a best executor overall");
        }
        break;
    }

    // Hints: none for first-available; otherwise exactly the index holders.
    if (policy == DispatchPolicy::FirstAvailable) {
      if (!dec.hints.empty()) fail(pos, "first-available produced hints");
    } else if (dec.hints.size() != task.required_objects.size()) {
      fail(pos, "hint count mismatch");
    } else {
      for (std::size_t k = 0; k < dec.hints.size(); ++k) {
        const auto it = s.holders.find(dec.hints[k].object);
        const std::vector<ExecutorId> want = it == s.holders.end()
                                                 ? std::vector<ExecutorId>{}
                                                 : std::vector<ExecutorId>(it->second.begin(), it->second.end());
        if (dec.hints[k].object != task.required_objects[k] || dec.hints[k].sources != want) {
          fail(pos, "hint sources differ from the holders");
        }
      }
    }
    free.erase(dec.executor);
  }
  if (d != r.decisions.size()) bad.push_back("decisions out of queue order");
  // Work conservation for the policies that never defer.
  if (policy != DispatchPolicy::MaxCacheHit && r.decisions.size() != std::min(idle.size(), q.size())) {
    bad.push_back("not work conserving");
  }
  return bad;
}

// Smallest n with n = ceil(target * latency(n) / 1000), iterating upward
// from one node.
inline std::uint64_t crossover_fixed_point(const PrlsModel& m, double target) {
  std::uint64_t n = 1;
  for (int i = 0; i < 10'000; ++i) {
    const auto next = static_cast<std::uint64_t>(std::ceil(target * prls_latency(m, n) / 1000.0));
    const auto candidate = std::max<std::uint64_t>(next, 1);
    if (candidate == n) return n;
    n = candidate;
  }
  throw std::runtime_error("fixed point did not converge");
}

inline std::uint64_t crossover_linear_scan(const PrlsModel& m, double target) {
  for (std::uint64_t n = 1;; ++n) {
    if (static_cast<double>(n) * 1000.0 / (m.a() + m.b() * std::log(static_cast<double>(n))) >= target) return n;
  }
}

}  // namespace oracle
