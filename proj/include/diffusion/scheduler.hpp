#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "diffusion/ids.hpp"
#include "diffusion/index.hpp"
#include "diffusion/workload.hpp"

namespace diffusion {

enum class DispatchPolicy { FirstAvailable, FirstCacheAvailable, MaxCacheHit, MaxComputeUtil };

std::string_view to_string(DispatchPolicy policy);
std::optional<DispatchPolicy> parse_dispatch_policy(std::string_view text);

// True when the policy lets executors cache and share data. first-available
// reads everything from persistent storage on every access.
constexpr bool uses_caches(DispatchPolicy p) { return p != DispatchPolicy::FirstAvailable; }

struct SchedulerConfig {
  DispatchPolicy policy = DispatchPolicy::MaxComputeUtil;
  // max-cache-hit only: after this many deferrals a task is placed as
  // max-compute-util would place it. Unset means defer indefinitely.
  std::optional<std::uint32_t> max_defer;
  // Score candidates by cached bytes instead of cached object count.
  bool byte_weighted = false;
  // How far past the head of the queue one round may look when tasks are
  // deferred (max-cache-hit) or matched to caches (window_match).
  std::size_t lookahead = 1024;
  // max-compute-util only: before filling idle executors in queue order,
  // hand each one a task from the lookahead window whose data it caches.
  bool window_match = false;
};

struct QueuedTask {
  const Task* task = nullptr;
  std::uint32_t deferrals = 0;
};

// Per-object source list; an empty list means persistent storage.
struct Hint {
  ObjectId object;
  std::vector<ExecutorId> sources;

  friend bool operator==(const Hint&, const Hint&) = default;
};

struct DispatchDecision {
  TaskId task{};
  ExecutorId executor{};
  // Position of the task in the queue view passed to select().
  std::size_t queue_position = 0;
  // Required objects the chosen executor holds according to the index.
  double overlap = 0;
  std::vector<Hint> hints;
  // Set when a max-cache-hit task exceeded max_defer and was placed anyway.
  bool forced = false;

  friend bool operator==(const DispatchDecision&, const DispatchDecision&) = default;
};

struct ExecutorSlot {
  ExecutorId id;
  bool idle;
};

struct SelectResult {
  std::vector<DispatchDecision> decisions;
  // Queue positions of tasks examined but held back this round.
  std::vector<std::size_t> deferred;
  std::size_t index_lookups = 0;
};

// Size lookup for byte-weighted scoring. May be empty when unused.
using ObjectWeight = std::function<double(ObjectId)>;

// One scheduling round. Assigns tasks from the head of `queue` to executors
// according to the policy. Executors are identified by id; ties go to the
// lowest id, then to the earlier task. Pure: identical inputs give
// identical output. Throws std::logic_error on duplicate executor ids.
SelectResult select(const SchedulerConfig& config, std::span<const QueuedTask> queue,
                    std::span<const ExecutorSlot> executors, const LocationIndex& index,
                    const ObjectWeight& weight = {});

// FIFO wait queue. Producers on different threads may enqueue concurrently.
class WaitQueue {
 public:
  // Returns the queue length after the append.
  std::size_t enqueue(const Task& task);
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  // Copy of the first n entries.
  std::vector<QueuedTask> peek(std::size_t n) const;
  // Removes the entries at the given positions (relative to the head).
  void remove(std::vector<std::size_t> positions);
  void note_deferred(std::span<const std::size_t> positions);

 private:
  mutable std::mutex mutex_;
  std::deque<QueuedTask> tasks_;
};

}  // namespace diffusion
