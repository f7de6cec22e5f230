#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diffusion/cache.hpp"
#include "diffusion/ids.hpp"
#include "diffusion/index.hpp"
#include "diffusion/metrics.hpp"
#include "diffusion/provisioner.hpp"
#include "diffusion/resources.hpp"
#include "diffusion/scheduler.hpp"
#include "diffusion/workload.hpp"

namespace diffusion {

// Everything needed for one reproducible simulation run.
struct Scenario {
  std::string name = "scenario";
  Workload workload;
  // Static pool size; ignored when a provisioner is configured.
  std::size_t executors = 128;
  std::optional<ProvisionerConfig> provisioner;
  CacheConfig cache;
  SchedulerConfig dispatch;
  ResourceModel resources;
  IoMode io_mode = IoMode::Read;
  // 0 keeps the location index synchronous with the caches.
  SimTime update_interval = 1.0;
  // Pre-populate caches (round-robin, in first-reference order) before
  // time zero. Static pools only.
  bool warm_caches = false;
  // Run every task through a sandbox wrapper that costs one serialized
  // metadata operation on the persistent store.
  bool wrapper = false;
  // Tasks per second; 0 submits the whole workload at time zero.
  double arrival_rate = 0;
  SimTime bucket_width = 1.0;
  std::uint64_t seed = 0;

  // Throws ScenarioError describing the first problem found.
  void validate() const;
};

enum class EventKind : std::uint8_t {
  TaskArrival,
  TransferComplete,
  TransferStart,
  MetadataComplete,
  ComputeComplete,
  IndexFlush,
  ProvisionTick,
  ExecutorReady,
};

std::string_view to_string(EventKind kind);

// One entry of the optional event log.
struct LogRecord {
  enum class Type : std::uint8_t {
    Dispatch,          // executor, task, overlap, hint count
    Access,            // one required object acquired: tier, bytes, duration
    Transfer,          // a transfer finished: tier, bytes, source (peer)
    Insert,            // object admitted to an executor cache
    Evict,             // object evicted from an executor cache
    CorrectiveRemove,  // stale peer hint: source no longer holds the object
    TaskComplete,
    IndexFlush,        // bytes = number of records applied
    Allocate,
    Release,
    Ready,
  };

  SimTime time = 0;
  Type type = Type::Dispatch;
  TaskId task{};
  ExecutorId executor{};
  ObjectId object{};
  ExecutorId source{};
  Tier tier = Tier::Local;
  Bytes bytes = 0;
  double value = 0;  // overlap for Dispatch, duration for Access
  std::size_t count = 0;  // hint count for Dispatch
};

std::string_view to_string(LogRecord::Type type);
// Newline-delimited JSON rendering of one record.
std::string to_ndjson(const LogRecord& record);

using EventSink = std::function<void(const LogRecord&)>;

struct RunOptions {
  EventSink sink;
  // Compare the index with the union of executor caches after every
  // event (synchronous index) or every flush (batched index). Costly.
  bool verify_coherence = false;
};

struct RunDiagnostics {
  std::uint64_t events = 0;
  std::uint64_t coherence_checks = 0;
  std::uint64_t coherence_violations = 0;
  // Largest number of concurrently active persistent-store transfers.
  std::size_t max_persistent_transfers = 0;
};

// Runs the scenario to completion. Throws ScenarioError before simulating
// if the scenario is invalid or unsatisfiable.
MetricsReport run(const Scenario& scenario, const RunOptions& options = {}, RunDiagnostics* diagnostics = nullptr);

// Where one required object comes from, decided against ground truth at
// the moment the executor reaches it.
struct SourceChoice {
  Tier tier;
  std::optional<ExecutorId> peer;
  // Hinted peers that turned out not to hold the object.
  std::vector<ExecutorId> stale;
};

// Local cache first, then hinted peers in order (skipping self and stale
// ones), then persistent storage. `peer_holds` reports ground truth.
SourceChoice choose_source(ExecutorId self, bool cached_locally, std::span<const ExecutorId> hinted,
                           const std::function<bool(ExecutorId)>& peer_holds);

}  // namespace diffusion
