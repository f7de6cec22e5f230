#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "diffusion/ids.hpp"
#include "diffusion/units.hpp"

namespace diffusion {

enum class UpdateKind : std::uint8_t { Add, Remove };

struct UpdateRecord {
  UpdateKind kind;
  ObjectId object;

  friend bool operator==(const UpdateRecord&, const UpdateRecord&) = default;
};

// Dispatcher-side map from object to the executors caching it.
//
// Executors do not write into the map directly: they queue add/remove
// records which are drained per executor, in order, by apply_updates(). The
// map is therefore loosely coherent with the caches. With an update interval
// of zero the index is synchronous and record() applies immediately.
class LocationIndex {
 public:
  explicit LocationIndex(SimTime update_interval = 1.0);

  // Current, possibly stale, location set in ascending executor order.
  // Empty means the object must come from persistent storage.
  std::span<const ExecutorId> locate(ObjectId id) const;

  void record(ExecutorId executor, UpdateRecord update);
  std::size_t apply_updates(ExecutorId executor);
  std::size_t apply_all();

  // Drops the executor's queue and every location naming it.
  void deregister(ExecutorId executor);

  // Immediate mutation, bypassing the queues.
  void add(ExecutorId executor, ObjectId id);
  void remove(ExecutorId executor, ObjectId id);

  std::size_t pending(ExecutorId executor) const;
  std::size_t pending_total() const;
  // Number of objects with at least one location.
  std::size_t entry_count() const { return locations_.size(); }
  std::size_t location_count() const { return location_count_; }
  SimTime update_interval() const { return update_interval_; }
  bool synchronous() const { return update_interval_ <= 0; }

  // Approximate heap footprint of the location map.
  std::size_t approx_memory_bytes() const;

  // Ordered snapshot, for comparisons against ground truth.
  std::map<ObjectId, std::vector<ExecutorId>> snapshot() const;

 private:
  void apply(ExecutorId executor, const UpdateRecord& update);

  SimTime update_interval_;
  std::unordered_map<ObjectId, std::vector<ExecutorId>> locations_;
  std::unordered_map<ExecutorId, std::deque<UpdateRecord>> pending_;
  std::size_t location_count_ = 0;
};

// LocationIndex behind a reader/writer lock, for sharing one index between
// many reader threads and a single writer.
class SharedLocationIndex {
 public:
  explicit SharedLocationIndex(SimTime update_interval = 0.0) : index_(update_interval) {}

  std::size_t locate_count(ObjectId id) const {
    std::shared_lock lock(mutex_);
    return index_.locate(id).size();
  }
  std::vector<ExecutorId> locate(ObjectId id) const {
    std::shared_lock lock(mutex_);
    auto s = index_.locate(id);
    return {s.begin(), s.end()};
  }
  void add(ExecutorId executor, ObjectId id) {
    std::unique_lock lock(mutex_);
    index_.add(executor, id);
  }
  void remove(ExecutorId executor, ObjectId id) {
    std::unique_lock lock(mutex_);
    index_.remove(executor, id);
  }

 private:
  mutable std::shared_mutex mutex_;
  LocationIndex index_;
};

// Analytical model of a distributed replica location service: lookup latency
// grows with the log of the node count, fitted through two measured points.
struct PrlsModel {
  double latency_at_1_ms = 0.5;
  double latency_at_15_ms = 3.0;

  double a() const { return latency_at_1_ms; }
  double b() const;
};

// Milliseconds per lookup at the given node count. Throws DomainError for 0.
double prls_latency(const PrlsModel& model, std::uint64_t nodes);
// Aggregate lookups per second across all nodes.
double prls_throughput(const PrlsModel& model, std::uint64_t nodes);
// Smallest node count whose aggregate throughput reaches the target.
std::uint64_t prls_crossover(const PrlsModel& model, double target_lookups_per_sec);

struct MicrobenchConfig {
  std::size_t num_entries = 1'000'000;
  std::size_t num_lookups = 1'000'000;
  std::size_t num_inserts = 100'000;
  // 0 runs single-threaded; N > 0 adds a contended phase with N reader
  // threads and one writer over a SharedLocationIndex.
  std::size_t readers = 0;
  std::size_t executors = 128;
  std::uint64_t seed = 1;
};

struct MicrobenchResult {
  std::size_t entries = 0;
  std::size_t inserts = 0;
  std::size_t lookups = 0;
  double insert_ns_mean = 0;
  double lookup_ns_mean = 0;
  std::optional<double> lookups_per_sec;
  double bytes_per_entry = 0;
  std::size_t readers = 0;
  std::optional<double> contended_lookups_per_sec;
  std::optional<double> contended_writes_per_sec;
};

MicrobenchResult index_microbench(const MicrobenchConfig& config);

std::string microbench_json(const MicrobenchResult& result, const PrlsModel& model, double crossover_target);
std::string microbench_csv_header();
std::string microbench_csv_row(const MicrobenchResult& result);

}  // namespace diffusion
