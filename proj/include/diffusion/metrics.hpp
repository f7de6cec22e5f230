#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diffusion/units.hpp"

namespace diffusion {

inline constexpr int kReportSchemaVersion = 1;

enum class Tier { Local, Peer, Persistent };

std::string_view to_string(Tier tier);

// Bytes moved per tier in fixed-width buckets of simulated time.
struct ThroughputSeries {
  SimTime bucket_width = 1.0;
  std::vector<double> local;
  std::vector<double> peer;
  std::vector<double> persistent;

  const std::vector<double>& of(Tier t) const;
  std::vector<double>& of(Tier t);
};

struct PoolSample {
  SimTime time;
  std::size_t pool;
  std::size_t queue;

  friend bool operator==(const PoolSample&, const PoolSample&) = default;
};

struct DecisionStats {
  std::uint64_t decisions = 0;
  std::uint64_t index_lookups = 0;
  // Wall-clock cost of the scheduling rounds. Machine dependent, so it is
  // left out of exported reports unless timing output is requested.
  double wall_ns_mean = 0;
  double wall_ns_max = 0;
};

struct MetricsReport {
  int schema_version = kReportSchemaVersion;
  std::string scenario;
  std::string policy;
  // Peak number of executors in the pool.
  std::size_t executors = 0;
  double locality = 1.0;

  std::uint64_t tasks_completed = 0;
  SimTime makespan = 0;

  std::uint64_t cache_hits_local = 0;
  std::uint64_t cache_hits_peer = 0;
  std::uint64_t cache_misses = 0;

  Bytes bytes_local = 0;
  Bytes bytes_peer = 0;
  Bytes bytes_persistent = 0;

  std::uint64_t evictions = 0;
  // Peer hints found stale at fetch time (each triggers a corrective remove).
  std::uint64_t stale_hints = 0;

  // Mean dispatch-to-completion time of a task.
  SimTime mean_task_time = 0;
  // makespan * executors / tasks_completed.
  SimTime time_per_task_per_cpu = 0;

  DecisionStats decisions;
  ThroughputSeries throughput;
  std::vector<PoolSample> pool_series;

  std::uint64_t accesses() const { return cache_hits_local + cache_hits_peer + cache_misses; }
  Bytes bytes(Tier t) const;
};

// (local + peer hits) / accesses; absent when nothing was accessed.
std::optional<double> hit_ratio(const MetricsReport& report);

struct DataMovement {
  double persistent_mb;
  double peer_mb;
  double local_mb;
};

// Per-task megabytes moved from each tier; absent when no task completed.
std::optional<DataMovement> per_task_data_movement(const MetricsReport& report);

// Mean aggregate rate of a tier over the makespan, bits/s.
double mean_throughput(const MetricsReport& report, Tier tier);
// Highest per-bucket aggregate rate of a tier, bits/s.
double peak_throughput(const MetricsReport& report, Tier tier);

enum class ReportFormat { Csv, Json };

std::optional<ReportFormat> parse_report_format(std::string_view text);

struct ExportOptions {
  bool include_timing = false;
  bool include_series = true;  // JSON only
};

// Scalar fields in a fixed order. CSV is one header line plus one row.
std::string export_report(const MetricsReport& report, ReportFormat format, const ExportOptions& options = {});
std::string csv_header(const ExportOptions& options = {});
std::string csv_row(const MetricsReport& report, const ExportOptions& options = {});

// Inverse of export_report for the scalar fields (and series, for JSON).
// Throws ParseError on malformed documents or a schema mismatch.
MetricsReport parse_report(std::string_view text, ReportFormat format);

// Time series as CSV: time, per-tier Gb/s per bucket, then pool samples.
std::string series_csv(const MetricsReport& report);

}  // namespace diffusion
