#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "diffusion/index.hpp"
#include "diffusion/rng.hpp"

namespace diffusion {
namespace {

using Clock = std::chrono::steady_clock;

double ns_since(Clock::time_point start) {
  return std::chrono::duration<double, std::nano>(Clock::now() - start).count();
}

ExecutorId executor_for(std::size_t i, std::size_t executors) {
  return ExecutorId{static_cast<std::uint32_t>(i % executors)};
}

void contended_phase(const MicrobenchConfig& config, MicrobenchResult& result) {
  SharedLocationIndex shared;
  for (std::size_t i = 0; i < config.num_entries; ++i) {
    shared.add(executor_for(i, config.executors), ObjectId{static_cast<std::uint32_t>(i)});
  }

  const std::size_t per_reader = std::max<std::size_t>(config.num_lookups / config.readers, 1);
  std::atomic<bool> readers_done{false};
  std::atomic<std::size_t> writes{0};
  std::vector<std::thread> threads;

  const auto start = Clock::now();
  for (std::size_t r = 0; r < config.readers; ++r) {
    threads.emplace_back([&, r] {
      Rng rng(config.seed + 1 + r);
      std::size_t sink = 0;
      for (std::size_t i = 0; i < per_reader; ++i) {
        sink += shared.locate_count(ObjectId{static_cast<std::uint32_t>(rng.below(config.num_entries))});
      }
      if (sink == std::size_t(-1)) std::abort();
    });
  }
  std::thread writer([&] {
    Rng rng(config.seed);
    std::size_t n = 0;
    while (!readers_done.load(std::memory_order_relaxed)) {
      const auto id = ObjectId{static_cast<std::uint32_t>(rng.below(config.num_entries))};
      const auto e = ExecutorId{static_cast<std::uint32_t>(config.executors + n % 8)};
      shared.add(e, id);
      shared.remove(e, id);
      n += 2;
    }
    writes = n;
  });
  for (auto& t : threads) t.join();
  const double elapsed_ns = ns_since(start);
  readers_done = true;
  writer.join();

  const double seconds = elapsed_ns / 1e9;
  result.contended_lookups_per_sec = static_cast<double>(per_reader * config.readers) / seconds;
  result.contended_writes_per_sec = static_cast<double>(writes.load()) / seconds;
}

}  // namespace

MicrobenchResult index_microbench(const MicrobenchConfig& config) {
  MicrobenchResult result;
  result.entries = std::max<std::size_t>(config.num_entries, 1);
  result.inserts = config.num_inserts;
  result.lookups = config.num_lookups;
  result.readers = config.readers;
  const std::size_t executors = std::max<std::size_t>(config.executors, 1);

  LocationIndex index(0.0);
  for (std::size_t i = 0; i < result.entries; ++i) {
    index.add(executor_for(i, executors), ObjectId{static_cast<std::uint32_t>(i)});
  }
  result.bytes_per_entry = static_cast<double>(index.approx_memory_bytes()) / static_cast<double>(result.entries);

  // Inserts use fresh keys above the populated range.
  if (config.num_inserts > 0) {
    const auto start = Clock::now();
    for (std::size_t i = 0; i < config.num_inserts; ++i) {
      index.add(executor_for(i, executors), ObjectId{static_cast<std::uint32_t>(result.entries + i)});
    }
    result.insert_ns_mean = ns_since(start) / static_cast<double>(config.num_inserts);
  }

  if (config.num_lookups > 0) {
    Rng rng(config.seed);
    std::vector<ObjectId> keys(config.num_lookups);
    for (auto& k : keys) k = ObjectId{static_cast<std::uint32_t>(rng.below(result.entries))};
    std::size_t sink = 0;
    const auto start = Clock::now();
    for (ObjectId k : keys) sink += index.locate(k).size();
    const double elapsed = ns_since(start);
    if (sink != config.num_lookups) std::abort();  // every key is populated
    result.lookup_ns_mean = elapsed / static_cast<double>(config.num_lookups);
    result.lookups_per_sec = 1e9 / result.lookup_ns_mean;
  }

  if (config.readers > 0 && config.num_lookups > 0) {
    MicrobenchConfig c = config;
    c.num_entries = result.entries;
    c.executors = executors;
    contended_phase(c, result);
  }
  return result;
}

std::string microbench_json(const MicrobenchResult& r, const PrlsModel& model, double crossover_target) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["entries"] = r.entries;
  j["inserts"] = r.inserts;
  j["lookups"] = r.lookups;
  j["insert_ns_mean"] = r.insert_ns_mean;
  j["lookup_ns_mean"] = r.lookup_ns_mean;
  j["lookups_per_sec"] = r.lookups_per_sec ? nlohmann::ordered_json(*r.lookups_per_sec) : nullptr;
  j["bytes_per_entry"] = r.bytes_per_entry;
  j["readers"] = r.readers;
  j["contended_lookups_per_sec"] =
      r.contended_lookups_per_sec ? nlohmann::ordered_json(*r.contended_lookups_per_sec) : nullptr;
  j["contended_writes_per_sec"] =
      r.contended_writes_per_sec ? nlohmann::ordered_json(*r.contended_writes_per_sec) : nullptr;
  j["reference"] = {{"insert_us_range", {1.0, 3.0}},
                    {"lookup_us_range", {0.25, 1.0}},
                    {"lookups_per_sec_upper_bound", 4.18e6},
                    {"bytes_per_entry", 200}};
  j["prls"] = {{"latency_ms_1", prls_latency(model, 1)},
               {"latency_ms_15", prls_latency(model, 15)},
               {"latency_ms_1M", prls_latency(model, 1'000'000)},
               {"crossover_target_lookups_per_sec", crossover_target},
               {"crossover_nodes", prls_crossover(model, crossover_target)}};
  return j.dump(2) + "\n";
}

std::string microbench_csv_header() {
  return "entries,inserts,lookups,insert_ns_mean,lookup_ns_mean,lookups_per_sec,bytes_per_entry,readers,"
         "contended_lookups_per_sec\n";
}

std::string microbench_csv_row(const MicrobenchResult& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  std::ostringstream out;
  out << r.entries << ',' << r.inserts << ',' << r.lookups << ',' << format_real(r.insert_ns_mean) << ','
      << format_real(r.lookup_ns_mean) << ',' << opt(r.lookups_per_sec) << ',' << format_real(r.bytes_per_entry)
      << ',' << r.readers << ',' << opt(r.contended_lookups_per_sec) << '\n';
  return out.str();
}

}  // namespace diffusion
