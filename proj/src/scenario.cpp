#include "diffusion/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "diffusion/errors.hpp"

namespace diffusion {

const std::vector<std::string_view>& scenario_keys() {
  static const std::vector<std::string_view> kKeys = {
      "schema",
      "name",
      "seed",
      "workload.trace",
      "workload.objects",
      "workload.locality",
      "workload.table2_row",
      "workload.size",
      "workload.transfer_size",
      "workload.working_size",
      "workload.compute_time",
      "workload.arrival_rate",
      "executors",
      "provisioner.min",
      "provisioner.max",
      "provisioner.trigger",
      "provisioner.mode",
      "provisioner.startup_delay",
      "provisioner.idle_timeout",
      "provisioner.release_cache",
      "provisioner.tick",
      "cache.capacity",
      "cache.policy",
      "cache.seed",
      "dispatch.policy",
      "dispatch.max_defer",
      "dispatch.byte_weighted",
      "dispatch.lookahead",
      "dispatch.window_match",
      "resources.persistent_read_cap",
      "resources.persistent_rw_cap",
      "resources.io_servers",
      "resources.local_disk_bw",
      "resources.local_disk_rw_bw",
      "resources.peer_net_bw",
      "resources.transfer_latency",
      "resources.metadata_op_time",
      "io_mode",
      "index.update_interval",
      "warm_caches",
      "wrapper",
      "metrics.bucket_width",
  };
  return kKeys;
}

bool is_scenario_key(std::string_view key) {
  const auto& keys = scenario_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Typed access to the entries with line-precise errors.
class Reader {
 public:
  explicit Reader(const ScenarioFile& file) : file_(file) {}

  bool has(const std::string& key) const { return file_.entries.contains(key); }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    auto it = file_.entries.find(key);
    const std::size_t line = it == file_.entries.end() ? 0 : it->second.line;
    const std::string where = it != file_.entries.end() && line == 0 ? " (override)" : "";
    throw ParseError(file_.origin, line, key + where + ": " + what);
  }

  const std::string* raw(const std::string& key) const {
    auto it = file_.entries.find(key);
    return it == file_.entries.end() ? nullptr : &it->second.value;
  }

  template <typename T, typename Parse>
  T get(const std::string& key, T fallback, Parse parse, const char* expected) const {
    const std::string* v = raw(key);
    if (!v) return fallback;
    auto parsed = parse(*v);
    if (!parsed) fail(key, "expected " + std::string(expected) + ", got '" + *v + "'");
    return static_cast<T>(*parsed);
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    return get<std::uint64_t>(key, fallback, parse_count, "a non-negative integer");
  }
  double real(const std::string& key, double fallback) const {
    return get<double>(key, fallback, parse_real, "a number");
  }
  Bytes bytes(const std::string& key, Bytes fallback) const {
    return get<Bytes>(key, fallback, parse_bytes, "a size such as 6MB");
  }
  BitsPerSecond bandwidth(const std::string& key, BitsPerSecond fallback) const {
    return get<BitsPerSecond>(key, fallback, parse_bandwidth, "a positive bandwidth such as 3.4Gb/s");
  }
  SimTime duration(const std::string& key, SimTime fallback) const {
    return get<SimTime>(key, fallback, parse_duration, "a duration such as 250ms");
  }
  bool flag(const std::string& key, bool fallback) const {
    return get<bool>(
        key, fallback,
        [](std::string_view s) -> std::optional<bool> {
          if (s == "true" || s == "yes" || s == "1") return true;
          if (s == "false" || s == "no" || s == "0") return false;
          return std::nullopt;
        },
        "true or false");
  }

 private:
  const ScenarioFile& file_;
};

Workload build_workload(const Reader& r, const ScenarioFile& file, std::uint64_t seed) {
  if (const std::string* trace = r.raw("workload.trace")) {
    for (const char* key : {"workload.objects", "workload.locality", "workload.table2_row", "workload.size"}) {
      if (r.has(key)) r.fail(key, "cannot be combined with workload.trace");
    }
    std::filesystem::path p(*trace);
    if (p.is_relative()) p = file.base_dir / p;
    std::ifstream in(p);
    if (!in) r.fail("workload.trace", "cannot open " + p.string());
    return read_trace(in, p.string());
  }

  double locality = r.real("workload.locality", 1.0);
  std::optional<std::uint64_t> objects;
  if (r.has("workload.table2_row")) {
    const auto row = r.count("workload.table2_row", 1);
    if (row < 1 || row > table2_presets().size()) r.fail("workload.table2_row", "must be between 1 and 9");
    if (r.has("workload.locality")) r.fail("workload.locality", "cannot be combined with workload.table2_row");
    const auto& preset = table2_presets()[row - 1];
    locality = preset.locality;
    objects = preset.num_files;
  }
  if (const std::string* v = r.raw("workload.objects")) {
    if (*v == "table2") {
      const auto& rows = table2_presets();
      auto it = std::find_if(rows.begin(), rows.end(), [&](const Table2Row& row) { return row.locality == locality; });
      if (it == rows.end()) r.fail("workload.objects", "'table2' needs a locality listed in the workload table");
      objects = it->num_files;
    } else {
      objects = r.count("workload.objects", 0);
    }
  }
  if (!objects) objects = 1000;
  if (*objects == 0) r.fail("workload.objects", "must be >= 1");
  if (!(locality >= 1.0)) r.fail("workload.locality", "must be >= 1");

  SizePreset size = SizePreset::gz();
  const std::string kind = r.raw("workload.size") ? *r.raw("workload.size") : "gz";
  if (kind == "gz") {
    size = SizePreset::gz();
  } else if (kind == "fit") {
    size = SizePreset::fit();
  } else if (kind == "custom") {
    if (!r.has("workload.transfer_size")) r.fail("workload.size", "custom sizes need workload.transfer_size");
    const Bytes transfer = r.bytes("workload.transfer_size", 0);
    size = SizePreset::custom(transfer, r.bytes("workload.working_size", transfer));
  } else {
    r.fail("workload.size", "expected gz, fit or custom");
  }
  if (kind != "custom") {
    for (const char* key : {"workload.transfer_size", "workload.working_size"}) {
      if (r.has(key)) r.fail(key, "only valid with workload.size = custom");
    }
  }
  if (size.transfer_size == 0) r.fail("workload.transfer_size", "must be >= 1 byte");
  if (size.working_size == 0) r.fail("workload.working_size", "must be >= 1 byte");

  const SimTime compute = r.duration("workload.compute_time", 0.0);
  return generate_locality_workload(*objects, locality, size, seed, compute);
}

}  // namespace

ScenarioFile parse_scenario(std::string_view text, std::string origin, std::filesystem::path base_dir) {
  ScenarioFile file;
  file.origin = std::move(origin);
  file.base_dir = std::move(base_dir);

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool saw_schema = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string content = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ParseError(file.origin, line_no, "expected 'key = value'");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) throw ParseError(file.origin, line_no, "missing key before '='");
    if (value.empty()) throw ParseError(file.origin, line_no, key + ": missing value");
    if (!saw_schema) {
      if (key != "schema") {
        throw ParseError(file.origin, line_no, "first setting must be 'schema = " + std::string(kScenarioSchema) + "'");
      }
      if (value != kScenarioSchema) throw ParseError(file.origin, line_no, "unsupported scenario schema '" + value + "'");
      saw_schema = true;
    }
    if (!is_scenario_key(key)) throw ParseError(file.origin, line_no, "unknown key '" + key + "'");
    auto [it, inserted] = file.entries.emplace(key, ScenarioFile::Entry{value, line_no});
    if (!inserted) {
      throw ParseError(file.origin, line_no,
                       "duplicate key '" + key + "' (first set on line " + std::to_string(it->second.line) + ")");
    }
  }
  if (!saw_schema) throw ParseError(file.origin, 0, "empty scenario (missing schema header)");
  return file;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open scenario file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.string(), path.parent_path());
}

void set_override(ScenarioFile& file, std::string_view key, std::string value) {
  if (!is_scenario_key(key) || key == "schema") {
    throw ParseError(file.origin, 0, "unknown scenario parameter '" + std::string(key) + "'");
  }
  file.entries[std::string(key)] = {std::move(value), 0};
}

Scenario build_scenario(const ScenarioFile& file) {
  const Reader r(file);
  Scenario s;
  s.name = r.raw("name") ? *r.raw("name") : std::filesystem::path(file.origin).stem().string();
  s.seed = r.count("seed", 0);

  try {
    s.workload = build_workload(r, file, s.seed);
  } catch (const ConfigError& e) {
    throw ParseError(file.origin, 0, std::string("workload: ") + e.what());
  }
  if (const std::string* rate = r.raw("workload.arrival_rate")) {
    s.arrival_rate = r.real("workload.arrival_rate", 0.0);
    if (!(s.arrival_rate >= 0)) r.fail("workload.arrival_rate", "must be >= 0, got '" + *rate + "'");
  }

  s.executors = r.count("executors", 128);
  if (r.has("provisioner.max")) {
    ProvisionerConfig p;
    p.min_executors = r.count("provisioner.min", 0);
    p.max_executors = r.count("provisioner.max", p.max_executors);
    p.trigger_queue_length = r.count("provisioner.trigger", p.trigger_queue_length);
    p.allocation_mode = r.get<AllocationMode>("provisioner.mode", p.allocation_mode, parse_allocation_mode,
                                              "one-at-a-time, all-at-once or exponential");
    p.startup_delay = r.duration("provisioner.startup_delay", p.startup_delay);
    p.idle_timeout = r.duration("provisioner.idle_timeout", p.idle_timeout);
    p.release_cache_policy = r.get<ReleaseCachePolicy>("provisioner.release_cache", p.release_cache_policy,
                                                       parse_release_cache_policy, "discard or retain-until-reuse");
    p.tick_interval = r.duration("provisioner.tick", p.tick_interval);
    try {
      p.validate();
    } catch (const ConfigError& e) {
      r.fail("provisioner.max", e.what());
    }
    s.provisioner = p;
  } else {
    for (const auto& key : scenario_keys()) {
      if (key.starts_with("provisioner.") && r.has(std::string(key))) {
        r.fail(std::string(key), "dynamic provisioning needs provisioner.max");
      }
    }
  }

  s.cache.capacity = r.bytes("cache.capacity", s.cache.capacity);
  if (s.cache.capacity == 0) r.fail("cache.capacity", "must be > 0");
  s.cache.policy = r.get<EvictionPolicy>("cache.policy", s.cache.policy, parse_eviction_policy,
                                         "random, fifo, lru or lfu");
  s.cache.seed = r.count("cache.seed", s.seed);

  s.dispatch.policy = r.get<DispatchPolicy>(
      "dispatch.policy", s.dispatch.policy, parse_dispatch_policy,
      "first-available, first-cache-available, max-cache-hit or max-compute-util");
  if (r.has("dispatch.max_defer")) s.dispatch.max_defer = static_cast<std::uint32_t>(r.count("dispatch.max_defer", 0));
  s.dispatch.byte_weighted = r.flag("dispatch.byte_weighted", false);
  s.dispatch.lookahead = r.count("dispatch.lookahead", s.dispatch.lookahead);
  if (s.dispatch.lookahead == 0) r.fail("dispatch.lookahead", "must be >= 1");
  s.dispatch.window_match = r.flag("dispatch.window_match", false);
  if (s.dispatch.window_match && s.dispatch.policy != DispatchPolicy::MaxComputeUtil) {
    r.fail("dispatch.window_match", "only applies to max-compute-util");
  }

  auto& res = s.resources;
  res.persistent_read_cap = r.bandwidth("resources.persistent_read_cap", res.persistent_read_cap);
  res.persistent_rw_cap = r.bandwidth("resources.persistent_rw_cap", res.persistent_rw_cap);
  res.persistent_io_servers = r.count("resources.io_servers", res.persistent_io_servers);
  if (res.persistent_io_servers == 0) r.fail("resources.io_servers", "must be >= 1");
  res.local_disk_bw = r.bandwidth("resources.local_disk_bw", res.local_disk_bw);
  res.local_disk_rw_bw = r.bandwidth("resources.local_disk_rw_bw", res.local_disk_rw_bw);
  res.peer_net_bw = r.bandwidth("resources.peer_net_bw", res.peer_net_bw);
  res.per_transfer_latency = r.duration("resources.transfer_latency", res.per_transfer_latency);
  res.metadata_op_time = r.duration("resources.metadata_op_time", res.metadata_op_time);

  s.io_mode = r.get<IoMode>("io_mode", s.io_mode, parse_io_mode, "read or read-write");
  s.update_interval = r.duration("index.update_interval", s.update_interval);
  s.warm_caches = r.flag("warm_caches", false);
  s.wrapper = r.flag("wrapper", false);
  s.bucket_width = r.duration("metrics.bucket_width", s.bucket_width);
  if (!(s.bucket_width > 0)) r.fail("metrics.bucket_width", "must be > 0");

  if (!s.provisioner && s.executors == 0) r.fail("executors", "must be >= 1");
  s.validate();
  return s;
}

}  // namespace diffusion
