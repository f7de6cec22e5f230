#include "diffusion/metrics.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "diffusion/errors.hpp"
#include "diffusion/workload.hpp"

namespace diffusion {

std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::Local: return "local";
    case Tier::Peer: return "peer";
    case Tier::Persistent: return "persistent";
  }
  return "?";
}

const std::vector<double>& ThroughputSeries::of(Tier t) const {
  return t == Tier::Local ? local : t == Tier::Peer ? peer : persistent;
}

std::vector<double>& ThroughputSeries::of(Tier t) {
  return t == Tier::Local ? local : t == Tier::Peer ? peer : persistent;
}

Bytes MetricsReport::bytes(Tier t) const {
  return t == Tier::Local ? bytes_local : t == Tier::Peer ? bytes_peer : bytes_persistent;
}

std::optional<double> hit_ratio(const MetricsReport& r) {
  if (r.accesses() == 0) return std::nullopt;
  return static_cast<double>(r.cache_hits_local + r.cache_hits_peer) / static_cast<double>(r.accesses());
}

std::optional<DataMovement> per_task_data_movement(const MetricsReport& r) {
  if (r.tasks_completed == 0) return std::nullopt;
  const double n = static_cast<double>(r.tasks_completed);
  return DataMovement{to_mb(static_cast<double>(r.bytes_persistent)) / n, to_mb(static_cast<double>(r.bytes_peer)) / n,
                      to_mb(static_cast<double>(r.bytes_local)) / n};
}

double mean_throughput(const MetricsReport& r, Tier tier) {
  if (r.makespan <= 0) return 0;
  return static_cast<double>(r.bytes(tier)) * 8.0 / r.makespan;
}

double peak_throughput(const MetricsReport& r, Tier tier) {
  const auto& buckets = r.throughput.of(tier);
  const double w = r.throughput.bucket_width;
  double peak = 0;
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    // The last bucket may be cut short by the end of the run.
    const double start = static_cast<double>(i) * w;
    const double width = std::min(w, r.makespan - start);
    if (width <= 0) continue;
    peak = std::max(peak, buckets[i] * 8.0 / width);
  }
  return peak;
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "json") return ReportFormat::Json;
  return std::nullopt;
}

namespace {

using Value = std::variant<std::string, std::uint64_t, double>;

struct Field {
  const char* name;
  std::function<Value(const MetricsReport&)> get;
  // Null for derived fields, which are recomputed rather than parsed.
  std::function<void(MetricsReport&, const Value&)> set;
  bool timing = false;
};

template <typename T>
T as(const Value& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return std::get<std::string>(v);
  } else if constexpr (std::is_floating_point_v<T>) {
    return std::holds_alternative<double>(v) ? std::get<double>(v) : static_cast<double>(std::get<std::uint64_t>(v));
  } else {
    return static_cast<T>(std::get<std::uint64_t>(v));
  }
}

#define DIFFUSION_FIELD(name, member, type)                                    \
  Field {                                                                      \
    name, [](const MetricsReport& r) -> Value { return type(r.member); },      \
        [](MetricsReport& r, const Value& v) { r.member = as<decltype(r.member)>(v); } \
  }

double opt_or_zero(std::optional<double> v) { return v.value_or(0.0); }

const std::vector<Field>& fields() {
  using U = std::uint64_t;
  using S = std::string;
  static const std::vector<Field> kFields = {
      {"schema_version", [](const MetricsReport& r) -> Value { return U(r.schema_version); },
       [](MetricsReport& r, const Value& v) { r.schema_version = static_cast<int>(as<U>(v)); }},
      DIFFUSION_FIELD("scenario", scenario, S),
      DIFFUSION_FIELD("policy", policy, S),
      DIFFUSION_FIELD("executors", executors, U),
      DIFFUSION_FIELD("locality", locality, double),
      DIFFUSION_FIELD("tasks_completed", tasks_completed, U),
      DIFFUSION_FIELD("makespan_s", makespan, double),
      {"accesses", [](const MetricsReport& r) -> Value { return U(r.accesses()); }, nullptr},
      DIFFUSION_FIELD("cache_hits_local", cache_hits_local, U),
      DIFFUSION_FIELD("cache_hits_peer", cache_hits_peer, U),
      DIFFUSION_FIELD("cache_misses", cache_misses, U),
      {"hit_ratio", [](const MetricsReport& r) -> Value { return opt_or_zero(hit_ratio(r)); }, nullptr},
      {"ideal_hit_ratio", [](const MetricsReport& r) -> Value { return ideal_cache_hit_ratio(std::max(1.0, r.locality)); },
       nullptr},
      DIFFUSION_FIELD("bytes_local", bytes_local, U),
      DIFFUSION_FIELD("bytes_peer", bytes_peer, U),
      DIFFUSION_FIELD("bytes_persistent", bytes_persistent, U),
      {"persistent_mb_per_task",
       [](const MetricsReport& r) -> Value {
         auto m = per_task_data_movement(r);
         return m ? m->persistent_mb : 0.0;
       },
       nullptr},
      {"peer_mb_per_task",
       [](const MetricsReport& r) -> Value {
         auto m = per_task_data_movement(r);
         return m ? m->peer_mb : 0.0;
       },
       nullptr},
      {"local_mb_per_task",
       [](const MetricsReport& r) -> Value {
         auto m = per_task_data_movement(r);
         return m ? m->local_mb : 0.0;
       },
       nullptr},
      {"local_gbps", [](const MetricsReport& r) -> Value { return mean_throughput(r, Tier::Local) / kGbps; }, nullptr},
      {"peer_gbps", [](const MetricsReport& r) -> Value { return mean_throughput(r, Tier::Peer) / kGbps; }, nullptr},
      {"persistent_gbps", [](const MetricsReport& r) -> Value { return mean_throughput(r, Tier::Persistent) / kGbps; },
       nullptr},
      {"peak_persistent_gbps",
       [](const MetricsReport& r) -> Value { return peak_throughput(r, Tier::Persistent) / kGbps; }, nullptr},
      DIFFUSION_FIELD("evictions", evictions, U),
      DIFFUSION_FIELD("stale_hints", stale_hints, U),
      DIFFUSION_FIELD("mean_task_time_s", mean_task_time, double),
      DIFFUSION_FIELD("time_per_task_per_cpu_s", time_per_task_per_cpu, double),
      DIFFUSION_FIELD("decisions", decisions.decisions, U),
      DIFFUSION_FIELD("index_lookups", decisions.index_lookups, U),
      DIFFUSION_FIELD("bucket_width_s", throughput.bucket_width, double),
      Field{"decision_wall_ns_mean", [](const MetricsReport& r) -> Value { return r.decisions.wall_ns_mean; },
            [](MetricsReport& r, const Value& v) { r.decisions.wall_ns_mean = as<double>(v); }, true},
      Field{"decision_wall_ns_max", [](const MetricsReport& r) -> Value { return r.decisions.wall_ns_max; },
            [](MetricsReport& r, const Value& v) { r.decisions.wall_ns_max = as<double>(v); }, true},
  };
  return kFields;
}

#undef DIFFUSION_FIELD

std::string to_text(const Value& v) {
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  if (auto* u = std::get_if<std::uint64_t>(&v)) return std::to_string(*u);
  return format_real(std::get<double>(v));
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

bool wanted(const Field& f, const ExportOptions& options) { return !f.timing || options.include_timing; }

Value from_text(const Value& shape, const std::string& text, std::string_view field) {
  if (std::holds_alternative<std::string>(shape)) return text;
  if (std::holds_alternative<std::uint64_t>(shape)) {
    if (auto v = parse_count(text)) return *v;
  } else if (auto v = parse_real(text)) {
    return *v;
  }
  throw ParseError("<report>", 0, "invalid value '" + text + "' for field " + std::string(field));
}

void check_schema(const MetricsReport& r) {
  if (r.schema_version != kReportSchemaVersion) {
    throw ParseError("<report>", 0, "unsupported report schema version " + std::to_string(r.schema_version));
  }
}

}  // namespace

std::string csv_header(const ExportOptions& options) {
  std::string out;
  for (const auto& f : fields()) {
    if (!wanted(f, options)) continue;
    if (!out.empty()) out += ',';
    out += f.name;
  }
  return out + "\n";
}

std::string csv_row(const MetricsReport& report, const ExportOptions& options) {
  std::string out;
  bool first = true;
  for (const auto& f : fields()) {
    if (!wanted(f, options)) continue;
    if (!first) out += ',';
    first = false;
    out += csv_escape(to_text(f.get(report)));
  }
  return out + "\n";
}

std::string export_report(const MetricsReport& report, ReportFormat format, const ExportOptions& options) {
  if (format == ReportFormat::Csv) return csv_header(options) + csv_row(report, options);

  nlohmann::ordered_json j;
  for (const auto& f : fields()) {
    if (!wanted(f, options)) continue;
    std::visit([&](const auto& v) { j[f.name] = v; }, f.get(report));
  }
  if (options.include_series) {
    const auto& t = report.throughput;
    j["throughput_series"] = {{"bucket_width_s", t.bucket_width},
                              {"local_bytes", t.local},
                              {"peer_bytes", t.peer},
                              {"persistent_bytes", t.persistent}};
    auto pool = nlohmann::ordered_json::array();
    for (const auto& s : report.pool_series) pool.push_back({s.time, s.pool, s.queue});
    j["pool_size_series"] = std::move(pool);
  }
  return j.dump(2) + "\n";
}

MetricsReport parse_report(std::string_view text, ReportFormat format) {
  MetricsReport r;
  if (format == ReportFormat::Csv) {
    std::istringstream in{std::string(text)};
    std::string header, row;
    if (!std::getline(in, header) || !std::getline(in, row)) {
      throw ParseError("<report>", 0, "expected a header line and one data row");
    }
    const auto names = csv_split(header);
    const auto values = csv_split(row);
    if (names.size() != values.size()) throw ParseError("<report>", 2, "column count mismatch");
    for (std::size_t i = 0; i < names.size(); ++i) {
      auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) { return names[i] == f.name; });
      if (it == fields().end()) throw ParseError("<report>", 1, "unknown column " + names[i]);
      if (it->set) it->set(r, from_text(it->get(r), values[i], it->name));
    }
    check_schema(r);
    return r;
  }

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("<report>", 0, e.what());
  }
  try {
    for (const auto& f : fields()) {
      if (!f.set || !j.contains(f.name)) continue;
      const auto& v = j.at(f.name);
      const Value shape = f.get(r);
      if (std::holds_alternative<std::string>(shape)) {
        f.set(r, v.get<std::string>());
      } else if (std::holds_alternative<std::uint64_t>(shape)) {
        f.set(r, v.get<std::uint64_t>());
      } else {
        f.set(r, v.get<double>());
      }
    }
    if (j.contains("throughput_series")) {
      const auto& t = j.at("throughput_series");
      r.throughput.bucket_width = t.at("bucket_width_s").get<double>();
      r.throughput.local = t.at("local_bytes").get<std::vector<double>>();
      r.throughput.peer = t.at("peer_bytes").get<std::vector<double>>();
      r.throughput.persistent = t.at("persistent_bytes").get<std::vector<double>>();
    }
    if (j.contains("pool_size_series")) {
      for (const auto& s : j.at("pool_size_series")) {
        r.pool_series.push_back({s.at(0).get<double>(), s.at(1).get<std::size_t>(), s.at(2).get<std::size_t>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("<report>", 0, e.what());
  }
  if (!j.contains("schema_version")) throw ParseError("<report>", 0, "missing schema_version");
  check_schema(r);
  return r;
}

std::string series_csv(const MetricsReport& r) {
  std::ostringstream out;
  const auto& t = r.throughput;
  out << "time_s,local_gbps,peer_gbps,persistent_gbps\n";
  const std::size_t n = std::max({t.local.size(), t.peer.size(), t.persistent.size()});
  auto rate = [&](const std::vector<double>& v, std::size_t i) {
    return i < v.size() ? v[i] * 8.0 / t.bucket_width / kGbps : 0.0;
  };
  for (std::size_t i = 0; i < n; ++i) {
    out << format_real(static_cast<double>(i) * t.bucket_width) << ',' << format_real(rate(t.local, i)) << ','
        << format_real(rate(t.peer, i)) << ',' << format_real(rate(t.persistent, i)) << '\n';
  }
  out << "\ntime_s,pool,queue\n";
  for (const auto& s : r.pool_series) out << format_real(s.time) << ',' << s.pool << ',' << s.queue << '\n';
  return out.str();
}

}  // namespace diffusion
