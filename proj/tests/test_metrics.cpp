#include <doctest.h>

#include <sstream>
#include <string>

#include "diffusion/errors.hpp"
#include "diffusion/metrics.hpp"

using namespace diffusion;

namespace {

MetricsReport sample() {
  MetricsReport r;
  r.scenario = "demo, \"quoted\"";
  r.policy = "max-cache-hit";
  r.executors = 4;
  r.locality = 2.5;
  r.tasks_completed = 10;
  r.makespan = 2.5;
  r.cache_hits_local = 3;
  r.cache_hits_peer = 2;
  r.cache_misses = 5;
  r.bytes_local = 60 * kMB;
  r.bytes_peer = 4 * kMB;
  r.bytes_persistent = 10 * kMB;
  r.evictions = 7;
  r.stale_hints = 1;
  r.mean_task_time = 0.125;
  r.time_per_task_per_cpu = 1.0;
  r.decisions.decisions = 10;
  r.decisions.index_lookups = 30;
  r.decisions.wall_ns_mean = 1234.5;
  r.decisions.wall_ns_max = 9999;
  r.throughput.bucket_width = 1.0;
  r.throughput.local = {20e6, 20e6, 20e6};
  r.throughput.peer = {4e6, 0, 0};
  r.throughput.persistent = {5e6, 5e6, 0};
  r.pool_series = {{0, 4, 10}, {1, 4, 3}, {2, 4, 0}};
  return r;
}

void check_scalars(const MetricsReport& a, const MetricsReport& b) {
  CHECK(a.scenario == b.scenario);
  CHECK(a.policy == b.policy);
  CHECK(a.executors == b.executors);
  CHECK(a.locality == b.locality);
  CHECK(a.tasks_completed == b.tasks_completed);
  CHECK(a.makespan == b.makespan);
  CHECK(a.cache_hits_local == b.cache_hits_local);
  CHECK(a.cache_hits_peer == b.cache_hits_peer);
  CHECK(a.cache_misses == b.cache_misses);
  CHECK(a.bytes_local == b.bytes_local);
  CHECK(a.bytes_peer == b.bytes_peer);
  CHECK(a.bytes_persistent == b.bytes_persistent);
  CHECK(a.evictions == b.evictions);
  CHECK(a.stale_hints == b.stale_hints);
  CHECK(a.mean_task_time == b.mean_task_time);
  CHECK(a.time_per_task_per_cpu == b.time_per_task_per_cpu);
  CHECK(a.decisions.decisions == b.decisions.decisions);
  CHECK(a.decisions.index_lookups == b.decisions.index_lookups);
  CHECK(a.throughput.bucket_width == b.throughput.bucket_width);
}

}  // namespace

TEST_CASE("derived quantities") {
  const auto r = sample();
  REQUIRE(hit_ratio(r).has_value());
  CHECK(*hit_ratio(r) == doctest::Approx(0.5));
  const auto m = per_task_data_movement(r);
  REQUIRE(m.has_value());
  CHECK(m->persistent_mb == doctest::Approx(1.0));
  CHECK(m->peer_mb == doctest::Approx(0.4));
  CHECK(m->local_mb == doctest::Approx(6.0));
  CHECK(mean_throughput(r, Tier::Local) == doctest::Approx(60e6 * 8 / 2.5));
  // The third bucket is half covered by the run: 20MB in 0.5s.
  CHECK(peak_throughput(r, Tier::Local) == doctest::Approx(320e6));
  CHECK(peak_throughput(r, Tier::Persistent) == doctest::Approx(40e6));
}

TEST_CASE("empty report") {
  MetricsReport r;
  CHECK_FALSE(hit_ratio(r).has_value());
  CHECK_FALSE(per_task_data_movement(r).has_value());
  CHECK(mean_throughput(r, Tier::Persistent) == 0);
  CHECK(peak_throughput(r, Tier::Persistent) == 0);
  const auto csv = export_report(r, ReportFormat::Csv);
  const auto back = parse_report(csv, ReportFormat::Csv);
  check_scalars(r, back);
}

TEST_CASE("csv round trip") {
  const auto r = sample();
  const auto text = export_report(r, ReportFormat::Csv);
  CHECK(text.rfind(csv_header(), 0) == 0);
  CHECK(text.find("decision_wall_ns") == std::string::npos);
  CHECK(text.find("\"demo, \"\"quoted\"\"\"") != std::string::npos);
  const auto back = parse_report(text, ReportFormat::Csv);
  check_scalars(r, back);
  CHECK(back.decisions.wall_ns_mean == 0);
  // Series are not part of the CSV form; the peak column derives from them.
  CHECK(back.throughput.persistent.empty());
  auto restored = back;
  restored.throughput = r.throughput;
  CHECK(export_report(restored, ReportFormat::Csv) == text);
}

TEST_CASE("timing columns are opt-in") {
  ExportOptions opts;
  opts.include_timing = true;
  const auto r = sample();
  const auto text = export_report(r, ReportFormat::Csv, opts);
  CHECK(text.find("decision_wall_ns_mean") != std::string::npos);
  const auto back = parse_report(text, ReportFormat::Csv);
  CHECK(back.decisions.wall_ns_mean == r.decisions.wall_ns_mean);
  CHECK(back.decisions.wall_ns_max == r.decisions.wall_ns_max);
}

TEST_CASE("json round trip keeps the series") {
  const auto r = sample();
  const auto text = export_report(r, ReportFormat::Json);
  const auto back = parse_report(text, ReportFormat::Json);
  check_scalars(r, back);
  CHECK(back.throughput.local == r.throughput.local);
  CHECK(back.throughput.peer == r.throughput.peer);
  CHECK(back.throughput.persistent == r.throughput.persistent);
  CHECK(back.pool_series == r.pool_series);
  CHECK(export_report(back, ReportFormat::Json) == text);

  ExportOptions scalars_only;
  scalars_only.include_series = false;
  CHECK(export_report(r, ReportFormat::Json, scalars_only).find("throughput_series") == std::string::npos);
}

TEST_CASE("malformed reports") {
  const auto good = export_report(sample(), ReportFormat::Csv);
  CHECK_THROWS_AS(parse_report("", ReportFormat::Csv), ParseError);
  CHECK_THROWS_AS(parse_report(csv_header(), ReportFormat::Csv), ParseError);
  CHECK_THROWS_AS(parse_report("bogus\n1\n", ReportFormat::Csv), ParseError);
  CHECK_THROWS_AS(parse_report("schema_version,executors\n1\n", ReportFormat::Csv), ParseError);
  CHECK_THROWS_AS(parse_report("schema_version,executors\n1,many\n", ReportFormat::Csv), ParseError);
  CHECK_THROWS_AS(parse_report("{not json", ReportFormat::Json), ParseError);
  CHECK_THROWS_AS(parse_report("{}", ReportFormat::Json), ParseError);

  std::string future = good;
  future.replace(future.find('\n') + 1, 1, "2");
  try {
    parse_report(future, ReportFormat::Csv);
    FAIL("expected a schema error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("schema version 2") != std::string::npos);
  }
}

TEST_CASE("series csv") {
  const auto text = series_csv(sample());
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "time_s,local_gbps,peer_gbps,persistent_gbps");
  std::getline(in, line);
  CHECK(line == "0,0.16,0.032,0.04");
  std::getline(in, line);
  CHECK(line == "1,0.16,0,0.04");
  std::getline(in, line);
  CHECK(line == "2,0.16,0,0");
  std::getline(in, line);
  CHECK(line.empty());
  std::getline(in, line);
  CHECK(line == "time_s,pool,queue");
  std::getline(in, line);
  CHECK(line == "0,4,10");
}

TEST_CASE("report format names") {
  CHECK(parse_report_format("csv") == ReportFormat::Csv);
  CHECK(parse_report_format("json") == ReportFormat::Json);
  CHECK_FALSE(parse_report_format("xml").has_value());
}
