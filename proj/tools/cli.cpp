#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <CLI11.hpp>

#include "diffusion/engine.hpp"
#include "diffusion/errors.hpp"
#include "diffusion/index.hpp"
#include "diffusion/metrics.hpp"
#include "diffusion/scenario.hpp"
#include "diffusion/units.hpp"

#ifndef DIFFUSION_PRESET_DIR_DEFAULT
#define DIFFUSION_PRESET_DIR_DEFAULT "presets"
#endif

namespace fs = std::filesystem;

namespace diffusion::cli {

namespace {

// Input problems detected before anything is simulated.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kPrlsTarget = 4.18e6;
constexpr const char* kScenarioExt = ".scn";

// A file that only appears under its final name once commit() succeeds.
class PendingFile {
 public:
  explicit PendingFile(fs::path target) : target_(std::move(target)) {
    if (target_.has_parent_path()) fs::create_directories(target_.parent_path());
    temp_ = target_;
    temp_ += ".tmp." + std::to_string(::getpid());
    stream_.open(temp_, std::ios::binary | std::ios::trunc);
    if (!stream_) throw std::runtime_error("cannot write " + temp_.string());
  }
  PendingFile(const PendingFile&) = delete;
  PendingFile& operator=(const PendingFile&) = delete;
  ~PendingFile() {
    if (committed_) return;
    stream_.close();
    std::error_code ec;
    fs::remove(temp_, ec);
  }

  std::ostream& stream() { return stream_; }

  void commit() {
    stream_.close();
    if (!stream_) throw std::runtime_error("write failed: " + temp_.string());
    fs::rename(temp_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path temp_;
  std::ofstream stream_;
  bool committed_ = false;
};

std::string extension(ReportFormat f) { return f == ReportFormat::Json ? ".json" : ".csv"; }

fs::path output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? fs::path(env) : fs::path(".");
}

// "-" means stdout (returned as nullopt).
std::optional<fs::path> output_path(const std::string& requested, const std::string& default_name) {
  if (requested == "-") return std::nullopt;
  if (!requested.empty()) return fs::path(requested);
  return output_dir() / default_name;
}

void emit(const std::optional<fs::path>& path, const std::string& content, std::ostream& out) {
  if (path) {
    write_file_atomic(*path, content);
  } else {
    out << content;
  }
}

ScenarioFile load_input(const std::string& arg) {
  auto path = resolve_scenario(arg);
  if (!path) throw UsageError("no scenario file or preset named '" + arg + "'");
  return load_scenario(*path);
}

void apply_overrides(ScenarioFile& file, const std::vector<std::string>& sets, const std::optional<std::uint64_t>& seed) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + kv + "'");
    set_override(file, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed) set_override(file, "seed", std::to_string(*seed));
}

std::string mb(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

std::string summary(const MetricsReport& r) {
  std::ostringstream s;
  s << r.scenario << ": tasks=" << r.tasks_completed << " makespan=" << format_real(r.makespan) << "s";
  const auto hr = hit_ratio(r);
  s << " hit_ratio=" << (hr ? mb(*hr) : std::string("n/a"));
  if (const auto m = per_task_data_movement(r)) {
    s << " MB/task persistent=" << mb(m->persistent_mb) << " peer=" << mb(m->peer_mb) << " local=" << mb(m->local_mb);
  }
  return s.str();
}

ReportFormat format_of(const std::string& text) {
  auto f = parse_report_format(text);
  if (!f) throw UsageError("unknown format '" + text + "' (expected csv or json)");
  return *f;
}

// ---------------------------------------------------------------- run

struct RunArgs {
  std::string scenario;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  std::string output;
  std::string event_log;
  std::string series;
  bool timing = false;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  const ReportFormat format = format_of(a.format);
  ScenarioFile file = load_input(a.scenario);
  apply_overrides(file, a.sets, a.seed);
  const Scenario scenario = build_scenario(file);

  const auto report_path = output_path(a.output, scenario.name + extension(format));
  std::optional<PendingFile> log;
  RunOptions options;
  if (!a.event_log.empty()) {
    log.emplace(a.event_log);
    options.sink = [&log](const LogRecord& rec) { log->stream() << to_ndjson(rec) << '\n'; };
  }

  MetricsReport report;
  try {
    report = run(scenario, options);
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    err << "error: simulation failed: " << e.what() << '\n';
    return kRuntime;
  }

  ExportOptions ex;
  ex.include_timing = a.timing;
  emit(report_path, export_report(report, format, ex), out);
  if (!a.series.empty()) write_file_atomic(a.series, series_csv(report));
  if (log) log->commit();

  (report_path ? out : err) << summary(report) << (report_path ? " -> " + report_path->string() : "") << '\n';
  return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  std::string scenario;
  std::string axis;
  std::vector<std::string> values;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  std::string output;
  std::string reports_dir;
  unsigned jobs = 1;
};

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') c = '_';
  }
  return s;
}

int cmd_sweep(SweepArgs a, std::ostream& out, std::ostream& err) {
  const ReportFormat format = format_of(a.format);
  if (!is_scenario_key(a.axis) || a.axis == "schema") throw UsageError("unknown sweep axis '" + a.axis + "'");
  if (a.values.empty()) throw UsageError("sweep needs at least one value");

  // Numeric axes are ordered by value; anything else keeps the given order.
  const bool numeric = std::all_of(a.values.begin(), a.values.end(),
                                   [](const std::string& v) { return parse_real(v).has_value(); });
  if (numeric) {
    std::stable_sort(a.values.begin(), a.values.end(),
                     [](const std::string& x, const std::string& y) { return *parse_real(x) < *parse_real(y); });
  }
  if (std::adjacent_find(a.values.begin(), a.values.end()) != a.values.end() && numeric) {
    throw UsageError("duplicate sweep value");
  }

  ScenarioFile base = load_input(a.scenario);
  apply_overrides(base, a.sets, a.seed);

  // Validate every instantiation before running any of them.
  std::vector<Scenario> scenarios;
  for (const auto& v : a.values) {
    ScenarioFile f = base;
    set_override(f, a.axis, v);
    try {
      scenarios.push_back(build_scenario(f));
    } catch (const Error& e) {
      throw UsageError(a.axis + "=" + v + ": " + e.what());
    }
  }
  const std::string name = scenarios.front().name;
  const fs::path reports = a.reports_dir.empty() ? output_dir() / (name + "-sweep") : fs::path(a.reports_dir);
  const auto combined_path = output_path(a.output, name + "-sweep.csv");

  enum class Status { Pending, Ok, Failed };
  std::vector<Status> status(scenarios.size(), Status::Pending);
  std::vector<MetricsReport> results(scenarios.size());
  std::vector<std::string> failures(scenarios.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex mu;

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= scenarios.size()) return;
      try {
        MetricsReport r = run(scenarios[i]);
        const fs::path file = reports / (sanitize(a.axis + "=" + a.values[i]) + extension(format));
        write_file_atomic(file, export_report(r, format));
        std::lock_guard lock(mu);
        results[i] = std::move(r);
        status[i] = Status::Ok;
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        status[i] = Status::Failed;
        failures[i] = e.what();
        abort = true;
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(a.jobs, static_cast<unsigned>(scenarios.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const std::string header = csv_header();
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
  std::string combined = a.axis + ",status," + header;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    combined += a.values[i];
    switch (status[i]) {
      case Status::Ok:
        combined += ",ok," + csv_row(results[i]);
        break;
      case Status::Failed:
        combined += ",failed" + std::string(columns, ',') + "\n";
        break;
      case Status::Pending:
        combined += ",not-run" + std::string(columns, ',') + "\n";
        break;
    }
  }
  emit(combined_path, combined, out);

  std::ostream& log = combined_path ? out : err;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (status[i] == Status::Ok) log << a.axis << '=' << a.values[i] << ' ' << summary(results[i]) << '\n';
  }
  if (abort) {
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      if (status[i] == Status::Failed) err << "error: " << a.axis << '=' << a.values[i] << ": " << failures[i] << '\n';
    }
    err << "error: sweep aborted; partial results are marked in the status column\n";
    return kRuntime;
  }
  if (combined_path) log << "combined -> " << combined_path->string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- presets

int cmd_presets(bool paths_only, std::ostream& out) {
  const fs::path dir = preset_dir();
  if (!fs::is_directory(dir)) throw std::runtime_error("preset directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == kScenarioExt) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    if (paths_only) {
      out << f.string() << '\n';
      continue;
    }
    // The first comment line of a preset is its description.
    std::ifstream in(f);
    std::string line, description;
    while (std::getline(in, line)) {
      if (line.rfind("# ", 0) == 0) {
        description = line.substr(2);
        break;
      }
    }
    out << std::left << std::setw(28) << f.stem().string() << ' ' << description << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- microbench

struct BenchArgs {
  MicrobenchConfig config;
  std::string format = "json";
  std::string output = "-";
  double target = kPrlsTarget;
};

int cmd_microbench(const BenchArgs& a, std::ostream& out) {
  const ReportFormat format = format_of(a.format);
  if (a.config.num_entries == 0) throw UsageError("--entries must be >= 1");
  if (!(a.target > 0)) throw UsageError("--target must be > 0");
  const PrlsModel model;
  const MicrobenchResult r = index_microbench(a.config);
  const std::string body = format == ReportFormat::Json
                               ? microbench_json(r, model, a.target)
                               : microbench_csv_header() + microbench_csv_row(r);
  const auto path = output_path(a.output, std::string("microbench") + extension(format));
  emit(path, body, out);
  if (format == ReportFormat::Csv || path) {
    out << "insert " << format_real(r.insert_ns_mean / 1e3) << "us (reference 1-3us), lookup "
        << format_real(r.lookup_ns_mean / 1e3) << "us (reference 0.25-1us); distributed index needs "
        << prls_crossover(model, a.target) << " nodes to reach " << format_real(a.target) << " lookups/s\n";
  }
  return kOk;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::vector<std::string>& inputs, const std::vector<std::string>& sets, std::ostream& out,
                 std::ostream& err) {
  int status = kOk;
  for (const auto& in : inputs) {
    try {
      ScenarioFile file = load_input(in);
      apply_overrides(file, sets, std::nullopt);
      const Scenario s = build_scenario(file);
      out << in << ": ok (" << s.workload.tasks().size() << " tasks, " << s.workload.objects().size()
          << " objects, " << to_string(s.dispatch.policy) << ")\n";
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      status = kValidation;
    }
  }
  return status;
}

}  // namespace

fs::path preset_dir() {
  const char* env = std::getenv(kPresetDirEnv);
  return env && *env ? fs::path(env) : fs::path(DIFFUSION_PRESET_DIR_DEFAULT);
}

std::optional<fs::path> resolve_scenario(const std::string& arg) {
  std::error_code ec;
  if (fs::is_regular_file(arg, ec)) return fs::path(arg);
  if (arg.find('/') == std::string::npos) {
    fs::path p = preset_dir() / (arg + kScenarioExt);
    if (fs::is_regular_file(p, ec)) return p;
  }
  return std::nullopt;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  PendingFile f(path);
  f.stream() << content;
  f.commit();
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Data diffusion scheduling simulator", "diffusion"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Simulate one scenario and write its report");
  run->add_option("scenario", run_args.scenario, "Scenario file or preset name")->required();
  run->add_option("--set", run_args.sets, "Override a scenario key (key=value)");
  run->add_option("--seed", run_args.seed, "Override the scenario seed");
  run->add_option("--format", run_args.format, "Report format: csv or json")->capture_default_str();
  run->add_option("-o,--output", run_args.output, "Report path ('-' for stdout)");
  run->add_option("--event-log", run_args.event_log, "Write the event log as NDJSON");
  run->add_option("--series", run_args.series, "Write throughput and pool time series as CSV");
  run->add_flag("--timing", run_args.timing, "Include wall-clock decision timing in the report");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Run a scenario once per value of one parameter");
  sweep->add_option("scenario", sweep_args.scenario, "Template scenario file or preset name")->required();
  sweep->add_option("--axis", sweep_args.axis, "Scenario key to vary")->required();
  sweep->add_option("--values", sweep_args.values, "Comma-separated values")->required()->delimiter(',');
  sweep->add_option("--set", sweep_args.sets, "Override a scenario key (key=value)");
  sweep->add_option("--seed", sweep_args.seed, "Override the scenario seed");
  sweep->add_option("--format", sweep_args.format, "Per-run report format: csv or json")->capture_default_str();
  sweep->add_option("-o,--output", sweep_args.output, "Combined CSV path ('-' for stdout)");
  sweep->add_option("--reports-dir", sweep_args.reports_dir, "Directory for per-run reports");
  sweep->add_option("-j,--jobs", sweep_args.jobs, "Runs to execute in parallel")->check(CLI::PositiveNumber);

  bool preset_paths = false;
  auto* presets = app.add_subcommand("presets", "List the shipped preset scenarios");
  presets->add_flag("--paths", preset_paths, "Print file paths only");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("microbench", "Measure location index insert and lookup cost");
  bench->add_option("--entries", bench_args.config.num_entries, "Index entries")->capture_default_str();
  bench->add_option("--lookups", bench_args.config.num_lookups, "Timed lookups")->capture_default_str();
  bench->add_option("--inserts", bench_args.config.num_inserts, "Timed inserts")->capture_default_str();
  bench->add_option("--readers", bench_args.config.readers, "Reader threads for a contended phase");
  bench->add_option("--executors", bench_args.config.executors, "Distinct executors")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_args.config.seed, "Key generator seed");
  bench->add_option("--target", bench_args.target, "Lookups/s target for the distributed-index crossover");
  bench->add_option("--format", bench_args.format, "json or csv")->capture_default_str();
  bench->add_option("-o,--output", bench_args.output, "Output path ('-' for stdout)")->capture_default_str();

  std::vector<std::string> validate_inputs;
  std::vector<std::string> validate_sets;
  auto* validate = app.add_subcommand("validate", "Check scenario files without running them");
  validate->add_option("scenarios", validate_inputs, "Scenario files or preset names")->required();
  validate->add_option("--set", validate_sets, "Override a scenario key (key=value)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  try {
    if (*run) return cmd_run(run_args, out, err);
    if (*sweep) return cmd_sweep(sweep_args, out, err);
    if (*presets) return cmd_presets(preset_paths, out);
    if (*bench) return cmd_microbench(bench_args, out);
    if (*validate) return cmd_validate(validate_inputs, validate_sets, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kValidation;
}

}  // namespace diffusion::cli
