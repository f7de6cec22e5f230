// Trace layout:
//
//   diffusion-trace 1
//   objects <count>
//   <object id> <transfer_size bytes> <working_size bytes>      (count lines)
//   tasks <count>
//   <task id> <object id>[,<object id>...] <compute_time seconds>  (count lines)
//
// Blank lines and lines starting with '#' are ignored on input.

#include <istream>
#include <ostream>
#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <string>

#include "diffusion/errors.hpp"
#include "diffusion/workload.hpp"

namespace diffusion {
namespace {

constexpr std::string_view kMagic = "diffusion-trace";
constexpr int kVersion = 1;

class LineReader {
 public:
  LineReader(std::istream& in, std::string origin) : in_(in), origin_(std::move(origin)) {}

  // Next meaningful line split on whitespace; empty vector at EOF.
  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::istringstream fields(line);
      std::vector<std::string> out;
      for (std::string f; fields >> f;) out.push_back(std::move(f));
      if (out.empty() || out.front().starts_with('#')) continue;
      return out;
    }
    ++line_no_;
    return {};
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(origin_, line_no_, what); }

  std::uint64_t count(const std::string& text, const char* what) const {
    auto v = parse_count(text);
    if (!v) fail(std::string("invalid ") + what + " '" + text + "'");
    return *v;
  }

  std::uint32_t id(const std::string& text, const char* what) const {
    auto v = count(text, what);
    if (v > UINT32_MAX) fail(std::string(what) + " out of range");
    return static_cast<std::uint32_t>(v);
  }

 private:
  std::istream& in_;
  std::string origin_;
  std::size_t line_no_ = 0;
};

}  // namespace

void write_trace(std::ostream& out, const Workload& workload) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "objects " << workload.objects().size() << '\n';
  for (const auto& o : workload.objects()) {
    out << to_underlying(o.id) << ' ' << o.transfer_size << ' ' << o.working_size << '\n';
  }
  out << "tasks " << workload.tasks().size() << '\n';
  for (const auto& t : workload.tasks()) {
    out << to_underlying(t.id) << ' ';
    for (std::size_t i = 0; i < t.required_objects.size(); ++i) {
      if (i) out << ',';
      out << to_underlying(t.required_objects[i]);
    }
    out << ' ' << format_real(t.compute_time) << '\n';
  }
}

Workload read_trace(std::istream& in, const std::string& origin) {
  LineReader reader(in, origin);

  auto header = reader.next();
  if (header.size() != 2 || header[0] != kMagic) reader.fail("missing 'diffusion-trace' header");
  if (header[1] != std::to_string(kVersion)) reader.fail("unsupported trace version " + header[1]);

  auto section = reader.next();
  if (section.size() != 2 || section[0] != "objects") reader.fail("expected 'objects <count>'");
  const auto num_objects = reader.count(section[1], "object count");

  std::vector<DataObject> objects;
  std::unordered_set<ObjectId> known;
  objects.reserve(num_objects);
  for (std::uint64_t i = 0; i < num_objects; ++i) {
    auto f = reader.next();
    if (f.size() != 3) reader.fail("expected '<id> <transfer_size> <working_size>'");
    objects.push_back({ObjectId{reader.id(f[0], "object id")}, reader.count(f[1], "transfer size"),
                       reader.count(f[2], "working size")});
    if (!known.insert(objects.back().id).second) reader.fail("duplicate object id " + f[0]);
    if (objects.back().transfer_size == 0 || objects.back().working_size == 0) reader.fail("object sizes must be >= 1");
  }

  section = reader.next();
  if (section.size() != 2 || section[0] != "tasks") reader.fail("expected 'tasks <count>'");
  const auto num_tasks = reader.count(section[1], "task count");

  std::vector<Task> tasks;
  tasks.reserve(num_tasks);
  std::unordered_set<TaskId> task_ids;
  for (std::uint64_t i = 0; i < num_tasks; ++i) {
    auto f = reader.next();
    if (f.size() != 3) reader.fail("expected '<task id> <object ids> <compute_time>'");
    Task task;
    task.id = TaskId{reader.id(f[0], "task id")};
    if (!task_ids.insert(task.id).second) reader.fail("duplicate task id " + f[0]);
    std::istringstream ids(f[1]);
    for (std::string part; std::getline(ids, part, ',');) {
      const ObjectId obj{reader.id(part, "object id")};
      if (!known.contains(obj)) reader.fail("unknown object " + part);
      if (std::find(task.required_objects.begin(), task.required_objects.end(), obj) != task.required_objects.end()) {
        reader.fail("object " + part + " listed twice");
      }
      task.required_objects.push_back(obj);
    }
    auto compute = parse_real(f[2]);
    if (!compute || *compute < 0) reader.fail("invalid compute time '" + f[2] + "'");
    task.compute_time = *compute;
    tasks.push_back(std::move(task));
  }

  if (!reader.next().empty()) reader.fail("trailing content after task list");

  try {
    return Workload(std::move(objects), std::move(tasks));
  } catch (const ConfigError& e) {
    throw ParseError(origin, 0, e.what());
  }
}

}  // namespace diffusion
