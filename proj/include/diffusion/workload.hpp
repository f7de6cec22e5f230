#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "diffusion/ids.hpp"
#include "diffusion/units.hpp"

namespace diffusion {

// An immutable cacheable file. transfer_size is what crosses the network or
// leaves the persistent store; working_size is what it occupies in a cache
// (after decompression, for compressed formats).
struct DataObject {
  ObjectId id{};
  Bytes transfer_size = 0;
  Bytes working_size = 0;

  friend bool operator==(const DataObject&, const DataObject&) = default;
};

struct Task {
  TaskId id{};
  std::vector<ObjectId> required_objects;
  SimTime compute_time = 0;

  friend bool operator==(const Task&, const Task&) = default;
};

// Object catalog plus an ordered task list. Construction validates every
// cross-reference, so a Workload in hand is always consistent.
class Workload {
 public:
  Workload() = default;
  Workload(std::vector<DataObject> objects, std::vector<Task> tasks);

  const std::vector<DataObject>& objects() const { return objects_; }
  const std::vector<Task>& tasks() const { return tasks_; }

  // Mean accesses per distinct referenced object. 1 for an empty workload.
  double locality() const { return locality_; }
  std::size_t total_references() const { return total_references_; }
  std::size_t distinct_referenced() const { return distinct_referenced_; }

  // Throws std::out_of_range for unknown ids.
  const DataObject& object(ObjectId id) const;
  // Dense position of the object in objects(); same throw behaviour.
  std::size_t object_index(ObjectId id) const;

  friend bool operator==(const Workload& a, const Workload& b) {
    return a.objects_ == b.objects_ && a.tasks_ == b.tasks_;
  }

 private:
  std::vector<DataObject> objects_;
  std::vector<Task> tasks_;
  std::unordered_map<ObjectId, std::size_t> positions_;
  double locality_ = 1.0;
  std::size_t total_references_ = 0;
  std::size_t distinct_referenced_ = 0;
};

struct SizePreset {
  Bytes transfer_size;
  Bytes working_size;

  // Compressed image cached compressed-on-the-wire, worked on uncompressed.
  static constexpr SizePreset gz() { return {2 * kMB, 6 * kMB}; }
  static constexpr SizePreset fit() { return {6 * kMB, 6 * kMB}; }
  static constexpr SizePreset custom(Bytes transfer, Bytes working) { return {transfer, working}; }
};

// Builds num_objects single-object-task objects, each referenced floor(L) or
// ceil(L) times so the mean is exactly round(num_objects * L) / num_objects,
// then shuffles all references with the given seed.
Workload generate_locality_workload(std::size_t num_objects, double locality, SizePreset size,
                                    std::uint64_t seed, SimTime compute_time = 0);

struct Table2Row {
  double locality;
  std::uint64_t num_objects;
  std::uint64_t num_files;
};

// The nine locality rows of the stacking workload characterization.
const std::array<Table2Row, 9>& table2_presets();

// 1 - 1/locality: one compulsory miss per distinct object.
double ideal_cache_hit_ratio(double locality);

// Line-oriented trace format; see docs in README.
void write_trace(std::ostream& out, const Workload& workload);
Workload read_trace(std::istream& in, const std::string& origin = "<trace>");

}  // namespace diffusion
