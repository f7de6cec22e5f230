#include "diffusion/workload.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "diffusion/errors.hpp"
#include "diffusion/rng.hpp"

namespace diffusion {

Workload::Workload(std::vector<DataObject> objects, std::vector<Task> tasks)
    : objects_(std::move(objects)), tasks_(std::move(tasks)) {
  positions_.reserve(objects_.size());
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const auto& o = objects_[i];
    if (o.transfer_size < 1 || o.working_size < 1) {
      throw ConfigError("object " + std::to_string(to_underlying(o.id)) + " has a zero size");
    }
    if (!positions_.emplace(o.id, i).second) {
      throw ConfigError("duplicate object id " + std::to_string(to_underlying(o.id)));
    }
  }

  std::unordered_set<TaskId> task_ids;
  std::vector<bool> referenced(objects_.size(), false);
  for (const auto& t : tasks_) {
    const std::string name = "task " + std::to_string(to_underlying(t.id));
    if (!task_ids.insert(t.id).second) throw ConfigError("duplicate " + name);
    if (t.required_objects.empty()) throw ConfigError(name + " requires no objects");
    if (!(t.compute_time >= 0) || !std::isfinite(t.compute_time)) {
      throw ConfigError(name + " has an invalid compute time");
    }
    std::unordered_set<ObjectId> seen;
    for (ObjectId id : t.required_objects) {
      auto it = positions_.find(id);
      if (it == positions_.end()) {
        throw ConfigError(name + " references unknown object " + std::to_string(to_underlying(id)));
      }
      if (!seen.insert(id).second) {
        throw ConfigError(name + " lists object " + std::to_string(to_underlying(id)) + " twice");
      }
      if (!referenced[it->second]) {
        referenced[it->second] = true;
        ++distinct_referenced_;
      }
      ++total_references_;
    }
  }
  if (distinct_referenced_ > 0) {
    locality_ = static_cast<double>(total_references_) / static_cast<double>(distinct_referenced_);
  }
}

const DataObject& Workload::object(ObjectId id) const { return objects_[object_index(id)]; }

std::size_t Workload::object_index(ObjectId id) const {
  auto it = positions_.find(id);
  if (it == positions_.end()) {
    throw std::out_of_range("unknown object " + std::to_string(to_underlying(id)));
  }
  return it->second;
}

Workload generate_locality_workload(std::size_t num_objects, double locality, SizePreset size,
                                    std::uint64_t seed, SimTime compute_time) {
  if (num_objects == 0) throw ConfigError("workload needs at least one object");
  if (!(locality >= 1.0) || !std::isfinite(locality)) {
    throw ConfigError("locality must be a finite value >= 1");
  }
  if (size.transfer_size < 1 || size.working_size < 1) throw ConfigError("object sizes must be >= 1 byte");
  if (!(compute_time >= 0) || !std::isfinite(compute_time)) throw ConfigError("compute time must be >= 0");

  const auto total = static_cast<std::size_t>(std::llround(static_cast<double>(num_objects) * locality));
  if (total > std::size_t{UINT32_MAX}) throw ConfigError("workload too large");
  const std::size_t base = total / num_objects;
  const std::size_t extra = total % num_objects;

  Rng rng(seed);

  // Objects receiving the extra reference are a seeded sample.
  std::vector<std::uint32_t> order(num_objects);
  for (std::size_t i = 0; i < num_objects; ++i) order[i] = static_cast<std::uint32_t>(i);
  rng.shuffle(order);
  std::vector<std::size_t> counts(num_objects, base);
  for (std::size_t i = 0; i < extra; ++i) ++counts[order[i]];

  std::vector<DataObject> objects;
  objects.reserve(num_objects);
  std::vector<ObjectId> refs;
  refs.reserve(total);
  for (std::size_t i = 0; i < num_objects; ++i) {
    const auto id = ObjectId{static_cast<std::uint32_t>(i)};
    objects.push_back({id, size.transfer_size, size.working_size});
    refs.insert(refs.end(), counts[i], id);
  }
  rng.shuffle(refs);

  std::vector<Task> tasks;
  tasks.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    tasks.push_back({TaskId{static_cast<std::uint32_t>(i)}, {refs[i]}, compute_time});
  }
  return Workload(std::move(objects), std::move(tasks));
}

const std::array<Table2Row, 9>& table2_presets() {
  static constexpr std::array<Table2Row, 9> kRows{{
      {1, 111700, 111700},
      {1.38, 154345, 111699},
      {2, 97999, 49000},
      {3, 88857, 29620},
      {4, 76575, 19145},
      {5, 60590, 12120},
      {10, 46480, 4650},
      {20, 40460, 2025},
      {30, 23695, 790},
  }};
  return kRows;
}

double ideal_cache_hit_ratio(double locality) {
  if (!(locality >= 1.0)) throw DomainError("locality must be >= 1");
  return 1.0 - 1.0 / locality;
}

}  // namespace diffusion
