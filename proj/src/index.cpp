#include "diffusion/index.hpp"

#include <algorithm>

namespace diffusion {

LocationIndex::LocationIndex(SimTime update_interval) : update_interval_(update_interval) {}

std::span<const ExecutorId> LocationIndex::locate(ObjectId id) const {
  auto it = locations_.find(id);
  if (it == locations_.end()) return {};
  return it->second;
}

void LocationIndex::add(ExecutorId executor, ObjectId id) {
  auto& holders = locations_[id];
  auto pos = std::lower_bound(holders.begin(), holders.end(), executor);
  if (pos != holders.end() && *pos == executor) return;
  holders.insert(pos, executor);
  ++location_count_;
}

void LocationIndex::remove(ExecutorId executor, ObjectId id) {
  auto it = locations_.find(id);
  if (it == locations_.end()) return;
  auto& holders = it->second;
  auto pos = std::lower_bound(holders.begin(), holders.end(), executor);
  if (pos == holders.end() || *pos != executor) return;
  holders.erase(pos);
  --location_count_;
  if (holders.empty()) locations_.erase(it);
}

void LocationIndex::apply(ExecutorId executor, const UpdateRecord& update) {
  if (update.kind == UpdateKind::Add) {
    add(executor, update.object);
  } else {
    remove(executor, update.object);
  }
}

void LocationIndex::record(ExecutorId executor, UpdateRecord update) {
  if (synchronous()) {
    apply(executor, update);
    return;
  }
  pending_[executor].push_back(update);
}

std::size_t LocationIndex::apply_updates(ExecutorId executor) {
  auto it = pending_.find(executor);
  if (it == pending_.end()) return 0;
  const std::size_t n = it->second.size();
  for (const auto& u : it->second) apply(executor, u);
  pending_.erase(it);
  return n;
}

std::size_t LocationIndex::apply_all() {
  // Executor order keeps the result independent of hash iteration order
  // (queues of different executors commute anyway).
  std::vector<ExecutorId> ids;
  ids.reserve(pending_.size());
  for (const auto& kv : pending_) ids.push_back(kv.first);
  std::sort(ids.begin(), ids.end());
  std::size_t n = 0;
  for (ExecutorId e : ids) n += apply_updates(e);
  return n;
}

void LocationIndex::deregister(ExecutorId executor) {
  pending_.erase(executor);
  for (auto it = locations_.begin(); it != locations_.end();) {
    auto& holders = it->second;
    auto pos = std::lower_bound(holders.begin(), holders.end(), executor);
    if (pos != holders.end() && *pos == executor) {
      holders.erase(pos);
      --location_count_;
    }
    if (holders.empty()) {
      it = locations_.erase(it);
    } else {
      ++it;
    }
  }
}

std::size_t LocationIndex::pending(ExecutorId executor) const {
  auto it = pending_.find(executor);
  return it == pending_.end() ? 0 : it->second.size();
}

std::size_t LocationIndex::pending_total() const {
  std::size_t n = 0;
  for (const auto& kv : pending_) n += kv.second.size();
  return n;
}

std::size_t LocationIndex::approx_memory_bytes() const {
  // libstdc++ node: next pointer + value + cached hash.
  using Node = std::pair<const ObjectId, std::vector<ExecutorId>>;
  const std::size_t node = sizeof(void*) + sizeof(Node) + sizeof(std::size_t);
  std::size_t total = locations_.bucket_count() * sizeof(void*) + locations_.size() * node;
  for (const auto& kv : locations_) total += kv.second.capacity() * sizeof(ExecutorId);
  return total;
}

std::map<ObjectId, std::vector<ExecutorId>> LocationIndex::snapshot() const {
  return {locations_.begin(), locations_.end()};
}

}  // namespace diffusion
