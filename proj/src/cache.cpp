#include "diffusion/cache.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "diffusion/errors.hpp"

namespace diffusion {

std::string_view to_string(EvictionPolicy policy) {
  switch (policy) {
    case EvictionPolicy::Random: return "random";
    case EvictionPolicy::Fifo: return "fifo";
    case EvictionPolicy::Lru: return "lru";
    case EvictionPolicy::Lfu: return "lfu";
  }
  return "?";
}

std::optional<EvictionPolicy> parse_eviction_policy(std::string_view text) {
  for (auto p : {EvictionPolicy::Random, EvictionPolicy::Fifo, EvictionPolicy::Lru, EvictionPolicy::Lfu}) {
    if (text == to_string(p)) return p;
  }
  return std::nullopt;
}

CacheState::CacheState(CacheConfig config) : config_(config), rng_(config.seed) {}

CacheState::OrderKey CacheState::key_for(ObjectId id, const Entry& e) const {
  switch (config_.policy) {
    case EvictionPolicy::Fifo: return {e.insert_seq, 0, id};
    case EvictionPolicy::Lru: return {e.last_access_seq, 0, id};
    // Frequency ties fall back to recency.
    case EvictionPolicy::Lfu: return {e.access_count, e.last_access_seq, id};
    case EvictionPolicy::Random: break;
  }
  return {0, 0, id};
}

const CacheState::Entry* CacheState::entry(ObjectId id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

LookupResult CacheState::lookup(ObjectId id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) return LookupResult::Miss;
  Entry& e = it->second;
  const bool ordered = config_.policy != EvictionPolicy::Random;
  if (ordered) order_.erase(key_for(id, e));
  e.last_access_seq = ++seq_;
  ++e.access_count;
  if (ordered) order_.insert(key_for(id, e));
  return LookupResult::Hit;
}

ObjectId CacheState::pick_victim() {
  if (config_.policy == EvictionPolicy::Random) {
    return slots_[static_cast<std::size_t>(rng_.below(slots_.size()))];
  }
  return order_.begin()->id;
}

void CacheState::erase(ObjectId id) {
  auto it = entries_.find(id);
  if (config_.policy == EvictionPolicy::Random) {
    const std::size_t pos = slot_of_.at(id);
    slot_of_[slots_.back()] = pos;
    slots_[pos] = slots_.back();
    slots_.pop_back();
    slot_of_.erase(id);
  } else {
    order_.erase(key_for(id, it->second));
  }
  used_ -= it->second.working_size;
  entries_.erase(it);
}

std::vector<ObjectId> CacheState::insert(ObjectId id, Bytes working_size) {
  if (working_size > config_.capacity) {
    throw AdmissionError("object " + std::to_string(to_underlying(id)) + " (" + std::to_string(working_size) +
                         " bytes) exceeds cache capacity of " + std::to_string(config_.capacity) + " bytes");
  }
  if (entries_.contains(id)) {
    throw std::logic_error("object " + std::to_string(to_underlying(id)) + " already cached");
  }

  std::vector<ObjectId> evicted;
  while (config_.capacity - used_ < working_size) {
    const ObjectId victim = pick_victim();
    erase(victim);
    evicted.push_back(victim);
  }

  const std::uint64_t seq = ++seq_;
  Entry e{working_size, seq, seq, 1};
  entries_.emplace(id, e);
  if (config_.policy == EvictionPolicy::Random) {
    slot_of_.emplace(id, slots_.size());
    slots_.push_back(id);
  } else {
    order_.insert(key_for(id, e));
  }
  used_ += working_size;
  return evicted;
}

void CacheState::clear() {
  entries_.clear();
  order_.clear();
  slots_.clear();
  slot_of_.clear();
  used_ = 0;
}

std::vector<ObjectId> CacheState::recency_order() const {
  std::vector<std::pair<std::uint64_t, ObjectId>> by_access;
  by_access.reserve(entries_.size());
  for (const auto& [id, e] : entries_) by_access.emplace_back(e.last_access_seq, id);
  std::sort(by_access.begin(), by_access.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<ObjectId> out;
  out.reserve(by_access.size());
  for (const auto& p : by_access) out.push_back(p.second);
  return out;
}

std::vector<ObjectId> CacheState::resident() const {
  std::vector<ObjectId> out;
  out.reserve(entries_.size());
  for (const auto& kv : entries_) out.push_back(kv.first);
  return out;
}

}  // namespace diffusion
