#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "diffusion/ids.hpp"
#include "diffusion/rng.hpp"
#include "diffusion/units.hpp"

namespace diffusion {

enum class EvictionPolicy { Random, Fifo, Lru, Lfu };

std::string_view to_string(EvictionPolicy policy);
std::optional<EvictionPolicy> parse_eviction_policy(std::string_view text);

struct CacheConfig {
  Bytes capacity = 50 * kGB;
  EvictionPolicy policy = EvictionPolicy::Lru;
  // Only consulted by EvictionPolicy::Random.
  std::uint64_t seed = 0;
};

enum class LookupResult { Hit, Miss };

// One executor's object cache. Whole objects only; used() never exceeds
// capacity(). Every insert and every hit advances a per-cache sequence
// counter that drives the recency and insertion orders.
class CacheState {
 public:
  struct Entry {
    Bytes working_size = 0;
    std::uint64_t insert_seq = 0;
    std::uint64_t last_access_seq = 0;
    std::uint64_t access_count = 0;
  };

  explicit CacheState(CacheConfig config = {});

  // A hit counts as an access for both recency and frequency.
  LookupResult lookup(ObjectId id);

  // Makes room per the eviction policy, then admits the object. Returns the
  // evicted ids in eviction order. Throws AdmissionError if the object can
  // never fit and std::logic_error if it is already resident.
  std::vector<ObjectId> insert(ObjectId id, Bytes working_size);

  // Read-only probe; does not touch bookkeeping.
  bool contains(ObjectId id) const { return entries_.contains(id); }
  const Entry* entry(ObjectId id) const;

  void clear();

  Bytes used() const { return used_; }
  Bytes capacity() const { return config_.capacity; }
  std::size_t size() const { return entries_.size(); }
  EvictionPolicy policy() const { return config_.policy; }

  // Resident ids, most recently used first.
  std::vector<ObjectId> recency_order() const;
  // Resident ids in unspecified order.
  std::vector<ObjectId> resident() const;

 private:
  struct OrderKey {
    std::uint64_t primary;
    std::uint64_t secondary;
    ObjectId id;
    auto operator<=>(const OrderKey&) const = default;
  };

  OrderKey key_for(ObjectId id, const Entry& e) const;
  ObjectId pick_victim();
  void erase(ObjectId id);

  CacheConfig config_;
  Rng rng_;
  std::unordered_map<ObjectId, Entry> entries_;
  // Victim order for FIFO/LRU/LFU: the first element is evicted next.
  std::set<OrderKey> order_;
  // Random policy: dense list of residents plus positions for O(1) removal.
  std::vector<ObjectId> slots_;
  std::unordered_map<ObjectId, std::size_t> slot_of_;
  std::uint64_t seq_ = 0;
  Bytes used_ = 0;
};

}  // namespace diffusion
