#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "diffusion/ids.hpp"
#include "diffusion/units.hpp"

namespace diffusion {

enum class AllocationMode { OneAtATime, AllAtOnce, Exponential };
enum class ReleaseCachePolicy { Discard, RetainUntilReuse };

std::string_view to_string(AllocationMode mode);
std::optional<AllocationMode> parse_allocation_mode(std::string_view text);
std::string_view to_string(ReleaseCachePolicy policy);
std::optional<ReleaseCachePolicy> parse_release_cache_policy(std::string_view text);

struct ProvisionerConfig {
  std::size_t min_executors = 0;
  std::size_t max_executors = 64;
  std::size_t trigger_queue_length = 1;
  AllocationMode allocation_mode = AllocationMode::OneAtATime;
  SimTime startup_delay = 60.0;
  SimTime idle_timeout = 60.0;
  ReleaseCachePolicy release_cache_policy = ReleaseCachePolicy::Discard;
  // Period of the provisioning evaluation in the simulator.
  SimTime tick_interval = 1.0;

  // Throws ConfigError when the invariants do not hold.
  void validate() const;
};

enum class ExecutorState { Booting, Idle, Busy, Released };

struct PoolMember {
  ExecutorId id;
  ExecutorState state;
  // Meaningful for Idle members only.
  SimTime idle_since = 0;
};

struct Allocate {
  std::size_t count;
  friend bool operator==(const Allocate&, const Allocate&) = default;
};

struct Release {
  std::vector<ExecutorId> executors;
  friend bool operator==(const Release&, const Release&) = default;
};

using ProvisionAction = std::variant<Allocate, Release>;

// Decides pool changes for the current instant. Booting members count
// toward the pool; Released members are ignored.
//
// Allocation happens when the queue is at least the trigger length and the
// pool is below max (or whenever the pool is below min). Otherwise idle
// members past the idle timeout are released, oldest first, without
// dropping below min. Busy members are never released.
std::vector<ProvisionAction> provision_evaluate(const ProvisionerConfig& config, std::size_t queue_length,
                                                std::span<const PoolMember> pool, SimTime now);

}  // namespace diffusion
