#include "diffusion/provisioner.hpp"

#include <algorithm>
#include <cmath>

#include "diffusion/errors.hpp"

namespace diffusion {

std::string_view to_string(AllocationMode mode) {
  switch (mode) {
    case AllocationMode::OneAtATime: return "one-at-a-time";
    case AllocationMode::AllAtOnce: return "all-at-once";
    case AllocationMode::Exponential: return "exponential";
  }
  return "?";
}

std::optional<AllocationMode> parse_allocation_mode(std::string_view text) {
  for (auto m : {AllocationMode::OneAtATime, AllocationMode::AllAtOnce, AllocationMode::Exponential}) {
    if (text == to_string(m)) return m;
  }
  return std::nullopt;
}

std::string_view to_string(ReleaseCachePolicy policy) {
  return policy == ReleaseCachePolicy::Discard ? "discard" : "retain-until-reuse";
}

std::optional<ReleaseCachePolicy> parse_release_cache_policy(std::string_view text) {
  if (text == "discard") return ReleaseCachePolicy::Discard;
  if (text == "retain-until-reuse") return ReleaseCachePolicy::RetainUntilReuse;
  return std::nullopt;
}

void ProvisionerConfig::validate() const {
  if (min_executors > max_executors) throw ConfigError("provisioner min_executors exceeds max_executors");
  if (max_executors == 0) throw ConfigError("provisioner max_executors must be >= 1");
  if (!(startup_delay >= 0) || !std::isfinite(startup_delay)) throw ConfigError("startup_delay must be >= 0");
  if (!(idle_timeout > 0)) throw ConfigError("idle_timeout must be > 0");
  if (!(tick_interval > 0)) throw ConfigError("tick_interval must be > 0");
}

std::vector<ProvisionAction> provision_evaluate(const ProvisionerConfig& config, std::size_t queue_length,
                                                std::span<const PoolMember> pool, SimTime now) {
  std::size_t size = 0;
  for (const auto& m : pool) {
    if (m.state != ExecutorState::Released) ++size;
  }

  std::vector<ProvisionAction> actions;
  if (size < config.min_executors) {
    actions.push_back(Allocate{config.min_executors - size});
    return actions;
  }

  if (queue_length >= config.trigger_queue_length && queue_length > 0) {
    if (size >= config.max_executors) return actions;
    const std::size_t room = config.max_executors - size;
    std::size_t n = 1;
    switch (config.allocation_mode) {
      case AllocationMode::OneAtATime: n = 1; break;
      case AllocationMode::AllAtOnce: n = room; break;
      case AllocationMode::Exponential: n = std::max<std::size_t>(size, 1); break;
    }
    actions.push_back(Allocate{std::min(n, room)});
    return actions;
  }

  std::vector<const PoolMember*> expired;
  for (const auto& m : pool) {
    if (m.state == ExecutorState::Idle && now - m.idle_since > config.idle_timeout) expired.push_back(&m);
  }
  std::sort(expired.begin(), expired.end(), [](const PoolMember* a, const PoolMember* b) {
    return a->idle_since != b->idle_since ? a->idle_since < b->idle_since : a->id < b->id;
  });
  const std::size_t releasable = std::min(expired.size(), size - config.min_executors);
  if (releasable > 0) {
    Release r;
    for (std::size_t i = 0; i < releasable; ++i) r.executors.push_back(expired[i]->id);
    actions.push_back(std::move(r));
  }
  return actions;
}

}  // namespace diffusion
