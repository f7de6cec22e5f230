#pragma once

#include <cstdint>
#include <functional>

namespace diffusion {

// Opaque identifiers. Enumerations keep them from mixing with each other
// or with plain counters while staying hashable and trivially copyable.
enum class ObjectId : std::uint32_t {};
enum class TaskId : std::uint32_t {};
enum class ExecutorId : std::uint32_t {};

constexpr std::uint32_t to_underlying(ObjectId id) { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t to_underlying(TaskId id) { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t to_underlying(ExecutorId id) { return static_cast<std::uint32_t>(id); }

}  // namespace diffusion
