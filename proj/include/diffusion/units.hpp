#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace diffusion {

using Bytes = std::uint64_t;
// Simulated time in seconds.
using SimTime = double;
// Bandwidth in bits per second.
using BitsPerSecond = double;

// Sizes and rates are decimal, the way storage vendors and the stacking
// workload quote them (2MB compressed / 6MB uncompressed).
inline constexpr Bytes kKB = 1000;
inline constexpr Bytes kMB = 1000 * kKB;
inline constexpr Bytes kGB = 1000 * kMB;
inline constexpr BitsPerSecond kMbps = 1e6;
inline constexpr BitsPerSecond kGbps = 1e9;

inline double to_mb(double bytes) { return bytes / static_cast<double>(kMB); }

// Seconds needed to move `bytes` at `rate` bits/s.
inline SimTime transfer_seconds(double bytes, BitsPerSecond rate) { return bytes * 8.0 / rate; }

// Parsers for human-written quantities: "6MB", "100 MB", "4096", "3.4Gb/s",
// "250ms", "60s". Return nullopt when the text is not a valid quantity.
std::optional<Bytes> parse_bytes(std::string_view text);
std::optional<BitsPerSecond> parse_bandwidth(std::string_view text);
std::optional<SimTime> parse_duration(std::string_view text);
std::optional<double> parse_real(std::string_view text);
std::optional<std::uint64_t> parse_count(std::string_view text);

// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

}  // namespace diffusion
