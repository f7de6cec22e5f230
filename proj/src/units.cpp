#include "diffusion/units.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <span>
#include <system_error>

namespace diffusion {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Splits "3.4Gb/s" into 3.4 and "Gb/s".
std::optional<std::pair<double, std::string_view>> split_quantity(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  double value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || !std::isfinite(value)) return std::nullopt;
  return std::pair{value, trim(std::string_view(ptr, static_cast<std::size_t>(last - ptr)))};
}

struct Suffix {
  std::string_view name;
  double scale;
};

std::optional<double> scaled(std::string_view text, std::span<const Suffix> suffixes) {
  auto parts = split_quantity(text);
  if (!parts) return std::nullopt;
  for (const auto& s : suffixes) {
    if (parts->second == s.name) return parts->first * s.scale;
  }
  return std::nullopt;
}

}  // namespace

std::optional<double> parse_real(std::string_view text) {
  auto parts = split_quantity(text);
  if (!parts || !parts->second.empty()) return std::nullopt;
  return parts->first;
}

std::optional<std::uint64_t> parse_count(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<Bytes> parse_bytes(std::string_view text) {
  static constexpr std::array<Suffix, 5> kSuffixes{{
      {"", 1.0}, {"B", 1.0}, {"KB", 1e3}, {"MB", 1e6}, {"GB", 1e9}}};
  auto v = scaled(text, kSuffixes);
  if (!v || *v < 0 || *v > 1.8e19) return std::nullopt;
  const double rounded = std::round(*v);
  if (std::abs(rounded - *v) > 1e-6 * std::max(1.0, *v)) return std::nullopt;
  return static_cast<Bytes>(rounded);
}

std::optional<BitsPerSecond> parse_bandwidth(std::string_view text) {
  static constexpr std::array<Suffix, 5> kSuffixes{{
      {"", 1.0}, {"b/s", 1.0}, {"Kb/s", 1e3}, {"Mb/s", 1e6}, {"Gb/s", 1e9}}};
  auto v = scaled(text, kSuffixes);
  if (!v || *v <= 0) return std::nullopt;
  return v;
}

std::optional<SimTime> parse_duration(std::string_view text) {
  static constexpr std::array<Suffix, 5> kSuffixes{{
      {"", 1.0}, {"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"min", 60.0}}};
  auto v = scaled(text, kSuffixes);
  if (!v || *v < 0) return std::nullopt;
  return v;
}

std::string format_real(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

}  // namespace diffusion
