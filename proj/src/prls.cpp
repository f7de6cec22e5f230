#include <cmath>
#include <limits>

#include "diffusion/errors.hpp"
#include "diffusion/index.hpp"

namespace diffusion {

double PrlsModel::b() const { return (latency_at_15_ms - latency_at_1_ms) / std::log(15.0); }

double prls_latency(const PrlsModel& model, std::uint64_t nodes) {
  if (nodes < 1) throw DomainError("P-RLS node count must be >= 1");
  return model.a() + model.b() * std::log(static_cast<double>(nodes));
}

double prls_throughput(const PrlsModel& model, std::uint64_t nodes) {
  return static_cast<double>(nodes) * 1000.0 / prls_latency(model, nodes);
}

std::uint64_t prls_crossover(const PrlsModel& model, double target_lookups_per_sec) {
  if (!(target_lookups_per_sec > 0) || !std::isfinite(target_lookups_per_sec)) {
    throw DomainError("crossover target must be a positive rate");
  }
  // Aggregate throughput is strictly increasing, so gallop to an upper
  // bound and bisect.
  std::uint64_t hi = 1;
  while (prls_throughput(model, hi) < target_lookups_per_sec) {
    if (hi > (std::numeric_limits<std::uint64_t>::max() >> 2)) throw DomainError("crossover target unreachable");
    hi *= 2;
  }
  std::uint64_t lo = hi / 2;  // throughput(lo) < target, or lo == 0
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (prls_throughput(model, mid) >= target_lookups_per_sec) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace diffusion
