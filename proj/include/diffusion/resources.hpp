#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "diffusion/units.hpp"

namespace diffusion {

enum class IoMode { Read, ReadWrite };

std::string_view to_string(IoMode mode);
std::optional<IoMode> parse_io_mode(std::string_view text);

// Storage tiers of the simulated cluster. Persistent-store caps are global
// and shared by every executor; local disk and peer links are per node.
struct ResourceModel {
  BitsPerSecond persistent_read_cap = 3.4 * kGbps;
  BitsPerSecond persistent_rw_cap = 1.1 * kGbps;
  // Below this many concurrent transfers each one is limited to
  // cap / io_servers, so aggregate throughput ramps up to a knee.
  std::size_t persistent_io_servers = 8;
  // 76Gb/s read and 25Gb/s read+write measured across 162 nodes.
  BitsPerSecond local_disk_bw = 76.0 * kGbps / 162.0;
  BitsPerSecond local_disk_rw_bw = 25.0 * kGbps / 162.0;
  BitsPerSecond peer_net_bw = 1.0 * kGbps;
  // Paid once before every persistent or peer transfer.
  SimTime per_transfer_latency = 0.001;
  // Service time of one sandbox wrapper (mkdir + symlink + rmdir) on the
  // persistent store's metadata server; operations are serialized.
  SimTime metadata_op_time = 1.0 / 21.0;

  BitsPerSecond persistent_cap(IoMode mode) const {
    return mode == IoMode::Read ? persistent_read_cap : persistent_rw_cap;
  }
  BitsPerSecond local_bw(IoMode mode) const { return mode == IoMode::Read ? local_disk_bw : local_disk_rw_bw; }

  // Throws ConfigError when a bandwidth is not positive.
  void validate() const;
};

// Per-transfer rate when `active_transfers` share a store of aggregate
// `cap` served by `io_servers` servers: cap / max(active, io_servers).
BitsPerSecond shared_bandwidth_share(std::size_t active_transfers, BitsPerSecond cap, std::size_t io_servers);

}  // namespace diffusion
