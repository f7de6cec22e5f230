#include "diffusion/resources.hpp"

#include <algorithm>
#include <cmath>

#include "diffusion/errors.hpp"

namespace diffusion {

std::string_view to_string(IoMode mode) { return mode == IoMode::Read ? "read" : "read-write"; }

std::optional<IoMode> parse_io_mode(std::string_view text) {
  if (text == "read") return IoMode::Read;
  if (text == "read-write") return IoMode::ReadWrite;
  return std::nullopt;
}

void ResourceModel::validate() const {
  for (double bw : {persistent_read_cap, persistent_rw_cap, local_disk_bw, local_disk_rw_bw, peer_net_bw}) {
    if (!(bw > 0) || !std::isfinite(bw)) throw ConfigError("bandwidths must be positive");
  }
  if (persistent_io_servers == 0) throw ConfigError("persistent_io_servers must be >= 1");
  if (!(per_transfer_latency >= 0)) throw ConfigError("per_transfer_latency must be >= 0");
  if (!(metadata_op_time >= 0)) throw ConfigError("metadata_op_time must be >= 0");
}

BitsPerSecond shared_bandwidth_share(std::size_t active_transfers, BitsPerSecond cap, std::size_t io_servers) {
  const std::size_t divisor = std::max({active_transfers, io_servers, std::size_t{1}});
  return cap / static_cast<double>(divisor);
}

}  // namespace diffusion
