#ifndef TRACEGUARD_INGEST_HPP
#define TRACEGUARD_INGEST_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "traceguard/types.hpp"

namespace traceguard {

struct IngestStats {
  std::size_t lines = 0;
  std::size_t other_mapped = 0;    // syscall names collapsed to `other`
  std::size_t ignored_columns = 0; // unknown CSV columns skipped
};

// Auto-detects per line: native `S <ts> <pid> <name> <B|M>` records or
// strace-style `PID TIME syscall(args...) = ret` lines (origin Benign).
// Timestamps are re-based so the earliest record lands at t = 0.
std::vector<SyscallEvent> parse_syscall_log(std::istream& is, IngestStats* stats = nullptr);

// Header-driven flow CSV. Required logical columns (resolved through the
// alias table below): timestamp, direction (or src/dst plus router_host),
// port, bytes, flags. Unknown columns are ignored and counted.
//
// Alias table (case-insensitive, spaces/underscores interchangeable):
//   timestamp: timestamp, ts, time, flow_start          (CICFlowMeter: Timestamp)
//   direction: direction, dir
//   src:       src, src_ip, source                      (CICFlowMeter: Src IP)
//   dst:       dst, dst_ip, destination                 (CICFlowMeter: Dst IP)
//   port:      port, dst_port, dport                    (CICFlowMeter: Dst Port)
//   bytes:     bytes, len, length, size, pkt_len, packet_length,
//              totlen_fwd_pkts, total_length_of_fwd_packets
//   flags:     flags, tcp_flags, flag
std::vector<FlowRecord> parse_flow_csv(std::istream& is, const std::string& router_host = "",
                                       IngestStats* stats = nullptr);

}  // namespace traceguard

#endif  // TRACEGUARD_INGEST_HPP
