#ifndef TRACEGUARD_TRACE_IO_HPP
#define TRACEGUARD_TRACE_IO_HPP

#include <iosfwd>
#include <string>

#include "traceguard/types.hpp"

namespace traceguard {

// Native line-based trace format:
//   #trace v1 duration=<s> seed=<u64> scenario=<id>
//   S <ts> <pid> <name> <B|M>
//   F <ts> <I|O> <peer> <port> <bytes> <flagmask> <B|M>
// Timestamps printed with 6 decimal places; fields space-separated.
void write_trace(const Trace& trace, std::ostream& os);
void write_trace_file(const Trace& trace, const std::string& path);

Trace read_trace(std::istream& is);
Trace read_trace_file(const std::string& path);

}  // namespace traceguard

#endif  // TRACEGUARD_TRACE_IO_HPP
