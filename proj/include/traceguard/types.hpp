#ifndef TRACEGUARD_TYPES_HPP
#define TRACEGUARD_TYPES_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace traceguard {

// Error taxonomy shared across the library. The C API and CLI map these onto
// stable numeric codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
  double final_violation;
  ConvergenceError(const std::string& what, double viol)
      : std::runtime_error(what), final_violation(viol) {}
};

enum class Origin : std::uint8_t { Benign = 0, Malware = 1 };
enum class Direction : std::uint8_t { Inbound = 0, Outbound = 1 };

// TCP-style flag bits carried on a FlowRecord.
namespace flag {
constexpr std::uint8_t SYN = 1 << 0;
constexpr std::uint8_t ACK = 1 << 1;
constexpr std::uint8_t FIN = 1 << 2;
constexpr std::uint8_t RST = 1 << 3;
constexpr std::uint8_t PSH = 1 << 4;
constexpr std::uint8_t ALL = SYN | ACK | FIN | RST | PSH;
}  // namespace flag

// Closed catalog of 40 syscall names. Names outside the catalog collapse to
// the reserved `other` token (id == kOtherSyscall).
std::span<const std::string> syscall_catalog();
constexpr std::uint16_t kOtherSyscall = 40;
constexpr std::uint16_t kSyscallTokenCount = 41;  // catalog + `other`

// Returns catalog id, kOtherSyscall for unknown names.
std::uint16_t syscall_id(const std::string& name);
// Strict lookup: throws ConfigError for names outside the catalog.
std::uint16_t syscall_id_strict(const std::string& name);
const std::string& syscall_name(std::uint16_t id);

struct SyscallEvent {
  double timestamp = 0.0;  // seconds since trace start, microsecond resolution
  std::int32_t pid = 0;
  std::uint16_t name_id = 0;
  Origin origin = Origin::Benign;

  bool operator==(const SyscallEvent&) const = default;
};

struct FlowRecord {
  double timestamp = 0.0;
  Direction direction = Direction::Outbound;
  std::string peer;
  std::uint16_t port = 0;
  std::uint64_t bytes = 0;
  std::uint8_t flags = 0;
  Origin origin = Origin::Benign;

  bool operator==(const FlowRecord&) const = default;
};

struct Trace {
  double duration = 0.0;
  std::vector<SyscallEvent> syscalls;
  std::vector<FlowRecord> flows;
  std::string scenario_id;
  std::uint64_t seed = 0;

  bool operator==(const Trace&) const = default;
};

enum class Label : std::uint8_t { Benign = 0, Malicious = 1 };

struct WindowLabel {
  std::size_t window_index = 0;
  Label label = Label::Benign;
};

struct Violation {
  std::string what;   // human-readable reason
  std::size_t index;  // offending record index (or 0 for trace-level issues)
};

// Empty result iff all Trace invariants hold. Violations are data, not errors.
std::vector<Violation> validate_trace(const Trace& trace);

// Quantize a timestamp to microsecond resolution.
inline double quantize_ts(double t) { return std::round(t * 1e6) / 1e6; }

}  // namespace traceguard

#endif  // TRACEGUARD_TYPES_HPP
