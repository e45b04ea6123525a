#ifndef TRACEGUARD_SCENARIO_HPP
#define TRACEGUARD_SCENARIO_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "traceguard/types.hpp"

namespace traceguard {

// One benign router daemon: syscall repertoire plus Poisson event/flow rates
// and a log-normal packet size model.
struct ProcessProfile {
  std::string name;
  std::vector<std::pair<std::uint16_t, double>> repertoire;  // (syscall id, probability)
  double event_rate = 0.0;  // events/second
  double flow_rate = 0.0;   // packets/second
  double flow_size_mu = 5.5;
  double flow_size_sigma = 0.5;
  std::vector<std::uint16_t> ports;
  double outbound_prob = 0.5;
};

struct BenignProfile {
  std::vector<ProcessProfile> processes;
  int peer_pool = 6;  // number of distinct LAN peers benign traffic talks to
};

enum class MalwareFamily : std::uint8_t { Keylogger = 0, Ransomware = 1, Cryptominer = 2 };

const char* family_name(MalwareFamily f);
MalwareFamily parse_family(const std::string& s);

struct MalwareSpec {
  MalwareFamily family = MalwareFamily::Keylogger;
  double exfil_interval = 1.0;  // seconds between exfiltrations
  double exfil_size = 16;       // keypresses (keylogger) or bytes-per-burst scale

  // Per-family behavior knobs. Fixed defaults, overridable in the scenario
  // file; none of these come from measured hardware.
  double keylogger_poll_rate = 40.0;   // keypress-poll `read` events/second
  int bytes_per_keypress = 8;          // key code + timestamp
  double ransomware_heartbeat_rate = 2.0;  // filesystem-walk syscalls/second while idle
  double ransomware_throughput = 1.0e6;    // exfil copy bytes/second
  double ransomware_size_sigma = 0.7;      // file size = exfil_size * lognormal(0, sigma)
  double miner_rate = 600.0;           // compute-loop syscalls/second
  std::uint16_t exfil_port = 4444;
  std::string attacker_peer = "attacker";
};

struct Scenario {
  double duration = 60.0;
  std::uint64_t seed = 0;
  BenignProfile benign;
  std::optional<MalwareSpec> malware;
  double malware_start = 0.0;
  std::string id = "scenario";

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Calibrated default router workload: ~200 syscalls/s and ~20 packets/s
// across four daemons.
BenignProfile default_benign_profile();

// Versioned key-value scenario document (schema = 1) with [benign],
// [benign.process.<name>] and [malware] sections.
Scenario parse_scenario(std::istream& is, const std::string& source_name = "<stream>");
Scenario parse_scenario_file(const std::string& path);

// Minimal INI-style document reader shared by scenario and experiment specs.
// Section-qualified keys ("section.key"), '#'/';' comments.
class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::istream& is, const std::string& source_name);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma-separated
  std::vector<double> get_double_list(const std::string& key) const;
  // Keys under a section prefix, in file order, with the prefix stripped.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace traceguard

#endif  // TRACEGUARD_SCENARIO_HPP
