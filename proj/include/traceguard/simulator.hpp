#ifndef TRACEGUARD_SIMULATOR_HPP
#define TRACEGUARD_SIMULATOR_HPP

#include "traceguard/rng.hpp"
#include "traceguard/scenario.hpp"
#include "traceguard/types.hpp"

namespace traceguard {

// Active period of a malware emitter within the trace timeline.
struct ActiveWindow {
  double start = 0.0;
  double end = 0.0;
};

constexpr std::int32_t kMalwarePid = 900;

// Deterministic trace synthesis. Identical (scenario, seed) yields an
// identical Trace; malware-origin records appear only at t >= malware_start.
Trace simulate(const Scenario& scenario);

// Family emitters, exposed for direct testing. All emitted records carry
// origin = Malware and timestamps in [window.start, window.end).
void emit_keylogger(const MalwareSpec& spec, Rng& rng, ActiveWindow window,
                    std::vector<SyscallEvent>& events, std::vector<FlowRecord>& flows);
void emit_ransomware(const MalwareSpec& spec, Rng& rng, ActiveWindow window,
                     std::vector<SyscallEvent>& events, std::vector<FlowRecord>& flows);
void emit_cryptominer(const MalwareSpec& spec, Rng& rng, ActiveWindow window,
                      std::vector<SyscallEvent>& events, std::vector<FlowRecord>& flows);

}  // namespace traceguard

#endif  // TRACEGUARD_SIMULATOR_HPP
