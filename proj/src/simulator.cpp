#include "traceguard/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace traceguard {

namespace {

constexpr double kMtu = 1448.0;  // exfil copy packet payload size

std::uint16_t sample_token(const std::vector<std::pair<std::uint16_t, double>>& dist,
                           Rng& rng) {
  double u = rng.uniform();
  for (const auto& [id, w] : dist) {
    if (u < w) return id;
    u -= w;
  }
  return dist.back().first;
}

std::uint8_t sample_benign_flags(Rng& rng) {
  std::uint8_t f = flag::ACK;
  if (rng.uniform() < 0.05) f |= flag::SYN;
  if (rng.uniform() < 0.05) f |= flag::FIN;
  if (rng.uniform() < 0.01) f |= flag::RST;
  if (rng.uniform() < 0.30) f |= flag::PSH;
  return f;
}

std::uint64_t clamp_bytes(double b) {
  return static_cast<std::uint64_t>(std::min(9000.0, std::max(64.0, b)));
}

void emit_benign_process(const ProcessProfile& p, int peer_pool, std::int32_t pid,
                         std::uint64_t seed, double duration,
                         std::vector<SyscallEvent>& events,
                         std::vector<FlowRecord>& flows) {
  {
    Rng rng(derive_seed(seed, "benign-sys:" + p.name));
    if (p.event_rate > 0.0) {
      double t = rng.exponential(p.event_rate);
      while (t < duration) {
        events.push_back({quantize_ts(t), pid, sample_token(p.repertoire, rng),
                          Origin::Benign});
        t += rng.exponential(p.event_rate);
      }
    }
  }
  {
    Rng rng(derive_seed(seed, "benign-net:" + p.name));
    if (p.flow_rate > 0.0) {
      double t = rng.exponential(p.flow_rate);
      while (t < duration) {
        FlowRecord f;
        f.timestamp = quantize_ts(t);
        f.direction = rng.uniform() < p.outbound_prob ? Direction::Outbound
                                                      : Direction::Inbound;
        f.peer = "lan" + std::to_string(1 + rng.uniform_int(peer_pool));
        f.port = p.ports.empty() ? static_cast<std::uint16_t>(1024 + rng.uniform_int(64))
                                 : p.ports[rng.uniform_int(p.ports.size())];
        f.bytes = clamp_bytes(rng.lognormal(p.flow_size_mu, p.flow_size_sigma));
        f.flags = sample_benign_flags(rng);
        f.origin = Origin::Benign;
        flows.push_back(std::move(f));
        t += rng.exponential(p.flow_rate);
      }
    }
  }
}

void push_malware_event(std::vector<SyscallEvent>& events, double t, const char* name) {
  events.push_back({quantize_ts(t), kMalwarePid, syscall_id(name), Origin::Malware});
}

FlowRecord exfil_flow(const MalwareSpec& spec, double t, std::uint64_t bytes) {
  FlowRecord f;
  f.timestamp = quantize_ts(t);
  f.direction = Direction::Outbound;
  f.peer = spec.attacker_peer;
  f.port = spec.exfil_port;
  f.bytes = bytes;
  f.flags = flag::ACK | flag::PSH;
  f.origin = Origin::Malware;
  return f;
}

}  // namespace

void emit_keylogger(const MalwareSpec& spec, Rng& rng, ActiveWindow w,
                    std::vector<SyscallEvent>& events, std::vector<FlowRecord>& flows) {
  // Keypress polling: continuous low-rate read stream.
  double t = w.start + rng.exponential(spec.keylogger_poll_rate);
  while (t < w.end) {
    push_malware_event(events, t, "read");
    t += rng.exponential(spec.keylogger_poll_rate);
  }
  // Buffer flush every exfil_interval: a few sendto calls then one small packet.
  for (double te = w.start; te < w.end; te += spec.exfil_interval) {
    for (int i = 3; i >= 1; --i) {
      const double ts = te - 5e-4 * i;
      if (ts >= w.start) push_malware_event(events, ts, "sendto");
    }
    flows.push_back(exfil_flow(
        spec, te, static_cast<std::uint64_t>(spec.exfil_size) * spec.bytes_per_keypress));
  }
}

void emit_ransomware(const MalwareSpec& spec, Rng& rng, ActiveWindow w,
                     std::vector<SyscallEvent>& events, std::vector<FlowRecord>& flows) {
  // Filesystem walk heartbeat while idle between files.
  {
    Rng hb(derive_seed(rng.next_u64(), "ransomware-heartbeat"));
    double t = w.start + hb.exponential(spec.ransomware_heartbeat_rate);
    bool stat_next = true;
    while (t < w.end) {
      push_malware_event(events, t, stat_next ? "stat" : "poll");
      stat_next = !stat_next;
      t += hb.exponential(spec.ransomware_heartbeat_rate);
    }
  }
  // Per-file copy bursts: read/write chunk loop plus an MTU-sized packet train
  // whose byte sum equals the file size, then idle for exfil_interval.
  double t = w.start;
  while (t < w.end) {
    const double file_size =
        std::max(1024.0, spec.exfil_size * rng.lognormal(0.0, spec.ransomware_size_sigma));
    const double burst_dur = std::max(1e-3, file_size / spec.ransomware_throughput);
    const double burst_end = std::min(t + burst_dur, w.end);
    const int chunks = static_cast<int>(std::ceil(file_size / 4096.0));
    const int n_sys = 3 + 2 * chunks;  // openat, (read,write)*chunks, rename, close
    int si = 0;
    auto sys_t = [&](int i) {
      return t + (burst_end - t) * (n_sys <= 1 ? 0.0 : double(i) / (n_sys - 1));
    };
    push_malware_event(events, sys_t(si++), "openat");
    for (int c = 0; c < chunks; ++c) {
      push_malware_event(events, sys_t(si++), "read");
      push_malware_event(events, sys_t(si++), "write");
    }
    push_malware_event(events, sys_t(si++), "rename");
    push_malware_event(events, sys_t(si++), "close");
    const int n_pkts = static_cast<int>(std::ceil(file_size / kMtu));
    std::uint64_t remaining = static_cast<std::uint64_t>(file_size);
    for (int pkt = 0; pkt < n_pkts; ++pkt) {
      const double pt = t + (burst_end - t) * (n_pkts <= 1 ? 0.0 : double(pkt) / (n_pkts - 1));
      const std::uint64_t sz = std::min<std::uint64_t>(remaining, kMtu);
      FlowRecord f = exfil_flow(spec, pt, sz);
      f.port = 22;  // file copies ride the remote-copy channel
      flows.push_back(std::move(f));
      remaining -= sz;
    }
    t += burst_dur + spec.exfil_interval;
  }
}

void emit_cryptominer(const MalwareSpec& spec, Rng& rng, ActiveWindow w,
                      std::vector<SyscallEvent>& events, std::vector<FlowRecord>& flows) {
  static const std::vector<std::pair<std::uint16_t, double>> kMinerMix = {
      {syscall_id("clock_gettime"), 0.40},
      {syscall_id("futex"), 0.35},
      {syscall_id("sched_yield"), 0.25}};
  // CPU-bound mining loop runs for the whole active period, independent of
  // the exfiltration schedule.
  double t = w.start + rng.exponential(spec.miner_rate);
  while (t < w.end) {
    events.push_back({quantize_ts(t), kMalwarePid, sample_token(kMinerMix, rng),
                      Origin::Malware});
    t += rng.exponential(spec.miner_rate);
  }
  // One tiny hash-report packet per interval.
  for (double te = w.start; te < w.end; te += spec.exfil_interval) {
    if (te > w.start) push_malware_event(events, te - 5e-4, "sendto");
    flows.push_back(exfil_flow(spec, te, 64 + rng.uniform_int(128)));
  }
}

Trace simulate(const Scenario& scenario) {
  scenario.validate();
  Trace trace;
  trace.duration = scenario.duration;
  trace.scenario_id = scenario.id;
  trace.seed = scenario.seed;

  std::int32_t pid = 100;
  for (const auto& p : scenario.benign.processes)
    emit_benign_process(p, scenario.benign.peer_pool, pid++, scenario.seed,
                        scenario.duration, trace.syscalls, trace.flows);

  if (scenario.malware) {
    const MalwareSpec& m = *scenario.malware;
    Rng rng(derive_seed(scenario.seed, std::string("malware:") + family_name(m.family)));
    ActiveWindow w{scenario.malware_start, scenario.duration};
    switch (m.family) {
      case MalwareFamily::Keylogger: emit_keylogger(m, rng, w, trace.syscalls, trace.flows); break;
      case MalwareFamily::Ransomware: emit_ransomware(m, rng, w, trace.syscalls, trace.flows); break;
      case MalwareFamily::Cryptominer: emit_cryptominer(m, rng, w, trace.syscalls, trace.flows); break;
    }
  }

  std::stable_sort(trace.syscalls.begin(), trace.syscalls.end(),
                   [](const SyscallEvent& a, const SyscallEvent& b) {
                     if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                     return a.pid < b.pid;
                   });
  std::stable_sort(trace.flows.begin(), trace.flows.end(),
                   [](const FlowRecord& a, const FlowRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  return trace;
}

}  // namespace traceguard
