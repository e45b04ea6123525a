#include "traceguard/types.hpp"

#include <array>
#include <unordered_map>

namespace traceguard {

namespace {

const std::array<std::string, 40> kCatalog = {
    "read",        "write",      "openat",     "close",       "stat",
    "fstat",       "lstat",      "poll",       "select",      "ioctl",
    "fcntl",       "mmap",       "munmap",     "brk",         "nanosleep",
    "sched_yield", "futex",      "clock_gettime", "gettimeofday", "getpid",
    "socket",      "connect",    "accept",     "bind",        "listen",
    "sendto",      "recvfrom",   "epoll_wait", "epoll_ctl",   "rename",
    "unlink",      "mkdir",      "chmod",      "dup",         "pipe",
    "fork",        "execve",     "wait4",      "exit_group",  "chdir"};

const std::string kOtherName = "other";

const std::unordered_map<std::string, std::uint16_t>& name_index() {
  static const auto* map = [] {
    auto* m = new std::unordered_map<std::string, std::uint16_t>();
    for (std::uint16_t i = 0; i < kCatalog.size(); ++i) (*m)[kCatalog[i]] = i;
    return m;
  }();
  return *map;
}

}  // namespace

std::span<const std::string> syscall_catalog() {
  return {kCatalog.data(), kCatalog.size()};
}

std::uint16_t syscall_id(const std::string& name) {
  auto it = name_index().find(name);
  return it == name_index().end() ? kOtherSyscall : it->second;
}

std::uint16_t syscall_id_strict(const std::string& name) {
  auto it = name_index().find(name);
  if (it == name_index().end())
    throw ConfigError("syscall name not in catalog: " + name);
  return it->second;
}

const std::string& syscall_name(std::uint16_t id) {
  if (id == kOtherSyscall) return kOtherName;
  if (id >= kCatalog.size()) throw DataError("syscall id out of range");
  return kCatalog[id];
}

std::vector<Violation> validate_trace(const Trace& trace) {
  std::vector<Violation> out;
  if (trace.duration <= 0.0)
    out.push_back({"duration must be positive", 0});
  for (std::size_t i = 0; i < trace.syscalls.size(); ++i) {
    const auto& e = trace.syscalls[i];
    if (e.timestamp < 0.0) {
      out.push_back({"syscall timestamp negative", i});
      break;
    }
    if (e.timestamp > trace.duration) {
      out.push_back({"syscall timestamp exceeds duration", i});
      break;
    }
  }
  for (std::size_t i = 0; i < trace.syscalls.size(); ++i) {
    if (trace.syscalls[i].name_id >= kSyscallTokenCount) {
      out.push_back({"syscall name id outside catalog", i});
      break;
    }
  }
  for (std::size_t i = 1; i < trace.syscalls.size(); ++i) {
    const auto& a = trace.syscalls[i - 1];
    const auto& b = trace.syscalls[i];
    if (b.timestamp < a.timestamp ||
        (b.timestamp == a.timestamp && b.pid < a.pid)) {
      out.push_back({"syscall ordering violated", i});
      break;
    }
  }
  for (std::size_t i = 0; i < trace.flows.size(); ++i) {
    const auto& f = trace.flows[i];
    if (f.timestamp < 0.0) {
      out.push_back({"flow timestamp negative", i});
      break;
    }
    if (f.timestamp > trace.duration) {
      out.push_back({"flow timestamp exceeds duration", i});
      break;
    }
  }
  for (std::size_t i = 1; i < trace.flows.size(); ++i) {
    if (trace.flows[i].timestamp < trace.flows[i - 1].timestamp) {
      out.push_back({"flow ordering violated", i});
      break;
    }
  }
  return out;
}

}  // namespace traceguard
