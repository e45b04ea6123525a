#include "traceguard/trace_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace traceguard {

namespace {

char origin_char(Origin o) { return o == Origin::Benign ? 'B' : 'M'; }

Origin parse_origin(const std::string& s, std::size_t line_no) {
  if (s == "B") return Origin::Benign;
  if (s == "M") return Origin::Malware;
  throw DataError("line " + std::to_string(line_no) + ": bad origin '" + s + "'");
}

}  // namespace

void write_trace(const Trace& trace, std::ostream& os) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "#trace v1 duration=%.6f seed=%" PRIu64 " scenario=%s\n",
                trace.duration, trace.seed, trace.scenario_id.c_str());
  os << buf;
  for (const auto& e : trace.syscalls) {
    std::snprintf(buf, sizeof(buf), "S %.6f %d %s %c\n", e.timestamp, e.pid,
                  syscall_name(e.name_id).c_str(), origin_char(e.origin));
    os << buf;
  }
  for (const auto& f : trace.flows) {
    std::snprintf(buf, sizeof(buf), "F %.6f %c %s %u %" PRIu64 " %u %c\n", f.timestamp,
                  f.direction == Direction::Inbound ? 'I' : 'O', f.peer.c_str(),
                  unsigned{f.port}, f.bytes, unsigned{f.flags}, origin_char(f.origin));
    os << buf;
  }
}

void write_trace_file(const Trace& trace, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  write_trace(trace, os);
  if (!os) throw DataError("write failed: " + path);
}

Trace read_trace(std::istream& is) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line);
      std::string tag, ver;
      hs >> tag >> ver;
      if (tag != "#trace" || ver != "v1")
        throw DataError("line " + std::to_string(line_no) + ": bad trace header");
      std::string kv;
      while (hs >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        if (key == "duration") trace.duration = std::stod(val);
        else if (key == "seed") trace.seed = std::stoull(val);
        else if (key == "scenario") trace.scenario_id = val;
      }
      have_header = true;
      continue;
    }
    if (!have_header)
      throw DataError("line " + std::to_string(line_no) + ": missing trace header");
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "S") {
      SyscallEvent e;
      std::string name, origin;
      ls >> e.timestamp >> e.pid >> name >> origin;
      if (!ls) throw DataError("line " + std::to_string(line_no) + ": malformed syscall record");
      e.name_id = syscall_id(name);
      e.origin = parse_origin(origin, line_no);
      trace.syscalls.push_back(e);
    } else if (kind == "F") {
      FlowRecord f;
      std::string dir, origin;
      unsigned port = 0, flags = 0;
      ls >> f.timestamp >> dir >> f.peer >> port >> f.bytes >> flags >> origin;
      if (!ls) throw DataError("line " + std::to_string(line_no) + ": malformed flow record");
      if (dir == "I") f.direction = Direction::Inbound;
      else if (dir == "O") f.direction = Direction::Outbound;
      else throw DataError("line " + std::to_string(line_no) + ": bad direction '" + dir + "'");
      if (port > 65535) throw DataError("line " + std::to_string(line_no) + ": port out of range");
      if (flags > flag::ALL) throw DataError("line " + std::to_string(line_no) + ": bad flag mask");
      f.port = static_cast<std::uint16_t>(port);
      f.flags = static_cast<std::uint8_t>(flags);
      f.origin = parse_origin(origin, line_no);
      trace.flows.push_back(f);
    } else {
      throw DataError("line " + std::to_string(line_no) + ": unrecognized record");
    }
  }
  if (!have_header) throw DataError("empty input: missing trace header");
  return trace;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  return read_trace(is);
}

}  // namespace traceguard
