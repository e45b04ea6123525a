#include "traceguard/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <sstream>

namespace traceguard {

namespace {

std::string normalize_header(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '-') out.push_back('_');
    else if (c != '"' && c != '\r') out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

const std::map<std::string, std::vector<std::string>>& alias_table() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"timestamp", {"timestamp", "ts", "time", "flow_start"}},
      {"direction", {"direction", "dir"}},
      {"src", {"src", "src_ip", "source"}},
      {"dst", {"dst", "dst_ip", "destination"}},
      {"port", {"port", "dst_port", "dport"}},
      {"bytes",
       {"bytes", "len", "length", "size", "pkt_len", "packet_length",
        "totlen_fwd_pkts", "total_length_of_fwd_packets"}},
      {"flags", {"flags", "tcp_flags", "flag"}},
  };
  return table;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

std::uint8_t parse_flags_cell(const std::string& raw, std::size_t line_no) {
  if (raw.empty()) return 0;
  // Numeric mask or letter/name forms ("SA", "SYN|ACK").
  if (std::all_of(raw.begin(), raw.end(), [](char c) { return std::isdigit(c); })) {
    const long v = std::stol(raw);
    if (v < 0 || v > flag::ALL)
      throw DataError("row " + std::to_string(line_no) + ", column flags: bad mask");
    return static_cast<std::uint8_t>(v);
  }
  std::uint8_t f = 0;
  std::string upper;
  for (char c : raw) upper.push_back(static_cast<char>(std::toupper(c)));
  if (upper.find("SYN") != std::string::npos) f |= flag::SYN;
  if (upper.find("ACK") != std::string::npos) f |= flag::ACK;
  if (upper.find("FIN") != std::string::npos) f |= flag::FIN;
  if (upper.find("RST") != std::string::npos) f |= flag::RST;
  if (upper.find("PSH") != std::string::npos) f |= flag::PSH;
  if (f == 0 && upper.find('|') == std::string::npos && upper.size() <= 5) {
    for (char c : upper) {
      switch (c) {
        case 'S': f |= flag::SYN; break;
        case 'A': f |= flag::ACK; break;
        case 'F': f |= flag::FIN; break;
        case 'R': f |= flag::RST; break;
        case 'P': f |= flag::PSH; break;
        default: break;
      }
    }
  }
  return f;
}

void rebase_timestamps(double earliest, std::vector<SyscallEvent>& events) {
  for (auto& e : events) e.timestamp = quantize_ts(e.timestamp - earliest);
}

}  // namespace

std::vector<SyscallEvent> parse_syscall_log(std::istream& is, IngestStats* stats) {
  std::vector<SyscallEvent> events;
  std::string line;
  std::size_t line_no = 0;
  std::size_t other_count = 0;
  double earliest = 0.0;
  bool have_any = false;
  bool have_external = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    SyscallEvent e;
    std::string name;
    if (line.rfind("S ", 0) == 0) {
      std::string kind, origin;
      ls >> kind >> e.timestamp >> e.pid >> name >> origin;
      if (!ls || (origin != "B" && origin != "M"))
        throw DataError("line " + std::to_string(line_no) + ": unrecognized record");
      e.origin = origin == "M" ? Origin::Malware : Origin::Benign;
    } else {
      // strace-style: PID TIME syscall(args...) = ret
      std::string call;
      ls >> e.pid >> e.timestamp >> call;
      auto paren = call.find('(');
      if (!ls || paren == std::string::npos || paren == 0 || e.pid <= 0)
        throw DataError("line " + std::to_string(line_no) + ": unrecognized record");
      name = call.substr(0, paren);
      e.origin = Origin::Benign;
      have_external = true;
    }
    const std::uint16_t id = syscall_id(name);
    if (id == kOtherSyscall) ++other_count;
    e.name_id = id;
    if (!have_any || e.timestamp < earliest) earliest = e.timestamp;
    have_any = true;
    events.push_back(std::move(e));
  }
  // Native S logs keep their timestamps (round-trip identity with the trace
  // writer); external strace captures use absolute clocks and are re-based so
  // the earliest record lands at t = 0.
  if (have_any && have_external) rebase_timestamps(earliest, events);
  std::stable_sort(events.begin(), events.end(),
                   [](const SyscallEvent& a, const SyscallEvent& b) {
                     return a.timestamp < b.timestamp;
                   });
  if (stats) {
    stats->lines = line_no;
    stats->other_mapped = other_count;
  }
  return events;
}

std::vector<FlowRecord> parse_flow_csv(std::istream& is, const std::string& router_host,
                                       IngestStats* stats) {
  std::string line;
  if (!std::getline(is, line)) return {};
  const auto header = split_csv_row(line);
  std::map<std::string, int> logical;  // logical column -> index
  std::size_t ignored = 0;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string norm = normalize_header(header[i]);
    bool matched = false;
    for (const auto& [key, aliases] : alias_table()) {
      if (std::find(aliases.begin(), aliases.end(), norm) != aliases.end() &&
          !logical.count(key)) {
        logical[key] = static_cast<int>(i);
        matched = true;
        break;
      }
    }
    if (!matched) ++ignored;
  }
  std::vector<std::string> missing;
  for (const char* req : {"timestamp", "port", "bytes", "flags"})
    if (!logical.count(req)) missing.push_back(req);
  const bool has_dir = logical.count("direction") > 0;
  const bool has_endpoints = logical.count("src") && logical.count("dst");
  if (!has_dir && !has_endpoints) missing.push_back("direction");
  if (!missing.empty()) {
    std::string msg = "flow CSV missing required columns:";
    for (const auto& m : missing) msg += " " + m;
    throw DataError(msg);
  }
  if (!has_dir && router_host.empty())
    throw DataError("flow CSV uses src/dst columns; router host id required");

  std::vector<FlowRecord> flows;
  std::size_t line_no = 1;
  double earliest = 0.0;
  bool have_any = false;
  auto cell = [&](const std::vector<std::string>& row, const char* key) -> const std::string& {
    const int idx = logical.at(key);
    if (idx >= static_cast<int>(row.size()))
      throw DataError("row " + std::to_string(line_no) + ": missing column " + key);
    return row[static_cast<std::size_t>(idx)];
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto row = split_csv_row(line);
    FlowRecord f;
    try {
      f.timestamp = std::stod(cell(row, "timestamp"));
      const long port = std::stol(cell(row, "port"));
      if (port < 0 || port > 65535) throw std::out_of_range("port");
      f.port = static_cast<std::uint16_t>(port);
      const double bytes = std::stod(cell(row, "bytes"));
      if (bytes < 0) throw std::out_of_range("bytes");
      f.bytes = static_cast<std::uint64_t>(bytes);
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError("row " + std::to_string(line_no) + ": unparsable numeric cell");
    }
    f.flags = parse_flags_cell(cell(row, "flags"), line_no);
    if (has_dir) {
      std::string d = normalize_header(cell(row, "direction"));
      if (d == "o" || d == "out" || d == "outbound") f.direction = Direction::Outbound;
      else if (d == "i" || d == "in" || d == "inbound") f.direction = Direction::Inbound;
      else throw DataError("row " + std::to_string(line_no) + ", column direction: bad value");
      f.peer = logical.count("dst") ? cell(row, "dst") : "peer";
    } else {
      const std::string& src = cell(row, "src");
      const std::string& dst = cell(row, "dst");
      f.direction = (src == router_host) ? Direction::Outbound : Direction::Inbound;
      f.peer = (f.direction == Direction::Outbound) ? dst : src;
    }
    f.origin = Origin::Benign;
    if (!have_any || f.timestamp < earliest) earliest = f.timestamp;
    have_any = true;
    flows.push_back(std::move(f));
  }
  for (auto& f : flows) f.timestamp = quantize_ts(f.timestamp - earliest);
  std::stable_sort(flows.begin(), flows.end(), [](const FlowRecord& a, const FlowRecord& b) {
    return a.timestamp < b.timestamp;
  });
  if (stats) {
    stats->lines = line_no;
    stats->ignored_columns = ignored;
  }
  return flows;
}

}  // namespace traceguard
