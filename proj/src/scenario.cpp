#include "traceguard/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace traceguard {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::pair<std::uint16_t, double>> parse_repertoire(const std::string& spec,
                                                              const std::string& field) {
  std::vector<std::pair<std::uint16_t, double>> out;
  std::istringstream ss(spec);
  std::string item;
  double total = 0.0;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError(field + ": expected name:weight, got '" + item + "'");
    const std::string name = trim(item.substr(0, colon));
    const double w = std::stod(item.substr(colon + 1));
    if (w < 0.0) throw ConfigError(field + ": negative weight for " + name);
    out.emplace_back(syscall_id_strict(name), w);
    total += w;
  }
  if (out.empty() || total <= 0.0)
    throw ConfigError(field + ": empty syscall repertoire");
  for (auto& [id, w] : out) w /= total;
  return out;
}

}  // namespace

const char* family_name(MalwareFamily f) {
  switch (f) {
    case MalwareFamily::Keylogger: return "keylogger";
    case MalwareFamily::Ransomware: return "ransomware";
    case MalwareFamily::Cryptominer: return "cryptominer";
  }
  return "?";
}

MalwareFamily parse_family(const std::string& s) {
  if (s == "keylogger") return MalwareFamily::Keylogger;
  if (s == "ransomware") return MalwareFamily::Ransomware;
  if (s == "cryptominer") return MalwareFamily::Cryptominer;
  throw ConfigError("malware.family: unknown family '" + s + "'");
}

void Scenario::validate() const {
  if (duration <= 0.0) throw ConfigError("duration: must be positive");
  if (benign.peer_pool < 1) throw ConfigError("benign.peer_pool: must be >= 1");
  if (benign.processes.empty()) throw ConfigError("benign: no processes defined");
  for (const auto& p : benign.processes) {
    const std::string where = "benign.process." + p.name;
    if (p.event_rate < 0.0) throw ConfigError(where + ".event_rate: negative rate");
    if (p.flow_rate < 0.0) throw ConfigError(where + ".flow_rate: negative rate");
    if (p.flow_size_sigma < 0.0) throw ConfigError(where + ".flow_size_sigma: negative");
    if (p.outbound_prob < 0.0 || p.outbound_prob > 1.0)
      throw ConfigError(where + ".outbound_prob: must be in [0,1]");
    double total = 0.0;
    for (const auto& [id, w] : p.repertoire) total += w;
    if (std::abs(total - 1.0) > 1e-9)
      throw ConfigError(where + ".syscalls: distribution must sum to 1");
  }
  if (malware) {
    if (malware->exfil_interval <= 0.0)
      throw ConfigError("malware.exfil_interval: must be > 0");
    if (malware->exfil_size < 1.0)
      throw ConfigError("malware.exfil_size: must be >= 1");
    if (malware_start < 0.0 || malware_start >= duration)
      throw ConfigError("malware_start: must satisfy 0 <= malware_start < duration");
  }
}

BenignProfile default_benign_profile() {
  BenignProfile b;
  b.peer_pool = 6;
  {
    ProcessProfile p;
    p.name = "dnsmasq";
    p.repertoire = parse_repertoire(
        "recvfrom:0.22,sendto:0.22,read:0.12,write:0.10,poll:0.16,"
        "clock_gettime:0.10,socket:0.03,close:0.05", "default.dnsmasq");
    p.event_rate = 60.0;
    p.flow_rate = 8.0;
    p.flow_size_mu = 5.3;
    p.flow_size_sigma = 0.45;
    p.ports = {53, 67};
    p.outbound_prob = 0.5;
    b.processes.push_back(std::move(p));
  }
  {
    ProcessProfile p;
    p.name = "hostapd";
    p.repertoire = parse_repertoire(
        "ioctl:0.30,read:0.20,write:0.15,select:0.20,clock_gettime:0.15",
        "default.hostapd");
    p.event_rate = 50.0;
    p.flow_rate = 4.0;
    p.flow_size_mu = 5.0;
    p.flow_size_sigma = 0.4;
    p.ports = {67};
    p.outbound_prob = 0.4;
    b.processes.push_back(std::move(p));
  }
  {
    ProcessProfile p;
    p.name = "webportal";
    p.repertoire = parse_repertoire(
        "accept:0.05,recvfrom:0.15,sendto:0.15,read:0.20,write:0.18,"
        "openat:0.08,close:0.08,stat:0.06,fstat:0.05", "default.webportal");
    p.event_rate = 60.0;
    p.flow_rate = 6.0;
    p.flow_size_mu = 6.0;
    p.flow_size_sigma = 0.6;
    p.ports = {80, 443};
    p.outbound_prob = 0.5;
    b.processes.push_back(std::move(p));
  }
  {
    ProcessProfile p;
    p.name = "housekeeper";
    p.repertoire = parse_repertoire(
        "futex:0.25,clock_gettime:0.25,epoll_wait:0.20,nanosleep:0.15,brk:0.15",
        "default.housekeeper");
    p.event_rate = 30.0;
    p.flow_rate = 2.0;
    p.flow_size_mu = 5.0;
    p.flow_size_sigma = 0.3;
    p.ports = {123};
    p.outbound_prob = 0.6;
    b.processes.push_back(std::move(p));
  }
  return b;
}

KeyValueDoc KeyValueDoc::parse(std::istream& is, const std::string& source_name) {
  KeyValueDoc doc;
  doc.source_ = source_name;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(source_name + ":" + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    if (doc.values_.count(key))
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": duplicate key " + key);
    doc.values_[key] = val;
    doc.order_.push_back(key);
  }
  return doc;
}

bool KeyValueDoc::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KeyValueDoc::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string KeyValueDoc::require(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError(source_ + ": missing required key '" + key + "'");
  return it->second;
}

double KeyValueDoc::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ConfigError(source_ + ": key '" + key + "' is not a number");
  }
}

std::int64_t KeyValueDoc::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw ConfigError(source_ + ": key '" + key + "' is not an integer");
  }
}

std::vector<std::string> KeyValueDoc::get_list(const std::string& key) const {
  std::vector<std::string> out;
  auto it = values_.find(key);
  if (it == values_.end()) return out;
  std::istringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> KeyValueDoc::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : get_list(key)) {
    try {
      out.push_back(std::stod(s));
    } catch (const std::exception&) {
      throw ConfigError(source_ + ": key '" + key + "' has non-numeric item '" + s + "'");
    }
  }
  return out;
}

std::vector<std::string> KeyValueDoc::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& k : order_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k.substr(prefix.size()));
  return out;
}

Scenario parse_scenario(std::istream& is, const std::string& source_name) {
  const KeyValueDoc doc = KeyValueDoc::parse(is, source_name);
  const auto schema = doc.get_int("schema", 1);
  if (schema != 1)
    throw ConfigError(source_name + ": unsupported schema version " +
                      std::to_string(schema));
  Scenario sc;
  sc.duration = doc.get_double("duration", 60.0);
  sc.seed = static_cast<std::uint64_t>(doc.get_int("seed", 0));
  sc.id = doc.get("id", source_name == "<stream>" ? "scenario" : source_name);
  sc.malware_start = doc.get_double("malware_start", 0.0);

  // Per-process sections override the default profile entirely when present.
  std::vector<std::string> proc_names;
  for (const auto& sub : doc.keys_with_prefix("benign.process.")) {
    auto dot = sub.find('.');
    if (dot == std::string::npos) continue;
    const std::string name = sub.substr(0, dot);
    if (std::find(proc_names.begin(), proc_names.end(), name) == proc_names.end())
      proc_names.push_back(name);
  }
  if (proc_names.empty()) {
    sc.benign = default_benign_profile();
  } else {
    for (const auto& name : proc_names) {
      const std::string pfx = "benign.process." + name + ".";
      ProcessProfile p;
      p.name = name;
      p.repertoire = parse_repertoire(doc.require(pfx + "syscalls"), pfx + "syscalls");
      p.event_rate = doc.get_double(pfx + "event_rate", 0.0);
      p.flow_rate = doc.get_double(pfx + "flow_rate", 0.0);
      p.flow_size_mu = doc.get_double(pfx + "flow_size_mu", 5.5);
      p.flow_size_sigma = doc.get_double(pfx + "flow_size_sigma", 0.5);
      p.outbound_prob = doc.get_double(pfx + "outbound_prob", 0.5);
      for (const auto& port : doc.get_list(pfx + "ports")) {
        const long v = std::stol(port);
        if (v < 0 || v > 65535) throw ConfigError(pfx + "ports: port out of range");
        p.ports.push_back(static_cast<std::uint16_t>(v));
      }
      sc.benign.processes.push_back(std::move(p));
    }
  }
  sc.benign.peer_pool = static_cast<int>(doc.get_int("benign.peer_pool", sc.benign.peer_pool));

  if (doc.has("malware.family")) {
    MalwareSpec m;
    m.family = parse_family(doc.require("malware.family"));
    m.exfil_interval = doc.get_double("malware.exfil_interval", m.exfil_interval);
    m.exfil_size = doc.get_double("malware.exfil_size", m.exfil_size);
    m.keylogger_poll_rate = doc.get_double("malware.keylogger_poll_rate", m.keylogger_poll_rate);
    m.bytes_per_keypress =
        static_cast<int>(doc.get_int("malware.bytes_per_keypress", m.bytes_per_keypress));
    m.ransomware_heartbeat_rate =
        doc.get_double("malware.heartbeat_rate", m.ransomware_heartbeat_rate);
    m.ransomware_throughput = doc.get_double("malware.throughput", m.ransomware_throughput);
    m.ransomware_size_sigma = doc.get_double("malware.size_sigma", m.ransomware_size_sigma);
    m.miner_rate = doc.get_double("malware.miner_rate", m.miner_rate);
    m.exfil_port = static_cast<std::uint16_t>(doc.get_int("malware.exfil_port", m.exfil_port));
    m.attacker_peer = doc.get("malware.attacker_peer", m.attacker_peer);
    sc.malware = m;
  }
  sc.validate();
  return sc;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scenario file: " + path);
  return parse_scenario(is, path);
}

}  // namespace traceguard
