#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <sstream>

#include "traceguard/features.hpp"
#include "traceguard/rng.hpp"
#include "traceguard/scenario.hpp"
#include "traceguard/simulator.hpp"

using namespace traceguard;

namespace {

SyscallEvent ev(double t, std::int32_t pid, const char* name,
                Origin o = Origin::Benign) {
  return {t, pid, syscall_id(name), o};
}

FlowRecord fl(double t, Direction d, const char* peer, std::uint16_t port,
              std::uint64_t bytes, std::uint8_t flags, Origin o = Origin::Benign) {
  return {t, d, peer, port, bytes, flags, o};
}

Trace simulated_trace(std::uint64_t seed, bool malware) {
  Scenario sc;
  sc.duration = 60.0;
  sc.seed = seed;
  sc.benign = default_benign_profile();
  if (malware) {
    sc.malware_start = 10.0;
    MalwareSpec m;
    m.family = MalwareFamily::Keylogger;
    m.exfil_interval = 1.0;
    sc.malware = m;
  }
  return simulate(sc);
}

}  // namespace

TEST_CASE("feature config validation names the field") {
  FeatureConfig c;
  c.window_L = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("window_L"), ConfigError);
  c = {};
  c.bin_m = 2.0;
  c.window_L = 5.0;  // not an integer multiple
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.ngram_n = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("ngram_n"), ConfigError);
  CHECK_NOTHROW(FeatureConfig{}.validate());
}

TEST_CASE("vocabulary insert/lookup and UNK at 0") {
  Vocabulary v(2);
  CHECK(v.size() == 1);
  const std::uint16_t g1[] = {syscall_id("read"), syscall_id("write")};
  const std::uint16_t g2[] = {syscall_id("openat"), syscall_id("close")};
  CHECK(v.insert(g1) == 1);
  CHECK(v.insert(g2) == 2);
  CHECK(v.insert(g1) == 1);  // idempotent
  CHECK(v.lookup(g1) == 1);
  const std::uint16_t unseen[] = {syscall_id("futex"), syscall_id("futex")};
  CHECK(v.lookup(unseen) == 0);
  CHECK(v.gram_name(1) == "read|write");
  CHECK(v.gram_name(0) == "UNK");
}

TEST_CASE("vocabulary text round-trip") {
  Vocabulary v(2);
  const std::uint16_t g1[] = {syscall_id("read"), syscall_id("write")};
  const std::uint16_t g2[] = {syscall_id("futex"), kOtherSyscall};
  v.insert(g1);
  v.insert(g2);
  std::ostringstream os;
  v.write(os);
  std::istringstream is(os.str());
  CHECK(Vocabulary::read(is) == v);

  std::istringstream bad("#vocab v1 n=2\nread\n");
  CHECK_THROWS_WITH_AS(Vocabulary::read(bad), doctest::Contains("length"), DataError);
  std::istringstream dup("#vocab v1 n=2\nread write\nread write\n");
  CHECK_THROWS_WITH_AS(Vocabulary::read(dup), doctest::Contains("duplicate"), DataError);
}

TEST_CASE("syscall bigrams are per-pid within tumbling windows") {
  Trace t;
  t.duration = 4.0;
  // pid 1: read write read | pid 2: openat close. Window 0 only.
  t.syscalls = {ev(0.1, 1, "read"), ev(0.2, 2, "openat"), ev(0.3, 1, "write"),
                ev(0.4, 2, "close"), ev(0.5, 1, "read"),
                // window 1: pid 1 single event -> no bigram
                ev(2.5, 1, "read")};
  FeatureConfig cfg;
  cfg.window_L = 2.0;
  cfg.bin_m = 1.0;
  const Vocabulary vocab = build_vocabulary(std::span<const Trace>(&t, 1), cfg);
  // Bigrams: read|write, write|read, openat|close.
  CHECK(vocab.size() == 4);
  const FeatureMatrix fm = featurize_syscalls(t, vocab, cfg);
  REQUIRE(fm.rows == 2);
  REQUIRE(fm.cols == 4);
  const std::uint16_t rw[] = {syscall_id("read"), syscall_id("write")};
  const std::uint16_t wr[] = {syscall_id("write"), syscall_id("read")};
  const std::uint16_t oc[] = {syscall_id("openat"), syscall_id("close")};
  CHECK(fm.at(0, vocab.lookup(rw)) == 1.0);
  CHECK(fm.at(0, vocab.lookup(wr)) == 1.0);
  CHECK(fm.at(0, vocab.lookup(oc)) == 1.0);
  CHECK(fm.at(0, 0) == 0.0);  // no UNK
  for (std::size_t c = 0; c < fm.cols; ++c) CHECK(fm.at(1, c) == 0.0);

  // No cross-window bigram: pid 1's window-0 tail does not join window 1.
  const std::uint16_t rr[] = {syscall_id("read"), syscall_id("read")};
  CHECK(vocab.lookup(rr) == 0);
}

TEST_CASE("n-gram count-sum invariant on simulated traces") {
  const Trace t = simulated_trace(21, true);
  FeatureConfig cfg;
  const Vocabulary vocab = build_vocabulary(std::span<const Trace>(&t, 1), cfg);
  const FeatureMatrix fm = featurize_syscalls(t, vocab, cfg);
  // Per window: total bigram count = sum over pids of max(0, events-1).
  const auto n_windows = fm.rows;
  std::vector<std::map<std::int32_t, std::size_t>> per_pid(n_windows);
  for (const auto& e : t.syscalls) {
    const auto w = static_cast<std::size_t>(e.timestamp / cfg.window_L);
    if (w < n_windows) per_pid[w][e.pid]++;
  }
  for (std::size_t w = 0; w < n_windows; ++w) {
    double total = 0.0;
    for (std::size_t c = 0; c < fm.cols; ++c) total += fm.at(w, c);
    double expect = 0.0;
    for (const auto& [pid, cnt] : per_pid[w])
      if (cnt >= 2) expect += static_cast<double>(cnt - 1);
    CHECK(total == expect);
  }
}

TEST_CASE("flow features: hand-computed single window") {
  Trace t;
  t.duration = 2.0;
  t.flows = {fl(0.2, Direction::Outbound, "A", 80, 100, flag::ACK),
             fl(0.5, Direction::Outbound, "B", 443, 200, flag::ACK | flag::PSH),
             fl(0.7, Direction::Inbound, "A", 80, 50, flag::ACK),
             fl(1.4, Direction::Outbound, "A", 80, 300, flag::SYN)};
  FeatureConfig cfg;
  cfg.window_L = 2.0;
  cfg.bin_m = 1.0;
  const FeatureMatrix fm = featurize_flows(t, cfg);
  REQUIRE(fm.rows == 1);
  REQUIRE(fm.cols == 30);
  auto col = [&](const std::string& name) {
    for (std::size_t c = 0; c < fm.cols; ++c)
      if (fm.schema[c].name.find(name) != std::string::npos) return fm.at(0, c);
    FAIL("missing column ", name);
    return 0.0;
  };
  // Outbound, bin 0 = {100, 200} at {0.2, 0.5}; bin 1 = {300} at {1.4}.
  CHECK(col("out:pkt_count") == 3.0);
  CHECK(col("out:byte_sum") == 600.0);
  CHECK(col("out:mean_bytes") == doctest::Approx((150.0 + 300.0) / 2));
  CHECK(col("out:std_bytes") == doctest::Approx((50.0 + 0.0) / 2));
  CHECK(col("out:min_bytes") == doctest::Approx((100.0 + 300.0) / 2));
  CHECK(col("out:max_bytes") == doctest::Approx((200.0 + 300.0) / 2));
  CHECK(col("out:iat_mean") == doctest::Approx((0.3 + 0.0) / 2));
  CHECK(col("out:iat_std") == doctest::Approx(0.0));
  CHECK(col("out:syn") == 1.0);
  CHECK(col("out:ack") == 2.0);
  CHECK(col("out:fin") == 0.0);
  CHECK(col("out:psh") == 1.0);
  CHECK(col("out:distinct_peers") == 3.0);  // {A,B} + {A}
  CHECK(col("out:distinct_ports") == 3.0);  // {80,443} + {80}
  // Inbound: single 50-byte packet in bin 0.
  CHECK(col("in:pkt_count") == 1.0);
  CHECK(col("in:byte_sum") == 50.0);
  CHECK(col("in:mean_bytes") == doctest::Approx(25.0));
  CHECK(col("in:std_bytes") == doctest::Approx(0.0));
  CHECK(col("in:ack") == 1.0);
  CHECK(col("in:distinct_peers") == 1.0);
}

TEST_CASE("window labels follow label_min_events") {
  Trace t;
  t.duration = 10.0;
  t.syscalls = {ev(1.0, 1, "read"), ev(6.0, 900, "sendto", Origin::Malware)};
  t.flows = {fl(6.5, Direction::Outbound, "attacker", 4444, 128, flag::ACK,
                Origin::Malware)};
  FeatureConfig cfg;
  const auto labels = compute_labels(t, cfg);
  REQUIRE(labels.size() == 2);
  CHECK(labels[0] == Label::Benign);
  CHECK(labels[1] == Label::Malicious);

  cfg.label_min_events = 3;
  const auto strict = compute_labels(t, cfg);
  CHECK(strict[1] == Label::Benign);
}

TEST_CASE("scaler: zero mean unit variance, constant columns safe") {
  FeatureMatrix fm;
  fm.rows = 4;
  fm.cols = 2;
  fm.data = {1, 7, 2, 7, 3, 7, 4, 7};
  fm.labels.assign(4, Label::Benign);
  fm.schema = {{ColumnKind::Flow, AggKind::Sum, "a"}, {ColumnKind::Flow, AggKind::Sum, "b"}};
  const ScalerStats st = fit_scaler(fm);
  CHECK(st.mean[0] == doctest::Approx(2.5));
  CHECK(st.stddev[0] == doctest::Approx(std::sqrt(1.25)));
  CHECK(st.stddev[1] == 0.0);
  const FeatureMatrix sc = apply_scaler(fm, st);
  double m = 0, v = 0;
  for (std::size_t r = 0; r < 4; ++r) m += sc.at(r, 0);
  CHECK(m == doctest::Approx(0.0));
  for (std::size_t r = 0; r < 4; ++r) v += sc.at(r, 0) * sc.at(r, 0);
  CHECK(v / 4 == doctest::Approx(1.0));
  for (std::size_t r = 0; r < 4; ++r) CHECK(sc.at(r, 1) == 0.0);  // not NaN
}

TEST_CASE("restrict_to_vocab_support folds dropped columns into UNK") {
  FeatureMatrix fm;
  fm.rows = 3;
  fm.cols = 4;
  // cols: UNK, g1, g2 (no train support), flow
  fm.schema = {{ColumnKind::Unk, AggKind::Sum, "sys:UNK"},
               {ColumnKind::Ngram, AggKind::Sum, "sys:a|b"},
               {ColumnKind::Ngram, AggKind::Sum, "sys:c|d"},
               {ColumnKind::Flow, AggKind::Sum, "net:out:pkt_count:sum"}};
  fm.data = {0, 2, 0, 5,    // train row
             1, 0, 0, 6,    // train row
             0, 1, 7, 8};   // test row: g2 active
  fm.labels = {Label::Benign, Label::Benign, Label::Malicious};
  const std::size_t train[] = {0, 1};
  const FeatureMatrix r = restrict_to_vocab_support(fm, train);
  REQUIRE(r.cols == 3);
  CHECK(r.schema[0].name == "sys:UNK");
  CHECK(r.schema[1].name == "sys:a|b");
  CHECK(r.schema[2].name == "net:out:pkt_count:sum");
  CHECK(r.at(2, 0) == 7.0);  // folded into UNK
  CHECK(r.at(2, 1) == 1.0);
  CHECK(r.at(2, 2) == 8.0);
  CHECK(r.at(0, 0) == 0.0);
  // Row sums of syscall columns are preserved.
  for (std::size_t row = 0; row < 3; ++row) {
    double before = fm.at(row, 0) + fm.at(row, 1) + fm.at(row, 2);
    double after = r.at(row, 0) + r.at(row, 1);
    CHECK(before == after);
  }
}

TEST_CASE("combine checks window and labels") {
  const Trace t = simulated_trace(31, true);
  FeatureConfig cfg;
  const Vocabulary vocab = build_vocabulary(std::span<const Trace>(&t, 1), cfg);
  const FeatureMatrix sys = featurize_syscalls(t, vocab, cfg);
  const FeatureMatrix net = featurize_flows(t, cfg);
  const FeatureMatrix both = combine(sys, net);
  CHECK(both.cols == sys.cols + net.cols);
  CHECK(both.rows == sys.rows);
  CHECK(both.labels == sys.labels);
  CHECK(both.schema_fingerprint() != sys.schema_fingerprint());

  FeatureConfig other = cfg;
  other.window_L = 10.0;
  const FeatureMatrix net10 = featurize_flows(t, other);
  CHECK_THROWS_AS(combine(sys, net10), DataError);
}

TEST_CASE("feature file round-trip is exact") {
  const Trace t = simulated_trace(41, true);
  FeatureConfig cfg;
  const Vocabulary vocab = build_vocabulary(std::span<const Trace>(&t, 1), cfg);
  const FeatureMatrix fm = featurize(t, &vocab, cfg);
  std::ostringstream os;
  write_features(fm, os);
  std::istringstream is(os.str());
  const FeatureMatrix back = read_features(is);
  CHECK(back.rows == fm.rows);
  CHECK(back.cols == fm.cols);
  CHECK(back.data == fm.data);
  CHECK(back.labels == fm.labels);
  CHECK(back.schema == fm.schema);
  CHECK(back.schema_fingerprint() == fm.schema_fingerprint());

  std::istringstream bad("#features v1 rows=zzz\n");
  CHECK_THROWS_WITH_AS(read_features(bad), doctest::Contains("header"), DataError);
}
