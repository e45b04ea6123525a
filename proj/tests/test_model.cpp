#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "traceguard/features.hpp"
#include "traceguard/model.hpp"
#include "traceguard/rng.hpp"
#include "traceguard/scenario.hpp"
#include "traceguard/simulator.hpp"

using namespace traceguard;

namespace {

FeatureMatrix benign_features(std::uint64_t seed, Vocabulary* vocab_out = nullptr) {
  Scenario sc;
  sc.duration = 120.0;
  sc.seed = seed;
  sc.benign = default_benign_profile();
  const Trace t = simulate(sc);
  FeatureConfig cfg;
  static Vocabulary vocab;
  vocab = build_vocabulary(std::span<const Trace>(&t, 1), cfg);
  if (vocab_out) *vocab_out = vocab;
  return featurize(t, &vocab, cfg);
}

}  // namespace

TEST_CASE("train_detector refuses contaminated or tiny input") {
  FeatureMatrix fm = benign_features(2);
  fm.labels[3] = Label::Malicious;
  CHECK_THROWS_WITH_AS(train_detector(fm, SvmConfig{}), doctest::Contains("label"),
                       DataError);

  FeatureMatrix tiny = benign_features(2);
  tiny.rows = 5;
  tiny.data.resize(5 * tiny.cols);
  tiny.labels.resize(5);
  CHECK_THROWS_AS(train_detector(tiny, SvmConfig{}), DataError);
}

TEST_CASE("score_detector names differing columns on schema mismatch") {
  const FeatureMatrix fm = benign_features(3);
  const DetectorModel model = train_detector(fm, SvmConfig{});
  FeatureMatrix other = fm;
  other.schema[1].name = "sys:bogus|gram";
  try {
    score_detector(model, other);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("serialize/deserialize round-trip is bit-exact") {
  Vocabulary vocab;
  const FeatureMatrix fm = benign_features(4, &vocab);
  const DetectorModel model = train_detector(fm, SvmConfig{}, 0.95, &vocab, 4);
  const std::string bytes = serialize_model(model);
  const DetectorModel back = deserialize_model(bytes);
  CHECK(serialize_model(back) == bytes);
  CHECK(back.svm.alpha == model.svm.alpha);
  CHECK(back.svm.rho == model.svm.rho);
  CHECK(back.pca.components == model.pca.components);
  CHECK(back.scaler == model.scaler);
  CHECK(back.schema_fp == model.schema_fp);
  CHECK(back.vocab == model.vocab);
  CHECK(back.train_seed == 4);

  // Scores from the round-tripped model are identical.
  const Eigen::VectorXd s1 = score_detector(model, fm);
  const Eigen::VectorXd s2 = score_detector(back, fm);
  CHECK(s1 == s2);
}

TEST_CASE("corrupt files are refused") {
  const FeatureMatrix fm = benign_features(5);
  const DetectorModel model = train_detector(fm, SvmConfig{});
  const std::string bytes = serialize_model(model);

  // Truncation.
  CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() / 2)), DataError);
  CHECK_THROWS_AS(deserialize_model(bytes.substr(0, 3)), DataError);

  // Bit flip in the payload breaks the checksum.
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x40;
  CHECK_THROWS_AS(deserialize_model(flipped), ModelChecksumError);

  // Wrong magic.
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_model(magic), DataError);
}

TEST_CASE("invariant validation rejects a tampered alpha sum") {
  const FeatureMatrix fm = benign_features(6);
  DetectorModel model = train_detector(fm, SvmConfig{});
  model.svm.alpha(0) += 0.1;  // sum != 1
  const std::string bytes = serialize_model(model);  // writer recomputes CRC
  CHECK_THROWS_AS(deserialize_model(bytes), ModelInvariantError);
}

TEST_CASE("save/load file round-trip") {
  const FeatureMatrix fm = benign_features(7);
  const DetectorModel model = train_detector(fm, SvmConfig{});
  const std::string path = "/tmp/tg_test_model.bin";
  save_model(model, path);
  const DetectorModel back = load_model(path);
  CHECK(serialize_model(back) == serialize_model(model));
  CHECK_THROWS_AS(load_model("/tmp/tg_no_such_model.bin"), DataError);
}

TEST_CASE("trained pipeline separates malicious windows") {
  Scenario sc;
  sc.duration = 120.0;
  sc.seed = 8;
  sc.benign = default_benign_profile();
  const Trace benign = simulate(sc);
  sc.duration = 60.0;
  sc.malware_start = 10.0;
  MalwareSpec m;
  m.family = MalwareFamily::Cryptominer;
  m.exfil_interval = 0.5;
  m.exfil_size = 64;
  sc.malware = m;
  sc.id = "infected";
  const Trace infected = simulate(sc);

  FeatureConfig cfg;
  const Trace* both[] = {&benign, &infected};
  const Vocabulary vocab = build_vocabulary(std::span<const Trace* const>(both), cfg);
  const FeatureMatrix train = featurize(benign, &vocab, cfg);
  const FeatureMatrix test = featurize(infected, &vocab, cfg);
  const DetectorModel model = train_detector(train, SvmConfig{}, 0.95, &vocab);
  const Eigen::VectorXd scores = score_detector(model, test);
  double mal_mean = 0, ben_mean = 0;
  int mal_n = 0, ben_n = 0;
  for (std::size_t r = 0; r < test.rows; ++r) {
    if (test.labels[r] == Label::Malicious) {
      mal_mean += scores(static_cast<Eigen::Index>(r));
      ++mal_n;
    } else {
      ben_mean += scores(static_cast<Eigen::Index>(r));
      ++ben_n;
    }
  }
  REQUIRE(mal_n > 0);
  REQUIRE(ben_n > 0);
  CHECK(mal_mean / mal_n < ben_mean / ben_n);
}
