#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pqk/errors.hpp"
#include "pqk/features.hpp"
#include "pqk/rng.hpp"

using namespace pqk;
using namespace pqk::features;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> random_x(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

oracle::CVector to_eigen(const sim::StateVector& s) {
  oracle::CVector v(static_cast<Eigen::Index>(s.dim()));
  for (std::size_t i = 0; i < s.dim(); ++i) v(i) = s[i];
  return v;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         ("pqk_test_" + std::to_string(::getpid()) + "_" + name);
}

EncodingConfig zero_wall_config(std::size_t nc) {
  auto cfg = EncodingConfig::make(nc, 10, 0);
  cfg.wall.angles.setZero();
  return cfg;
}

}  // namespace

TEST(Rng, EngineMatchesStandardReference) {
  // The standard fixes the 10000th output of a default-seeded mt19937_64.
  Rng rng(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ULL);
}

TEST(SampleWall, Deterministic) {
  const auto a = sample_wall(3, 42);
  const auto b = sample_wall(3, 42);
  ASSERT_EQ(a.angles.rows(), 3);
  ASSERT_EQ(a.angles.cols(), 3);
  EXPECT_EQ(a.angles, b.angles);
  EXPECT_EQ(a.seed, 42u);
}

TEST(SampleWall, SeedSensitive) {
  EXPECT_NE(sample_wall(3, 42).angles, sample_wall(3, 43).angles);
}

TEST(SampleWall, FirstAngleFromEngine) {
  std::mt19937_64 engine(7);
  const double expected = 2.0 * kPi * (static_cast<double>(engine() >> 11) * 0x1.0p-53);
  EXPECT_EQ(sample_wall(1, 7).angles(0, 0), expected);
}

TEST(SampleWall, UniformLaw) {
  double sum = 0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 556; ++seed) {
    const auto w = sample_wall(6, seed);
    for (Eigen::Index i = 0; i < w.angles.size(); ++i) {
      const double a = w.angles.data()[i];
      ASSERT_GE(a, 0.0);
      ASSERT_LT(a, 2 * kPi);
      sum += a;
      ++count;
    }
  }
  ASSERT_GE(count, 10000u);
  EXPECT_NEAR(sum / count, kPi, 0.1);
}

TEST(SampleWall, SizeGuard) {
  EXPECT_THROW(sample_wall(0, 1), SizeError);
}

TEST(EncodedState, ZeroInputEqualsWallOnly) {
  const auto cfg = EncodingConfig::make(3, 10, 9);
  const std::vector<double> x(3, 0.0);
  const auto s = build_encoded_state(x, cfg);
  auto wall_only = sim::new_zero_state(4);
  for (std::size_t q = 0; q < 4; ++q)
    for (std::size_t a = 0; a < 3; ++a)
      sim::apply_rotation(wall_only, q, sim::kAxes[a], cfg.wall.angles(q, a));
  EXPECT_LT((to_eigen(s) - to_eigen(wall_only)).norm(), 1e-14);
}

TEST(EncodedState, LonePairTermCommutesAcrossSteps) {
  const std::vector<double> x = {0.0, 0.83, 0.0};
  const auto one = build_encoded_state(x, EncodingConfig::make(3, 1, 4));
  const auto two = build_encoded_state(x, EncodingConfig::make(3, 2, 4));
  EXPECT_LT(oracle::phase_distance(to_eigen(one), to_eigen(two)), 1e-12);
}

TEST(EncodedState, MatchesDenseUnitaryOracle) {
  std::mt19937_64 rng(101);
  for (std::size_t nc : {1u, 2u, 3u}) {
    for (std::size_t steps : {1u, 3u, 10u}) {
      const auto cfg = EncodingConfig::make(nc, steps, rng());
      const auto x = random_x(nc, rng);
      const auto s = build_encoded_state(x, cfg);
      const auto dense = oracle::encoded_state(x, cfg.wall.angles, static_cast<int>(steps));
      EXPECT_LT(oracle::phase_distance(to_eigen(s), dense), 1e-10);
      EXPECT_NEAR(s.norm_squared(), 1.0, 1e-12);
    }
  }
}

TEST(EncodedState, LengthGuard) {
  const auto cfg = EncodingConfig::make(3, 10, 1);
  const std::vector<double> x(2, 0.1);
  EXPECT_THROW(build_encoded_state(x, cfg), ShapeError);
}

TEST(EncodedState, NonFiniteRejected) {
  const auto cfg = EncodingConfig::make(2, 10, 1);
  const std::vector<double> x = {0.1, std::nan("")};
  EXPECT_THROW(build_encoded_state(x, cfg), ValidationError);
}

TEST(ExtractFeatures, IdentityCircuit) {
  const auto cfg = zero_wall_config(4);
  const auto f = extract_features(std::vector<double>(4, 0.0), cfg);
  ASSERT_EQ(f.size(), 15u);
  for (std::size_t q = 0; q < 5; ++q) {
    EXPECT_NEAR(f[3 * q], 0.0, 1e-15);
    EXPECT_NEAR(f[3 * q + 1], 0.0, 1e-15);
    EXPECT_NEAR(f[3 * q + 2], 1.0, 1e-15);
  }
}

TEST(ExtractFeatures, Physicality) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> big(-5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto cfg = EncodingConfig::make(6, 5, rng());
    std::vector<double> x(6);
    for (auto& v : x) v = big(rng);
    const auto f = extract_features(x, cfg);
    for (std::size_t q = 0; q < 7; ++q) {
      double norm2 = 0;
      for (int a = 0; a < 3; ++a) {
        EXPECT_LE(std::abs(f[3 * q + a]), 1.0 + 1e-12);
        norm2 += f[3 * q + a] * f[3 * q + a];
      }
      EXPECT_LE(std::sqrt(norm2), 1.0 + 1e-8);
    }
  }
}

TEST(ExtractFeatures, CrossPathAgreement) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto cfg = EncodingConfig::make(2, 10, rng());
    const auto x = random_x(2, rng);
    const auto f = extract_features(x, cfg);
    const auto s = build_encoded_state(x, cfg);
    for (std::size_t q = 0; q < 3; ++q)
      for (std::size_t a = 0; a < 3; ++a)
        EXPECT_NEAR(f[3 * q + a], sim::expectation_via_full_state(s, q, sim::kAxes[a]), 1e-10);
  }
}

TEST(ExtractFeatures, MatchesDenseOracle) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    const auto cfg = EncodingConfig::make(3, 10, rng());
    const auto x = random_x(3, rng);
    const auto f = extract_features(x, cfg);
    const auto dense = oracle::features(x, cfg.wall.angles, 10);
    ASSERT_EQ(f.size(), dense.size());
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f[i], dense[i], 1e-10);
  }
}

TEST(ExtractFeatures, Continuous) {
  std::mt19937_64 rng(3);
  const auto cfg = EncodingConfig::make(5, 10, 8);
  auto x = random_x(5, rng);
  const auto f0 = extract_features(x, cfg);
  x[2] += 1e-7;
  const auto f1 = extract_features(x, cfg);
  for (std::size_t i = 0; i < f0.size(); ++i) EXPECT_NEAR(f0[i], f1[i], 1e-5);
}

TEST(ExtractBatch, SingleRow) {
  std::mt19937_64 rng(5);
  const auto cfg = EncodingConfig::make(4, 10, 2);
  const auto x = random_x(4, rng);
  Matrix X(1, 4);
  for (int j = 0; j < 4; ++j) X(0, j) = x[j];
  const auto fs = extract_features_batch(X, cfg);
  const auto f = extract_features(x, cfg);
  ASSERT_EQ(fs.n_samples(), 1u);
  ASSERT_EQ(fs.n_qubits, 5u);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(fs.values(0, i), f[i]);
  EXPECT_EQ(fs.config_digest, cfg.digest());
}

TEST(ExtractBatch, ParallelismIsBitwiseInvisible) {
  std::mt19937_64 rng(6);
  const auto cfg = EncodingConfig::make(5, 10, 3);
  Matrix X(37, 5);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = std::uniform_real_distribution<double>(-1, 1)(rng);
  const auto a = extract_features_batch(X, cfg, 1);
  const auto b = extract_features_batch(X, cfg, 8);
  ASSERT_EQ(a.values.rows(), b.values.rows());
  EXPECT_EQ(std::memcmp(a.values.data(), b.values.data(), sizeof(double) * a.values.size()), 0);
}

TEST(ExtractBatch, DuplicateRows) {
  const auto cfg = EncodingConfig::make(3, 10, 3);
  Matrix X(2, 3);
  X << 0.2, -0.4, 0.9, 0.2, -0.4, 0.9;
  const auto fs = extract_features_batch(X, cfg, 2);
  EXPECT_EQ(fs.values.row(0), fs.values.row(1));
}

TEST(ExtractBatch, ShapeGuard) {
  const auto cfg = EncodingConfig::make(3, 10, 3);
  EXPECT_THROW(extract_features_batch(Matrix::Zero(4, 2), cfg), ShapeError);
}

TEST(EncodingDigest, SensitiveToEveryField) {
  const auto base = EncodingConfig::make(4, 10, 1).digest();
  EXPECT_EQ(base, EncodingConfig::make(4, 10, 1).digest());
  EXPECT_NE(base, EncodingConfig::make(5, 10, 1).digest());
  EXPECT_NE(base, EncodingConfig::make(4, 9, 1).digest());
  EXPECT_NE(base, EncodingConfig::make(4, 10, 2).digest());
  auto tweaked = EncodingConfig::make(4, 10, 1);
  tweaked.wall.angles(2, 1) += 1e-12;
  EXPECT_NE(base, tweaked.digest());
}

class CacheTest : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg = EncodingConfig::make(3, 10, 11);
    Matrix X(6, 3);
    std::mt19937_64 rng(2);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = std::uniform_real_distribution<double>(-1, 1)(rng);
    fs = extract_features_batch(X, cfg);
    path = temp_path("cache.pqkf");
  }
  void TearDown() override { std::filesystem::remove(path); }

  EncodingConfig cfg;
  PqkFeatureSet fs;
  std::filesystem::path path;
};

TEST_F(CacheTest, RoundTripBitwise) {
  save_features(fs, path);
  const auto back = load_features(path, cfg.digest());
  EXPECT_EQ(back.n_qubits, fs.n_qubits);
  EXPECT_EQ(back.config_digest, fs.config_digest);
  ASSERT_EQ(back.values.rows(), fs.values.rows());
  ASSERT_EQ(back.values.cols(), fs.values.cols());
  EXPECT_EQ(std::memcmp(back.values.data(), fs.values.data(), sizeof(double) * fs.values.size()), 0);
}

TEST_F(CacheTest, CorruptedMagic) {
  save_features(fs, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  EXPECT_THROW(load_features(path), FormatError);
}

TEST_F(CacheTest, WrongVersion) {
  save_features(fs, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    f.put(static_cast<char>(kCacheVersion + 1));
  }
  EXPECT_THROW(load_features(path), FormatError);
}

TEST_F(CacheTest, DigestMismatch) {
  save_features(fs, path);
  const auto other = EncodingConfig::make(3, 10, 12);
  try {
    load_features(path, other.digest());
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("config_digest"), std::string::npos);
  }
}

TEST_F(CacheTest, Truncated) {
  save_features(fs, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  EXPECT_THROW(load_features(path), IoError);
}

TEST_F(CacheTest, MissingFile) {
  EXPECT_THROW(load_features(path), IoError);
}
