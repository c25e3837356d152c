#pragma once

// Data-encoding circuit and projected quantum features.
//
// The circuit on n_components + 1 qubits is
//   |0...0>  ->  random rotation wall (per qubit: R_X, R_Y, R_Z)
//            ->  trotter_steps x [ for j ascending: exp(-i x_j/steps (XX+YY+ZZ)_{j,j+1}) ]
// and the feature vector is the per-qubit Bloch vector
//   [<X_0>, <Y_0>, <Z_0>, <X_1>, ...].

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pqk/digest.hpp"
#include "pqk/linalg.hpp"
#include "pqk/sim.hpp"

namespace pqk::features {

struct WallParams {
  std::size_t n_qubits = 0;
  Matrix angles;  // n_qubits x 3, columns X, Y, Z, radians in [0, 2pi)
  std::uint64_t seed = 0;
};

WallParams sample_wall(std::size_t n_qubits, std::uint64_t seed);

struct EncodingConfig {
  std::size_t n_components = 10;
  std::size_t trotter_steps = 10;
  WallParams wall;

  static EncodingConfig make(std::size_t n_components, std::size_t trotter_steps,
                             std::uint64_t wall_seed);

  std::size_t n_qubits() const noexcept { return n_components + 1; }
  std::size_t n_features() const noexcept { return 3 * n_qubits(); }

  // Throws ValidationError if the wall does not fit the chain.
  void validate() const;
  Digest digest() const;
};

struct PqkFeatureSet {
  std::size_t n_qubits = 0;
  Matrix values;  // n_samples x 3 n_qubits
  Digest config_digest{};

  std::size_t n_samples() const noexcept {
    return static_cast<std::size_t>(values.rows());
  }
};

sim::StateVector build_encoded_state(std::span<const double> x,
                                     const EncodingConfig& config);

std::vector<double> extract_features(std::span<const double> x,
                                     const EncodingConfig& config);

// Row i of the result is extract_features(X.row(i)). Rows are distributed
// over `parallelism` workers; the output does not depend on the worker count.
PqkFeatureSet extract_features_batch(const Matrix& X, const EncodingConfig& config,
                                     unsigned parallelism = 1);

// Binary cache, little-endian:
//   "PQKF" | version u32 | n_samples u64 | n_qubits u64 | digest[32] | f64 row-major
inline constexpr std::uint32_t kCacheVersion = 1;

void save_features(const PqkFeatureSet& fs, const std::filesystem::path& path);

// When `expected_digest` is given, a cache built under another config is
// rejected with FormatError.
PqkFeatureSet load_features(const std::filesystem::path& path,
                            const std::optional<Digest>& expected_digest = std::nullopt);

}  // namespace pqk::features
