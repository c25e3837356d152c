#include "pqk/features.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <thread>

#include "pqk/errors.hpp"
#include "pqk/rng.hpp"

namespace pqk::features {

WallParams sample_wall(std::size_t n_qubits, std::uint64_t seed) {
  if (n_qubits < 1 || n_qubits > sim::kMaxQubits) {
    throw SizeError("wall needs 1.." + std::to_string(sim::kMaxQubits) +
                    " qubits, got " + std::to_string(n_qubits));
  }
  Rng rng(seed);
  WallParams wall{n_qubits, Matrix(n_qubits, 3), seed};
  for (std::size_t q = 0; q < n_qubits; ++q) {
    for (int a = 0; a < 3; ++a) {
      wall.angles(q, a) = 2.0 * std::numbers::pi * rng.uniform();
    }
  }
  return wall;
}

EncodingConfig EncodingConfig::make(std::size_t n_components,
                                    std::size_t trotter_steps,
                                    std::uint64_t wall_seed) {
  EncodingConfig cfg;
  cfg.n_components = n_components;
  cfg.trotter_steps = trotter_steps;
  cfg.wall = sample_wall(n_components + 1, wall_seed);
  cfg.validate();
  return cfg;
}

void EncodingConfig::validate() const {
  if (n_components < 1) throw ValidationError("n_components must be positive");
  if (trotter_steps < 1) throw ValidationError("trotter_steps must be >= 1");
  if (wall.n_qubits != n_qubits() ||
      wall.angles.rows() != static_cast<Eigen::Index>(n_qubits()) ||
      wall.angles.cols() != 3) {
    throw ValidationError("wall shape does not match n_components + 1 qubits");
  }
}

Digest EncodingConfig::digest() const {
  Hasher h;
  h.text("pqk.EncodingConfig.v1")
      .u64(n_components)
      .u64(trotter_steps)
      .u64(wall.seed)
      .u64(wall.n_qubits);
  for (Eigen::Index q = 0; q < wall.angles.rows(); ++q) {
    for (Eigen::Index a = 0; a < 3; ++a) h.f64(wall.angles(q, a));
  }
  return h.finish();
}

sim::StateVector build_encoded_state(std::span<const double> x,
                                     const EncodingConfig& config) {
  config.validate();
  if (x.size() != config.n_components) {
    throw ShapeError("input has " + std::to_string(x.size()) +
                     " components, encoding expects " +
                     std::to_string(config.n_components));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError("input contains a non-finite value");
  }

  sim::StateVector state(config.n_qubits());
  for (std::size_t q = 0; q < config.n_qubits(); ++q) {
    for (int a = 0; a < 3; ++a) {
      sim::apply_rotation(state, q, sim::kAxes[a], config.wall.angles(q, a));
    }
  }
  const double steps = static_cast<double>(config.trotter_steps);
  for (std::size_t t = 0; t < config.trotter_steps; ++t) {
    for (std::size_t j = 0; j < config.n_components; ++j) {
      sim::apply_pair_coupling(state, j, j + 1, x[j] / steps);
    }
  }
  return state;
}

namespace {

void write_features(const sim::StateVector& state, std::span<double> out) {
  for (std::size_t q = 0; q < state.n_qubits(); ++q) {
    const auto rdm = sim::reduced_density_matrix(state, q);
    for (int a = 0; a < 3; ++a) out[3 * q + a] = sim::pauli_expectation(rdm, sim::kAxes[a]);
  }
}

}  // namespace

std::vector<double> extract_features(std::span<const double> x,
                                     const EncodingConfig& config) {
  const auto state = build_encoded_state(x, config);
  std::vector<double> out(3 * state.n_qubits());
  write_features(state, out);
  return out;
}

PqkFeatureSet extract_features_batch(const Matrix& X, const EncodingConfig& config,
                                     unsigned parallelism) {
  config.validate();
  if (X.cols() != static_cast<Eigen::Index>(config.n_components)) {
    throw ShapeError("batch has " + std::to_string(X.cols()) +
                     " columns, encoding expects " + std::to_string(config.n_components));
  }
  const auto n = static_cast<std::size_t>(X.rows());
  PqkFeatureSet fs;
  fs.n_qubits = config.n_qubits();
  fs.config_digest = config.digest();
  fs.values.resize(X.rows(), static_cast<Eigen::Index>(config.n_features()));

  // Each worker owns a contiguous block of rows and writes only there.
  auto run_rows = [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(config.n_components);
    std::vector<double> f(config.n_features());
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < x.size(); ++j) x[j] = X(i, j);
      const auto state = build_encoded_state(x, config);
      write_features(state, f);
      for (std::size_t j = 0; j < f.size(); ++j) fs.values(i, j) = f[j];
    }
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(parallelism, n));
  if (workers == 1) {
    run_rows(0, n);
    return fs;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        run_rows(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return fs;
}

}  // namespace pqk::features
