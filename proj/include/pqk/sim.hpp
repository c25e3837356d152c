#pragma once

// Dense statevector simulator for the encoding-circuit family: single-qubit
// rotations, Heisenberg pair exponentials, single-qubit marginals and Pauli
// expectations.
//
// Conventions:
//   * qubit 0 is the most significant bit of the basis-state index
//   * R_P(theta) = exp(-i theta P / 2)
//   * global phase is kept; compare states up to phase or via observables

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace pqk::sim {

using Complex = std::complex<double>;

enum class PauliAxis { X, Y, Z };

inline constexpr std::array<PauliAxis, 3> kAxes{PauliAxis::X, PauliAxis::Y,
                                                PauliAxis::Z};
inline constexpr std::size_t kMaxQubits = 20;

const char* axis_name(PauliAxis axis);

class StateVector {
 public:
  // |0...0> on n_qubits; throws SizeError outside [1, kMaxQubits].
  explicit StateVector(std::size_t n_qubits);

  // Takes ownership of raw amplitudes and normalizes them. The length must be
  // a power of two; a zero vector is rejected.
  static StateVector from_amplitudes(std::vector<Complex> amplitudes);

  std::size_t n_qubits() const noexcept { return n_qubits_; }
  std::size_t dim() const noexcept { return amplitudes_.size(); }
  std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }
  std::span<Complex> amplitudes() noexcept { return amplitudes_; }
  const Complex& operator[](std::size_t i) const { return amplitudes_[i]; }

  double norm_squared() const;

  // Bit mask of `qubit` inside a basis index.
  std::size_t mask(std::size_t qubit) const noexcept {
    return std::size_t{1} << (n_qubits_ - 1 - qubit);
  }

 private:
  StateVector() = default;
  std::size_t n_qubits_ = 0;
  std::vector<Complex> amplitudes_;
};

StateVector new_zero_state(std::size_t n_qubits);

// 2x2 unitary of R_axis(angle), row-major.
std::array<Complex, 4> rotation_matrix(PauliAxis axis, double angle);

void apply_rotation(StateVector& state, std::size_t qubit, PauliAxis axis,
                    double angle);

// exp(-i angle (X_a X_b + Y_a Y_b + Z_a Z_b)), applied as one exact 4x4 block
// action: triplet subspace picks up e^{-i angle}, singlet e^{+3i angle}.
void apply_pair_coupling(StateVector& state, std::size_t qubit_a,
                         std::size_t qubit_b, double angle);

// Single-qubit marginal. Entries are stored row-major and satisfy the
// density-matrix invariants (Hermitian, unit trace, PSD) within 1e-12.
class ReducedDensityMatrix {
 public:
  // Validates; throws ValidationError naming the violated invariant.
  explicit ReducedDensityMatrix(const std::array<Complex, 4>& entries);

  const Complex& operator()(std::size_t row, std::size_t col) const {
    return entries_[2 * row + col];
  }
  const std::array<Complex, 4>& entries() const noexcept { return entries_; }
  double trace() const { return entries_[0].real() + entries_[3].real(); }
  std::array<double, 2> eigenvalues() const;

  static constexpr double kTolerance = 1e-12;

 private:
  std::array<Complex, 4> entries_;
};

ReducedDensityMatrix reduced_density_matrix(const StateVector& state,
                                            std::size_t qubit);

// Tr(rho P). The imaginary part of the trace must vanish within 1e-10.
double pauli_expectation(const ReducedDensityMatrix& rdm, PauliAxis axis);

// <psi| P_qubit |psi>, evaluated on the full state without a partial trace.
double expectation_via_full_state(const StateVector& state, std::size_t qubit,
                                  PauliAxis axis);

}  // namespace pqk::sim
