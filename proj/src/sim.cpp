#include "pqk/sim.hpp"

#include <cmath>
#include <string>

#include "pqk/errors.hpp"

namespace pqk::sim {

namespace {

void check_qubit(const StateVector& state, std::size_t qubit) {
  if (qubit >= state.n_qubits()) {
    throw IndexError("qubit " + std::to_string(qubit) +
                     " out of range for a " +
                     std::to_string(state.n_qubits()) + "-qubit state");
  }
}

}  // namespace

const char* axis_name(PauliAxis axis) {
  switch (axis) {
    case PauliAxis::X: return "X";
    case PauliAxis::Y: return "Y";
    case PauliAxis::Z: return "Z";
  }
  return "?";
}

StateVector::StateVector(std::size_t n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw SizeError("n_qubits must lie in [1, " + std::to_string(kMaxQubits) +
                    "], got " + std::to_string(n_qubits));
  }
  amplitudes_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
  amplitudes_[0] = Complex{1.0, 0.0};
}

StateVector StateVector::from_amplitudes(std::vector<Complex> amplitudes) {
  const std::size_t len = amplitudes.size();
  if (len < 2 || (len & (len - 1)) != 0) {
    throw SizeError("amplitude count must be a power of two >= 2, got " +
                    std::to_string(len));
  }
  std::size_t n = 0;
  while ((std::size_t{1} << n) < len) ++n;
  if (n > kMaxQubits) throw SizeError("too many qubits");

  double norm2 = 0.0;
  for (const auto& a : amplitudes) norm2 += std::norm(a);
  if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
    throw ValidationError("amplitudes must be finite and not all zero");
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& a : amplitudes) a *= inv;

  StateVector s;
  s.n_qubits_ = n;
  s.amplitudes_ = std::move(amplitudes);
  return s;
}

double StateVector::norm_squared() const {
  double acc = 0.0;
  for (const auto& a : amplitudes_) acc += std::norm(a);
  return acc;
}

StateVector new_zero_state(std::size_t n_qubits) { return StateVector(n_qubits); }

std::array<Complex, 4> rotation_matrix(PauliAxis axis, double angle) {
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  switch (axis) {
    case PauliAxis::X:
      return {Complex{c, 0}, Complex{0, -s}, Complex{0, -s}, Complex{c, 0}};
    case PauliAxis::Y:
      return {Complex{c, 0}, Complex{-s, 0}, Complex{s, 0}, Complex{c, 0}};
    case PauliAxis::Z:
      return {Complex{c, -s}, Complex{0, 0}, Complex{0, 0}, Complex{c, s}};
  }
  return {};
}

void apply_rotation(StateVector& state, std::size_t qubit, PauliAxis axis,
                    double angle) {
  check_qubit(state, qubit);
  if (!std::isfinite(angle)) throw ValidationError("rotation angle must be finite");

  const auto u = rotation_matrix(axis, angle);
  const std::size_t m = state.mask(qubit);
  auto amp = state.amplitudes();
  for (std::size_t i = 0; i < amp.size(); ++i) {
    if (i & m) continue;
    const Complex a0 = amp[i];
    const Complex a1 = amp[i | m];
    amp[i] = u[0] * a0 + u[1] * a1;
    amp[i | m] = u[2] * a0 + u[3] * a1;
  }
}

void apply_pair_coupling(StateVector& state, std::size_t qubit_a,
                         std::size_t qubit_b, double angle) {
  check_qubit(state, qubit_a);
  check_qubit(state, qubit_b);
  if (qubit_a == qubit_b) {
    throw IndexError("pair coupling needs two distinct qubits, got " +
                     std::to_string(qubit_a) + " twice");
  }
  if (!std::isfinite(angle)) throw ValidationError("coupling angle must be finite");

  // XX+YY+ZZ = 2 SWAP - I, so exp(-i t H) = e^{i t} (cos 2t - i sin 2t SWAP).
  // The |01>,|10> block update is symmetric in (a, b), which makes the
  // operation bit-identical under exchange of the two qubits.
  const Complex triplet = std::polar(1.0, -angle);
  const Complex phase = std::polar(1.0, angle);
  const Complex keep = phase * std::cos(2.0 * angle);
  const Complex swap = phase * Complex{0.0, -std::sin(2.0 * angle)};

  const std::size_t ma = state.mask(qubit_a);
  const std::size_t mb = state.mask(qubit_b);
  auto amp = state.amplitudes();
  for (std::size_t i = 0; i < amp.size(); ++i) {
    if (i & (ma | mb)) continue;
    const std::size_t i01 = i | mb;
    const std::size_t i10 = i | ma;
    const std::size_t i11 = i | ma | mb;
    const Complex a01 = amp[i01];
    const Complex a10 = amp[i10];
    amp[i] *= triplet;
    amp[i11] *= triplet;
    amp[i01] = keep * a01 + swap * a10;
    amp[i10] = keep * a10 + swap * a01;
  }
}

ReducedDensityMatrix::ReducedDensityMatrix(const std::array<Complex, 4>& entries)
    : entries_(entries) {
  for (const auto& e : entries_) {
    if (!std::isfinite(e.real()) || !std::isfinite(e.imag())) {
      throw ValidationError("density matrix has non-finite entries");
    }
  }
  if (std::abs(entries_[0].imag()) > kTolerance ||
      std::abs(entries_[3].imag()) > kTolerance ||
      std::abs(entries_[1] - std::conj(entries_[2])) > kTolerance) {
    throw ValidationError("density matrix is not Hermitian");
  }
  if (std::abs(trace() - 1.0) > kTolerance) {
    throw ValidationError("density matrix trace is " + std::to_string(trace()) +
                          ", expected 1");
  }
  if (eigenvalues()[0] < -kTolerance) {
    throw ValidationError("density matrix is not positive semidefinite");
  }
}

std::array<double, 2> ReducedDensityMatrix::eigenvalues() const {
  const double a = entries_[0].real();
  const double d = entries_[3].real();
  const double half_gap = std::hypot(0.5 * (a - d), std::abs(entries_[1]));
  const double mid = 0.5 * (a + d);
  return {mid - half_gap, mid + half_gap};
}

ReducedDensityMatrix reduced_density_matrix(const StateVector& state,
                                            std::size_t qubit) {
  check_qubit(state, qubit);
  const std::size_t m = state.mask(qubit);
  const auto amp = state.amplitudes();
  double p0 = 0.0;
  double p1 = 0.0;
  Complex off{0.0, 0.0};
  for (std::size_t i = 0; i < amp.size(); ++i) {
    if (i & m) continue;
    const Complex a0 = amp[i];
    const Complex a1 = amp[i | m];
    p0 += std::norm(a0);
    p1 += std::norm(a1);
    off += a0 * std::conj(a1);
  }
  // Renormalize away the O(1e-16) drift accumulated by the gate sequence.
  const double tr = p0 + p1;
  return ReducedDensityMatrix(
      {Complex{p0 / tr, 0.0}, off / tr, std::conj(off) / tr, Complex{p1 / tr, 0.0}});
}

double pauli_expectation(const ReducedDensityMatrix& rdm, PauliAxis axis) {
  // Tr(rho P) = sum_ij rho_ij P_ji
  Complex tr;
  switch (axis) {
    case PauliAxis::X: tr = rdm(0, 1) + rdm(1, 0); break;
    case PauliAxis::Y: tr = Complex{0, 1} * rdm(0, 1) + Complex{0, -1} * rdm(1, 0); break;
    case PauliAxis::Z: tr = rdm(0, 0) - rdm(1, 1); break;
  }
  if (std::abs(tr.imag()) > 1e-10) {
    throw ValidationError(std::string("Tr(rho ") + axis_name(axis) +
                          ") has a non-negligible imaginary part");
  }
  return tr.real();
}

double expectation_via_full_state(const StateVector& state, std::size_t qubit,
                                  PauliAxis axis) {
  check_qubit(state, qubit);
  const std::size_t m = state.mask(qubit);
  const auto amp = state.amplitudes();
  // <psi|P|psi> = sum_i conj(psi_i) (P psi)_i, with P acting on bit m only.
  Complex acc{0.0, 0.0};
  for (std::size_t i = 0; i < amp.size(); ++i) {
    const bool one = (i & m) != 0;
    const Complex partner = amp[i ^ m];
    Complex p_psi;
    switch (axis) {
      case PauliAxis::X: p_psi = partner; break;
      case PauliAxis::Y: p_psi = one ? Complex{0, 1} * partner : Complex{0, -1} * partner; break;
      case PauliAxis::Z: p_psi = one ? -amp[i] : amp[i]; break;
    }
    acc += std::conj(amp[i]) * p_psi;
  }
  return acc.real() / state.norm_squared();
}

}  // namespace pqk::sim
