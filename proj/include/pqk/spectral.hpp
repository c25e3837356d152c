#pragma once

// Kernel matrices, geometric difference and spectral relabeling.

#include <cstdint>
#include <vector>

#include "pqk/linalg.hpp"

namespace pqk::spectral {

enum class KernelSource { quantum, classical };

struct KernelMatrix {
  Matrix entries;
  double gamma = 1.0;
  KernelSource source = KernelSource::classical;

  Eigen::Index n() const noexcept { return entries.rows(); }
};

// K_ij = exp(-gamma |F_i - F_j|^2). Exactly symmetric with unit diagonal.
KernelMatrix rbf_kernel(const Matrix& features, double gamma,
                        KernelSource source = KernelSource::classical);

// Bandwidth 1 / median(|F_i - F_j|^2) over up to `max_pairs` seeded random
// pairs of distinct rows (all pairs when fewer exist).
double median_gamma(const Matrix& features, std::uint64_t seed,
                    std::size_t max_pairs = 1000);

struct Eigensystem {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns, values(i) <-> vectors.col(i)
};

// Symmetric eigendecomposition. Eigenvalues in [-1e-8, 0) are clamped to 0.
// Each eigenvector's first non-negligible component is made positive.
Eigensystem sym_eigendecompose(const Matrix& symmetric);
inline Eigensystem sym_eigendecompose(const KernelMatrix& k) {
  return sym_eigendecompose(k.entries);
}

// Symmetric PSD square root; negative eigenvalues are clamped at 0.
Matrix psd_sqrt(const Eigensystem& eig);

struct GeometricReport {
  double g = 0.0;
  double lambda = 0.0;
  // Unit top eigenvector of sqrt(K_c) (K_q + lambda I)^{-1} sqrt(K_c).
  Vector top_eigenvector;
};

// g = sqrt(|| sqrt(K_c) (K_q + lambda I)^{-1} sqrt(K_c) ||_2).
GeometricReport geometric_difference(const KernelMatrix& quantum,
                                     const KernelMatrix& classical, double lambda);
GeometricReport geometric_difference(const Eigensystem& quantum,
                                     const Eigensystem& classical, double lambda);

struct RelabeledDataset {
  std::vector<std::uint8_t> labels;     // after noise
  std::vector<std::uint8_t> flip_mask;  // 1 where noise flipped the label
  Vector scores;                        // raw projection before thresholding
  double noise_rate = 0.0;
  std::uint64_t seed = 0;

  std::vector<std::uint8_t> clean_labels() const;
};

// Regenerates labels along the top eigenvector w of
//   M = S^{1/2} V^T V2 diag(s2 / (s2 + lambda)^2) V2^T V S^{1/2}
// with (s, V) = eig(K_q), (s2, V2) = eig(K_c); scores y = V S^{1/2} w,
// label 1 for the upper half of y, then i.i.d. flips with prob noise_rate.
RelabeledDataset relabel(const KernelMatrix& quantum, const KernelMatrix& classical,
                         double lambda, double noise_rate, std::uint64_t seed);
RelabeledDataset relabel(const Eigensystem& quantum, const Eigensystem& classical,
                         double lambda, double noise_rate, std::uint64_t seed);

// Label 1 for entries strictly above the median; equal scores are ordered by
// index so exactly floor(n/2) entries get label 1.
std::vector<std::uint8_t> median_split(const Vector& scores);

}  // namespace pqk::spectral
