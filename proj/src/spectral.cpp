#include "pqk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pqk/errors.hpp"
#include "pqk/rng.hpp"

namespace pqk::spectral {

namespace {

void fix_sign(Eigen::Ref<Vector> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

void require_psd(const Eigensystem& eig, const char* which) {
  if (eig.values.size() > 0 && eig.values(0) < -1e-8) {
    throw ValidationError(std::string(which) + " kernel is not PSD (min eigenvalue " +
                          std::to_string(eig.values(0)) + ")");
  }
}

}  // namespace

KernelMatrix rbf_kernel(const Matrix& features, double gamma, KernelSource source) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("rbf gamma must be positive and finite");
  }
  if (!features.allFinite()) throw ValidationError("rbf features contain non-finite values");

  const Eigen::Index n = features.rows();
  KernelMatrix k{Matrix(n, n), gamma, source};
  // Row access on a column-major matrix is strided; work on the transpose.
  const Matrix ft = features.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    k.entries(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (ft.col(i) - ft.col(j)).squaredNorm();
      const double v = std::exp(-gamma * d2);
      k.entries(i, j) = v;
      k.entries(j, i) = v;
    }
  }
  return k;
}

double median_gamma(const Matrix& features, std::uint64_t seed, std::size_t max_pairs) {
  const auto n = static_cast<std::uint64_t>(features.rows());
  if (n < 2) throw ValidationError("median heuristic needs at least two rows");
  std::vector<double> d2;
  const std::uint64_t all_pairs = n * (n - 1) / 2;
  if (all_pairs <= max_pairs) {
    for (std::uint64_t i = 0; i < n; ++i)
      for (std::uint64_t j = i + 1; j < n; ++j)
        d2.push_back((features.row(i) - features.row(j)).squaredNorm());
  } else {
    Rng rng(seed);
    while (d2.size() < max_pairs) {
      const auto i = rng.below(n);
      const auto j = rng.below(n);
      if (i == j) continue;
      d2.push_back((features.row(i) - features.row(j)).squaredNorm());
    }
  }
  std::sort(d2.begin(), d2.end());
  const std::size_t m = d2.size();
  const double median = (m % 2 == 1) ? d2[m / 2] : 0.5 * (d2[m / 2 - 1] + d2[m / 2]);
  if (!(median > 0.0)) throw NumericError("median squared distance is zero");
  return 1.0 / median;
}

Eigensystem sym_eigendecompose(const Matrix& symmetric) {
  if (symmetric.rows() != symmetric.cols()) throw ShapeError("eigendecomposition needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric eigensolver did not converge");
  }
  Eigensystem eig{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values(i) < 0.0 && eig.values(i) >= -1e-8) eig.values(i) = 0.0;
    fix_sign(eig.vectors.col(i));
  }
  return eig;
}

Matrix psd_sqrt(const Eigensystem& eig) {
  const Vector root = eig.values.cwiseMax(0.0).cwiseSqrt();
  return eig.vectors * root.asDiagonal() * eig.vectors.transpose();
}

GeometricReport geometric_difference(const KernelMatrix& quantum,
                                     const KernelMatrix& classical, double lambda) {
  if (quantum.n() != classical.n()) throw ShapeError("kernel dimensions differ");
  return geometric_difference(sym_eigendecompose(quantum), sym_eigendecompose(classical),
                              lambda);
}

GeometricReport geometric_difference(const Eigensystem& quantum,
                                     const Eigensystem& classical, double lambda) {
  if (quantum.values.size() != classical.values.size()) {
    throw ShapeError("kernel dimensions differ");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("lambda must be finite and >= 0");
  }
  require_psd(quantum, "quantum");
  require_psd(classical, "classical");

  const Vector shifted = quantum.values.array().cwiseMax(0.0) + lambda;
  const double top = std::max(1.0, shifted.maxCoeff());
  if (shifted.minCoeff() <= 1e-12 * top) {
    throw NumericError("K_q + lambda I is singular; use a positive lambda");
  }

  // sqrt(K_c) (K_q + lambda)^{-1} sqrt(K_c), written in the K_c eigenbasis:
  //   B = diag(sqrt s2) V2^T V diag(1/(s+lambda)) V^T V2 diag(sqrt s2),
  // which is orthogonally similar to the target matrix.
  const Vector root_c = classical.values.cwiseMax(0.0).cwiseSqrt();
  const Matrix cross = classical.vectors.transpose() * quantum.vectors;  // V2^T V
  const Matrix left = root_c.asDiagonal() * cross;
  const Matrix b = left * shifted.cwiseInverse().asDiagonal() * left.transpose();
  const Matrix bs = 0.5 * (b + b.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> solver(bs);
  if (solver.info() != Eigen::Success) throw NumericError("eigensolver failed in geometric_difference");
  const Eigen::Index last = bs.rows() - 1;
  GeometricReport report;
  report.lambda = lambda;
  report.g = std::sqrt(std::max(0.0, solver.eigenvalues()(last)));
  report.top_eigenvector = classical.vectors * solver.eigenvectors().col(last);
  report.top_eigenvector.normalize();
  fix_sign(report.top_eigenvector);
  return report;
}

std::vector<std::uint8_t> median_split(const Vector& scores) {
  const auto n = static_cast<std::size_t>(scores.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores(a) < scores(b); });
  std::vector<std::uint8_t> labels(n, 0);
  for (std::size_t r = n - n / 2; r < n; ++r) labels[order[r]] = 1;
  return labels;
}

std::vector<std::uint8_t> RelabeledDataset::clean_labels() const {
  std::vector<std::uint8_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] ^ flip_mask[i];
  return out;
}

RelabeledDataset relabel(const KernelMatrix& quantum, const KernelMatrix& classical,
                         double lambda, double noise_rate, std::uint64_t seed) {
  if (quantum.n() != classical.n()) throw ShapeError("kernel dimensions differ");
  return relabel(sym_eigendecompose(quantum), sym_eigendecompose(classical), lambda,
                 noise_rate, seed);
}

RelabeledDataset relabel(const Eigensystem& quantum, const Eigensystem& classical,
                         double lambda, double noise_rate, std::uint64_t seed) {
  const Eigen::Index n = quantum.values.size();
  if (classical.values.size() != n) throw ShapeError("kernel dimensions differ");
  if (n < 4) throw ValidationError("relabel needs at least 4 samples");
  if (!(noise_rate >= 0.0 && noise_rate < 0.5)) {
    throw ValidationError("noise_rate must lie in [0, 0.5)");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("lambda must be finite and >= 0");
  }

  const Vector root_q = quantum.values.cwiseMax(0.0).cwiseSqrt();
  const Vector s2 = classical.values.cwiseMax(0.0);
  const Vector filter = (s2.array() / (s2.array() + lambda).square()).matrix();
  if (!filter.allFinite()) throw NumericError("classical spectral filter is singular; use lambda > 0");

  // left = V2^T V S^{1/2};  M = left^T diag(filter) left
  const Matrix left = (classical.vectors.transpose() * quantum.vectors) * root_q.asDiagonal();
  const Matrix m = left.transpose() * filter.asDiagonal() * left;
  const Matrix ms = 0.5 * (m + m.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> solver(ms);
  if (solver.info() != Eigen::Success) throw NumericError("eigensolver failed in relabel");
  const Vector w = solver.eigenvectors().col(n - 1).normalized();

  RelabeledDataset out;
  out.scores = quantum.vectors * (root_q.asDiagonal() * w);
  // +w and -w give complementary labelings. Orient in sample space so the
  // choice does not depend on eigenvector signs or sample order.
  double orient = out.scores.sum();
  if (std::abs(orient) <= 1e-12 * out.scores.lpNorm<1>()) {
    Eigen::Index arg;
    out.scores.cwiseAbs().maxCoeff(&arg);
    orient = out.scores(arg);
  }
  if (orient < 0) out.scores = -out.scores;

  out.labels = median_split(out.scores);
  out.flip_mask.assign(static_cast<std::size_t>(n), 0);
  out.noise_rate = noise_rate;
  out.seed = seed;
  Rng rng(seed);
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    if (rng.uniform() < noise_rate) {
      out.flip_mask[i] = 1;
      out.labels[i] ^= 1;
    }
  }
  return out;
}

}  // namespace pqk::spectral
