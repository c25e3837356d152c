#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pqk/linalg.hpp"

namespace pqk::data {

enum class Source { mnist, cifar10 };
enum class Split { train, test };

const char* source_name(Source s);
Source parse_source(const std::string& name);

inline constexpr std::size_t kMnistDim = 784;
inline constexpr std::size_t kCifarDim = 3072;

// Images are held as raw bytes; pixel values are byte / 255 on access, which
// keeps a full CIFAR-10 split at 150 MB instead of 1.2 GB of doubles.
struct LabeledImages {
  Source source = Source::mnist;
  Split split = Split::train;
  std::size_t dim = 0;
  std::vector<std::uint8_t> pixels;  // n x dim row-major
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  double pixel(std::size_t row, std::size_t col) const {
    return pixels[row * dim + col] / 255.0;
  }
  Matrix to_matrix() const;
  LabeledImages select(std::span<const std::size_t> rows) const;
};

LabeledImages load_mnist(const std::filesystem::path& images_path,
                         const std::filesystem::path& labels_path, Split split);

LabeledImages load_cifar10(std::span<const std::filesystem::path> batch_paths, Split split);

// Keeps rows of class_a / class_b (order preserved), relabelled to 0 / 1.
LabeledImages filter_binary(const LabeledImages& data, int class_a, int class_b);

// Seeded, class-stratified draw without replacement. For a fixed seed the
// result for n is a prefix-wise subset of the result for any larger n (the
// returned indices are ordered by draw, not by row).
std::vector<std::size_t> subsample_indices(std::span<const int> labels, std::size_t n,
                                           std::uint64_t seed);
LabeledImages subsample(const LabeledImages& data, std::size_t n, std::uint64_t seed);

struct PcaProjection {
  Vector mean;        // d
  Matrix components;  // d x k, orthonormal columns, descending variance
  Vector scale;       // k, max |projection| over the training rows
  Vector explained_variance;  // k, variance captured by each component
  double total_variance = 0.0;

  std::size_t k() const noexcept { return static_cast<std::size_t>(components.cols()); }
};

PcaProjection pca_fit(const Matrix& x_train, std::size_t k = 10);

// ((X - mean) W) / scale, clamped to [-1.5, 1.5]. Training rows land in [-1, 1].
Matrix pca_transform(const Matrix& x, const PcaProjection& proj);

inline constexpr double kTransformClamp = 1.5;

}  // namespace pqk::data
