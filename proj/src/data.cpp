#include "pqk/data.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "pqk/errors.hpp"
#include "pqk/rng.hpp"

namespace pqk::data {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarRecord = 1 + kCifarDim;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& buf, std::size_t off,
                   const std::filesystem::path& path) {
  if (buf.size() < off + 4) throw IoError(path.string() + ": truncated IDX header");
  return (std::uint32_t{buf[off]} << 24) | (std::uint32_t{buf[off + 1]} << 16) |
         (std::uint32_t{buf[off + 2]} << 8) | std::uint32_t{buf[off + 3]};
}

}  // namespace

const char* source_name(Source s) { return s == Source::mnist ? "mnist" : "cifar10"; }

Source parse_source(const std::string& name) {
  if (name == "mnist") return Source::mnist;
  if (name == "cifar10") return Source::cifar10;
  throw ValidationError("unknown dataset '" + name + "' (expected mnist or cifar10)");
}

Matrix LabeledImages::to_matrix() const {
  Matrix m(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = pixel(i, j);
  return m;
}

LabeledImages LabeledImages::select(std::span<const std::size_t> rows) const {
  LabeledImages out{source, split, dim, {}, {}};
  out.pixels.reserve(rows.size() * dim);
  out.labels.reserve(rows.size());
  for (auto r : rows) {
    if (r >= size()) throw IndexError("row " + std::to_string(r) + " out of range");
    out.pixels.insert(out.pixels.end(), pixels.begin() + r * dim, pixels.begin() + (r + 1) * dim);
    out.labels.push_back(labels[r]);
  }
  return out;
}

LabeledImages load_mnist(const std::filesystem::path& images_path,
                         const std::filesystem::path& labels_path, Split split) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  if (be32(img, 0, images_path) != kIdxImagesMagic) {
    throw FormatError(images_path.string() + ": bad IDX magic for an image file");
  }
  if (be32(lab, 0, labels_path) != kIdxLabelsMagic) {
    throw FormatError(labels_path.string() + ": bad IDX magic for a label file");
  }
  const std::size_t n = be32(img, 4, images_path);
  const std::size_t rows = be32(img, 8, images_path);
  const std::size_t cols = be32(img, 12, images_path);
  const std::size_t n_labels = be32(lab, 4, labels_path);
  if (rows * cols != kMnistDim) {
    throw FormatError(images_path.string() + ": expected 28x28 images");
  }
  if (n != n_labels) {
    throw FormatError("image count " + std::to_string(n) + " != label count " +
                      std::to_string(n_labels));
  }
  if (img.size() < 16 + n * kMnistDim) throw IoError(images_path.string() + ": truncated payload");
  if (lab.size() < 8 + n) throw IoError(labels_path.string() + ": truncated payload");

  LabeledImages out{Source::mnist, split, kMnistDim, {}, {}};
  out.pixels.assign(img.begin() + 16, img.begin() + 16 + static_cast<std::ptrdiff_t>(n * kMnistDim));
  out.labels.assign(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(n));
  return out;
}

LabeledImages load_cifar10(std::span<const std::filesystem::path> batch_paths, Split split) {
  LabeledImages out{Source::cifar10, split, kCifarDim, {}, {}};
  for (const auto& path : batch_paths) {
    const auto buf = read_file(path);
    if (buf.empty() || buf.size() % kCifarRecord != 0) {
      throw FormatError(path.string() + ": length " + std::to_string(buf.size()) +
                        " is not a multiple of the 3073-byte record");
    }
    const std::size_t n = buf.size() / kCifarRecord;
    out.pixels.reserve(out.pixels.size() + n * kCifarDim);
    for (std::size_t r = 0; r < n; ++r) {
      const auto rec = buf.begin() + static_cast<std::ptrdiff_t>(r * kCifarRecord);
      if (*rec > 9) throw FormatError(path.string() + ": label byte out of range");
      out.labels.push_back(*rec);
      out.pixels.insert(out.pixels.end(), rec + 1, rec + kCifarRecord);
    }
  }
  return out;
}

LabeledImages filter_binary(const LabeledImages& data, int class_a, int class_b) {
  if (class_a == class_b) throw ValidationError("filter_binary needs two distinct classes");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] == class_a || data.labels[i] == class_b) keep.push_back(i);
  }
  if (keep.empty()) throw ValidationError("no rows of classes " + std::to_string(class_a) +
                                          "/" + std::to_string(class_b));
  LabeledImages out = data.select(keep);
  for (auto& l : out.labels) l = (l == class_a) ? 0 : 1;
  return out;
}

std::vector<std::size_t> subsample_indices(std::span<const int> labels, std::size_t n,
                                           std::uint64_t seed) {
  if (n > labels.size()) {
    throw ValidationError("requested " + std::to_string(n) + " samples but only " +
                          std::to_string(labels.size()) + " are available");
  }
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  // One seeded permutation per class; the sample is a round-robin over the
  // classes, so any prefix is balanced to within one and prefixes nest.
  std::vector<std::vector<std::size_t>> pools(classes.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin();
    pools[c].push_back(i);
  }
  for (std::size_t c = 0; c < pools.size(); ++c) {
    Rng rng(mix_seed(seed, c));
    rng.shuffle(pools[c]);
  }

  std::vector<std::size_t> out;
  out.reserve(n);
  std::vector<std::size_t> cursor(pools.size(), 0);
  while (out.size() < n) {
    for (std::size_t c = 0; c < pools.size() && out.size() < n; ++c) {
      if (cursor[c] < pools[c].size()) out.push_back(pools[c][cursor[c]++]);
    }
  }
  return out;
}

LabeledImages subsample(const LabeledImages& data, std::size_t n, std::uint64_t seed) {
  const auto idx = subsample_indices(data.labels, n, seed);
  return data.select(idx);
}

PcaProjection pca_fit(const Matrix& x_train, std::size_t k) {
  const Eigen::Index n = x_train.rows();
  const Eigen::Index d = x_train.cols();
  const auto kk = static_cast<Eigen::Index>(k);
  if (k < 1 || n <= kk || d < kk) {
    throw ValidationError("pca_fit needs n > k and d >= k (n=" + std::to_string(n) +
                          ", d=" + std::to_string(d) + ", k=" + std::to_string(k) + ")");
  }
  if (!x_train.allFinite()) throw ValidationError("pca_fit input contains non-finite values");

  PcaProjection p;
  p.mean = x_train.colwise().mean().transpose();
  const Matrix centered = x_train.rowwise() - p.mean.transpose();

  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("SVD failed in pca_fit");
  const Vector& sv = svd.singularValues();
  if (sv(kk - 1) <= 1e-10 * std::max(1.0, sv(0))) {
    throw NumericError("training data has rank < " + std::to_string(k));
  }

  p.components = svd.matrixV().leftCols(kk);
  for (Eigen::Index j = 0; j < kk; ++j) {
    Eigen::Index arg;
    p.components.col(j).cwiseAbs().maxCoeff(&arg);
    if (p.components(arg, j) < 0) p.components.col(j) *= -1.0;
  }
  const double denom = static_cast<double>(n - 1);
  p.explained_variance = sv.head(kk).array().square() / denom;
  p.total_variance = sv.squaredNorm() / denom;

  const Matrix projected = centered * p.components;
  p.scale = projected.cwiseAbs().colwise().maxCoeff().transpose();
  return p;
}

Matrix pca_transform(const Matrix& x, const PcaProjection& proj) {
  if (x.cols() != proj.mean.size()) {
    throw ShapeError("pca_transform: input has " + std::to_string(x.cols()) +
                     " columns, projection expects " + std::to_string(proj.mean.size()));
  }
  Matrix z = (x.rowwise() - proj.mean.transpose()) * proj.components;
  z = z.array().rowwise() / proj.scale.transpose().array();
  return z.cwiseMax(-kTransformClamp).cwiseMin(kTransformClamp);
}

}  // namespace pqk::data
