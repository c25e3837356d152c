#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "pqk/errors.hpp"
#include "pqk/features.hpp"

namespace pqk::features {

namespace {

constexpr char kMagic[4] = {'P', 'Q', 'K', 'F'};

template <typename T>
void put_le(std::ostream& out, T v) {
  std::uint8_t buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path, const char* field) {
  std::uint8_t buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw IoError(path.string() + ": truncated while reading " + field);
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void save_features(const PqkFeatureSet& fs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kCacheVersion);
  put_le<std::uint64_t>(out, fs.n_samples());
  put_le<std::uint64_t>(out, fs.n_qubits);
  out.write(reinterpret_cast<const char*>(fs.config_digest.data()), 32);
  for (Eigen::Index i = 0; i < fs.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < fs.values.cols(); ++j) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(fs.values(i, j)));
    }
  }
  if (!out) throw IoError("write to " + path.string() + " failed");
}

PqkFeatureSet load_features(const std::filesystem::path& path,
                            const std::optional<Digest>& expected_digest) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  char magic[4];
  if (!in.read(magic, 4)) throw IoError(path.string() + ": truncated while reading magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path.string() + ": bad magic, not a PQKF feature cache");
  }
  const auto version = get_le<std::uint32_t>(in, path, "version");
  if (version != kCacheVersion) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto n_samples = get_le<std::uint64_t>(in, path, "n_samples");
  const auto n_qubits = get_le<std::uint64_t>(in, path, "n_qubits");
  if (n_qubits < 1 || n_qubits > sim::kMaxQubits) {
    throw FormatError(path.string() + ": implausible n_qubits " + std::to_string(n_qubits));
  }

  PqkFeatureSet fs;
  fs.n_qubits = n_qubits;
  if (!in.read(reinterpret_cast<char*>(fs.config_digest.data()), 32)) {
    throw IoError(path.string() + ": truncated while reading config_digest");
  }
  if (expected_digest && *expected_digest != fs.config_digest) {
    throw FormatError(path.string() + ": config_digest mismatch (cache " +
                      to_hex(fs.config_digest) + ", expected " + to_hex(*expected_digest) + ")");
  }

  // Size check before allocating so a corrupt count cannot trigger a huge
  // allocation.
  const auto header_end = in.tellg();
  in.seekg(0, std::ios::end);
  const auto file_end = in.tellg();
  in.seekg(header_end);
  const std::uint64_t cols = 3 * n_qubits;
  const auto payload = static_cast<std::uint64_t>(file_end - header_end);
  if (n_samples > payload / (8 * cols) || payload < n_samples * cols * 8) {
    throw IoError(path.string() + ": truncated payload");
  }

  fs.values.resize(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(cols));
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) {
      fs.values(i, j) = std::bit_cast<double>(get_le<std::uint64_t>(in, path, "values"));
    }
  }
  return fs;
}

}  // namespace pqk::features
