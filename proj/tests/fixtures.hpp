#pragma once

#include <unistd.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fixture {

// Real datasets live outside the repo; PQK_DATA_DIR overrides the configured default.
inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("PQK_DATA_DIR")) return env;
  return PQK_TEST_DATA_DIR;
}

inline bool have_mnist() {
  return std::filesystem::exists(data_dir() / "mnist" / "train-labels-idx1-ubyte");
}

inline bool have_cifar() {
  return std::filesystem::exists(data_dir() / "cifar10" / "test_batch.bin");
}

inline std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         ("pqk_test_" + std::to_string(::getpid()) + "_" + name);
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

}  // namespace fixture
