#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace pqk {

using Digest = std::array<std::uint8_t, 32>;

// Incremental SHA-256 over canonical little-endian encodings.
class Hasher {
 public:
  Hasher();
  ~Hasher();
  Hasher(const Hasher&) = delete;
  Hasher& operator=(const Hasher&) = delete;

  Hasher& bytes(std::span<const std::uint8_t> data);
  Hasher& text(const std::string& s);
  Hasher& u64(std::uint64_t v);
  Hasher& f64(double v);
  Digest finish();

 private:
  void* ctx_;
};

std::string to_hex(const Digest& d);

}  // namespace pqk
