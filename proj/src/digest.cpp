#include "pqk/digest.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>

#include "pqk/errors.hpp"

namespace pqk {

Hasher::Hasher() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr ||
      EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1) {
    throw Error("failed to initialise SHA-256");
  }
}

Hasher::~Hasher() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

Hasher& Hasher::bytes(std::span<const std::uint8_t> data) {
  EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data.data(), data.size());
  return *this;
}

Hasher& Hasher::text(const std::string& s) {
  u64(s.size());
  return bytes({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

Hasher& Hasher::u64(std::uint64_t v) {
  std::array<std::uint8_t, 8> buf;
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return bytes(buf);
}

Hasher& Hasher::f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }

Digest Hasher::finish() {
  Digest out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &len);
  return out;
}

std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : d) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xF]);
  }
  return s;
}

}  // namespace pqk
