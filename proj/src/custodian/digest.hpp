#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "custodian/types.hpp"

namespace custodian {

// Incremental SHA-1 + SHA-256 over the same byte stream (OpenSSL EVP).
class DualHasher {
 public:
  DualHasher();
  ~DualHasher();
  DualHasher(const DualHasher&) = delete;
  DualHasher& operator=(const DualHasher&) = delete;
  DualHasher(DualHasher&&) noexcept;
  DualHasher& operator=(DualHasher&&) noexcept;

  void update(std::span<const std::uint8_t> bytes);

  struct Result {
    DigestValue sha1;
    DigestValue sha256;
  };
  // Single use: the hasher cannot be updated after finish().
  Result finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

DualHasher::Result hash_bytes(std::span<const std::uint8_t> bytes);
DualHasher::Result hash_file(const std::filesystem::path& path);

std::array<std::uint8_t, 32> sha256_raw(std::span<const std::uint8_t> bytes);

// Streaming SHA-256 producing raw output; used by the ledger chain.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  void update(std::span<const std::uint8_t> bytes);
  std::array<std::uint8_t, 32> finish();

 private:
  void* ctx_;
};

std::vector<std::uint8_t> pbkdf2_sha256(std::string_view secret, std::span<const std::uint8_t> salt,
                                        int iterations, std::size_t out_len);

std::vector<std::uint8_t> random_bytes(std::size_t n);

bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) noexcept;

}  // namespace custodian
