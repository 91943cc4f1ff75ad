#include "custodian/digest.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <fstream>

#include "custodian/hex.hpp"

namespace custodian {

namespace {

EVP_MD_CTX* new_ctx(const EVP_MD* md) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, md, nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    fail(ErrorCode::Internal, "digest initialisation failed");
  }
  return ctx;
}

std::string finish_hex(EVP_MD_CTX* ctx) {
  std::array<std::uint8_t, EVP_MAX_MD_SIZE> out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx, out.data(), &len) != 1) {
    fail(ErrorCode::Internal, "digest finalisation failed");
  }
  return to_hex(std::span(out.data(), len));
}

}  // namespace

struct DualHasher::Impl {
  EVP_MD_CTX* sha1 = nullptr;
  EVP_MD_CTX* sha256 = nullptr;
  ~Impl() {
    EVP_MD_CTX_free(sha1);
    EVP_MD_CTX_free(sha256);
  }
};

DualHasher::DualHasher() : impl_(std::make_unique<Impl>()) {
  impl_->sha1 = new_ctx(EVP_sha1());
  impl_->sha256 = new_ctx(EVP_sha256());
}

DualHasher::~DualHasher() = default;
DualHasher::DualHasher(DualHasher&&) noexcept = default;
DualHasher& DualHasher::operator=(DualHasher&&) noexcept = default;

void DualHasher::update(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return;
  if (EVP_DigestUpdate(impl_->sha1, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestUpdate(impl_->sha256, bytes.data(), bytes.size()) != 1) {
    fail(ErrorCode::Internal, "digest update failed");
  }
}

DualHasher::Result DualHasher::finish() {
  return {DigestValue{DigestAlgorithm::Sha1, finish_hex(impl_->sha1)},
          DigestValue{DigestAlgorithm::Sha256, finish_hex(impl_->sha256)}};
}

DualHasher::Result hash_bytes(std::span<const std::uint8_t> bytes) {
  DualHasher h;
  h.update(bytes);
  return h.finish();
}

DualHasher::Result hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::StorageFailure, "cannot open " + path.string());
  DualHasher h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    auto got = static_cast<std::size_t>(in.gcount());
    h.update(std::span(reinterpret_cast<const std::uint8_t*>(buf.data()), got));
  }
  if (in.bad()) fail(ErrorCode::StorageFailure, "read error on " + path.string());
  return h.finish();
}

Sha256::Sha256() : ctx_(new_ctx(EVP_sha256())) {}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::update(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return;
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), bytes.data(), bytes.size()) != 1) {
    fail(ErrorCode::Internal, "digest update failed");
  }
}

std::array<std::uint8_t, 32> Sha256::finish() {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &len) != 1 || len != 32) {
    fail(ErrorCode::Internal, "digest finalisation failed");
  }
  return out;
}

std::array<std::uint8_t, 32> sha256_raw(std::span<const std::uint8_t> bytes) {
  Sha256 h;
  h.update(bytes);
  return h.finish();
}

std::vector<std::uint8_t> pbkdf2_sha256(std::string_view secret, std::span<const std::uint8_t> salt,
                                        int iterations, std::size_t out_len) {
  std::vector<std::uint8_t> out(out_len);
  if (PKCS5_PBKDF2_HMAC(secret.data(), static_cast<int>(secret.size()), salt.data(),
                        static_cast<int>(salt.size()), iterations, EVP_sha256(),
                        static_cast<int>(out.size()), out.data()) != 1) {
    fail(ErrorCode::Internal, "key derivation failed");
  }
  return out;
}

std::vector<std::uint8_t> random_bytes(std::size_t n) {
  std::vector<std::uint8_t> out(n);
  if (n > 0 && RAND_bytes(out.data(), static_cast<int>(n)) != 1) {
    fail(ErrorCode::Internal, "random generator unavailable");
  }
  return out;
}

bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) noexcept {
  if (a.size() != b.size()) return false;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace custodian
