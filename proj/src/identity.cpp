#include "chainloc/identity.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace chainloc::identity {
namespace {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

const EVP_MD* sha256_md() {
  static const EVP_MD* md = [] {
    EVP_MD* fetched = EVP_MD_fetch(nullptr, "SHA256", nullptr);
    if (fetched == nullptr) throw std::runtime_error("SHA-256 unavailable in libcrypto");
    return fetched;
  }();
  return md;
}

}  // namespace

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (const auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

struct Sha256::Impl {
  MdCtxPtr ctx{EVP_MD_CTX_new()};
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  if (!impl_->ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
}

Sha256::~Sha256() = default;

Digest Sha256::digest(ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_DigestInit_ex(impl_->ctx.get(), sha256_md(), nullptr) != 1 ||
      EVP_DigestUpdate(impl_->ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(impl_->ctx.get(), out.data(), &len) != 1 || len != kDigestSize) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  return out;
}

Digest sha256(ByteView data) {
  thread_local Sha256 hasher;
  return hasher.digest(data);
}

KeyPair Ed25519Scheme::generate_keypair(RandomSource& rng) const {
  Bytes seed(kSeedSize);
  for (std::size_t i = 0; i < kSeedSize; i += 8) {
    const std::uint64_t word = rng.next_u64();
    for (std::size_t b = 0; b < 8; ++b) seed[i + b] = static_cast<std::uint8_t>(word >> (56 - 8 * b));
  }
  PkeyPtr pkey(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()));
  if (!pkey) throw std::runtime_error("Ed25519 key construction failed");
  Bytes pub(kPublicKeySize);
  std::size_t pub_len = pub.size();
  if (EVP_PKEY_get_raw_public_key(pkey.get(), pub.data(), &pub_len) != 1 || pub_len != kPublicKeySize) {
    throw std::runtime_error("Ed25519 public key extraction failed");
  }
  return {std::move(pub), std::move(seed)};
}

Bytes Ed25519Scheme::sign(ByteView message, const KeyPair& key) const {
  if (key.private_key.size() != kSeedSize) throw std::invalid_argument("Ed25519: bad private key length");
  PkeyPtr pkey(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, key.private_key.data(),
                                            key.private_key.size()));
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!pkey || !ctx) throw std::runtime_error("Ed25519 signing setup failed");
  Bytes sig(kSignatureSize);
  std::size_t sig_len = sig.size();
  if (EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1 ||
      EVP_DigestSign(ctx.get(), sig.data(), &sig_len, message.data(), message.size()) != 1 ||
      sig_len != kSignatureSize) {
    throw std::runtime_error("Ed25519 signing failed");
  }
  return sig;
}

bool Ed25519Scheme::verify(ByteView message, ByteView signature, ByteView public_key) const {
  if (signature.size() != kSignatureSize || public_key.size() != kPublicKeySize) return false;
  PkeyPtr pkey(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(), public_key.size()));
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!pkey || !ctx) return false;
  if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1) return false;
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(), message.size()) == 1;
}

const SignatureScheme& default_scheme() {
  static const Ed25519Scheme scheme;
  return scheme;
}

KeyPair generate_keypair(RandomSource& rng) { return default_scheme().generate_keypair(rng); }

NodeId derive_identity(ByteView public_key) { return NodeId{sha256(public_key)}; }

Bytes sign(ByteView message, const KeyPair& key) { return default_scheme().sign(message, key); }

bool verify(ByteView message, ByteView signature, ByteView public_key) {
  return default_scheme().verify(message, signature, public_key);
}

}  // namespace chainloc::identity
