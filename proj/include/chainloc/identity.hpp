#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "chainloc/random.hpp"

namespace chainloc::identity {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline constexpr std::size_t kDigestSize = 32;
using Digest = std::array<std::uint8_t, kDigestSize>;

std::string to_hex(ByteView bytes);

// SHA-256 of `data`.
Digest sha256(ByteView data);

// Reusable SHA-256 context for tight loops such as nonce search.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Digest digest(ByteView data);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Node identity: the digest of the node's public key.
struct NodeId {
  Digest bytes{};

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
  friend bool operator==(const NodeId&, const NodeId&) = default;

  std::string hex() const { return to_hex(bytes); }
};

struct KeyPair {
  Bytes public_key;
  Bytes private_key;  // stays with the node; never encoded into claims or blocks
};

// Signature scheme behind claims. Implementations must be deterministic so
// that whole simulation runs replay byte-for-byte.
class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;
  virtual KeyPair generate_keypair(RandomSource& rng) const = 0;
  virtual Bytes sign(ByteView message, const KeyPair& key) const = 0;
  // Returns false on any malformed input instead of throwing.
  virtual bool verify(ByteView message, ByteView signature, ByteView public_key) const = 0;
};

// Ed25519 with the 32-byte private seed drawn from the caller's RandomSource.
class Ed25519Scheme final : public SignatureScheme {
 public:
  static constexpr std::size_t kPublicKeySize = 32;
  static constexpr std::size_t kSeedSize = 32;
  static constexpr std::size_t kSignatureSize = 64;

  KeyPair generate_keypair(RandomSource& rng) const override;
  Bytes sign(ByteView message, const KeyPair& key) const override;
  bool verify(ByteView message, ByteView signature, ByteView public_key) const override;
};

const SignatureScheme& default_scheme();

KeyPair generate_keypair(RandomSource& rng);
NodeId derive_identity(ByteView public_key);
Bytes sign(ByteView message, const KeyPair& key);
bool verify(ByteView message, ByteView signature, ByteView public_key);

}  // namespace chainloc::identity
