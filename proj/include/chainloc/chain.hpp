#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "chainloc/geo.hpp"
#include "chainloc/identity.hpp"

namespace chainloc::chain {

using geo::Position;
using identity::Bytes;
using identity::ByteView;
using identity::Digest;
using identity::KeyPair;
using identity::NodeId;

// A node's signed statement of who it is, where it is and whom it hears.
struct LocationClaim {
  NodeId node_id;
  Bytes public_key;
  Position position;  // held at millimeter resolution, see make_claim
  std::vector<NodeId> neighbor_ids;
  Bytes signature;

  friend bool operator==(const LocationClaim&, const LocationClaim&) = default;
};

// Builds and signs a claim. The position is snapped to the millimeter grid
// and the neighbor list is sorted, deduplicated and stripped of the node's
// own id, so the in-memory claim matches its canonical encoding exactly.
LocationClaim make_claim(const KeyPair& key, const Position& position, std::vector<NodeId> neighbors);

// Bytes covered by the claim signature: id, key, position, neighbors.
Bytes encode_claim_payload(const LocationClaim& claim);
// Payload followed by the length-prefixed signature.
Bytes encode_claim(const LocationClaim& claim);
LocationClaim decode_claim(ByteView bytes);

struct Block {
  std::uint64_t index = 0;
  Digest prev_hash{};
  std::uint64_t nonce = 0;
  LocationClaim claim;
  Digest hash{};

  friend bool operator==(const Block&, const Block&) = default;
};

// Hash preimage: index, prev_hash, nonce, then the full claim encoding.
Bytes encode_block(const Block& block);
Digest compute_block_hash(const Block& block);

// Number of leading zero bits of a digest, scanning from the first byte's MSB.
unsigned leading_zero_bits(const Digest& digest);

enum class Verdict {
  Ok,
  BadSignature,
  IdentityMismatch,
  VicinityViolation,
  NoVerifiableNeighbor,
  BadNonce,
  BadLink,
};

std::string_view to_string(Verdict verdict);

struct VerificationOutcome {
  bool accepted = true;
  Verdict reason = Verdict::Ok;

  static VerificationOutcome ok() { return {}; }
  static VerificationOutcome reject(Verdict why) { return {false, why}; }
};

// Consensus parameters shared by every miner and validator.
struct ChainRules {
  unsigned difficulty = 12;  // leading zero bits required of non-genesis blocks
  double range_r = 30.0;     // radio range in meters
  double slack = 1.0;        // multiplier on range_r; infinity disables the vicinity rule
  bool verify_claims = true;           // false reproduces an unprotected ledger
  bool reciprocal_neighbors = false;   // optionally require neighbors to list the claimant back

  double vicinity_bound() const { return slack * range_r; }
};

class Ledger;
struct ChainReplay;

// Reserved nonce space was exhausted without meeting the difficulty.
class MiningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown by append_block for a block that fails validation.
class RejectedBlockError : public std::runtime_error {
 public:
  RejectedBlockError(Verdict why);
  Verdict reason;
};

// Where a new block attaches: its index and the hash it must reference.
struct BlockLink {
  std::uint64_t index = 0;
  Digest prev_hash{};
};

BlockLink next_link(const Ledger& ledger);

// Searches nonces upward from zero and returns the first block whose hash
// carries at least `difficulty` leading zero bits.
Block mine_block(const LocationClaim& claim, const BlockLink& link, unsigned difficulty);

// The shared localization database: an append-only hash chain plus the
// latest accepted position of every node that appears in it.
class Ledger {
 public:
  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }
  // Blocks [0, genesis_count) were written at initialization by the anchors.
  std::size_t genesis_count() const { return genesis_count_; }
  Digest tip_hash() const { return blocks_.empty() ? Digest{} : blocks_.back().hash; }

  std::optional<Position> lookup_position(const NodeId& id) const;
  // Latest accepted claim of `id`, if any.
  const LocationClaim* latest_claim(const NodeId& id) const;
  const std::map<NodeId, Position>& position_index() const { return position_index_; }

 private:
  friend void append_block(Ledger&, const Block&, const ChainRules&);
  friend Ledger build_genesis(std::span<const LocationClaim>, const ChainRules&, std::vector<NodeId>*);
  friend ChainReplay replay_chain(std::span<const Block>, std::size_t, const ChainRules&);

  void push(const Block& block, bool genesis);

  std::vector<Block> blocks_;
  std::map<NodeId, Position> position_index_;
  std::map<NodeId, std::size_t> latest_block_;
  std::size_t genesis_count_ = 0;
};

inline std::optional<Position> lookup_position(const Ledger& ledger, const NodeId& id) {
  return ledger.lookup_position(id);
}

// Signature and identity binding, then the vicinity rule: every listed
// neighbor already in the ledger must sit within slack * range_r of the
// claimed position. With `bootstrap` set a claim that has no verifiable
// neighbor is still accepted (initialization of the anchor set).
VerificationOutcome verify_position_claim(const LocationClaim& claim, const Ledger& ledger,
                                          const ChainRules& rules, bool bootstrap = false);

// Linkage to the tip, hash and difficulty, then the claim itself.
VerificationOutcome validate_block(const Block& block, const Ledger& ledger, const ChainRules& rules);

// Validates and appends; throws RejectedBlockError when validation fails.
void append_block(Ledger& ledger, const Block& block, const ChainRules& rules);

// Initializes a ledger from anchor claims, processed in ascending id order.
// Each claim is checked against the anchors accepted before it (with the
// bootstrap exception) and written as a difficulty-0 block. Ids of
// rejected anchors are appended to `rejected` when provided.
Ledger build_genesis(std::span<const LocationClaim> anchor_claims, const ChainRules& rules,
                     std::vector<NodeId>* rejected = nullptr);

struct ChainReplay {
  bool ok = true;
  std::size_t failed_index = 0;  // meaningful only when !ok
  Verdict reason = Verdict::Ok;
  Ledger ledger;                 // state rebuilt up to (excluding) the failure
};

// Re-validates a block list from its first block, as a fresh node would.
ChainReplay replay_chain(std::span<const Block> blocks, std::size_t genesis_count, const ChainRules& rules);

// Position index obtained by folding every claim in order (last writer wins).
std::map<NodeId, Position> fold_positions(std::span<const Block> blocks);

// Flat chain file: a length-prefixed header record followed by one
// length-prefixed record per block (block encoding then its 32-byte hash).
struct ChainFile {
  std::size_t genesis_count = 0;
  std::vector<Block> blocks;
};

Bytes export_chain(const Ledger& ledger);
Bytes export_chain(const ChainFile& chain);
// Throws encoding::EncodingError on malformed input.
ChainFile import_chain(ByteView bytes);

void write_chain_file(const Ledger& ledger, const std::filesystem::path& path);
ChainFile read_chain_file(const std::filesystem::path& path);

}  // namespace chainloc::chain
