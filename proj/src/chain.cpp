#include "chainloc/chain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include "chainloc/encoding.hpp"

namespace chainloc::chain {
namespace {

using encoding::ByteReader;
using encoding::ByteWriter;
using encoding::EncodingError;

constexpr std::size_t kNonceOffset = 8 + identity::kDigestSize;
constexpr std::uint32_t kChainMagic = 0x424c4f43;  // "BLOC"
constexpr std::uint32_t kChainVersion = 1;

void write_payload(ByteWriter& w, const LocationClaim& claim) {
  w.raw(claim.node_id.bytes);
  w.var(claim.public_key);
  w.i64(encoding::to_millimeters(claim.position.x));
  w.i64(encoding::to_millimeters(claim.position.y));
  std::vector<NodeId> sorted = claim.neighbor_ids;
  std::sort(sorted.begin(), sorted.end());
  w.u32(static_cast<std::uint32_t>(sorted.size()));
  for (const auto& id : sorted) w.raw(id.bytes);
}

Digest read_digest(ByteReader& r) {
  Digest d{};
  const auto view = r.raw(d.size());
  std::copy(view.begin(), view.end(), d.begin());
  return d;
}

LocationClaim read_claim(ByteReader& r) {
  LocationClaim claim;
  claim.node_id.bytes = read_digest(r);
  claim.public_key = r.var();
  claim.position.x = encoding::from_millimeters(r.i64());
  claim.position.y = encoding::from_millimeters(r.i64());
  const auto count = r.u32();
  if (count > r.remaining() / identity::kDigestSize) throw EncodingError("neighbor count exceeds input");
  claim.neighbor_ids.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) claim.neighbor_ids.push_back(NodeId{read_digest(r)});
  claim.signature = r.var();
  return claim;
}

Block read_block(ByteReader& r) {
  Block block;
  block.index = r.u64();
  block.prev_hash = read_digest(r);
  block.nonce = r.u64();
  block.claim = read_claim(r);
  return block;
}

bool claim_lists(const LocationClaim& claim, const NodeId& id) {
  return std::find(claim.neighbor_ids.begin(), claim.neighbor_ids.end(), id) != claim.neighbor_ids.end();
}

}  // namespace

LocationClaim make_claim(const KeyPair& key, const Position& position, std::vector<NodeId> neighbors) {
  LocationClaim claim;
  claim.public_key = key.public_key;
  claim.node_id = identity::derive_identity(claim.public_key);
  claim.position = {encoding::from_millimeters(encoding::to_millimeters(position.x)),
                    encoding::from_millimeters(encoding::to_millimeters(position.y))};
  std::sort(neighbors.begin(), neighbors.end());
  neighbors.erase(std::unique(neighbors.begin(), neighbors.end()), neighbors.end());
  std::erase(neighbors, claim.node_id);
  claim.neighbor_ids = std::move(neighbors);
  claim.signature = identity::sign(encode_claim_payload(claim), key);
  return claim;
}

Bytes encode_claim_payload(const LocationClaim& claim) {
  ByteWriter w;
  write_payload(w, claim);
  return std::move(w).take();
}

Bytes encode_claim(const LocationClaim& claim) {
  ByteWriter w;
  write_payload(w, claim);
  w.var(claim.signature);
  return std::move(w).take();
}

LocationClaim decode_claim(ByteView bytes) {
  ByteReader r(bytes);
  auto claim = read_claim(r);
  if (!r.done()) throw EncodingError("trailing bytes after claim");
  return claim;
}

Bytes encode_block(const Block& block) {
  ByteWriter w;
  w.u64(block.index);
  w.raw(block.prev_hash);
  w.u64(block.nonce);
  write_payload(w, block.claim);
  w.var(block.claim.signature);
  return std::move(w).take();
}

Digest compute_block_hash(const Block& block) { return identity::sha256(encode_block(block)); }

unsigned leading_zero_bits(const Digest& digest) {
  unsigned bits = 0;
  for (const auto byte : digest) {
    if (byte != 0) return bits + static_cast<unsigned>(std::countl_zero(byte));
    bits += 8;
  }
  return bits;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Ok: return "OK";
    case Verdict::BadSignature: return "BAD_SIGNATURE";
    case Verdict::IdentityMismatch: return "IDENTITY_MISMATCH";
    case Verdict::VicinityViolation: return "VICINITY_VIOLATION";
    case Verdict::NoVerifiableNeighbor: return "NO_VERIFIABLE_NEIGHBOR";
    case Verdict::BadNonce: return "BAD_NONCE";
    case Verdict::BadLink: return "BAD_LINK";
  }
  return "UNKNOWN";
}

RejectedBlockError::RejectedBlockError(Verdict why)
    : std::runtime_error("block rejected: " + std::string(to_string(why))), reason(why) {}

BlockLink next_link(const Ledger& ledger) { return {ledger.size(), ledger.tip_hash()}; }

Block mine_block(const LocationClaim& claim, const BlockLink& link, unsigned difficulty) {
  Block block;
  block.index = link.index;
  block.prev_hash = link.prev_hash;
  block.claim = claim;

  Bytes preimage = encode_block(block);
  identity::Sha256 hasher;
  for (std::uint64_t nonce = 0;; ++nonce) {
    for (std::size_t b = 0; b < 8; ++b) {
      preimage[kNonceOffset + b] = static_cast<std::uint8_t>(nonce >> (56 - 8 * b));
    }
    const Digest hash = hasher.digest(preimage);
    if (leading_zero_bits(hash) >= difficulty) {
      block.nonce = nonce;
      block.hash = hash;
      return block;
    }
    if (nonce == std::numeric_limits<std::uint64_t>::max()) break;
  }
  throw MiningError("nonce space exhausted");
}

std::optional<Position> Ledger::lookup_position(const NodeId& id) const {
  const auto it = position_index_.find(id);
  if (it == position_index_.end()) return std::nullopt;
  return it->second;
}

const LocationClaim* Ledger::latest_claim(const NodeId& id) const {
  const auto it = latest_block_.find(id);
  return it == latest_block_.end() ? nullptr : &blocks_[it->second].claim;
}

void Ledger::push(const Block& block, bool genesis) {
  blocks_.push_back(block);
  position_index_[block.claim.node_id] = block.claim.position;
  latest_block_[block.claim.node_id] = blocks_.size() - 1;
  if (genesis) genesis_count_ = blocks_.size();
}

VerificationOutcome verify_position_claim(const LocationClaim& claim, const Ledger& ledger,
                                          const ChainRules& rules, bool bootstrap) {
  bool signed_ok = false;
  try {
    signed_ok = identity::verify(encode_claim_payload(claim), claim.signature, claim.public_key);
  } catch (const encoding::EncodingError&) {
    signed_ok = false;
  }
  if (!signed_ok) return VerificationOutcome::reject(Verdict::BadSignature);
  if (identity::derive_identity(claim.public_key) != claim.node_id) {
    return VerificationOutcome::reject(Verdict::IdentityMismatch);
  }

  const double bound = rules.vicinity_bound();
  std::size_t witnesses = 0;
  for (const auto& neighbor : claim.neighbor_ids) {
    const auto known = ledger.lookup_position(neighbor);
    if (!known) continue;
    if (!(geo::euclidean_distance(claim.position, *known) <= bound)) {
      return VerificationOutcome::reject(Verdict::VicinityViolation);
    }
    if (rules.reciprocal_neighbors) {
      const LocationClaim* theirs = ledger.latest_claim(neighbor);
      if (theirs != nullptr && !claim_lists(*theirs, claim.node_id)) {
        return VerificationOutcome::reject(Verdict::VicinityViolation);
      }
    }
    ++witnesses;
  }

  // An unbounded vicinity check has nothing to verify, so it cannot demand a witness either.
  if (witnesses == 0 && !bootstrap && !ledger.position_index().empty() && std::isfinite(bound)) {
    return VerificationOutcome::reject(Verdict::NoVerifiableNeighbor);
  }
  return VerificationOutcome::ok();
}

namespace {

VerificationOutcome check_link_and_work(const Block& block, const Ledger& ledger, unsigned difficulty) {
  if (block.index != ledger.size() || block.prev_hash != ledger.tip_hash()) {
    return VerificationOutcome::reject(Verdict::BadLink);
  }
  Digest recomputed{};
  try {
    recomputed = compute_block_hash(block);
  } catch (const EncodingError&) {
    return VerificationOutcome::reject(Verdict::BadNonce);
  }
  if (recomputed != block.hash || leading_zero_bits(recomputed) < difficulty) {
    return VerificationOutcome::reject(Verdict::BadNonce);
  }
  return VerificationOutcome::ok();
}

}  // namespace

VerificationOutcome validate_block(const Block& block, const Ledger& ledger, const ChainRules& rules) {
  if (auto outcome = check_link_and_work(block, ledger, rules.difficulty); !outcome.accepted) return outcome;
  if (!rules.verify_claims) return VerificationOutcome::ok();
  return verify_position_claim(block.claim, ledger, rules);
}

void append_block(Ledger& ledger, const Block& block, const ChainRules& rules) {
  if (const auto outcome = validate_block(block, ledger, rules); !outcome.accepted) {
    throw RejectedBlockError(outcome.reason);
  }
  ledger.push(block, false);
}

namespace {

// Anchors whose claims contradict each other cannot all be honest. Drops the
// claim with the most vicinity conflicts (ties: the larger id) until the
// remaining set is mutually consistent. Returns a keep-mask over `order`.
std::vector<bool> prune_conflicting_anchors(const std::vector<const LocationClaim*>& order, const ChainRules& rules) {
  const std::size_t n = order.size();
  const double bound = rules.vicinity_bound();
  std::vector<std::vector<std::size_t>> conflicts(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool linked = claim_lists(*order[i], order[j]->node_id) || claim_lists(*order[j], order[i]->node_id);
      if (linked && !(geo::euclidean_distance(order[i]->position, order[j]->position) <= bound)) {
        conflicts[i].push_back(j);
        conflicts[j].push_back(i);
      }
    }
  }

  std::vector<bool> keep(n, true);
  std::vector<std::size_t> degree(n);
  for (std::size_t i = 0; i < n; ++i) degree[i] = conflicts[i].size();
  while (true) {
    std::size_t worst = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (keep[i] && degree[i] > 0 && (worst == n || degree[i] >= degree[worst])) worst = i;
    }
    if (worst == n) break;
    keep[worst] = false;
    for (const auto j : conflicts[worst]) {
      if (keep[j]) --degree[j];
    }
  }
  return keep;
}

}  // namespace

Ledger build_genesis(std::span<const LocationClaim> anchor_claims, const ChainRules& rules,
                     std::vector<NodeId>* rejected) {
  std::vector<const LocationClaim*> order;
  order.reserve(anchor_claims.size());
  for (const auto& claim : anchor_claims) order.push_back(&claim);
  std::sort(order.begin(), order.end(),
            [](const LocationClaim* a, const LocationClaim* b) { return a->node_id < b->node_id; });

  auto reject = [&](const LocationClaim& claim) {
    if (rejected != nullptr) rejected->push_back(claim.node_id);
  };

  if (rules.verify_claims) {
    // Unsigned or mis-bound claims never take part in the consistency vote.
    const Ledger empty;
    std::vector<const LocationClaim*> authentic;
    for (const LocationClaim* claim : order) {
      if (verify_position_claim(*claim, empty, rules, /*bootstrap=*/true).accepted) {
        authentic.push_back(claim);
      } else {
        reject(*claim);
      }
    }
    const auto keep = prune_conflicting_anchors(authentic, rules);
    order.clear();
    for (std::size_t i = 0; i < authentic.size(); ++i) {
      if (keep[i]) {
        order.push_back(authentic[i]);
      } else {
        reject(*authentic[i]);
      }
    }
  }

  Ledger ledger;
  for (const LocationClaim* claim : order) {
    if (rules.verify_claims && !verify_position_claim(*claim, ledger, rules, /*bootstrap=*/true).accepted) {
      reject(*claim);
      continue;
    }
    ledger.push(mine_block(*claim, next_link(ledger), 0), true);
  }
  if (rejected != nullptr) std::sort(rejected->begin(), rejected->end());
  return ledger;
}

ChainReplay replay_chain(std::span<const Block> blocks, std::size_t genesis_count, const ChainRules& rules) {
  ChainReplay replay;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& block = blocks[i];
    const bool genesis = i < genesis_count;
    VerificationOutcome outcome =
        check_link_and_work(block, replay.ledger, genesis ? 0U : rules.difficulty);
    if (outcome.accepted && rules.verify_claims) {
      outcome = verify_position_claim(block.claim, replay.ledger, rules, genesis);
    }
    if (!outcome.accepted) {
      replay.ok = false;
      replay.failed_index = i;
      replay.reason = outcome.reason;
      return replay;
    }
    replay.ledger.push(block, genesis);
  }
  return replay;
}

std::map<NodeId, Position> fold_positions(std::span<const Block> blocks) {
  std::map<NodeId, Position> index;
  for (const auto& block : blocks) index[block.claim.node_id] = block.claim.position;
  return index;
}

Bytes export_chain(const ChainFile& chain) {
  ByteWriter out;
  ByteWriter header;
  header.u32(kChainMagic);
  header.u32(kChainVersion);
  header.u64(chain.genesis_count);
  out.var(header.bytes());
  for (const auto& block : chain.blocks) {
    Bytes record = encode_block(block);
    record.insert(record.end(), block.hash.begin(), block.hash.end());
    out.var(record);
  }
  return std::move(out).take();
}

Bytes export_chain(const Ledger& ledger) { return export_chain(ChainFile{ledger.genesis_count(), ledger.blocks()}); }

ChainFile import_chain(ByteView bytes) {
  ByteReader in(bytes);
  ChainFile chain;
  {
    const Bytes header_bytes = in.var();
    ByteReader header(header_bytes);
    if (header.u32() != kChainMagic) throw EncodingError("not a chain file");
    if (header.u32() != kChainVersion) throw EncodingError("unsupported chain file version");
    chain.genesis_count = header.u64();
    if (!header.done()) throw EncodingError("malformed chain header");
  }
  while (!in.done()) {
    const Bytes record = in.var();
    ByteReader r(record);
    Block block = read_block(r);
    block.hash = read_digest(r);
    if (!r.done()) throw EncodingError("trailing bytes in block record");
    chain.blocks.push_back(std::move(block));
  }
  if (chain.genesis_count > chain.blocks.size()) throw EncodingError("genesis count exceeds block count");
  return chain;
}

void write_chain_file(const Ledger& ledger, const std::filesystem::path& path) {
  const Bytes bytes = export_chain(ledger);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write chain file: " + path.string());
}

ChainFile read_chain_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open chain file: " + path.string());
  const Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return import_chain(bytes);
}

}  // namespace chainloc::chain
