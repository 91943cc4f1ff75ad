#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "custodian/clock.hpp"
#include "custodian/model.hpp"
#include "custodian/store.hpp"

namespace custodian {

// Canonical event encoding, the input to the chain hash. Eleven fields in this
// order, each written as a 4-byte big-endian length followed by UTF-8 bytes;
// an absent optional is a zero-length field:
//   seq (decimal) | timestamp (ISO 8601) | principal | case_id | evidence_id |
//   related_evidence_id | kind | description | pre_digest ("sha1:<hex>") |
//   post_digest | caused_by_seq (decimal)
std::vector<std::uint8_t> canonical_encoding(const CustodyEvent& event);

// SHA-256(previous ‖ canonical_encoding(event)).
std::array<std::uint8_t, 32> chain_hash(const std::array<std::uint8_t, 32>& previous,
                                        const CustodyEvent& event);

inline constexpr std::array<std::uint8_t, 32> kGenesisHash{};

struct ChainStatus {
  bool ok = true;
  std::uint64_t broken_at = 0;  // first bad seq when !ok
  std::uint64_t events = 0;     // events examined
};

class Ledger {
 public:
  Ledger(store::Store& store, const Clock& clock) : store_(store), clock_(clock) {}

  // Must run inside store.write(); the event commits or rolls back with the
  // caller's transaction.
  CustodyEvent append(store::Database& db, const EventDraft& draft);

  [[nodiscard]] std::vector<CustodyEvent> all() const;
  [[nodiscard]] std::vector<CustodyEvent> range(std::uint64_t from_seq, std::uint64_t limit) const;

  // Events whose evidence_id or related_evidence_id is the item, in seq order.
  [[nodiscard]] std::vector<CustodyEvent> for_evidence(const EvidenceId& id) const;
  [[nodiscard]] std::vector<CustodyEvent> for_evidence(store::Database& db,
                                                       const EvidenceId& id) const;

  // Most recent event naming the item as subject or source. AUTH events
  // (denied attempts) are not operations on the item and are skipped.
  [[nodiscard]] std::optional<std::uint64_t> latest_seq_for(store::Database& db,
                                                            const EvidenceId& id) const;

  [[nodiscard]] ChainStatus verify_chain() const;

  // One line per event: hex(canonical encoding) SP hex(chain hash) LF.
  void export_to(std::ostream& out) const;
  static ChainStatus verify_export(std::istream& in);

  [[nodiscard]] std::uint64_t size() const;

 private:
  store::Store& store_;
  const Clock& clock_;
};

}  // namespace custodian
