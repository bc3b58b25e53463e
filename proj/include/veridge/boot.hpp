/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "veridge/tpm.hpp"

namespace veridge::boot {

enum class BootStage { Crtm, Firmware, Bootloader, Kernel, Keys };

inline constexpr std::array<BootStage, 5> kBootChain = {
    BootStage::Crtm, BootStage::Firmware, BootStage::Bootloader, BootStage::Kernel,
    BootStage::Keys};

std::string_view to_string(BootStage stage);
BootStage stage_from_string(std::string_view name);

/// Which PCR each stage measures into. CRTM and firmware share PCR 0.
struct PcrAllocation {
  std::array<unsigned, 5> pcr_for_stage{0, 0, 4, 5, 7};

  unsigned pcr(BootStage stage) const { return pcr_for_stage[static_cast<std::size_t>(stage)]; }
};

struct BootComponent {
  BootStage stage;
  std::string name;
  Digest32 content_digest{};
};

struct BootEvent {
  BootStage stage;
  std::string name;
  Digest32 digest{};
  unsigned pcr;

  bool operator==(const BootEvent&) const = default;
};

struct BootEventLog {
  std::vector<BootEvent> entries;

  bool operator==(const BootEventLog&) const = default;
};

void to_json(nlohmann::json& j, const BootEventLog& log);
void from_json(const nlohmann::json& j, BootEventLog& log);

struct BootResult {
  tpm::PcrBank bank;
  BootEventLog log;
};

/// Measures each component's digest into its stage's PCR, in order.
/// Components must be nonempty and in chain order (stages non-decreasing).
BootResult simulate_boot(std::span<const BootComponent> components, tpm::PcrBank bank = {},
                         const PcrAllocation& allocation = {});

/// Register values obtained by replaying every log entry on a fresh bank.
std::map<unsigned, Digest32> replay_event_log(const BootEventLog& log);

/// Administrator's golden values: allowed digests per stage plus the PCR
/// selection quotes are taken over.
struct ReferenceState {
  std::map<BootStage, std::set<Digest32>> allowed;
  std::vector<unsigned> pcr_selection;

  /// Throws unless every chain stage has a nonempty allowed set and the
  /// selection is nonempty with valid indices.
  void validate() const;

  bool operator==(const ReferenceState&) const = default;
};

/// Strict parse of the documented schema:
///   {"allowed": {"crtm": [hex...], ..., "keys": [...]}, "pcr_selection": [0,4,5,7]}
/// Unknown fields rejected; errors name the offending field path.
ReferenceState parse_reference_state(std::string_view json_text);
ReferenceState reference_state_from_json(const nlohmann::json& j);
std::string serialize_reference_state(const ReferenceState& reference);
nlohmann::json reference_state_to_json(const ReferenceState& reference);

enum class VerdictReason {
  DigestNotAllowed,
  PcrMismatch,
  BadSignature,
  StaleNonce,
  LogReplayMismatch,
  AgentUnreachable,
};

std::string_view to_string(VerdictReason reason);
VerdictReason verdict_reason_from_string(std::string_view name);

struct AttestationVerdict {
  bool passed = false;
  std::optional<BootStage> failing_stage;
  std::optional<VerdictReason> reason;

  static AttestationVerdict pass() { return {true, std::nullopt, std::nullopt}; }
  static AttestationVerdict fail(VerdictReason reason,
                                 std::optional<BootStage> stage = std::nullopt) {
    return {false, stage, reason};
  }

  /// "passed" or e.g. "digest-not-allowed:kernel".
  std::string describe() const;

  bool operator==(const AttestationVerdict&) const = default;
};

void to_json(nlohmann::json& j, const AttestationVerdict& verdict);
void from_json(const nlohmann::json& j, AttestationVerdict& verdict);

/// Checks run in a fixed order so the reason is deterministic:
///   1. quote signature and AK binding        -> bad-signature
///   2. quote nonce equals the challenge      -> stale-nonce
///   3. quote selection equals the reference  -> pcr-mismatch
///      log replay reproduces the composite   -> log-replay-mismatch
///   4. every log digest in its allowed set   -> digest-not-allowed
AttestationVerdict check_reference(const BootEventLog& log, const tpm::Quote& quote,
                                   const ReferenceState& reference,
                                   const crypto::PublicKey& ak_pub,
                                   const crypto::Signature& ak_binding,
                                   const crypto::PublicKey& ek_pub, const Digest32& nonce);

}  // namespace veridge::boot
