/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <atomic>
#include <chrono>
#include <mutex>
#include <optional>
#include <thread>

#include "veridge/boot.hpp"
#include "veridge/cluster.hpp"
#include "veridge/registrar.hpp"
#include "veridge/rpc.hpp"

namespace veridge::agent {

struct AgentConfig {
  unsigned register_attempts = 3;
  std::chrono::milliseconds register_backoff{2000};
  /// Simulated worker startup cost inserted before the payload enrolls the
  /// worker node.
  std::chrono::milliseconds worker_startup_delay{0};
  std::chrono::milliseconds session_ttl{60000};
};

/// Runs on one simulated edge device: boots via the measured-boot chain,
/// registers with the registrar, answers identity challenges and quote
/// requests, and executes the payload once both key shares arrived.
///
/// Served methods: identity-challenge, quote, deliver-payload, deliver-share.
class EdgeAgent : public rpc::JsonService {
 public:
  EdgeAgent(tpm::EndorsementIdentity identity, cluster::ClusterApi& cluster,
            std::shared_ptr<rpc::ServiceEndpoint> registrar, AgentConfig config = {});
  ~EdgeAgent() override;

  void boot(std::span<const boot::BootComponent> components);
  void register_with_registrar(const std::string& own_address);
  void boot_and_register(std::span<const boot::BootComponent> components,
                         const std::string& own_address);
  /// Re-measures a new component chain on a fresh bank. Registration state
  /// and held payload material survive the reboot; execution state does not
  /// reset (a worker that already enrolled stays enrolled).
  void reboot(std::span<const boot::BootComponent> components);

  /// Returns the possession proof plus a single-use session token that a
  /// subsequent payload delivery must present.
  std::pair<tpm::PossessionProof, std::string> identity_challenge(const Digest32& nonce);
  std::pair<tpm::Quote, boot::BootEventLog> handle_quote_request(
      const Digest32& nonce, std::span<const unsigned> selection);
  void receive_payload(Bytes ciphertext, const crypto::SymmetricKey& share1,
                       const std::string& session);
  /// Synchronously recombines and decrypts; on success the worker-enrollment
  /// step runs asynchronously (after worker_startup_delay). Returns once
  /// decryption succeeded. Idempotent after a successful decryption.
  void receive_key_share(const crypto::SymmetricKey& share2);

  /// Blocks until the executor thread (if any) finished.
  void shutdown();

  bool booted() const;
  bool registered() const;
  bool holds_ciphertext() const;
  bool holds_share() const;
  /// True only after authenticated decryption succeeded AND the payload ran
  /// (worker enrolled).
  bool executed() const;
  std::optional<TimePoint> executed_at() const;
  std::optional<std::string> execution_error() const;

  const tpm::EndorsementIdentity& identity() const noexcept { return identity_; }
  const tpm::AttestationKey& attestation_key() const noexcept { return ak_; }
  const std::string& device_id() const noexcept { return identity_.device_id; }

 private:
  void execute_payload(Bytes plaintext);
  void prune_sessions_locked();

  tpm::EndorsementIdentity identity_;
  tpm::AttestationKey ak_;
  cluster::ClusterApi& cluster_;
  std::shared_ptr<rpc::ServiceEndpoint> registrar_;
  AgentConfig config_;

  mutable std::mutex mu_;
  bool booted_ = false;
  bool registered_ = false;
  tpm::PcrBank bank_;
  boot::BootEventLog log_;
  std::optional<Bytes> ciphertext_;
  std::optional<crypto::SymmetricKey> share1_;
  bool execution_started_ = false;
  std::atomic<bool> executed_{false};
  std::optional<TimePoint> executed_at_;
  std::optional<std::string> execution_error_;
  std::map<std::string, std::chrono::steady_clock::time_point> sessions_;
  std::thread executor_;
};

/// Typed wrapper over an agent endpoint.
class AgentClient {
 public:
  explicit AgentClient(std::shared_ptr<rpc::ServiceEndpoint> endpoint)
      : endpoint_(std::move(endpoint)) {}

  std::pair<tpm::PossessionProof, std::string> identity_challenge(const Digest32& nonce);
  std::pair<tpm::Quote, boot::BootEventLog> quote(const Digest32& nonce,
                                                  const std::vector<unsigned>& selection);
  void deliver_payload(const Bytes& ciphertext, const crypto::SymmetricKey& share1,
                       const std::string& session);
  void deliver_share(const crypto::SymmetricKey& share2);

 private:
  std::shared_ptr<rpc::ServiceEndpoint> endpoint_;
};

}  // namespace veridge::agent
