/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "veridge/cluster.hpp"
#include "veridge/rpc.hpp"
#include "veridge/tpm.hpp"

namespace veridge::registrar {

struct DeviceRecord {
  std::string device_id;
  crypto::Certificate ek_cert;
  crypto::PublicKey ak_public{};
  crypto::Signature ak_binding{};
  std::string agent_address;
  TimePoint registered_at{};
};

void to_json(nlohmann::json& j, const DeviceRecord& record);
void from_json(const nlohmann::json& j, DeviceRecord& record);

struct RegistrarConfig {
  std::chrono::milliseconds challenge_ttl{30000};
};

/// First point of contact for edge devices: EK identity challenge, device
/// records, and the Unregistered -> Registered patch. If a device registers
/// before its EdgeNode resource exists, the patch is held until the resource
/// is applied.
class RegistrarService : public rpc::JsonService {
 public:
  RegistrarService(cluster::ClusterApi& cluster, const crypto::PublicKey& manufacturer_ca,
                   RegistrarConfig config = {});
  ~RegistrarService() override;

  /// Subscribes to the EdgeNode watch so held registrations get patched once
  /// their resource appears. Must be called before serving; idempotent.
  void start();
  void stop();

  Digest32 begin_registration(const std::string& device_id, const crypto::Certificate& ek_cert,
                              const crypto::PublicKey& ak_public,
                              const crypto::Signature& ak_binding,
                              const std::string& agent_address);
  DeviceRecord complete_registration(const std::string& device_id,
                                     const tpm::PossessionProof& proof);
  DeviceRecord lookup_device(const std::string& device_id) const;

 private:
  struct Challenge {
    Digest32 nonce{};
    std::chrono::steady_clock::time_point issued;
    DeviceRecord candidate;
  };

  void watch_loop();
  void try_patch_registered(const std::string& device_id);

  cluster::ClusterApi& cluster_;
  crypto::PublicKey manufacturer_ca_;
  RegistrarConfig config_;

  mutable std::mutex mu_;
  std::map<std::string, Challenge> outstanding_;
  std::map<std::string, DeviceRecord> records_;
  std::set<std::string> pending_patch_;

  std::shared_ptr<cluster::Watch> watch_;
  std::thread watch_thread_;
  bool started_ = false;
};

/// Typed wrapper over a registrar endpoint.
class RegistrarClient {
 public:
  explicit RegistrarClient(std::shared_ptr<rpc::ServiceEndpoint> endpoint)
      : endpoint_(std::move(endpoint)) {}

  Digest32 begin_registration(const std::string& device_id, const crypto::Certificate& ek_cert,
                              const crypto::PublicKey& ak_public,
                              const crypto::Signature& ak_binding,
                              const std::string& agent_address);
  void complete_registration(const std::string& device_id, const tpm::PossessionProof& proof);
  DeviceRecord lookup_device(const std::string& device_id);

 private:
  std::shared_ptr<rpc::ServiceEndpoint> endpoint_;
};

}  // namespace veridge::registrar
