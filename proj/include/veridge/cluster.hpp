/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "veridge/boot.hpp"
#include "veridge/crypto.hpp"
#include "veridge/time_util.hpp"

namespace veridge::cluster {

enum class Phase { Unregistered, Registered, Attested, Unattested };

std::string_view to_string(Phase phase);
Phase phase_from_string(std::string_view name);

struct NodeStatus {
  Phase phase = Phase::Unregistered;
  std::string message;

  bool operator==(const NodeStatus&) const = default;
};

struct RoleRule {
  std::string verb;
  std::string resource;

  auto operator<=>(const RoleRule&) const = default;
};

void to_json(nlohmann::json& j, const RoleRule& rule);
void from_json(const nlohmann::json& j, RoleRule& rule);

struct EdgeNodeSpec {
  crypto::Certificate ek_cert;
  boot::ReferenceState reference;
  std::string agent_address;
  std::vector<RoleRule> role_rules;
};

struct StatusRecord {
  NodeStatus status;
  TimePoint at;
};

struct EdgeNodeResource {
  std::string name;
  EdgeNodeSpec spec;
  NodeStatus status;
  std::vector<StatusRecord> status_history;
  std::map<std::string, std::string> annotations;
  std::uint64_t generation = 0;
};

enum class EventKind {
  Registered,
  CredentialsIssued,
  PayloadDelivered,
  Attested,
  AttestationFailed,
  PermissionsRevoked,
  WorkerEnrolled,
};

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view name);

struct ClusterEvent {
  TimePoint at;
  EventKind kind;
  std::string subject;
  std::string detail;
};

void to_json(nlohmann::json& j, const ClusterEvent& event);
void from_json(const nlohmann::json& j, ClusterEvent& event);

struct WatchEvent {
  enum class Change { Applied, StatusPatched };
  Change change;
  EdgeNodeResource resource;
};

/// Ordered stream of EdgeNode changes; every accepted apply/patch after
/// subscription is delivered exactly once, in commit order.
class Watch {
 public:
  /// Blocks until an event arrives or the watch is closed (nullopt).
  std::optional<WatchEvent> next();
  std::optional<WatchEvent> next_for(std::chrono::milliseconds timeout);
  void close();

 private:
  friend class InMemoryCluster;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<WatchEvent> queue_;
  bool closed_ = false;

  void push(WatchEvent event);
};

struct WorkerRecord {
  std::string node_name;
  std::string user_name;
  TimePoint enrolled_at;
};

/// Mock orchestrator surface. Pluggable so a real orchestrator client could
/// substitute the in-memory implementation.
class ClusterApi {
 public:
  virtual ~ClusterApi() = default;

  virtual EdgeNodeResource apply_edge_node(const std::string& name, EdgeNodeSpec spec) = 0;
  virtual EdgeNodeResource get_edge_node(const std::string& name) const = 0;
  virtual bool has_edge_node(const std::string& name) const = 0;
  virtual EdgeNodeResource patch_status(const std::string& name, NodeStatus status) = 0;
  virtual void annotate(const std::string& name, const std::string& key,
                        const std::string& value) = 0;
  virtual std::shared_ptr<Watch> watch_edge_nodes() = 0;

  virtual crypto::Certificate sign_csr(const crypto::PublicKey& public_key,
                                       const std::string& user_name) = 0;
  /// Key rotation for an existing user; permitted only while the user has no
  /// live rolebinding (i.e. after revocation).
  virtual crypto::Certificate rotate_user_cert(const crypto::PublicKey& public_key,
                                               const std::string& user_name) = 0;
  virtual bool has_user(const std::string& user_name) const = 0;

  virtual void create_role(const std::string& name, std::vector<RoleRule> rules) = 0;
  virtual bool has_role(const std::string& name) const = 0;
  virtual void create_rolebinding(const std::string& name, const std::string& role_name,
                                  const std::string& user_name) = 0;
  /// Idempotent; returns whether a binding was actually deleted.
  virtual bool delete_rolebinding(const std::string& name) = 0;
  virtual bool has_rolebinding(const std::string& name) const = 0;
  virtual bool check_access(const std::string& user_name, const std::string& verb,
                            const std::string& resource) const = 0;

  virtual WorkerRecord register_worker(const crypto::Certificate& credentials,
                                       const std::string& node_name) = 0;
  virtual std::vector<WorkerRecord> workers() const = 0;

  virtual void record_event(EventKind kind, const std::string& subject,
                            const std::string& detail) = 0;
  virtual std::vector<ClusterEvent> events() const = 0;
  virtual std::string export_events_jsonl() const = 0;
  virtual nlohmann::json dump() const = 0;

  virtual const crypto::PublicKey& ca_public_key() const = 0;
};

class InMemoryCluster : public ClusterApi {
 public:
  InMemoryCluster();
  ~InMemoryCluster() override;

  EdgeNodeResource apply_edge_node(const std::string& name, EdgeNodeSpec spec) override;
  EdgeNodeResource get_edge_node(const std::string& name) const override;
  bool has_edge_node(const std::string& name) const override;
  EdgeNodeResource patch_status(const std::string& name, NodeStatus status) override;
  void annotate(const std::string& name, const std::string& key,
                const std::string& value) override;
  std::shared_ptr<Watch> watch_edge_nodes() override;

  crypto::Certificate sign_csr(const crypto::PublicKey& public_key,
                               const std::string& user_name) override;
  crypto::Certificate rotate_user_cert(const crypto::PublicKey& public_key,
                                       const std::string& user_name) override;
  bool has_user(const std::string& user_name) const override;

  void create_role(const std::string& name, std::vector<RoleRule> rules) override;
  bool has_role(const std::string& name) const override;
  void create_rolebinding(const std::string& name, const std::string& role_name,
                          const std::string& user_name) override;
  bool delete_rolebinding(const std::string& name) override;
  bool has_rolebinding(const std::string& name) const override;
  bool check_access(const std::string& user_name, const std::string& verb,
                    const std::string& resource) const override;

  WorkerRecord register_worker(const crypto::Certificate& credentials,
                               const std::string& node_name) override;
  std::vector<WorkerRecord> workers() const override;

  void record_event(EventKind kind, const std::string& subject, const std::string& detail) override;
  std::vector<ClusterEvent> events() const override;
  std::string export_events_jsonl() const override;
  nlohmann::json dump() const override;

  const crypto::PublicKey& ca_public_key() const override;

  /// Closes all watches; further apply/patch calls still succeed.
  void shutdown();

 private:
  struct UserRecord {
    crypto::PublicKey public_key{};
    crypto::Certificate cert;
  };
  struct RoleBinding {
    std::string role_name;
    std::string user_name;
  };

  TimePoint stamp_locked();
  void notify_locked(WatchEvent::Change change, const EdgeNodeResource& resource);
  void record_event_locked(EventKind kind, const std::string& subject, const std::string& detail);
  bool user_has_live_binding_locked(const std::string& user_name) const;

  mutable std::mutex mu_;
  crypto::CertificateAuthority ca_;
  std::map<std::string, EdgeNodeResource> nodes_;
  std::map<std::string, UserRecord> users_;
  std::map<std::string, std::vector<RoleRule>> roles_;
  std::map<std::string, RoleBinding> bindings_;
  std::map<std::string, WorkerRecord> workers_;
  std::vector<ClusterEvent> events_;
  std::vector<std::weak_ptr<Watch>> watches_;
  TimePoint last_stamp_{};
};

}  // namespace veridge::cluster
