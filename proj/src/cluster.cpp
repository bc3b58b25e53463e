/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "veridge/cluster.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "veridge/errors.hpp"

namespace veridge::cluster {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Unregistered: return "Unregistered";
    case Phase::Registered: return "Registered";
    case Phase::Attested: return "Attested";
    case Phase::Unattested: return "Unattested";
  }
  throw Error("bad-phase", "unknown phase value");
}

Phase phase_from_string(std::string_view name) {
  for (Phase phase : {Phase::Unregistered, Phase::Registered, Phase::Attested, Phase::Unattested}) {
    if (to_string(phase) == name) {
      return phase;
    }
  }
  throw Error("bad-phase", "unknown phase: " + std::string(name));
}

void to_json(nlohmann::json& j, const RoleRule& rule) {
  j = nlohmann::json{{"verb", rule.verb}, {"resource", rule.resource}};
}

void from_json(const nlohmann::json& j, RoleRule& rule) {
  rule.verb = j.at("verb").get<std::string>();
  rule.resource = j.at("resource").get<std::string>();
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Registered: return "Registered";
    case EventKind::CredentialsIssued: return "CredentialsIssued";
    case EventKind::PayloadDelivered: return "PayloadDelivered";
    case EventKind::Attested: return "Attested";
    case EventKind::AttestationFailed: return "AttestationFailed";
    case EventKind::PermissionsRevoked: return "PermissionsRevoked";
    case EventKind::WorkerEnrolled: return "WorkerEnrolled";
  }
  throw Error("bad-event-kind", "unknown event kind value");
}

EventKind event_kind_from_string(std::string_view name) {
  for (EventKind kind :
       {EventKind::Registered, EventKind::CredentialsIssued, EventKind::PayloadDelivered,
        EventKind::Attested, EventKind::AttestationFailed, EventKind::PermissionsRevoked,
        EventKind::WorkerEnrolled}) {
    if (to_string(kind) == name) {
      return kind;
    }
  }
  throw Error("bad-event-kind", "unknown event kind: " + std::string(name));
}

void to_json(nlohmann::json& j, const ClusterEvent& event) {
  j = nlohmann::json{{"timestamp", to_iso8601(event.at)},
                     {"kind", std::string(to_string(event.kind))},
                     {"subject", event.subject},
                     {"detail", event.detail}};
}

void from_json(const nlohmann::json& j, ClusterEvent& event) {
  event.at = parse_iso8601(j.at("timestamp").get<std::string>());
  event.kind = event_kind_from_string(j.at("kind").get<std::string>());
  event.subject = j.at("subject").get<std::string>();
  event.detail = j.at("detail").get<std::string>();
}

std::optional<WatchEvent> Watch::next() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return closed_ || !queue_.empty(); });
  if (queue_.empty()) {
    return std::nullopt;
  }
  WatchEvent event = std::move(queue_.front());
  queue_.pop_front();
  return event;
}

std::optional<WatchEvent> Watch::next_for(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  if (!cv_.wait_for(lock, timeout, [this] { return closed_ || !queue_.empty(); })) {
    return std::nullopt;
  }
  if (queue_.empty()) {
    return std::nullopt;
  }
  WatchEvent event = std::move(queue_.front());
  queue_.pop_front();
  return event;
}

void Watch::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  cv_.notify_all();
}

void Watch::push(WatchEvent event) {
  std::lock_guard lock(mu_);
  if (closed_) {
    return;
  }
  queue_.push_back(std::move(event));
  cv_.notify_all();
}

namespace {

bool legal_transition(Phase from, Phase to) {
  switch (from) {
    case Phase::Unregistered: return to == Phase::Registered;
    case Phase::Registered: return to == Phase::Attested || to == Phase::Unattested;
    case Phase::Attested: return to == Phase::Unattested;
    case Phase::Unattested: return to == Phase::Attested;
  }
  return false;
}

}  // namespace

InMemoryCluster::InMemoryCluster() : ca_("veridge-cluster-ca") {}

InMemoryCluster::~InMemoryCluster() { shutdown(); }

TimePoint InMemoryCluster::stamp_locked() {
  TimePoint now = std::chrono::system_clock::now();
  if (now <= last_stamp_) {
    now = last_stamp_ + std::chrono::microseconds(1);
  }
  last_stamp_ = now;
  return now;
}

void InMemoryCluster::notify_locked(WatchEvent::Change change, const EdgeNodeResource& resource) {
  auto it = watches_.begin();
  while (it != watches_.end()) {
    if (auto watch = it->lock()) {
      watch->push(WatchEvent{change, resource});
      ++it;
    } else {
      it = watches_.erase(it);
    }
  }
}

void InMemoryCluster::record_event_locked(EventKind kind, const std::string& subject,
                                          const std::string& detail) {
  events_.push_back(ClusterEvent{stamp_locked(), kind, subject, detail});
}

EdgeNodeResource InMemoryCluster::apply_edge_node(const std::string& name, EdgeNodeSpec spec) {
  std::lock_guard lock(mu_);
  if (nodes_.contains(name)) {
    throw Error("duplicate", "EdgeNode '" + name + "' already exists");
  }
  EdgeNodeResource resource;
  resource.name = name;
  resource.spec = std::move(spec);
  resource.status = NodeStatus{Phase::Unregistered, ""};
  resource.status_history.push_back(StatusRecord{resource.status, stamp_locked()});
  resource.generation = 1;
  auto [it, inserted] = nodes_.emplace(name, std::move(resource));
  notify_locked(WatchEvent::Change::Applied, it->second);
  return it->second;
}

EdgeNodeResource InMemoryCluster::get_edge_node(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = nodes_.find(name);
  if (it == nodes_.end()) {
    throw Error("not-found", "EdgeNode '" + name + "' not found");
  }
  return it->second;
}

bool InMemoryCluster::has_edge_node(const std::string& name) const {
  std::lock_guard lock(mu_);
  return nodes_.contains(name);
}

EdgeNodeResource InMemoryCluster::patch_status(const std::string& name, NodeStatus status) {
  std::lock_guard lock(mu_);
  auto it = nodes_.find(name);
  if (it == nodes_.end()) {
    throw Error("not-found", "EdgeNode '" + name + "' not found");
  }
  EdgeNodeResource& resource = it->second;
  if (!legal_transition(resource.status.phase, status.phase)) {
    throw Error("illegal-transition",
                "EdgeNode '" + name + "': illegal status transition " +
                    std::string(to_string(resource.status.phase)) + " -> " +
                    std::string(to_string(status.phase)));
  }
  if (status.phase == Phase::Unattested && status.message.empty()) {
    throw Error("bad-status", "Unattested status requires a nonempty message");
  }
  resource.status = status;
  resource.status_history.push_back(StatusRecord{status, stamp_locked()});
  resource.generation += 1;
  switch (status.phase) {
    case Phase::Registered:
      record_event_locked(EventKind::Registered, name, status.message);
      break;
    case Phase::Attested:
      record_event_locked(EventKind::Attested, name, status.message);
      break;
    case Phase::Unattested:
      record_event_locked(EventKind::AttestationFailed, name, status.message);
      break;
    case Phase::Unregistered:
      break;
  }
  notify_locked(WatchEvent::Change::StatusPatched, resource);
  return resource;
}

void InMemoryCluster::annotate(const std::string& name, const std::string& key,
                               const std::string& value) {
  std::lock_guard lock(mu_);
  auto it = nodes_.find(name);
  if (it == nodes_.end()) {
    throw Error("not-found", "EdgeNode '" + name + "' not found");
  }
  it->second.annotations[key] = value;
}

std::shared_ptr<Watch> InMemoryCluster::watch_edge_nodes() {
  std::lock_guard lock(mu_);
  auto watch = std::shared_ptr<Watch>(new Watch());
  watches_.push_back(watch);
  return watch;
}

crypto::Certificate InMemoryCluster::sign_csr(const crypto::PublicKey& public_key,
                                              const std::string& user_name) {
  std::lock_guard lock(mu_);
  auto it = users_.find(user_name);
  if (it != users_.end() && it->second.public_key != public_key) {
    throw Error("collision", "user '" + user_name + "' already bound to a different key");
  }
  crypto::Certificate cert = ca_.issue(user_name, public_key);
  users_[user_name] = UserRecord{public_key, cert};
  return cert;
}

crypto::Certificate InMemoryCluster::rotate_user_cert(const crypto::PublicKey& public_key,
                                                      const std::string& user_name) {
  std::lock_guard lock(mu_);
  auto it = users_.find(user_name);
  if (it == users_.end()) {
    throw Error("not-found", "user '" + user_name + "' not found");
  }
  if (user_has_live_binding_locked(user_name)) {
    throw Error("collision", "user '" + user_name + "' still has a live rolebinding");
  }
  crypto::Certificate cert = ca_.issue(user_name, public_key);
  it->second = UserRecord{public_key, cert};
  return cert;
}

bool InMemoryCluster::has_user(const std::string& user_name) const {
  std::lock_guard lock(mu_);
  return users_.contains(user_name);
}

bool InMemoryCluster::user_has_live_binding_locked(const std::string& user_name) const {
  return std::any_of(bindings_.begin(), bindings_.end(),
                     [&](const auto& kv) { return kv.second.user_name == user_name; });
}

void InMemoryCluster::create_role(const std::string& name, std::vector<RoleRule> rules) {
  std::lock_guard lock(mu_);
  if (roles_.contains(name)) {
    throw Error("duplicate", "role '" + name + "' already exists");
  }
  roles_[name] = std::move(rules);
}

bool InMemoryCluster::has_role(const std::string& name) const {
  std::lock_guard lock(mu_);
  return roles_.contains(name);
}

void InMemoryCluster::create_rolebinding(const std::string& name, const std::string& role_name,
                                         const std::string& user_name) {
  std::lock_guard lock(mu_);
  if (bindings_.contains(name)) {
    throw Error("duplicate", "rolebinding '" + name + "' already exists");
  }
  if (!roles_.contains(role_name)) {
    throw Error("not-found", "rolebinding '" + name + "' references unknown role '" + role_name + "'");
  }
  if (!users_.contains(user_name)) {
    throw Error("not-found", "rolebinding '" + name + "' references unknown user '" + user_name + "'");
  }
  bindings_[name] = RoleBinding{role_name, user_name};
}

bool InMemoryCluster::delete_rolebinding(const std::string& name) {
  std::lock_guard lock(mu_);
  return bindings_.erase(name) > 0;
}

bool InMemoryCluster::has_rolebinding(const std::string& name) const {
  std::lock_guard lock(mu_);
  return bindings_.contains(name);
}

bool InMemoryCluster::check_access(const std::string& user_name, const std::string& verb,
                                   const std::string& resource) const {
  std::lock_guard lock(mu_);
  for (const auto& [binding_name, binding] : bindings_) {
    if (binding.user_name != user_name) {
      continue;
    }
    auto role = roles_.find(binding.role_name);
    if (role == roles_.end()) {
      continue;
    }
    for (const RoleRule& rule : role->second) {
      if (rule.verb == verb && rule.resource == resource) {
        return true;
      }
    }
  }
  return false;
}

WorkerRecord InMemoryCluster::register_worker(const crypto::Certificate& credentials,
                                              const std::string& node_name) {
  std::lock_guard lock(mu_);
  if (!credentials.verify(ca_.public_key())) {
    throw Error("bad-cert", "credentials certificate does not verify under the cluster CA");
  }
  const std::string& user = credentials.subject;
  auto stored = users_.find(user);
  if (stored == users_.end() || stored->second.cert != credentials) {
    throw Error("bad-cert", "credentials certificate does not match the issued cert for '" + user + "'");
  }
  bool allowed = false;
  for (const auto& [binding_name, binding] : bindings_) {
    if (binding.user_name != user) {
      continue;
    }
    auto role = roles_.find(binding.role_name);
    if (role == roles_.end()) {
      continue;
    }
    for (const RoleRule& rule : role->second) {
      if (rule.verb == "create" && rule.resource == "node") {
        allowed = true;
      }
    }
  }
  if (!allowed) {
    throw Error("access-denied", "user '" + user + "' may not create nodes");
  }
  if (workers_.contains(node_name)) {
    throw Error("duplicate", "worker node '" + node_name + "' already enrolled");
  }
  WorkerRecord record{node_name, user, stamp_locked()};
  workers_[node_name] = record;
  record_event_locked(EventKind::WorkerEnrolled, node_name, "user=" + user);
  return record;
}

std::vector<WorkerRecord> InMemoryCluster::workers() const {
  std::lock_guard lock(mu_);
  std::vector<WorkerRecord> out;
  out.reserve(workers_.size());
  for (const auto& [name, record] : workers_) {
    out.push_back(record);
  }
  return out;
}

void InMemoryCluster::record_event(EventKind kind, const std::string& subject,
                                   const std::string& detail) {
  std::lock_guard lock(mu_);
  record_event_locked(kind, subject, detail);
}

std::vector<ClusterEvent> InMemoryCluster::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::string InMemoryCluster::export_events_jsonl() const {
  std::lock_guard lock(mu_);
  std::ostringstream out;
  for (const ClusterEvent& event : events_) {
    nlohmann::json j = event;
    out << j.dump() << "\n";
  }
  return out.str();
}

nlohmann::json InMemoryCluster::dump() const {
  std::lock_guard lock(mu_);
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& [name, resource] : nodes_) {
    nlohmann::json history = nlohmann::json::array();
    for (const StatusRecord& record : resource.status_history) {
      history.push_back({{"phase", std::string(to_string(record.status.phase))},
                         {"message", record.status.message},
                         {"at", to_iso8601(record.at)}});
    }
    nodes[name] = {{"status", std::string(to_string(resource.status.phase))},
                   {"message", resource.status.message},
                   {"generation", resource.generation},
                   {"agent_address", resource.spec.agent_address},
                   {"annotations", resource.annotations},
                   {"history", std::move(history)}};
  }
  nlohmann::json users = nlohmann::json::object();
  for (const auto& [name, record] : users_) {
    users[name] = {{"public_key", to_hex(record.public_key)}};
  }
  nlohmann::json roles = nlohmann::json::object();
  for (const auto& [name, rules] : roles_) {
    roles[name] = rules;
  }
  nlohmann::json bindings = nlohmann::json::object();
  for (const auto& [name, binding] : bindings_) {
    bindings[name] = {{"role", binding.role_name}, {"user", binding.user_name}};
  }
  nlohmann::json workers = nlohmann::json::object();
  for (const auto& [name, record] : workers_) {
    workers[name] = {{"user", record.user_name}, {"enrolled_at", to_iso8601(record.enrolled_at)}};
  }
  nlohmann::json events = nlohmann::json::array();
  for (const ClusterEvent& event : events_) {
    events.push_back(event);
  }
  return nlohmann::json{{"edge_nodes", std::move(nodes)}, {"users", std::move(users)},
                        {"roles", std::move(roles)},      {"rolebindings", std::move(bindings)},
                        {"workers", std::move(workers)},  {"events", std::move(events)}};
}

const crypto::PublicKey& InMemoryCluster::ca_public_key() const { return ca_.public_key(); }

void InMemoryCluster::shutdown() {
  std::vector<std::shared_ptr<Watch>> open;
  {
    std::lock_guard lock(mu_);
    for (auto& weak : watches_) {
      if (auto watch = weak.lock()) {
        open.push_back(std::move(watch));
      }
    }
    watches_.clear();
  }
  for (auto& watch : open) {
    watch->close();
  }
}

}  // namespace veridge::cluster
