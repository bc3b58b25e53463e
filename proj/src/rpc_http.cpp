/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <chrono>
#include <thread>

#include <httplib.h>

#include "veridge/rpc.hpp"

namespace veridge::rpc {

namespace {

std::pair<std::string, int> split_address(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos) {
    throw Error("bad-address", "address must be host:port, got '" + address + "'");
  }
  return {address.substr(0, colon), std::stoi(address.substr(colon + 1))};
}

}  // namespace

struct HttpEndpoint::Impl {
  explicit Impl(const std::string& address)
      : client(split_address(address).first, split_address(address).second) {
    client.set_connection_timeout(std::chrono::seconds(5));
    client.set_read_timeout(std::chrono::seconds(60));
    client.set_keep_alive(true);
  }

  httplib::Client client;
};

HttpEndpoint::HttpEndpoint(const std::string& address) : impl_(std::make_unique<Impl>(address)) {}

HttpEndpoint::~HttpEndpoint() = default;

nlohmann::json HttpEndpoint::call(const std::string& method, const nlohmann::json& request) {
  auto result = impl_->client.Post("/v1/" + method, request.dump(), "application/json");
  if (!result) {
    throw Error("unreachable", "transport failure calling '" + method +
                                   "': " + httplib::to_string(result.error()));
  }
  nlohmann::json body = nlohmann::json::parse(result->body, nullptr, false);
  if (body.is_discarded()) {
    throw Error("bad-response", "non-JSON response from '" + method + "'");
  }
  if (result->status != 200) {
    if (body.is_object() && body.contains("error")) {
      const auto& err = body.at("error");
      throw Error(err.value("code", "remote-error"), err.value("message", "remote error"));
    }
    throw Error("remote-error", "HTTP " + std::to_string(result->status) + " from '" + method + "'");
  }
  return body;
}

struct HttpServiceHost::Impl {
  explicit Impl(ServiceEndpoint& service) : service(service) {
    server.Post(R"(/v1/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res);
    });
  }

  void handle(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json request = nlohmann::json::parse(req.body, nullptr, false);
    if (request.is_discarded()) {
      res.status = 400;
      res.set_content(R"({"error":{"code":"bad-request","message":"malformed JSON"}})",
                      "application/json");
      return;
    }
    try {
      nlohmann::json response = service.call(req.matches[1].str(), request);
      res.status = 200;
      res.set_content(response.dump(), "application/json");
    } catch (const Error& e) {
      nlohmann::json body{{"error", {{"code", e.code()}, {"message", e.what()}}}};
      res.status = 400;
      res.set_content(body.dump(), "application/json");
    } catch (const std::exception& e) {
      nlohmann::json body{{"error", {{"code", "internal"}, {"message", e.what()}}}};
      res.status = 500;
      res.set_content(body.dump(), "application/json");
    }
  }

  ServiceEndpoint& service;
  httplib::Server server;
  std::thread thread;
};

HttpServiceHost::HttpServiceHost(ServiceEndpoint& service)
    : impl_(std::make_unique<Impl>(service)) {
  int port = impl_->server.bind_to_any_port("127.0.0.1");
  if (port <= 0) {
    throw Error("bind-failed", "could not bind a loopback port");
  }
  address_ = "127.0.0.1:" + std::to_string(port);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

HttpServiceHost::~HttpServiceHost() {
  impl_->server.stop();
  if (impl_->thread.joinable()) {
    impl_->thread.join();
  }
}

bool post_json(const std::string& url, const nlohmann::json& body, unsigned attempts) {
  // Accepts "host:port/path" or "http://host:port/path".
  std::string rest = url;
  if (rest.rfind("http://", 0) == 0) {
    rest = rest.substr(7);
  }
  auto slash = rest.find('/');
  std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
  std::string path = slash == std::string::npos ? "/" : rest.substr(slash);
  auto [host, port] = split_address(hostport);
  for (unsigned attempt = 0; attempt < attempts; ++attempt) {
    httplib::Client client(host, port);
    client.set_connection_timeout(std::chrono::seconds(2));
    auto result = client.Post(path, body.dump(), "application/json");
    if (result && result->status >= 200 && result->status < 300) {
      return true;
    }
    if (attempt + 1 < attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  }
  return false;
}

}  // namespace veridge::rpc
