#pragma once

// The hub knows where the share servers are and routes requests to them.
// It never combines shares: writes fan out to all n servers, reads are served
// by the first t servers (in configured order) that answer.

#include <atomic>
#include <future>
#include <memory>
#include <spdlog/spdlog.h>
#include <string>
#include <vector>

#include "ssdb/cluster.hpp"
#include "ssdb/error.hpp"
#include "ssdb/net.hpp"
#include "ssdb/protocol.hpp"

namespace ssdb {

struct HubOptions {
  net::Timeouts timeouts{};
};

class Hub {
 public:
  explicit Hub(ClusterConfig config, HubOptions options = {})
      : config_(std::move(config)), options_(options), live_(config_.n()), sent_(config_.n()) {
    config_.validate();
    for (auto& l : live_) l = true;
  }

  Hub(const Hub&) = delete;
  Hub& operator=(const Hub&) = delete;
  ~Hub() { stop(); }

  void start(const net::Endpoint& listen) {
    listener_ = std::make_unique<net::FrameServer>([this](const proto::Message& m) { return handle(m); },
                                                   config_.field.modulus());
    listener_->start(listen);
    spdlog::info("hub listening on {} ({} servers, t={})", listener_->endpoint().to_string(), config_.n(),
                 config_.t);
  }

  void stop() {
    if (listener_) listener_->stop();
    listener_.reset();
  }

  const net::Endpoint& endpoint() const { return listener_->endpoint(); }
  const ClusterConfig& config() const noexcept { return config_; }

  std::vector<bool> liveness() const {
    std::vector<bool> out;
    for (const auto& l : live_) out.push_back(l.load());
    return out;
  }

  /// Requests sent to the server at position `i` of the config since start.
  u64 requests_sent(std::size_t i) const { return sent_.at(i).load(); }

  proto::Message handle(const proto::Message& m) {
    const std::string& id = m.req_id;
    return std::visit(
        [&](const auto& body) -> proto::Message {
          using T = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<T, proto::CreateTable>) {
            broadcast_create(id, body);
            return {id, proto::Ack{}};
          } else if constexpr (std::is_same_v<T, proto::InsertBundle>) {
            broadcast_insert(id, body);
            return {id, proto::Ack{}};
          } else if constexpr (std::is_same_v<T, proto::GetColumn>) {
            return {id, fetch_column_from_t(id, body)};
          } else if constexpr (std::is_same_v<T, proto::FetchToClient>) {
            return {id, proto::Ack{relay_fetch_to_client(id, body)}};
          } else if constexpr (std::is_same_v<T, proto::GetSchema>) {
            return first_answer(id, body);
          } else if constexpr (std::is_same_v<T, proto::ServerList>) {
            return {id, proto::ClusterInfo{config_, liveness()}};
          } else if constexpr (std::is_same_v<T, proto::Register>) {
            register_server(body);
            return {id, proto::Ack{}};
          } else {
            throw Error(ErrorCode::BadRequest, "hub does not handle " + std::string(proto::type_tag(m.body)));
          }
        },
        m.body);
  }

  void broadcast_create(const std::string& req_id, const proto::CreateTable& msg) {
    std::vector<proto::Message> per_server(config_.n(), proto::Message{req_id, msg});
    write_all(per_server);
  }

  /// Splits the dealer's bundle so server k receives only its own shares.
  void broadcast_insert(const std::string& req_id, const proto::InsertBundle& bundle) {
    for (const auto& [id, cells] : bundle.shares) {
      ensure(config_.find(id) != nullptr, ErrorCode::BadRequest,
             "bundle carries shares for unknown server " + std::to_string(id));
    }
    std::vector<proto::Message> per_server;
    for (const auto& s : config_.servers) {
      auto it = bundle.shares.find(s.server_id);
      ensure(it != bundle.shares.end(), ErrorCode::BadRequest,
             "bundle has no shares for server " + std::to_string(s.server_id));
      per_server.push_back({req_id, proto::InsertShares{bundle.table, bundle.index, it->second}});
    }
    write_all(per_server);
  }

  /// Collects the column from the first t servers that answer.
  proto::ColumnSet fetch_column_from_t(const std::string& req_id, const proto::GetColumn& req) {
    proto::ColumnSet out;
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < config_.n() && out.responses.size() < config_.t; ++i) {
      auto reply = call(i, {req_id, req});
      if (!reply) {
        failures.push_back(describe(i) + " unreachable");
        continue;
      }
      proto::throw_if_error(*reply);
      ensure(reply->is<proto::ColumnShares>(), ErrorCode::Internal, describe(i) + " sent an unexpected reply");
      auto col = reply->as<proto::ColumnShares>();
      ensure(col.server_x == config_.servers[i].x_coord, ErrorCode::Internal,
             describe(i) + " reports x=" + std::to_string(col.server_x));
      if (!out.responses.empty()) {
        ensure(col.index_list == out.responses.front().index_list, ErrorCode::Internal,
               describe(i) + " disagrees on the index list of '" + req.table + "'");
      }
      out.responses.push_back(std::move(col));
    }
    ensure(out.responses.size() == config_.t, ErrorCode::ThresholdUnavailable, threshold_detail(failures));
    return out;
  }

  /// Forwards the fetch to t live servers; returns their x-coordinates.
  std::vector<u64> relay_fetch_to_client(const std::string& req_id, const proto::FetchToClient& req) {
    std::vector<u64> xs;
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < config_.n() && xs.size() < config_.t; ++i) {
      auto reply = call(i, {req_id, req});
      if (!reply) {
        failures.push_back(describe(i) + " unreachable");
        continue;
      }
      proto::throw_if_error(*reply);
      xs.push_back(config_.servers[i].x_coord);
    }
    ensure(xs.size() == config_.t, ErrorCode::ThresholdUnavailable, threshold_detail(failures));
    return xs;
  }

 private:
  std::string describe(std::size_t i) const {
    return "server " + std::to_string(config_.servers[i].server_id) + " (" + config_.servers[i].address + ")";
  }

  std::string threshold_detail(const std::vector<std::string>& failures) const {
    std::string d = "fewer than t=" + std::to_string(config_.t) + " servers answered";
    for (const auto& f : failures) d += "; " + f;
    return d;
  }

  /// One exchange with server i; nullopt when it cannot be reached.
  std::optional<proto::Message> call(std::size_t i, const proto::Message& m) {
    ++sent_[i];
    try {
      auto reply = net::request(config_.servers[i].address, m, options_.timeouts, config_.field.modulus());
      live_[i] = true;
      return reply;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Unavailable) throw;
      live_[i] = false;
      spdlog::debug("hub: {} unavailable: {}", describe(i), e.detail());
      return std::nullopt;
    }
  }

  // Writes need every server. Reachability is probed first so a known-down
  // server fails the write before any server applies it.
  void write_all(const std::vector<proto::Message>& per_server) {
    std::vector<std::string> down;
    for (std::size_t i = 0; i < config_.n(); ++i) {
      try {
        net::Socket::connect(net::parse_endpoint(config_.servers[i].address), options_.timeouts.connect);
        live_[i] = true;
      } catch (const Error&) {
        live_[i] = false;
        down.push_back(describe(i) + " unreachable");
      }
    }
    if (!down.empty()) throw Error(ErrorCode::Unavailable, "write needs all servers; " + join(down));

    std::vector<std::future<std::optional<proto::Message>>> replies;
    for (std::size_t i = 0; i < config_.n(); ++i) {
      replies.push_back(std::async(std::launch::async, [this, i, &per_server] { return call(i, per_server[i]); }));
    }
    std::vector<std::string> failures;
    std::optional<ErrorCode> code;
    for (std::size_t i = 0; i < replies.size(); ++i) {
      try {
        auto reply = replies[i].get();
        if (!reply) {
          failures.push_back(describe(i) + " unreachable");
          code = code.value_or(ErrorCode::Unavailable);
        } else if (const auto* e = std::get_if<proto::ErrorReply>(&reply->body)) {
          failures.push_back(describe(i) + ": " + e->code + " " + e->detail);
          code = code.value_or(code_from_name(e->code));
        }
      } catch (const Error& e) {
        failures.push_back(describe(i) + ": " + e.what());
        code = code.value_or(e.code());
      }
    }
    if (code) throw Error(*code, "write failed; " + join(failures));
  }

  proto::Message first_answer(const std::string& req_id, const proto::GetSchema& req) {
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < config_.n(); ++i) {
      auto reply = call(i, {req_id, req});
      if (reply) return *reply;
      failures.push_back(describe(i) + " unreachable");
    }
    throw Error(ErrorCode::ThresholdUnavailable, "no server answered; " + join(failures));
  }

  void register_server(const proto::Register& r) {
    for (std::size_t i = 0; i < config_.n(); ++i) {
      if (config_.servers[i].server_id != r.server_id) continue;
      ensure(config_.servers[i].x_coord == r.x_coord, ErrorCode::BadRequest,
             "server " + std::to_string(r.server_id) + " registered with x=" + std::to_string(r.x_coord) +
                 ", config says " + std::to_string(config_.servers[i].x_coord));
      live_[i] = true;
      return;
    }
    throw Error(ErrorCode::BadRequest, "unknown server " + std::to_string(r.server_id));
  }

  static std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
    return out;
  }

  ClusterConfig config_;
  HubOptions options_;
  std::vector<std::atomic<bool>> live_;
  std::vector<std::atomic<u64>> sent_;
  std::unique_ptr<net::FrameServer> listener_;
};

}  // namespace ssdb
