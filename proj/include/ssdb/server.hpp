#pragma once

#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <spdlog/spdlog.h>
#include <string>
#include <thread>

#include "ssdb/cluster.hpp"
#include "ssdb/encoding.hpp"
#include "ssdb/error.hpp"
#include "ssdb/net.hpp"
#include "ssdb/protocol.hpp"
#include "ssdb/storage.hpp"

namespace ssdb {

struct ServerOptions {
  bool sync = true;  // fdatasync every log append
  net::Timeouts push_timeouts{};
};

/// A share server. Holds the schema, the plaintext index column and its own
/// share of every cell; never sees another server's shares.
class ShareServer {
 public:
  ShareServer(const ClusterConfig& cluster, u64 server_id, std::filesystem::path data_dir,
              ServerOptions options = {})
      : field_(cluster.field), server_id_(server_id), data_dir_(std::move(data_dir)), options_(options) {
    const ServerEntry* entry = cluster.find(server_id);
    ensure(entry != nullptr, ErrorCode::Usage,
           "server_id " + std::to_string(server_id) + " is not in the cluster config");
    x_coord_ = entry->x_coord;
    std::filesystem::create_directories(data_dir_);
    check_identity();
    load_tables();
  }

  ShareServer(const ShareServer&) = delete;
  ShareServer& operator=(const ShareServer&) = delete;
  ~ShareServer() { stop(); }

  void start(const net::Endpoint& listen) {
    listener_ = std::make_unique<net::FrameServer>([this](const proto::Message& m) { return handle(m); },
                                                   field_.modulus());
    listener_->start(listen);
    spdlog::info("server {} (x={}) listening on {}", server_id_, x_coord_, listener_->endpoint().to_string());
  }

  void stop() {
    if (listener_) listener_->stop();
    listener_.reset();
    std::list<Push> pushes;
    {
      std::lock_guard lock(push_mu_);
      pushes.swap(pushes_);
    }
    for (auto& p : pushes) p.thread.join();
  }

  const net::Endpoint& endpoint() const { return listener_->endpoint(); }
  u64 server_id() const noexcept { return server_id_; }
  u64 x_coord() const noexcept { return x_coord_; }

  /// Announces this server to the hub.
  void register_with(const std::string& hub_address, const net::Timeouts& timeouts = {}) {
    proto::Message m{"register-" + std::to_string(server_id_), proto::Register{server_id_, x_coord_}};
    proto::throw_if_error(net::request(hub_address, m, timeouts, field_.modulus()));
  }

  std::size_t row_count(const std::string& table) const { return find_table(table).row_count(); }

  std::vector<storage::StoredRow> rows(const std::string& table) const { return find_table(table).snapshot(); }

  proto::Message handle(const proto::Message& m) {
    const std::string& id = m.req_id;
    return std::visit(
        [&](const auto& body) -> proto::Message {
          using T = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<T, proto::CreateTable>) {
            create_table(body.schema);
            return {id, proto::Ack{}};
          } else if constexpr (std::is_same_v<T, proto::InsertShares>) {
            find_table(body.table).insert(body);
            return {id, proto::Ack{}};
          } else if constexpr (std::is_same_v<T, proto::GetColumn>) {
            return {id, find_table(body.table).column(body.attr, x_coord_)};
          } else if constexpr (std::is_same_v<T, proto::GetSchema>) {
            return {id, proto::SchemaReply{find_table(body.table).schema()}};
          } else if constexpr (std::is_same_v<T, proto::FetchToClient>) {
            fetch_to_client(id, body);
            return {id, proto::Ack{}};
          } else {
            throw Error(ErrorCode::BadRequest,
                        "share server does not handle " + std::string(proto::type_tag(m.body)));
          }
        },
        m.body);
  }

 private:
  struct Push {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  void check_identity() {
    const auto path = data_dir_ / "server.json";
    if (std::filesystem::exists(path)) {
      auto j = nlohmann::json::parse(storage::detail::read_file(path), nullptr, false);
      ensure(!j.is_discarded() && j.contains("server_id") && j.contains("x_coord"), ErrorCode::Internal,
             path.string() + " is corrupt");
      ensure(j["server_id"].get<u64>() == server_id_ && j["x_coord"].get<std::string>() == std::to_string(x_coord_),
             ErrorCode::Usage,
             "data dir " + data_dir_.string() + " belongs to server " + std::to_string(j["server_id"].get<u64>()) +
                 " at x=" + j["x_coord"].get<std::string>());
      return;
    }
    nlohmann::json j = {{"server_id", server_id_}, {"x_coord", std::to_string(x_coord_)}};
    storage::detail::write_file_atomic(path, j.dump() + "\n", options_.sync);
  }

  void load_tables() {
    for (const auto& entry : std::filesystem::directory_iterator(data_dir_)) {
      if (!entry.is_directory()) continue;
      const auto schema_path = entry.path() / "schema.json";
      if (!std::filesystem::exists(schema_path)) continue;
      auto j = nlohmann::json::parse(storage::detail::read_file(schema_path), nullptr, false);
      ensure(!j.is_discarded(), ErrorCode::Internal, schema_path.string() + " is corrupt");
      TableSchema schema = TableSchema::from_json(j);
      auto name = schema.table();
      tables_.emplace(name, std::make_unique<storage::StoredTable>(std::move(schema), entry.path(),
                                                                   field_.modulus(), options_.sync));
    }
  }

  void create_table(const TableSchema& schema) {
    std::unique_lock lock(tables_mu_);
    if (auto it = tables_.find(schema.table()); it != tables_.end()) {
      ensure(it->second->schema() == schema, ErrorCode::SchemaMismatch,
             "table '" + schema.table() + "' exists with a different schema");
      return;
    }
    const auto dir = data_dir_ / schema.table();
    std::filesystem::create_directories(dir);
    storage::detail::write_file_atomic(dir / "schema.json", schema.to_json().dump(2) + "\n", options_.sync);
    tables_.emplace(schema.table(),
                    std::make_unique<storage::StoredTable>(schema, dir, field_.modulus(), options_.sync));
  }

  storage::StoredTable& find_table(const std::string& name) const {
    std::shared_lock lock(tables_mu_);
    auto it = tables_.find(name);
    ensure(it != tables_.end(), ErrorCode::NoSuchTable, "no table '" + name + "'");
    return *it->second;
  }

  // Validates synchronously so a bad index is reported to the hub; delivery
  // happens on its own thread and its outcome does not affect the ACK.
  void fetch_to_client(const std::string& req_id, const proto::FetchToClient& req) {
    proto::DeliverShares push{req.table, req.attr, x_coord_, find_table(req.table).cells_at(req.attr, req.indices)};
    net::parse_endpoint(req.client_addr);
    proto::Message msg{req_id, std::move(push)};
    auto done = std::make_shared<std::atomic<bool>>(false);
    std::lock_guard lock(push_mu_);
    for (auto it = pushes_.begin(); it != pushes_.end();) {
      if (*it->done) {
        it->thread.join();
        it = pushes_.erase(it);
      } else {
        ++it;
      }
    }
    pushes_.push_back({std::thread([this, msg = std::move(msg), addr = req.client_addr, done] {
                         try {
                           net::request(addr, msg, options_.push_timeouts, field_.modulus());
                         } catch (const std::exception& e) {
                           spdlog::warn("server {}: delivery to {} failed: {}", server_id_, addr, e.what());
                         }
                         *done = true;
                       }),
                       done});
  }

  Field field_;
  u64 server_id_;
  u64 x_coord_ = 0;
  std::filesystem::path data_dir_;
  ServerOptions options_;
  mutable std::shared_mutex tables_mu_;
  std::map<std::string, std::unique_ptr<storage::StoredTable>> tables_;
  std::unique_ptr<net::FrameServer> listener_;
  std::mutex push_mu_;
  std::list<Push> pushes_;
};

}  // namespace ssdb
