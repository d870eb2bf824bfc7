#pragma once

// In-process cluster over loopback TCP: n share servers, one hub, and
// seeded dealers/query engines, each with its own temp data directory.

#include <stdlib.h>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ssdb/client.hpp"
#include "ssdb/cluster.hpp"
#include "ssdb/hub.hpp"
#include "ssdb/random.hpp"
#include "ssdb/server.hpp"
#include "ssdb/storage.hpp"

namespace ssdb::testnet {

namespace fs = std::filesystem;

struct ClusterOptions {
  ServerOptions server{false, {std::chrono::milliseconds(1000), std::chrono::milliseconds(5000)}};
  HubOptions hub{{std::chrono::milliseconds(1000), std::chrono::milliseconds(5000)}};
  ClientOptions client{};
  Field field{};
};

inline TableSchema patient_details_schema() {
  return TableSchema("patient_details", {{"Patientid", AttrType::Integer},
                                         {"Patientname", AttrType::Text},
                                         {"Doctorid", AttrType::Integer},
                                         {"Diagonosis", AttrType::Text}});
}

/// The four patient_details rows of the worked hospital example.
inline std::vector<std::vector<Value>> patient_details_rows() {
  return {{u64{101}, std::string("Ann"), u64{51}, std::string("Aids")},
          {u64{102}, std::string("Bony"), u64{21}, std::string("Cancer")},
          {u64{103}, std::string("Cara"), u64{51}, std::string("Fever")},
          {u64{104}, std::string("Dona"), u64{26}, std::string("Aids")}};
}

class TestCluster {
 public:
  TestCluster(std::size_t n, std::size_t t, u64 seed, ClusterOptions options = {})
      : options_(std::move(options)), rng_(seed) {
    ensure(t >= 1 && t <= n, ErrorCode::Usage,
           "threshold must satisfy 1 <= t <= n (t=" + std::to_string(t) + ", n=" + std::to_string(n) + ")");
    std::string tmpl = (fs::temp_directory_path() / "ssdb-cluster-XXXXXX").string();
    ensure(::mkdtemp(tmpl.data()) != nullptr, ErrorCode::Internal, "mkdtemp failed");
    root_ = tmpl;

    // Servers bind ephemeral ports first; the real config is built from them.
    ClusterConfig provisional;
    provisional.field = options_.field;
    provisional.t = t;
    for (std::size_t k = 1; k <= n; ++k) provisional.servers.push_back({k, k, "pending-" + std::to_string(k)});
    config_ = provisional;
    servers_.resize(n);
    for (std::size_t k = 1; k <= n; ++k) {
      servers_[k - 1] = std::make_unique<ShareServer>(provisional, k, data_dir(k), options_.server);
      servers_[k - 1]->start({"127.0.0.1", 0});
      config_.servers[k - 1].address = servers_[k - 1]->endpoint().to_string();
    }
    config_.validate();

    hub_ = std::make_unique<Hub>(config_, options_.hub);
    hub_->start({"127.0.0.1", 0});
    for (auto& s : servers_) s->register_with(hub_address());
  }

  TestCluster(const TestCluster&) = delete;
  TestCluster& operator=(const TestCluster&) = delete;

  ~TestCluster() {
    hub_.reset();
    servers_.clear();
    std::error_code ec;
    fs::remove_all(root_, ec);
  }

  const ClusterConfig& config() const noexcept { return config_; }
  std::string hub_address() const { return hub_->endpoint().to_string(); }
  Hub& hub() { return *hub_; }
  const fs::path& root() const noexcept { return root_; }
  fs::path data_dir(u64 server_id) const { return root_ / ("server-" + std::to_string(server_id)); }

  ShareServer& server(u64 server_id) {
    auto& s = servers_.at(server_id - 1);
    ensure(s != nullptr, ErrorCode::Usage, "server " + std::to_string(server_id) + " is down");
    return *s;
  }

  bool is_up(u64 server_id) const { return servers_.at(server_id - 1) != nullptr; }

  /// Closes the server's listener and drops its in-memory state.
  void kill_server(u64 server_id) {
    ensure(server_id >= 1 && server_id <= servers_.size(), ErrorCode::Usage, "no server " + std::to_string(server_id));
    servers_[server_id - 1].reset();
  }

  /// Restarts the server on its original port, replaying its logs.
  void revive_server(u64 server_id) {
    ensure(server_id >= 1 && server_id <= servers_.size(), ErrorCode::Usage, "no server " + std::to_string(server_id));
    auto& slot = servers_[server_id - 1];
    if (slot) return;
    slot = std::make_unique<ShareServer>(config_, server_id, data_dir(server_id), options_.server);
    slot->start(net::parse_endpoint(config_.servers[server_id - 1].address));
    slot->register_with(hub_address());
  }

  /// Dealer sharing with this cluster's seeded generator.
  Dealer dealer() { return Dealer(hub_address(), config_, rng_, options_.client); }

  QueryEngine query_engine() const { return QueryEngine(hub_address(), config_, options_.client); }

  std::string rows_log(u64 server_id, const std::string& table) const {
    return storage::detail::read_file(data_dir(server_id) / table / "rows.log");
  }

  /// Inserts the four patient_details rows through the dealer path.
  std::vector<u64> load_fixture_patients() {
    auto d = dealer();
    const auto schema = patient_details_schema();
    d.create_table(schema);
    ensure(d.next_index(schema) == 1, ErrorCode::Usage, "patient_details already holds rows");
    return d.insert_rows(schema, patient_details_rows());
  }

 private:
  ClusterOptions options_;
  SeededRandom rng_;
  fs::path root_;
  ClusterConfig config_;
  std::vector<std::unique_ptr<ShareServer>> servers_;
  std::unique_ptr<Hub> hub_;
};

}  // namespace ssdb::testnet
