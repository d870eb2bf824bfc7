#pragma once

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "ssdb/error.hpp"
#include "ssdb/field.hpp"
#include "ssdb/shamir.hpp"

namespace ssdb {

struct ServerEntry {
  u64 server_id = 0;
  u64 x_coord = 0;
  std::string address;  // host:port

  friend bool operator==(const ServerEntry&, const ServerEntry&) = default;
};

/// Public cluster description shared by every party: p, (t, n) and where the
/// share servers live. Server k holds the evaluations at its x_coord.
struct ClusterConfig {
  Field field;
  std::size_t t = 1;
  std::vector<ServerEntry> servers;

  std::size_t n() const noexcept { return servers.size(); }

  void validate() const {
    ensure(!servers.empty(), ErrorCode::Usage, "cluster has no servers");
    ensure(t >= 1 && t <= n(), ErrorCode::Usage,
           "threshold must satisfy 1 <= t <= n (t=" + std::to_string(t) + ", n=" +
               std::to_string(n()) + ")");
    for (std::size_t i = 0; i < servers.size(); ++i) {
      const auto& s = servers[i];
      ensure(s.x_coord != 0 && s.x_coord < field.modulus(), ErrorCode::Usage,
             "server " + std::to_string(s.server_id) + " has invalid x_coord");
      ensure(!s.address.empty(), ErrorCode::Usage, "server " + std::to_string(s.server_id) + " has no address");
      for (std::size_t j = 0; j < i; ++j) {
        ensure(servers[j].server_id != s.server_id, ErrorCode::Usage, "duplicate server_id");
        ensure(servers[j].x_coord != s.x_coord, ErrorCode::Usage, "duplicate x_coord");
        ensure(servers[j].address != s.address, ErrorCode::Usage, "duplicate server address");
      }
    }
  }

  const ServerEntry* find(u64 server_id) const {
    for (const auto& s : servers) {
      if (s.server_id == server_id) return &s;
    }
    return nullptr;
  }

  shamir::SchemeParams scheme() const {
    std::vector<FieldElement> xs;
    for (const auto& s : servers) xs.push_back(field.element(s.x_coord));
    return shamir::SchemeParams(t, std::move(xs), field);
  }

  nlohmann::json to_json() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& s : servers) {
      list.push_back({{"server_id", s.server_id}, {"x_coord", std::to_string(s.x_coord)}, {"address", s.address}});
    }
    return {{"p", std::to_string(field.modulus())}, {"n", n()}, {"t", t}, {"servers", std::move(list)}};
  }

  static ClusterConfig from_json(const nlohmann::json& j) {
    ClusterConfig c;
    try {
      c.field = Field(Field::parse_decimal(j.at("p").get<std::string>(), ~u64{0}));
      c.t = j.at("t").get<std::size_t>();
      for (const auto& s : j.at("servers")) {
        c.servers.push_back({s.at("server_id").get<u64>(),
                             Field::parse_decimal(s.at("x_coord").get<std::string>(), ~u64{0}),
                             s.at("address").get<std::string>()});
      }
      if (j.contains("n")) {
        ensure(j.at("n").get<std::size_t>() == c.servers.size(), ErrorCode::Usage,
               "n does not match the number of servers");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Usage, std::string("bad cluster config: ") + e.what());
    }
    c.validate();
    return c;
  }

  static ClusterConfig load(const std::string& path) {
    std::ifstream in(path);
    ensure(in.good(), ErrorCode::Usage, "cannot read cluster config '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Usage, "cluster config '" + path + "' is not JSON: " + e.what());
    }
    return from_json(j);
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    ensure(out.good(), ErrorCode::Usage, "cannot write '" + path + "'");
    out << to_json().dump(2) << "\n";
  }

  friend bool operator==(const ClusterConfig&, const ClusterConfig&) = default;
};

/// Loopback config with x_coords 1..n on sequential ports.
inline ClusterConfig make_local_cluster(std::size_t n, std::size_t t, unsigned base_port,
                                        const std::string& host = "127.0.0.1") {
  ensure(n >= 1 && n <= 16, ErrorCode::Usage, "n must be in [1, 16]");
  ClusterConfig c;
  c.t = t;
  for (std::size_t k = 1; k <= n; ++k) {
    c.servers.push_back({k, k, host + ":" + std::to_string(base_port + k - 1)});
  }
  c.validate();
  return c;
}

}  // namespace ssdb
