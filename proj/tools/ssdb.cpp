// ssdb: share servers, hub, dealer and query client in one binary.
//
// Exit codes: 0 success, 1 usage error, 2 runtime or protocol error.

#include <signal.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <string>
#include <vector>

#include "ssdb/client.hpp"
#include "ssdb/cluster.hpp"
#include "ssdb/csv.hpp"
#include "ssdb/hub.hpp"
#include "ssdb/server.hpp"

namespace {

using namespace ssdb;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Usage:
    case ErrorCode::Syntax:
    case ErrorCode::TypeMismatch:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

/// Blocks until SIGINT or SIGTERM. Must run before any thread starts so the
/// mask is inherited.
sigset_t block_termination_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

void wait_for_signal(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
  spdlog::info("received signal {}, shutting down", sig);
}

Value parse_cell(const Attribute& attr, const std::string& text) {
  if (attr.type == AttrType::Text) return text;
  try {
    return Field::parse_decimal(text, ~u64{0});
  } catch (const Error&) {
    throw Error(ErrorCode::Usage, "'" + text + "' is not an unsigned integer (attribute " + attr.name + ")");
  }
}

std::vector<Value> parse_row(const TableSchema& schema, const std::vector<std::string>& cells) {
  ensure(cells.size() == schema.attributes().size(), ErrorCode::Usage,
         "table '" + schema.table() + "' has " + std::to_string(schema.attributes().size()) + " attributes, got " +
             std::to_string(cells.size()) + " values");
  std::vector<Value> row;
  for (std::size_t i = 0; i < cells.size(); ++i) row.push_back(parse_cell(schema.attributes()[i], cells[i]));
  return row;
}

void print_text(const ResultSet& result) {
  std::vector<std::size_t> width;
  for (const auto& c : result.columns) width.push_back(c.size());
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : result.rows) {
    std::vector<std::string> line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line.push_back(to_display(row[i]));
      width[i] = std::max(width[i], line.back().size());
    }
    cells.push_back(std::move(line));
  }
  auto emit = [&](const std::vector<std::string>& line) {
    std::string out;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i > 0) out += "  ";
      out += line[i];
      if (i + 1 < line.size()) out.append(width[i] - line[i].size(), ' ');
    }
    std::cout << out << "\n";
  };
  emit(result.columns);
  std::vector<std::string> rule;
  for (auto w : width) rule.push_back(std::string(w, '-'));
  emit(rule);
  for (const auto& line : cells) emit(line);
}

void print_json(const ResultSet& result) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& row : result.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (const auto* v = std::get_if<u64>(&row[i])) {
        obj[result.columns[i]] = *v;
      } else {
        obj[result.columns[i]] = std::get<std::string>(row[i]);
      }
    }
    out.push_back(std::move(obj));
  }
  std::cout << out.dump(2) << "\n";
}

struct ClientFlags {
  std::string hub;
  std::string cluster;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--hub", hub, "Hub address HOST:PORT")->required();
    cmd->add_option("--cluster", cluster, "Cluster config (default: ask the hub)")->envname("SSDB_CLUSTER");
  }

  ClusterConfig load() const { return cluster.empty() ? fetch_cluster(hub) : ClusterConfig::load(cluster); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secret-shared private database"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  // server
  auto* server_cmd = app.add_subcommand("server", "Run a share server");
  u64 server_id = 0;
  std::string server_listen, data_dir, server_cluster, server_hub;
  bool no_sync = false;
  server_cmd->add_option("--id", server_id, "Server id from the cluster config")->required();
  server_cmd->add_option("--listen", server_listen, "HOST:PORT to listen on")->required();
  server_cmd->add_option("--data-dir", data_dir, "Directory for schemas and row logs")->required();
  server_cmd->add_option("--cluster", server_cluster, "Cluster config")->envname("SSDB_CLUSTER")->required();
  server_cmd->add_option("--hub", server_hub, "Register with this hub at startup");
  server_cmd->add_flag("--no-sync", no_sync, "Skip fdatasync after each log append");

  // hub
  auto* hub_cmd = app.add_subcommand("hub", "Run the hub");
  std::string hub_listen, hub_cluster;
  int connect_ms = 2000, response_ms = 5000;
  hub_cmd->add_option("--listen", hub_listen, "HOST:PORT to listen on")->required();
  hub_cmd->add_option("--cluster", hub_cluster, "Cluster config")->envname("SSDB_CLUSTER")->required();
  hub_cmd->add_option("--connect-timeout-ms", connect_ms, "Per-server connect timeout")->capture_default_str();
  hub_cmd->add_option("--response-timeout-ms", response_ms, "Per-server response timeout")->capture_default_str();

  // create-table
  auto* create_cmd = app.add_subcommand("create-table", "Create a table on every server");
  std::string schema_path;
  ClientFlags create_flags;
  create_cmd->add_option("schema", schema_path, "Schema JSON file")->required();
  create_flags.add_to(create_cmd);

  // insert
  auto* insert_cmd = app.add_subcommand("insert", "Share one row into a table");
  std::string insert_table;
  std::vector<std::string> insert_values;
  ClientFlags insert_flags;
  insert_cmd->add_option("table", insert_table, "Table name")->required();
  insert_cmd->add_option("values", insert_values, "One value per attribute, in schema order")->required();
  insert_flags.add_to(insert_cmd);

  // load-csv
  auto* csv_cmd = app.add_subcommand("load-csv", "Share every row of a CSV file into a table");
  std::string csv_table, csv_path;
  ClientFlags csv_flags;
  csv_cmd->add_option("table", csv_table, "Table name")->required();
  csv_cmd->add_option("file", csv_path, "CSV with a header row matching the schema")->required();
  csv_flags.add_to(csv_cmd);

  // query
  auto* query_cmd = app.add_subcommand("query", "Run a SELECT query");
  std::string sql, query_listen = "127.0.0.1:0", advertise, format = "text";
  int result_timeout_ms = 10000;
  ClientFlags query_flags;
  query_cmd->add_option("sql", sql, "SELECT ... FROM ... [WHERE ...]")->required();
  query_flags.add_to(query_cmd);
  query_cmd->add_option("--listen", query_listen, "HOST:PORT for the result listener")->capture_default_str();
  query_cmd->add_option("--advertise", advertise, "Listener address given to servers (default: bound address)");
  query_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  query_cmd->add_option("--timeout-ms", result_timeout_ms, "Wait for share deliveries")->capture_default_str();

  // gen-cluster
  auto* gen_cmd = app.add_subcommand("gen-cluster", "Write a loopback cluster config");
  std::size_t gen_n = 0, gen_t = 0;
  unsigned base_port = 7001;
  std::string gen_host = "127.0.0.1", gen_out;
  gen_cmd->add_option("n", gen_n, "Number of servers (1-16)")->required();
  gen_cmd->add_option("t", gen_t, "Threshold")->required();
  gen_cmd->add_option("--base-port", base_port, "Port of server 1")->capture_default_str();
  gen_cmd->add_option("--host", gen_host, "Host for every server")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_default_logger(spdlog::default_logger());

  try {
    if (server_cmd->parsed()) {
      auto signals = block_termination_signals();
      auto cluster = ClusterConfig::load(server_cluster);
      ServerOptions options;
      options.sync = !no_sync;
      ShareServer server(cluster, server_id, data_dir, options);
      server.start(net::parse_endpoint(server_listen));
      if (!server_hub.empty()) {
        try {
          server.register_with(server_hub);
        } catch (const Error& e) {
          spdlog::warn("could not register with hub {}: {}", server_hub, e.what());
        }
      }
      wait_for_signal(signals);
      server.stop();
      return kExitOk;
    }

    if (hub_cmd->parsed()) {
      auto signals = block_termination_signals();
      HubOptions options;
      options.timeouts = {std::chrono::milliseconds(connect_ms), std::chrono::milliseconds(response_ms)};
      Hub hub(ClusterConfig::load(hub_cluster), options);
      hub.start(net::parse_endpoint(hub_listen));
      wait_for_signal(signals);
      hub.stop();
      return kExitOk;
    }

    if (create_cmd->parsed()) {
      std::ifstream in(schema_path);
      ensure(in.good(), ErrorCode::Usage, "cannot read schema '" + schema_path + "'");
      auto j = nlohmann::json::parse(in, nullptr, false);
      ensure(!j.is_discarded(), ErrorCode::Usage, "schema '" + schema_path + "' is not JSON");
      TableSchema schema;
      try {
        schema = TableSchema::from_json(j);
      } catch (const Error& e) {
        throw Error(ErrorCode::Usage, e.detail());
      }
      OsRandom rng;
      Dealer(create_flags.hub, create_flags.load(), rng).create_table(schema);
      std::cout << "created " << schema.table() << "\n";
      return kExitOk;
    }

    if (insert_cmd->parsed()) {
      OsRandom rng;
      Dealer dealer(insert_flags.hub, insert_flags.load(), rng);
      auto schema = dealer.schema(insert_table);
      u64 index = dealer.insert_row(schema, parse_row(schema, insert_values));
      std::cout << "inserted " << insert_table << " row " << index << "\n";
      return kExitOk;
    }

    if (csv_cmd->parsed()) {
      std::ifstream in(csv_path, std::ios::binary);
      ensure(in.good(), ErrorCode::Usage, "cannot read '" + csv_path + "'");
      auto records = csv::parse(in);
      ensure(!records.empty(), ErrorCode::Usage, "'" + csv_path + "' has no header row");
      OsRandom rng;
      Dealer dealer(csv_flags.hub, csv_flags.load(), rng);
      auto schema = dealer.schema(csv_table);
      std::vector<std::string> expected;
      for (const auto& a : schema.attributes()) expected.push_back(a.name);
      ensure(records.front() == expected, ErrorCode::Usage, "CSV header does not match the attributes of '" + csv_table + "'");
      std::vector<std::vector<Value>> rows;
      for (std::size_t r = 1; r < records.size(); ++r) rows.push_back(parse_row(schema, records[r]));
      auto indices = dealer.insert_rows(schema, rows);
      std::cout << "inserted " << indices.size() << " rows into " << csv_table << "\n";
      return kExitOk;
    }

    if (query_cmd->parsed()) {
      auto query = parse_query(sql);
      ClientOptions options;
      options.listen = query_listen;
      options.advertise = advertise;
      options.result_timeout = std::chrono::milliseconds(result_timeout_ms);
      ClusterConfig cluster;
      try {
        cluster = query_flags.load();
      } catch (const Error& e) {
        if (e.code() == ErrorCode::Unavailable) throw Error(ErrorCode::ThresholdUnavailable, e.detail());
        throw;
      }
      QueryEngine engine(query_flags.hub, cluster, options);
      auto result = engine.execute(query);
      if (format == "json") {
        print_json(result);
      } else {
        print_text(result);
      }
      return kExitOk;
    }

    if (gen_cmd->parsed()) {
      ensure(gen_t >= 1 && gen_t <= gen_n && gen_n <= 16, ErrorCode::Usage, "need 1 <= t <= n <= 16");
      ensure(base_port >= 1 && base_port + gen_n - 1 <= 65535, ErrorCode::Usage, "ports out of range");
      auto cluster = make_local_cluster(gen_n, gen_t, base_port, gen_host);
      if (gen_out.empty()) {
        std::cout << cluster.to_json().dump(2) << "\n";
      } else {
        cluster.save(gen_out);
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "ssdb: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "ssdb: INTERNAL: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
