#pragma once

// Client side of the database: the dealer that shares rows out at insert
// time, and the query engine that reconstructs the condition column, picks
// matching row indices, and has the servers push only those rows' shares to
// a local result listener.

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <spdlog/spdlog.h>
#include <string>
#include <vector>

#include "ssdb/cluster.hpp"
#include "ssdb/encoding.hpp"
#include "ssdb/error.hpp"
#include "ssdb/net.hpp"
#include "ssdb/protocol.hpp"
#include "ssdb/query.hpp"
#include "ssdb/random.hpp"
#include "ssdb/shamir.hpp"

namespace ssdb {

struct ClientOptions {
  net::Timeouts hub_timeouts{std::chrono::milliseconds(2000), std::chrono::milliseconds(30000)};
  std::chrono::milliseconds result_timeout{10000};
  std::string listen = "127.0.0.1:0";
  std::string advertise;  // address given to servers; defaults to the bound listener
};

/// 16 random bytes, hex encoded.
inline std::string make_req_id() {
  static constexpr char kHex[] = "0123456789abcdef";
  OsRandom rng;
  std::string out;
  for (int i = 0; i < 2; ++i) {
    u64 v = rng.next_u64();
    for (int b = 0; b < 16; ++b) out.push_back(kHex[(v >> (4 * b)) & 0xF]);
  }
  return out;
}

/// Thin request channel to the hub.
class HubClient {
 public:
  HubClient(std::string address, u64 p, net::Timeouts timeouts)
      : address_(std::move(address)), p_(p), timeouts_(timeouts) {}

  proto::Message call(proto::Body body, std::string req_id = make_req_id()) const {
    proto::Message reply = net::request(address_, {std::move(req_id), std::move(body)}, timeouts_, p_);
    return proto::throw_if_error(reply);
  }

  const std::string& address() const noexcept { return address_; }

 private:
  std::string address_;
  u64 p_;
  net::Timeouts timeouts_;
};

/// Asks the hub for the cluster description.
inline ClusterConfig fetch_cluster(const std::string& hub_address, const ClientOptions& options = {}) {
  auto reply = HubClient(hub_address, kMersenne61, options.hub_timeouts).call(proto::ServerList{});
  ensure(reply.is<proto::ClusterInfo>(), ErrorCode::Internal, "hub sent an unexpected reply to SERVER_LIST");
  return reply.as<proto::ClusterInfo>().config;
}

inline TableSchema fetch_schema(const HubClient& hub, const std::string& table) {
  auto reply = hub.call(proto::GetSchema{table});
  ensure(reply.is<proto::SchemaReply>(), ErrorCode::Internal, "unexpected reply to GET_SCHEMA");
  return reply.as<proto::SchemaReply>().schema;
}

/// Data owner: encodes each value, shares every element, and hands the hub a
/// bundle in which server k's part holds only evaluations at x_k.
class Dealer {
 public:
  Dealer(std::string hub_address, ClusterConfig cluster, RandomSource& rng, ClientOptions options = {})
      : cluster_(std::move(cluster)),
        scheme_(cluster_.scheme()),
        rng_(rng),
        hub_(std::move(hub_address), cluster_.field.modulus(), options.hub_timeouts) {}

  void create_table(const TableSchema& schema) { hub_.call(proto::CreateTable{schema}); }

  TableSchema schema(const std::string& table) const { return fetch_schema(hub_, table); }

  /// Current row count + 1, read from the index list of the first servers.
  u64 next_index(const TableSchema& schema) const {
    auto reply = hub_.call(proto::GetColumn{schema.table(), schema.attributes().front().name});
    ensure(reply.is<proto::ColumnSet>() && !reply.as<proto::ColumnSet>().responses.empty(), ErrorCode::Internal,
           "unexpected reply to GET_COLUMN");
    return reply.as<proto::ColumnSet>().responses.front().index_list.size() + 1;
  }

  u64 insert_row(const TableSchema& schema, const std::vector<Value>& values) {
    check_row(schema, values);
    const u64 index = next_index(schema);
    send(make_bundle(schema, values, index));
    return index;
  }

  /// Inserts rows in order; the next index is discovered once.
  std::vector<u64> insert_rows(const TableSchema& schema, const std::vector<std::vector<Value>>& rows) {
    for (const auto& r : rows) check_row(schema, r);
    std::vector<u64> out;
    if (rows.empty()) return out;
    u64 index = next_index(schema);
    for (const auto& r : rows) {
      send(make_bundle(schema, r, index));
      out.push_back(index++);
    }
    return out;
  }

  proto::InsertBundle make_bundle(const TableSchema& schema, const std::vector<Value>& values, u64 index) {
    check_row(schema, values);
    proto::InsertBundle bundle{schema.table(), index, {}};
    for (const auto& s : cluster_.servers) bundle.shares[s.server_id];
    for (std::size_t a = 0; a < values.size(); ++a) {
      const Attribute& attr = schema.attributes()[a];
      for (FieldElement element : encode_value(attr.type, values[a], cluster_.field)) {
        auto shares = shamir::split(element, scheme_, rng_);
        for (std::size_t k = 0; k < shares.size(); ++k) {
          bundle.shares[cluster_.servers[k].server_id][attr.name].push_back(shares[k].y.value());
        }
      }
    }
    return bundle;
  }

 private:
  static void check_row(const TableSchema& schema, const std::vector<Value>& values) {
    ensure(values.size() == schema.attributes().size(), ErrorCode::Usage,
           "table '" + schema.table() + "' has " + std::to_string(schema.attributes().size()) +
               " attributes, got " + std::to_string(values.size()) + " values");
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Attribute& a = schema.attributes()[i];
      ensure(type_of(values[i]) == a.type, ErrorCode::TypeMismatch,
             "value for '" + a.name + "' must be " + std::string(type_name(a.type)));
    }
  }

  void send(const proto::InsertBundle& bundle) { hub_.call(bundle); }

  ClusterConfig cluster_;
  shamir::SchemeParams scheme_;
  RandomSource& rng_;
  HubClient hub_;
};

/// Collects DELIVER_SHARES pushes, keyed by req_id, until t distinct servers
/// have delivered.
class ResultListener {
 public:
  ResultListener(std::size_t t, u64 p) : t_(t), p_(p) {}
  ~ResultListener() { stop(); }

  void start(const std::string& listen) {
    server_ = std::make_unique<net::FrameServer>([this](const proto::Message& m) { return on_message(m); }, p_);
    server_->start(net::parse_endpoint(listen));
  }

  void stop() {
    if (server_) server_->stop();
    server_.reset();
  }

  const net::Endpoint& endpoint() const { return server_->endpoint(); }

  /// Registers a fetch before it is sent so early pushes are kept.
  void expect(const std::string& req_id, const std::string& table, const std::string& attr) {
    std::lock_guard lock(mu_);
    pending_[req_id] = Pending{table, attr, {}, std::nullopt};
  }

  void forget(const std::string& req_id) {
    std::lock_guard lock(mu_);
    pending_.erase(req_id);
  }

  /// Blocks until t distinct x-coordinates have delivered for `req_id`.
  std::map<u64, proto::DeliverShares> wait(const std::string& req_id, net::Clock::time_point deadline) {
    std::unique_lock lock(mu_);
    auto ready = [&] {
      const Pending& p = pending_.at(req_id);
      return p.failure.has_value() || p.pushes.size() >= t_;
    };
    if (!cv_.wait_until(lock, deadline, ready)) {
      auto got = pending_.at(req_id).pushes.size();
      pending_.erase(req_id);
      throw Error(ErrorCode::QueryTimeout, "received " + std::to_string(got) + " of " + std::to_string(t_) +
                                               " share deliveries for " + req_id);
    }
    Pending p = std::move(pending_.at(req_id));
    pending_.erase(req_id);
    if (p.failure) throw *p.failure;
    return std::move(p.pushes);
  }

 private:
  struct Pending {
    std::string table;
    std::string attr;
    std::map<u64, proto::DeliverShares> pushes;  // by server_x
    std::optional<Error> failure;
  };

  proto::Message on_message(const proto::Message& m) {
    const auto* push = std::get_if<proto::DeliverShares>(&m.body);
    ensure(push != nullptr, ErrorCode::BadRequest, "result listener only accepts DELIVER_SHARES");
    {
      std::lock_guard lock(mu_);
      auto it = pending_.find(m.req_id);
      if (it == pending_.end()) {
        spdlog::warn("ignoring delivery for unknown request '{}'", m.req_id);
        return {m.req_id, proto::Ack{}};
      }
      Pending& p = it->second;
      if (push->table != p.table || push->attr != p.attr) {
        p.failure = Error(ErrorCode::DataCorruption, "delivery for " + push->table + "." + push->attr +
                                                         " does not match the request");
      } else if (auto prev = p.pushes.find(push->server_x); prev != p.pushes.end()) {
        if (!(prev->second == *push)) {
          p.failure = Error(ErrorCode::DataCorruption,
                            "conflicting deliveries from x=" + std::to_string(push->server_x));
        }
      } else {
        p.pushes.emplace(push->server_x, *push);
      }
    }
    cv_.notify_all();
    return {m.req_id, proto::Ack{}};
  }

  std::size_t t_;
  u64 p_;
  std::unique_ptr<net::FrameServer> server_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, Pending> pending_;
};

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<u64> indices;              // matching row indices, ascending
  std::vector<std::vector<Value>> rows;  // parallel to indices

  friend bool operator==(const ResultSet&, const ResultSet&) = default;
};

/// Query handler, computation agent and result constructor.
class QueryEngine {
 public:
  QueryEngine(std::string hub_address, ClusterConfig cluster, ClientOptions options = {})
      : cluster_(std::move(cluster)),
        options_(std::move(options)),
        hub_(std::move(hub_address), cluster_.field.modulus(), options_.hub_timeouts) {}

  ResultSet execute(std::string_view sql) { return execute(parse_query(sql)); }

  ResultSet execute(const Query& query) {
    try {
      return run(query);
    } catch (const Error& e) {
      // An unreachable hub means no threshold of servers can be reached.
      if (e.code() == ErrorCode::Unavailable) throw Error(ErrorCode::ThresholdUnavailable, e.detail());
      throw;
    }
  }

  TableSchema schema(const std::string& table) const { return fetch_schema(hub_, table); }

  /// Reconstructs every cell of `attr` from t servers' column shares.
  std::vector<std::pair<u64, Value>> reconstruct_column(const TableSchema& schema, const std::string& attr) const {
    const AttrType type = schema.at(attr).type;
    auto reply = hub_.call(proto::GetColumn{schema.table(), attr});
    ensure(reply.is<proto::ColumnSet>(), ErrorCode::Internal, "unexpected reply to GET_COLUMN");
    const auto& responses = reply.as<proto::ColumnSet>().responses;
    ensure(responses.size() == cluster_.t, ErrorCode::ThresholdUnavailable,
           "hub returned " + std::to_string(responses.size()) + " column responses, need " +
               std::to_string(cluster_.t));
    std::vector<u64> xs;
    for (const auto& r : responses) xs.push_back(r.server_x);
    const auto weights = weights_for(xs);
    const auto& index_list = responses.front().index_list;
    std::vector<std::pair<u64, Value>> out;
    out.reserve(index_list.size());
    for (std::size_t row = 0; row < index_list.size(); ++row) {
      std::vector<const std::vector<u64>*> cell;
      for (const auto& r : responses) {
        ensure(r.index_list == index_list, ErrorCode::DataCorruption, "servers disagree on row indices");
        cell.push_back(&r.cells[row]);
      }
      out.emplace_back(index_list[row], decode_cell(type, weights, cell));
    }
    return out;
  }

 private:
  ResultSet run(const Query& query) {
    const TableSchema schema = fetch_schema(hub_, query.table);
    query.validate(schema);
    ResultSet result;
    result.columns = query.columns(schema);
    for (const auto& c : result.columns) schema.at(c);

    // Condition column (or, without WHERE, the first selected column).
    const std::string probe = query.predicate ? query.predicate->attr : result.columns.front();
    auto column = reconstruct_column(schema, probe);
    result.indices = evaluate_predicate(column, query.predicate);
    if (result.indices.empty()) return result;

    std::map<std::string, std::map<u64, Value>> fetched;
    {
      auto& reused = fetched[probe];
      for (auto& [index, value] : column) reused.emplace(index, std::move(value));
    }
    std::vector<std::string> remote;
    for (const auto& c : result.columns) {
      if (!fetched.count(c) && std::find(remote.begin(), remote.end(), c) == remote.end()) remote.push_back(c);
    }
    if (!remote.empty()) {
      ResultListener listener(cluster_.t, cluster_.field.modulus());
      listener.start(options_.listen);
      const std::string client_addr =
          options_.advertise.empty() ? listener.endpoint().to_string() : options_.advertise;
      const std::string prefix = make_req_id();
      for (const auto& attr : remote) {
        fetched[attr] = fetch_rows(listener, client_addr, prefix + "/" + attr, schema, attr, result.indices);
      }
    }

    for (u64 index : result.indices) {
      std::vector<Value> row;
      for (const auto& c : result.columns) row.push_back(fetched.at(c).at(index));
      result.rows.push_back(std::move(row));
    }
    return result;
  }

  std::map<u64, Value> fetch_rows(ResultListener& listener, const std::string& client_addr, const std::string& req_id,
                                  const TableSchema& schema, const std::string& attr, const std::vector<u64>& indices) {
    listener.expect(req_id, schema.table(), attr);
    std::vector<u64> xs_acked;
    try {
      auto ack = hub_.call(proto::FetchToClient{schema.table(), attr, indices, client_addr}, req_id);
      ensure(ack.is<proto::Ack>(), ErrorCode::Internal, "unexpected reply to FETCH_TO_CLIENT");
      xs_acked = ack.as<proto::Ack>().x_coords;
    } catch (...) {
      listener.forget(req_id);
      throw;
    }
    auto pushes = listener.wait(req_id, net::Clock::now() + options_.result_timeout);

    std::vector<u64> xs;
    std::vector<const proto::DeliverShares*> parts;
    for (const auto& [x, push] : pushes) {
      ensure(xs_acked.empty() || std::find(xs_acked.begin(), xs_acked.end(), x) != xs_acked.end(),
             ErrorCode::DataCorruption, "delivery from unexpected server x=" + std::to_string(x));
      ensure(push.rows.size() == indices.size(), ErrorCode::DataCorruption,
             "server x=" + std::to_string(x) + " delivered " + std::to_string(push.rows.size()) + " rows, expected " +
                 std::to_string(indices.size()));
      xs.push_back(x);
      parts.push_back(&push);
      if (xs.size() == cluster_.t) break;
    }

    const AttrType type = schema.at(attr).type;
    const auto weights = weights_for(xs);
    std::map<u64, Value> out;
    for (std::size_t row = 0; row < indices.size(); ++row) {
      std::vector<const std::vector<u64>*> cell;
      for (const auto* part : parts) {
        ensure(part->rows[row].index == indices[row], ErrorCode::DataCorruption, "delivered rows out of order");
        cell.push_back(&part->rows[row].elements);
      }
      out.emplace(indices[row], decode_cell(type, weights, cell));
    }
    return out;
  }

  /// Elementwise interpolation at zero followed by decoding.
  Value decode_cell(AttrType type, const std::vector<FieldElement>& weights,
                    const std::vector<const std::vector<u64>*>& cell) const {
    const Field& f = cluster_.field;
    const std::size_t len = cell.front()->size();
    for (const auto* c : cell) {
      ensure(c->size() == len, ErrorCode::DataCorruption, "servers disagree on a cell's element count");
    }
    std::vector<FieldElement> elements;
    elements.reserve(len);
    for (std::size_t e = 0; e < len; ++e) {
      FieldElement acc = f.zero();
      for (std::size_t i = 0; i < cell.size(); ++i) acc += weights[i] * f.element((*cell[i])[e]);
      elements.push_back(acc);
    }
    return decode_value(type, elements);
  }

  std::vector<FieldElement> weights_for(const std::vector<u64>& xs) const {
    std::vector<FieldElement> xe;
    for (u64 x : xs) xe.push_back(cluster_.field.element(x));
    return shamir::lagrange_weights(xe);
  }

  ClusterConfig cluster_;
  ClientOptions options_;
  HubClient hub_;
};

}  // namespace ssdb
