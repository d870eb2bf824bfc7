#pragma once

// Wire protocol: every message is a frame
//
//   [4-byte big-endian payload length][UTF-8 JSON object]
//
// whose JSON carries a "type" tag and an opaque "req_id" that responses echo.
// Share values travel as decimal strings and are range-checked against p on
// decode.

#include <cstdint>
#include <deque>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ssdb/cluster.hpp"
#include "ssdb/encoding.hpp"
#include "ssdb/error.hpp"
#include "ssdb/field.hpp"

namespace ssdb::proto {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kMaxPayload = std::size_t{16} << 20;
inline constexpr std::size_t kHeaderBytes = 4;

/// attribute name -> one server's share elements for that cell
using Cells = std::map<std::string, std::vector<u64>>;

struct Ack {
  std::vector<u64> x_coords;  // set by the hub when relaying a fetch
  friend bool operator==(const Ack&, const Ack&) = default;
};

struct ErrorReply {
  std::string code;
  std::string detail;
  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

struct CreateTable {
  TableSchema schema;
  friend bool operator==(const CreateTable&, const CreateTable&) = default;
};

/// One server's shares of one row.
struct InsertShares {
  std::string table;
  u64 index = 0;
  Cells cells;
  friend bool operator==(const InsertShares&, const InsertShares&) = default;
};

/// Dealer -> hub: every server's shares of one row, keyed by server_id.
struct InsertBundle {
  std::string table;
  u64 index = 0;
  std::map<u64, Cells> shares;
  friend bool operator==(const InsertBundle&, const InsertBundle&) = default;
};

struct GetColumn {
  std::string table;
  std::string attr;
  friend bool operator==(const GetColumn&, const GetColumn&) = default;
};

struct ColumnShares {
  std::string table;
  std::string attr;
  u64 server_x = 0;
  std::vector<u64> index_list;
  std::vector<std::vector<u64>> cells;  // parallel to index_list
  friend bool operator==(const ColumnShares&, const ColumnShares&) = default;
};

/// Hub -> client: t column responses from distinct servers.
struct ColumnSet {
  std::vector<ColumnShares> responses;
  friend bool operator==(const ColumnSet&, const ColumnSet&) = default;
};

/// Row indices, attribute name, and where to deliver the shares.
struct FetchToClient {
  std::string table;
  std::string attr;
  std::vector<u64> indices;
  std::string client_addr;
  friend bool operator==(const FetchToClient&, const FetchToClient&) = default;
};

struct DeliveredRow {
  u64 index = 0;
  std::vector<u64> elements;
  friend bool operator==(const DeliveredRow&, const DeliveredRow&) = default;
};

struct DeliverShares {
  std::string table;
  std::string attr;
  u64 server_x = 0;
  std::vector<DeliveredRow> rows;
  friend bool operator==(const DeliverShares&, const DeliverShares&) = default;
};

struct Register {
  u64 server_id = 0;
  u64 x_coord = 0;
  friend bool operator==(const Register&, const Register&) = default;
};

struct ServerList {
  friend bool operator==(const ServerList&, const ServerList&) = default;
};

struct ClusterInfo {
  ClusterConfig config;
  std::vector<bool> live;  // parallel to config.servers
  friend bool operator==(const ClusterInfo&, const ClusterInfo&) = default;
};

struct GetSchema {
  std::string table;
  friend bool operator==(const GetSchema&, const GetSchema&) = default;
};

struct SchemaReply {
  TableSchema schema;
  friend bool operator==(const SchemaReply&, const SchemaReply&) = default;
};

using Body = std::variant<Ack, ErrorReply, CreateTable, InsertShares, InsertBundle, GetColumn,
                          ColumnShares, ColumnSet, FetchToClient, DeliverShares, Register,
                          ServerList, ClusterInfo, GetSchema, SchemaReply>;

struct Message {
  std::string req_id;
  Body body;

  template <typename T>
  bool is() const {
    return std::holds_alternative<T>(body);
  }
  template <typename T>
  const T& as() const {
    return std::get<T>(body);
  }

  friend bool operator==(const Message&, const Message&) = default;
};

inline Message error_reply(const std::string& req_id, ErrorCode code, const std::string& detail) {
  return {req_id, ErrorReply{std::string(code_name(code)), detail}};
}

inline Message error_reply(const std::string& req_id, const Error& e) {
  return error_reply(req_id, e.code(), e.detail());
}

/// Throws the carried error if `m` is an ERROR frame.
inline const Message& throw_if_error(const Message& m) {
  if (const auto* e = std::get_if<ErrorReply>(&m.body)) {
    throw Error(code_from_name(e->code), e->detail);
  }
  return m;
}

inline std::string_view type_tag(const Body& body) {
  static constexpr std::string_view kTags[] = {
      "ACK",          "ERROR",         "CREATE_TABLE",    "INSERT_SHARES",  "INSERT_BUNDLE",
      "GET_COLUMN",   "COLUMN_SHARES", "COLUMN_SET",      "FETCH_TO_CLIENT", "DELIVER_SHARES",
      "REGISTER",     "SERVER_LIST",   "CLUSTER_INFO",    "GET_SCHEMA",     "SCHEMA"};
  static_assert(std::size(kTags) == std::variant_size_v<Body>);
  return kTags[body.index()];
}

namespace detail {

using nlohmann::json;

inline json shares_to_json(const std::vector<u64>& v) {
  json a = json::array();
  for (u64 x : v) a.push_back(std::to_string(x));
  return a;
}

inline json cells_to_json(const Cells& cells) {
  json o = json::object();
  for (const auto& [attr, v] : cells) o[attr] = shares_to_json(v);
  return o;
}

inline json to_json(const Ack& m) {
  json j = json::object();
  if (!m.x_coords.empty()) j["x_coords"] = shares_to_json(m.x_coords);
  return j;
}
inline json to_json(const ErrorReply& m) { return {{"code", m.code}, {"detail", m.detail}}; }
inline json to_json(const CreateTable& m) { return {{"schema", m.schema.to_json()}}; }
inline json to_json(const InsertShares& m) {
  return {{"table", m.table}, {"index", m.index}, {"cells", cells_to_json(m.cells)}};
}
inline json to_json(const InsertBundle& m) {
  json shares = json::object();
  for (const auto& [id, cells] : m.shares) shares[std::to_string(id)] = cells_to_json(cells);
  return {{"table", m.table}, {"index", m.index}, {"shares", std::move(shares)}};
}
inline json to_json(const GetColumn& m) { return {{"table", m.table}, {"attr", m.attr}}; }
inline json to_json(const ColumnShares& m) {
  json cells = json::array();
  for (const auto& c : m.cells) cells.push_back(shares_to_json(c));
  return {{"table", m.table},
          {"attr", m.attr},
          {"server_x", std::to_string(m.server_x)},
          {"index_list", m.index_list},
          {"cells", std::move(cells)}};
}
inline json to_json(const ColumnSet& m) {
  json list = json::array();
  for (const auto& r : m.responses) list.push_back(to_json(r));
  return {{"responses", std::move(list)}};
}
inline json to_json(const FetchToClient& m) {
  return {{"table", m.table}, {"attr", m.attr}, {"indices", m.indices}, {"client_addr", m.client_addr}};
}
inline json to_json(const DeliverShares& m) {
  json rows = json::array();
  for (const auto& r : m.rows) rows.push_back({{"index", r.index}, {"elements", shares_to_json(r.elements)}});
  return {{"table", m.table}, {"attr", m.attr}, {"server_x", std::to_string(m.server_x)}, {"rows", std::move(rows)}};
}
inline json to_json(const Register& m) {
  return {{"server_id", m.server_id}, {"x_coord", std::to_string(m.x_coord)}};
}
inline json to_json(const ServerList&) { return json::object(); }
inline json to_json(const ClusterInfo& m) { return {{"cluster", m.config.to_json()}, {"live", m.live}}; }
inline json to_json(const GetSchema& m) { return {{"table", m.table}}; }
inline json to_json(const SchemaReply& m) { return {{"schema", m.schema.to_json()}}; }

/// Field readers that turn every schema violation into a coded Error.
class Reader {
 public:
  explicit Reader(u64 p) : p_(p) {}

  const json& field(const json& j, const char* key) const {
    auto it = j.find(key);
    ensure(it != j.end(), ErrorCode::Malformed, std::string("missing field '") + key + "'");
    return *it;
  }

  std::string str(const json& j, const char* key) const {
    const json& v = field(j, key);
    ensure(v.is_string(), ErrorCode::Malformed, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }

  u64 uint(const json& j, const char* key) const { return uint_value(field(j, key), key); }

  u64 uint_value(const json& v, const char* what) const {
    ensure(v.is_number_unsigned(), ErrorCode::Malformed,
           std::string("field '") + what + "' must be an unsigned integer");
    return v.get<u64>();
  }

  const json& array(const json& j, const char* key) const {
    const json& v = field(j, key);
    ensure(v.is_array(), ErrorCode::Malformed, std::string("field '") + key + "' must be an array");
    return v;
  }

  const json& object(const json& j, const char* key) const {
    const json& v = field(j, key);
    ensure(v.is_object(), ErrorCode::Malformed, std::string("field '") + key + "' must be an object");
    return v;
  }

  u64 share(const json& v) const {
    ensure(v.is_string(), ErrorCode::Malformed, "share values must be decimal strings");
    return Field::parse_decimal(v.get_ref<const std::string&>(), p_);
  }

  u64 share_field(const json& j, const char* key) const { return share(field(j, key)); }

  std::vector<u64> shares(const json& a) const {
    ensure(a.is_array(), ErrorCode::Malformed, "share list must be an array");
    std::vector<u64> out;
    out.reserve(a.size());
    for (const auto& v : a) out.push_back(share(v));
    return out;
  }

  std::vector<u64> uints(const json& j, const char* key) const {
    std::vector<u64> out;
    for (const auto& v : array(j, key)) out.push_back(uint_value(v, key));
    return out;
  }

  Cells cells(const json& o) const {
    ensure(o.is_object(), ErrorCode::Malformed, "cells must be an object");
    Cells out;
    for (const auto& [attr, v] : o.items()) out.emplace(attr, shares(v));
    return out;
  }

  TableSchema schema(const json& j) const { return TableSchema::from_json(object(j, "schema")); }

 private:
  u64 p_;
};

inline ColumnShares column_from_json(const Reader& r, const json& j) {
  ColumnShares m{r.str(j, "table"), r.str(j, "attr"), r.share_field(j, "server_x"), r.uints(j, "index_list"), {}};
  for (const auto& c : r.array(j, "cells")) m.cells.push_back(r.shares(c));
  ensure(m.cells.size() == m.index_list.size(), ErrorCode::Malformed,
         "cells and index_list differ in length");
  return m;
}

inline Body body_from_json(const std::string& type, const json& j, u64 p) {
  Reader r(p);
  if (type == "ACK") {
    Ack m;
    if (j.contains("x_coords")) m.x_coords = r.shares(j.at("x_coords"));
    return m;
  }
  if (type == "ERROR") return ErrorReply{r.str(j, "code"), r.str(j, "detail")};
  if (type == "CREATE_TABLE") return CreateTable{r.schema(j)};
  if (type == "INSERT_SHARES") {
    return InsertShares{r.str(j, "table"), r.uint(j, "index"), r.cells(r.object(j, "cells"))};
  }
  if (type == "INSERT_BUNDLE") {
    InsertBundle m{r.str(j, "table"), r.uint(j, "index"), {}};
    for (const auto& [id, cells] : r.object(j, "shares").items()) {
      m.shares.emplace(Field::parse_decimal(id, ~u64{0}), r.cells(cells));
    }
    return m;
  }
  if (type == "GET_COLUMN") return GetColumn{r.str(j, "table"), r.str(j, "attr")};
  if (type == "COLUMN_SHARES") return column_from_json(r, j);
  if (type == "COLUMN_SET") {
    ColumnSet m;
    for (const auto& c : r.array(j, "responses")) m.responses.push_back(column_from_json(r, c));
    return m;
  }
  if (type == "FETCH_TO_CLIENT") {
    return FetchToClient{r.str(j, "table"), r.str(j, "attr"), r.uints(j, "indices"), r.str(j, "client_addr")};
  }
  if (type == "DELIVER_SHARES") {
    DeliverShares m{r.str(j, "table"), r.str(j, "attr"), r.share_field(j, "server_x"), {}};
    for (const auto& row : r.array(j, "rows")) {
      m.rows.push_back({r.uint(row, "index"), r.shares(r.array(row, "elements"))});
    }
    return m;
  }
  if (type == "REGISTER") return Register{r.uint(j, "server_id"), r.share_field(j, "x_coord")};
  if (type == "SERVER_LIST") return ServerList{};
  if (type == "CLUSTER_INFO") {
    ClusterInfo m{ClusterConfig::from_json(r.object(j, "cluster")), {}};
    for (const auto& v : r.array(j, "live")) {
      ensure(v.is_boolean(), ErrorCode::Malformed, "live flags must be booleans");
      m.live.push_back(v.get<bool>());
    }
    return m;
  }
  if (type == "GET_SCHEMA") return GetSchema{r.str(j, "table")};
  if (type == "SCHEMA") return SchemaReply{r.schema(j)};
  throw Error(ErrorCode::UnknownType, "unknown message type '" + type + "'");
}

inline void put_u32_be(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32_be(std::span<const std::uint8_t> in) {
  return (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) | (std::uint32_t{in[2]} << 8) |
         std::uint32_t{in[3]};
}

}  // namespace detail

inline nlohmann::json to_json(const Message& m) {
  nlohmann::json j = std::visit([](const auto& b) { return detail::to_json(b); }, m.body);
  j["type"] = std::string(type_tag(m.body));
  j["req_id"] = m.req_id;
  return j;
}

/// Validates a parsed payload into a Message.
inline Message from_json(const nlohmann::json& j, u64 p = kMersenne61) {
  ensure(j.is_object(), ErrorCode::Malformed, "payload must be a JSON object");
  detail::Reader r(p);
  std::string type = r.str(j, "type");
  std::string req_id = r.str(j, "req_id");
  try {
    return Message{std::move(req_id), detail::body_from_json(type, j, p)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Malformed, e.what());
  }
}

inline Bytes encode_frame(const Message& m) {
  std::string payload = to_json(m).dump();
  ensure(payload.size() <= kMaxPayload, ErrorCode::ValueRange,
         "payload of " + std::to_string(payload.size()) + " bytes exceeds 16 MiB");
  Bytes out;
  out.reserve(kHeaderBytes + payload.size());
  detail::put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

/// Decodes one frame from the front of `bytes`. Returns nullopt when the
/// buffer holds only part of a frame; otherwise sets `consumed`.
inline std::optional<Message> decode_frame(std::span<const std::uint8_t> bytes, std::size_t& consumed,
                                           u64 p = kMersenne61) {
  consumed = 0;
  if (bytes.size() < kHeaderBytes) return std::nullopt;
  const std::size_t len = detail::get_u32_be(bytes.first(kHeaderBytes));
  ensure(len <= kMaxPayload, ErrorCode::Malformed,
         "frame length " + std::to_string(len) + " exceeds 16 MiB");
  if (bytes.size() < kHeaderBytes + len) return std::nullopt;
  consumed = kHeaderBytes + len;
  ensure(len > 0, ErrorCode::Malformed, "empty payload");
  auto payload = bytes.subspan(kHeaderBytes, len);
  nlohmann::json j = nlohmann::json::parse(payload.begin(), payload.end(), nullptr, false);
  ensure(!j.is_discarded(), ErrorCode::Malformed, "payload is not valid JSON");
  return from_json(j, p);
}

/// Reassembles messages from an arbitrarily chunked byte stream.
class FrameDecoder {
 public:
  explicit FrameDecoder(u64 p = kMersenne61) : p_(p) {}

  void feed(std::span<const std::uint8_t> chunk) { buffer_.insert(buffer_.end(), chunk.begin(), chunk.end()); }

  /// Next complete message, or nullopt if more bytes are needed. A
  /// malformed frame is consumed before its error is thrown, so the stream
  /// stays aligned.
  std::optional<Message> next() {
    std::size_t consumed = 0;
    std::optional<Message> m;
    try {
      m = decode_frame(std::span(buffer_).subspan(offset_), consumed, p_);
    } catch (...) {
      advance(consumed);
      throw;
    }
    advance(consumed);
    return m;
  }

  std::size_t buffered() const noexcept { return buffer_.size() - offset_; }

 private:
  void advance(std::size_t n) {
    offset_ += n;
    if (offset_ > 4096 && offset_ * 2 > buffer_.size()) {
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset_));
      offset_ = 0;
    }
  }

  u64 p_;
  Bytes buffer_;
  std::size_t offset_ = 0;
};

}  // namespace ssdb::proto
