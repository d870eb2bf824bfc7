#pragma once

// Random inputs and a plaintext reference engine shared by the unit tests and
// the acceptance binary. The reference engine deliberately avoids the
// library's own query evaluation.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "ssdb/cluster.hpp"
#include "ssdb/encoding.hpp"
#include "ssdb/protocol.hpp"
#include "ssdb/query.hpp"

namespace testsupport {

using ssdb::u64;
using Gen = std::mt19937_64;

inline u64 below(Gen& g, u64 n) { return std::uniform_int_distribution<u64>(0, n - 1)(g); }

inline void append_code_point(std::string& s, std::uint32_t cp) {
  if (cp < 0x80) {
    s.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    s.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    s.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    s.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

/// Mix of ASCII, 2-, 3- and 4-byte code points, never a surrogate.
inline std::string random_utf8(Gen& g, std::size_t max_code_points) {
  std::string s;
  const std::size_t n = below(g, max_code_points + 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t cp = 0;
    switch (below(g, 4)) {
      case 0: cp = static_cast<std::uint32_t>(below(g, 0x80)); break;
      case 1: cp = static_cast<std::uint32_t>(0x80 + below(g, 0x800 - 0x80)); break;
      case 2:
        do cp = static_cast<std::uint32_t>(0x800 + below(g, 0x10000 - 0x800));
        while (cp >= 0xD800 && cp <= 0xDFFF);
        break;
      default: cp = static_cast<std::uint32_t>(0x10000 + below(g, 0x110000 - 0x10000)); break;
    }
    append_code_point(s, cp);
  }
  return s;
}

inline std::string random_identifier(Gen& g) {
  static const std::string head = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
  static const std::string tail = head + "0123456789";
  std::string s(1, head[below(g, head.size())]);
  const std::size_t n = below(g, 10);
  for (std::size_t i = 0; i < n; ++i) s.push_back(tail[below(g, tail.size())]);
  return s;
}

inline std::vector<u64> random_shares(Gen& g, std::size_t max_len) {
  std::vector<u64> v(1 + below(g, max_len));
  for (auto& x : v) x = below(g, ssdb::kMersenne61);
  return v;
}

inline ssdb::proto::Cells random_cells(Gen& g) {
  ssdb::proto::Cells c;
  const std::size_t n = 1 + below(g, 4);
  for (std::size_t i = 0; i < n; ++i) c[random_identifier(g)] = random_shares(g, 5);
  return c;
}

inline ssdb::TableSchema random_schema(Gen& g, std::size_t max_attrs) {
  std::vector<ssdb::Attribute> attrs;
  const std::size_t n = 1 + below(g, max_attrs);
  for (std::size_t i = 0; i < n; ++i) {
    attrs.push_back({"a" + std::to_string(i) + "_" + random_identifier(g),
                     below(g, 2) == 0 ? ssdb::AttrType::Integer : ssdb::AttrType::Text});
  }
  return ssdb::TableSchema("t_" + random_identifier(g), std::move(attrs));
}

/// Every message type with randomized contents.
inline ssdb::proto::Message random_message(Gen& g) {
  using namespace ssdb::proto;
  Message m;
  m.req_id = below(g, 8) == 0 ? "" : random_utf8(g, 12);
  switch (below(g, 15)) {
    case 0: {
      Ack a;
      if (below(g, 2)) a.x_coords = random_shares(g, 5);
      m.body = a;
      break;
    }
    case 1: m.body = ErrorReply{"THRESHOLD_UNAVAILABLE", random_utf8(g, 30)}; break;
    case 2: m.body = CreateTable{random_schema(g, 5)}; break;
    case 3: m.body = InsertShares{random_identifier(g), 1 + below(g, 1000), random_cells(g)}; break;
    case 4: {
      InsertBundle b{random_identifier(g), 1 + below(g, 1000), {}};
      for (u64 k = 1; k <= 1 + below(g, 5); ++k) b.shares[k] = random_cells(g);
      m.body = b;
      break;
    }
    case 5: m.body = GetColumn{random_identifier(g), random_identifier(g)}; break;
    case 6:
    case 7: {
      ColumnShares c{random_identifier(g), random_identifier(g), 1 + below(g, 16), {}, {}};
      const std::size_t rows = below(g, 6);
      for (std::size_t i = 0; i < rows; ++i) {
        c.index_list.push_back(i + 1);
        c.cells.push_back(random_shares(g, 4));
      }
      if (below(g, 2) == 0) {
        m.body = c;
      } else {
        ColumnSet set;
        for (int k = 0; k < 3; ++k) set.responses.push_back(c);
        m.body = set;
      }
      break;
    }
    case 8: {
      FetchToClient f{random_identifier(g), random_identifier(g), {}, "127.0.0.1:" + std::to_string(below(g, 65536))};
      for (std::size_t i = 0; i < below(g, 6); ++i) f.indices.push_back(1 + below(g, 100));
      m.body = f;
      break;
    }
    case 9: {
      DeliverShares d{random_identifier(g), random_identifier(g), 1 + below(g, 16), {}};
      for (std::size_t i = 0; i < below(g, 5); ++i) d.rows.push_back({1 + below(g, 100), random_shares(g, 4)});
      m.body = d;
      break;
    }
    case 10: m.body = Register{1 + below(g, 16), 1 + below(g, 16)}; break;
    case 11: m.body = ServerList{}; break;
    case 12: {
      const std::size_t n = 1 + below(g, 5);
      ClusterInfo info{ssdb::make_local_cluster(n, 1 + below(g, n), 7001), {}};
      for (std::size_t i = 0; i < n; ++i) info.live.push_back(below(g, 2) == 0);
      m.body = info;
      break;
    }
    case 13: m.body = GetSchema{random_identifier(g)}; break;
    default: m.body = SchemaReply{random_schema(g, 5)}; break;
  }
  return m;
}

using Row = std::vector<ssdb::Value>;

struct PlainTable {
  ssdb::TableSchema schema;
  std::vector<Row> rows;  // rows[i] has index i+1
};

inline ssdb::Value random_value(Gen& g, ssdb::AttrType type) {
  // Small domains so equality predicates hit.
  if (type == ssdb::AttrType::Integer) {
    return below(g, 4) == 0 ? below(g, ssdb::kMersenne61) : below(g, 20);
  }
  static const std::vector<std::string> pool = {"", "a", "Aids", "Cancer", "Fever", "\xc3\xa9t\xc3\xa9", "zz"};
  return below(g, 2) == 0 ? pool[below(g, pool.size())] : random_utf8(g, 12);
}

inline PlainTable random_table(Gen& g, std::size_t max_rows, std::size_t max_attrs) {
  PlainTable t{random_schema(g, max_attrs), {}};
  const std::size_t rows = below(g, max_rows + 1);
  for (std::size_t i = 0; i < rows; ++i) {
    Row r;
    for (const auto& a : t.schema.attributes()) r.push_back(random_value(g, a.type));
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline std::string sql_literal(const ssdb::Value& v) {
  if (const auto* i = std::get_if<u64>(&v)) return std::to_string(*i);
  std::string out = "'";
  for (char c : std::get<std::string>(v)) {
    if (c == '\'') out += "''";
    else out.push_back(c);
  }
  return out + "'";
}

struct RandomQuery {
  std::string sql;
  std::vector<std::size_t> columns;  // schema positions, in select order
  bool has_where = false;
  std::size_t where_attr = 0;
  std::string op;
  ssdb::Value literal;
};

/// `shape` 0-5 forces that operator, 6 forces no WHERE, -1 picks at random.
inline RandomQuery random_query(Gen& g, const PlainTable& t, int shape = -1) {
  static const std::vector<std::string> ops = {"=", "!=", "<", "<=", ">", ">="};
  const auto& attrs = t.schema.attributes();
  RandomQuery q;
  std::string select;
  if (below(g, 4) == 0) {
    select = "*";
    for (std::size_t i = 0; i < attrs.size(); ++i) q.columns.push_back(i);
  } else {
    std::vector<std::size_t> idx(attrs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), g);
    idx.resize(1 + below(g, idx.size()));
    for (std::size_t i : idx) {
      select += (select.empty() ? "" : ", ") + attrs[i].name;
      q.columns.push_back(i);
    }
  }
  q.sql = "SELECT " + select + " FROM " + t.schema.table();
  if (shape < 0) shape = static_cast<int>(below(g, 7));
  if (shape < 6) {
    q.has_where = true;
    q.where_attr = below(g, attrs.size());
    q.op = ops[static_cast<std::size_t>(shape)];
    const auto type = attrs[q.where_attr].type;
    // Half the time compare against a value that is present.
    if (!t.rows.empty() && below(g, 2) == 0) q.literal = t.rows[below(g, t.rows.size())][q.where_attr];
    else q.literal = random_value(g, type);
    q.sql += " WHERE " + attrs[q.where_attr].name + " " + q.op + " " + sql_literal(q.literal);
  }
  return q;
}

/// Reference result: (index, projected row) pairs in ascending index order.
inline std::vector<std::pair<u64, Row>> reference_select(const PlainTable& t, const RandomQuery& q) {
  auto holds = [&](const ssdb::Value& v) {
    if (!q.has_where) return true;
    int c;
    if (std::holds_alternative<u64>(v)) {
      u64 a = std::get<u64>(v), b = std::get<u64>(q.literal);
      c = (a > b) - (a < b);
    } else {
      // Byte-wise lexicographic order on unsigned bytes.
      const auto& a = std::get<std::string>(v);
      const auto& b = std::get<std::string>(q.literal);
      c = std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                       [](char x, char y) { return (unsigned char)x < (unsigned char)y; })
              ? -1
              : (a == b ? 0 : 1);
    }
    if (q.op == "=") return c == 0;
    if (q.op == "!=") return c != 0;
    if (q.op == "<") return c < 0;
    if (q.op == "<=") return c <= 0;
    if (q.op == ">") return c > 0;
    return c >= 0;
  };
  std::vector<std::pair<u64, Row>> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (!holds(t.rows[i][q.has_where ? q.where_attr : 0])) continue;
    Row r;
    for (std::size_t c : q.columns) r.push_back(t.rows[i][c]);
    out.push_back({i + 1, std::move(r)});
  }
  return out;
}

}  // namespace testsupport
