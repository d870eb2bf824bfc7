#pragma once

// Typed attribute values <-> field-element vectors, and the table schema model.
//
//   INTEGER v  ->  [v]
//   TEXT s     ->  [byte_len, c_1, ..., c_k],  k = ceil(byte_len / 7)
//
// Each chunk packs up to seven bytes big-endian; the last chunk holds only
// the remaining bytes. Every chunk is < 2^56 < p.

#include <algorithm>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ssdb/error.hpp"
#include "ssdb/field.hpp"

namespace ssdb {

enum class AttrType { Integer, Text };

inline std::string_view type_name(AttrType type) {
  return type == AttrType::Integer ? "INTEGER" : "TEXT";
}

inline AttrType parse_type(std::string_view name) {
  if (name == "INTEGER") return AttrType::Integer;
  if (name == "TEXT") return AttrType::Text;
  throw Error(ErrorCode::Usage, "unknown attribute type '" + std::string(name) + "'");
}

using Value = std::variant<u64, std::string>;

inline AttrType type_of(const Value& v) {
  return std::holds_alternative<u64>(v) ? AttrType::Integer : AttrType::Text;
}

inline std::string to_display(const Value& v) {
  if (const auto* i = std::get_if<u64>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

inline constexpr std::size_t kMaxTextBytes = std::size_t{1} << 20;
inline constexpr std::size_t kChunkBytes = 7;

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  if (!alpha(s.front())) return false;
  for (char c : s) {
    if (!alpha(c) && !(c >= '0' && c <= '9')) return false;
  }
  return true;
}

/// Strict UTF-8 check: rejects overlongs, surrogates and code points > U+10FFFF.
inline bool is_valid_utf8(std::string_view s) {
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  const auto* end = p + s.size();
  while (p < end) {
    unsigned char c = *p;
    if (c < 0x80) {
      ++p;
      continue;
    }
    int len;
    char32_t cp;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (end - p < len) return false;
    for (int i = 1; i < len; ++i) {
      if ((p[i] & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (p[i] & 0x3F);
    }
    static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    p += len;
  }
  return true;
}

struct Attribute {
  std::string name;
  AttrType type;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

/// Named, typed attributes. The plaintext row index is implicit and never listed.
class TableSchema {
 public:
  TableSchema() = default;
  TableSchema(std::string table, std::vector<Attribute> attributes)
      : table_(std::move(table)), attributes_(std::move(attributes)) {
    validate();
  }

  const std::string& table() const noexcept { return table_; }
  const std::vector<Attribute>& attributes() const noexcept { return attributes_; }

  const Attribute* find(std::string_view name) const {
    for (const auto& a : attributes_) {
      if (a.name == name) return &a;
    }
    return nullptr;
  }

  const Attribute& at(std::string_view name) const {
    const Attribute* a = find(name);
    ensure(a != nullptr, ErrorCode::NoSuchAttr,
           "table '" + table_ + "' has no attribute '" + std::string(name) + "'");
    return *a;
  }

  nlohmann::json to_json() const {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : attributes_) {
      attrs.push_back({{"name", a.name}, {"type", std::string(type_name(a.type))}});
    }
    return {{"table", table_}, {"attributes", std::move(attrs)}};
  }

  static TableSchema from_json(const nlohmann::json& j) {
    try {
      std::vector<Attribute> attrs;
      for (const auto& a : j.at("attributes")) {
        attrs.push_back({a.at("name").get<std::string>(), parse_type(a.at("type").get<std::string>())});
      }
      return TableSchema(j.at("table").get<std::string>(), std::move(attrs));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Malformed, std::string("bad schema: ") + e.what());
    }
  }

  friend bool operator==(const TableSchema&, const TableSchema&) = default;

 private:
  void validate() const {
    ensure(is_identifier(table_), ErrorCode::Usage, "invalid table name '" + table_ + "'");
    ensure(!attributes_.empty(), ErrorCode::Usage, "table '" + table_ + "' has no attributes");
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
      ensure(is_identifier(attributes_[i].name), ErrorCode::Usage,
             "invalid attribute name '" + attributes_[i].name + "'");
      for (std::size_t j = 0; j < i; ++j) {
        ensure(attributes_[i].name != attributes_[j].name, ErrorCode::Usage,
               "duplicate attribute '" + attributes_[i].name + "'");
      }
    }
  }

  std::string table_;
  std::vector<Attribute> attributes_;
};

inline std::size_t encoded_length(std::size_t text_bytes) {
  return 1 + (text_bytes + kChunkBytes - 1) / kChunkBytes;
}

/// The "bytecode" of a value.
inline std::vector<FieldElement> encode_value(AttrType type, const Value& value,
                                              const Field& field = {}) {
  ensure(type_of(value) == type, ErrorCode::TypeMismatch,
         "value is not of type " + std::string(type_name(type)));
  if (type == AttrType::Integer) return {field.element(std::get<u64>(value))};

  const auto& s = std::get<std::string>(value);
  ensure(s.size() <= kMaxTextBytes, ErrorCode::ValueRange,
         "TEXT value of " + std::to_string(s.size()) + " bytes exceeds 2^20");
  ensure(is_valid_utf8(s), ErrorCode::ValueRange, "TEXT value is not valid UTF-8");
  std::vector<FieldElement> out;
  out.reserve(encoded_length(s.size()));
  out.push_back(field.element(s.size()));
  for (std::size_t off = 0; off < s.size(); off += kChunkBytes) {
    u64 chunk = 0;
    const std::size_t end = std::min(off + kChunkBytes, s.size());
    for (std::size_t i = off; i < end; ++i) chunk = (chunk << 8) | static_cast<unsigned char>(s[i]);
    out.push_back(field.element(chunk));
  }
  return out;
}

inline Value decode_value(AttrType type, std::span<const FieldElement> enc) {
  ensure(!enc.empty(), ErrorCode::DataCorruption, "empty encoding");
  if (type == AttrType::Integer) {
    ensure(enc.size() == 1, ErrorCode::DataCorruption,
           "INTEGER encoding has " + std::to_string(enc.size()) + " elements");
    return enc[0].value();
  }

  const u64 len = enc[0].value();
  ensure(len <= kMaxTextBytes && enc.size() == encoded_length(len), ErrorCode::DataCorruption,
         "TEXT length prefix " + std::to_string(len) + " disagrees with " +
             std::to_string(enc.size()) + " elements");
  std::string s;
  s.reserve(len);
  for (std::size_t k = 1; k < enc.size(); ++k) {
    const std::size_t nbytes = std::min<std::size_t>(kChunkBytes, len - (k - 1) * kChunkBytes);
    const u64 chunk = enc[k].value();
    ensure(chunk >> (8 * nbytes) == 0, ErrorCode::DataCorruption,
           "chunk " + std::to_string(k) + " exceeds its " + std::to_string(nbytes) + "-byte capacity");
    for (std::size_t i = nbytes; i-- > 0;) s.push_back(static_cast<char>((chunk >> (8 * i)) & 0xFF));
  }
  ensure(is_valid_utf8(s), ErrorCode::DataCorruption, "decoded TEXT is not valid UTF-8");
  return s;
}

}  // namespace ssdb
