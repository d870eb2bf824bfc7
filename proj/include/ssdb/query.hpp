#pragma once

// SELECT a, b | * FROM table [WHERE attr op literal]
//
// Keywords are case-insensitive, identifiers are not. String literals use
// single quotes with '' as the escape; integer literals are unsigned decimal.

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssdb/encoding.hpp"
#include "ssdb/error.hpp"

namespace ssdb {

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

inline std::string_view op_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
  }
  return "?";
}

struct Predicate {
  std::string attr;
  CompareOp op = CompareOp::Eq;
  Value literal;

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct Query {
  std::vector<std::string> select_attrs;  // empty when select_all
  bool select_all = false;
  std::string table;
  std::optional<Predicate> predicate;

  /// Select list with `*` expanded against `schema`.
  std::vector<std::string> columns(const TableSchema& schema) const {
    if (!select_all) return select_attrs;
    std::vector<std::string> out;
    for (const auto& a : schema.attributes()) out.push_back(a.name);
    return out;
  }

  /// Checks names and literal type against the schema.
  void validate(const TableSchema& schema) const {
    ensure(schema.table() == table, ErrorCode::NoSuchTable, "schema is for '" + schema.table() + "', not '" + table + "'");
    for (const auto& a : select_attrs) schema.at(a);
    if (predicate) {
      const Attribute& a = schema.at(predicate->attr);
      ensure(type_of(predicate->literal) == a.type, ErrorCode::TypeMismatch,
             "'" + a.name + "' is " + std::string(type_name(a.type)) + " but the literal is " +
                 std::string(type_name(type_of(predicate->literal))));
    }
  }

  friend bool operator==(const Query&, const Query&) = default;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& what)
      : Error(ErrorCode::Syntax, what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

namespace detail {

struct Token {
  enum Kind { Ident, Keyword, String, Integer, Star, Comma, Op, Semicolon, End } kind;
  std::string text;  // keyword upper-cased, string unescaped
  std::size_t pos;
  u64 number = 0;
  CompareOp op = CompareOp::Eq;
};

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

inline std::vector<Token> tokenize(std::string_view q) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < q.size()) {
    const char c = q[i];
    const std::size_t start = i;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (is_ident_start(c)) {
      while (i < q.size() && is_ident_char(q[i])) ++i;
      std::string word(q.substr(start, i - start));
      std::string up = upper(word);
      if (up == "SELECT" || up == "FROM" || up == "WHERE") {
        out.push_back({Token::Keyword, up, start});
      } else {
        out.push_back({Token::Ident, word, start});
      }
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      u128 v = 0;
      while (i < q.size() && std::isdigit(static_cast<unsigned char>(q[i]))) {
        v = v * 10 + static_cast<u64>(q[i] - '0');
        if (v > ~u64{0}) throw SyntaxError(start, "integer literal out of range");
        ++i;
      }
      if (i < q.size() && is_ident_start(q[i])) throw SyntaxError(i, "unexpected character in number");
      Token t{Token::Integer, std::string(q.substr(start, i - start)), start};
      t.number = static_cast<u64>(v);
      out.push_back(t);
    } else if (c == '\'') {
      std::string s;
      ++i;
      for (;;) {
        if (i >= q.size()) throw SyntaxError(start, "unterminated string literal");
        if (q[i] == '\'') {
          if (i + 1 < q.size() && q[i + 1] == '\'') {
            s.push_back('\'');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        s.push_back(q[i++]);
      }
      out.push_back({Token::String, std::move(s), start});
    } else if (c == '*') {
      out.push_back({Token::Star, "*", start});
      ++i;
    } else if (c == ',') {
      out.push_back({Token::Comma, ",", start});
      ++i;
    } else if (c == ';') {
      out.push_back({Token::Semicolon, ";", start});
      ++i;
    } else if (c == '=' || c == '!' || c == '<' || c == '>') {
      while (i < q.size() && (q[i] == '=' || q[i] == '!' || q[i] == '<' || q[i] == '>')) ++i;
      std::string sym(q.substr(start, i - start));
      Token t{Token::Op, sym, start};
      if (sym == "=") t.op = CompareOp::Eq;
      else if (sym == "!=" || sym == "<>") t.op = CompareOp::Ne;
      else if (sym == "<") t.op = CompareOp::Lt;
      else if (sym == "<=") t.op = CompareOp::Le;
      else if (sym == ">") t.op = CompareOp::Gt;
      else if (sym == ">=") t.op = CompareOp::Ge;
      else throw SyntaxError(start, "unknown operator '" + sym + "'");
      out.push_back(t);
    } else {
      throw SyntaxError(start, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Token::End, "", q.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Query parse() {
    Query q;
    keyword("SELECT");
    if (peek().kind == Token::Star) {
      next();
      q.select_all = true;
    } else {
      q.select_attrs.push_back(ident("attribute name or *"));
      while (peek().kind == Token::Comma) {
        next();
        q.select_attrs.push_back(ident("attribute name"));
      }
    }
    keyword("FROM");
    q.table = ident("table name");
    if (peek().kind == Token::Keyword && peek().text == "WHERE") {
      next();
      Predicate p;
      p.attr = ident("attribute name");
      const Token& op = next();
      if (op.kind != Token::Op) throw SyntaxError(op.pos, "expected comparison operator");
      p.op = op.op;
      const Token& lit = next();
      if (lit.kind == Token::String) {
        p.literal = lit.text;
      } else if (lit.kind == Token::Integer) {
        p.literal = lit.number;
      } else {
        throw SyntaxError(lit.pos, "expected string or integer literal");
      }
      q.predicate = std::move(p);
    }
    if (peek().kind == Token::Semicolon) next();
    if (peek().kind != Token::End) throw SyntaxError(peek().pos, "unexpected '" + peek().text + "'");
    return q;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (t.kind != Token::End) ++pos_;
    return t;
  }

  void keyword(const char* kw) {
    const Token& t = next();
    if (t.kind != Token::Keyword || t.text != kw) throw SyntaxError(t.pos, std::string("expected ") + kw);
  }

  std::string ident(const char* what) {
    const Token& t = next();
    if (t.kind != Token::Ident) throw SyntaxError(t.pos, std::string("expected ") + what);
    return t.text;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Query parse_query(std::string_view text) { return detail::Parser(detail::tokenize(text)).parse(); }

/// Integer order for INTEGER, byte-lexicographic order for TEXT.
inline bool compare(const Value& lhs, CompareOp op, const Value& rhs) {
  ensure(lhs.index() == rhs.index(), ErrorCode::TypeMismatch, "comparison between INTEGER and TEXT");
  int c = 0;
  if (const auto* a = std::get_if<u64>(&lhs)) {
    const u64 b = std::get<u64>(rhs);
    c = *a < b ? -1 : (*a > b ? 1 : 0);
  } else {
    c = std::get<std::string>(lhs).compare(std::get<std::string>(rhs));
  }
  switch (op) {
    case CompareOp::Eq: return c == 0;
    case CompareOp::Ne: return c != 0;
    case CompareOp::Lt: return c < 0;
    case CompareOp::Le: return c <= 0;
    case CompareOp::Gt: return c > 0;
    case CompareOp::Ge: return c >= 0;
  }
  return false;
}

/// Ascending indices of rows satisfying `pred`; every index when absent.
inline std::vector<u64> evaluate_predicate(const std::vector<std::pair<u64, Value>>& column,
                                           const std::optional<Predicate>& pred) {
  std::vector<u64> out;
  for (const auto& [index, value] : column) {
    if (!pred || compare(value, pred->op, pred->literal)) out.push_back(index);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ssdb
