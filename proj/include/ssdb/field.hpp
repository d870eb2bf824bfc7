#pragma once

// Arithmetic in GF(p) for a 64-bit prime p. The default modulus is the
// Mersenne prime 2^61 - 1, which exceeds 2^56 so seven raw bytes always fit
// in one element.

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

#include "ssdb/error.hpp"

namespace ssdb {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

inline constexpr u64 kMersenne61 = (u64{1} << 61) - 1;

namespace detail {

constexpr u64 mulmod(u64 a, u64 b, u64 m) {
  return static_cast<u64>(static_cast<u128>(a) * b % m);
}

constexpr u64 powmod(u64 base, u64 exp, u64 m) {
  u64 result = 1 % m;
  base %= m;
  while (exp != 0) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

}  // namespace detail

/// Deterministic Miller-Rabin; the first twelve prime bases are exact for
/// every 64-bit input.
constexpr bool is_prime_u64(u64 n) {
  if (n < 2) return false;
  constexpr u64 bases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (u64 b : bases) {
    if (n % b == 0) return n == b;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (u64 a : bases) {
    u64 x = detail::powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = detail::mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// Residue modulo a prime. Always canonical: 0 <= value() < modulus().
class FieldElement {
 public:
  constexpr FieldElement() = default;

  /// `value` is reduced modulo `modulus`.
  constexpr FieldElement(u64 value, u64 modulus)
      : value_(value % modulus), modulus_(modulus) {}

  constexpr u64 value() const noexcept { return value_; }
  constexpr u64 modulus() const noexcept { return modulus_; }
  constexpr bool is_zero() const noexcept { return value_ == 0; }

  friend FieldElement operator+(FieldElement a, FieldElement b) {
    same_field(a, b);
    u64 s = a.value_ + b.value_;  // both < 2^63, no overflow
    if (s >= a.modulus_) s -= a.modulus_;
    return raw(s, a.modulus_);
  }

  friend FieldElement operator-(FieldElement a, FieldElement b) {
    same_field(a, b);
    u64 d = a.value_ >= b.value_ ? a.value_ - b.value_
                                 : a.modulus_ - (b.value_ - a.value_);
    return raw(d, a.modulus_);
  }

  FieldElement operator-() const {
    return raw(value_ == 0 ? 0 : modulus_ - value_, modulus_);
  }

  friend FieldElement operator*(FieldElement a, FieldElement b) {
    same_field(a, b);
    u128 z = static_cast<u128>(a.value_) * b.value_;
    if (a.modulus_ == kMersenne61) {
      u64 lo = static_cast<u64>(z) & kMersenne61;
      u64 hi = static_cast<u64>(z >> 61);
      u64 s = lo + hi;
      if (s >= kMersenne61) s -= kMersenne61;
      return raw(s, a.modulus_);
    }
    return raw(static_cast<u64>(z % a.modulus_), a.modulus_);
  }

  /// Multiplicative inverse via Fermat: a^(p-2).
  FieldElement inv() const {
    ensure(value_ != 0, ErrorCode::DivisionByZero, "inverse of zero");
    return pow(modulus_ - 2);
  }

  FieldElement pow(u64 exp) const {
    FieldElement base = *this;
    FieldElement result = raw(1 % modulus_, modulus_);
    while (exp != 0) {
      if (exp & 1) result = result * base;
      base = base * base;
      exp >>= 1;
    }
    return result;
  }

  friend FieldElement operator/(FieldElement a, FieldElement b) {
    return a * b.inv();
  }

  FieldElement& operator+=(FieldElement o) { return *this = *this + o; }
  FieldElement& operator-=(FieldElement o) { return *this = *this - o; }
  FieldElement& operator*=(FieldElement o) { return *this = *this * o; }

  friend bool operator==(FieldElement a, FieldElement b) {
    return a.value_ == b.value_ && a.modulus_ == b.modulus_;
  }

  std::string to_string() const { return std::to_string(value_); }

  friend std::ostream& operator<<(std::ostream& os, FieldElement e) {
    return os << e.value_;
  }

 private:
  static constexpr FieldElement raw(u64 v, u64 m) {
    FieldElement e;
    e.value_ = v;
    e.modulus_ = m;
    return e;
  }

  static void same_field(FieldElement a, FieldElement b) {
    ensure(a.modulus_ == b.modulus_, ErrorCode::Usage,
           "mixed-modulus field operands (" + std::to_string(a.modulus_) +
               " vs " + std::to_string(b.modulus_) + ")");
  }

  u64 value_ = 0;
  u64 modulus_ = kMersenne61;
};

/// The public field parameters: a prime modulus.
class Field {
 public:
  Field() = default;

  /// Rejects composite or tiny moduli.
  explicit Field(u64 p) : p_(p) {
    ensure(p > 2 && is_prime_u64(p), ErrorCode::Usage,
           "field modulus " + std::to_string(p) + " is not an odd prime");
  }

  static Field mersenne61() { return Field(); }

  u64 modulus() const noexcept { return p_; }

  FieldElement zero() const { return FieldElement(0, p_); }
  FieldElement one() const { return FieldElement(1, p_); }

  /// Embeds an integer; throws ValueRange unless 0 <= v < p.
  FieldElement element(u64 v) const {
    ensure(v < p_, ErrorCode::ValueRange,
           std::to_string(v) + " is outside [0, " + std::to_string(p_) + ")");
    return FieldElement(v, p_);
  }

  /// Parses the canonical decimal form used on the wire and on disk.
  FieldElement from_decimal(std::string_view s) const {
    return FieldElement(parse_decimal(s, p_), p_);
  }

  /// Strict decimal parser: digits only, no sign or whitespace, value < bound.
  static u64 parse_decimal(std::string_view s, u64 bound) {
    ensure(!s.empty(), ErrorCode::Malformed, "empty decimal string");
    u128 acc = 0;
    for (char c : s) {
      ensure(c >= '0' && c <= '9', ErrorCode::Malformed,
             "non-digit in decimal string '" + std::string(s) + "'");
      acc = acc * 10 + static_cast<u64>(c - '0');
      // Any prefix already >= bound means the full value is too.
      ensure(acc < bound, ErrorCode::ValueRange,
             "'" + std::string(s) + "' is not below " + std::to_string(bound));
    }
    return static_cast<u64>(acc);
  }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  u64 p_ = kMersenne61;
};

}  // namespace ssdb
