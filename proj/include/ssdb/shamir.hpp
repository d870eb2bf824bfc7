#pragma once

// (t, n) threshold sharing: a secret becomes the constant term of a random
// degree t-1 polynomial, server k receives the evaluation at x_k, and any t
// evaluations recover the constant term by Lagrange interpolation at zero.

#include <span>
#include <string>
#include <vector>

#include "ssdb/error.hpp"
#include "ssdb/field.hpp"
#include "ssdb/random.hpp"

namespace ssdb::shamir {

struct Share {
  FieldElement x;
  FieldElement y;

  friend bool operator==(const Share&, const Share&) = default;
};

class SchemeParams {
 public:
  /// x-coordinates default to 1..n.
  SchemeParams(std::size_t n, std::size_t t, Field field = {})
      : n_(n), t_(t), field_(field) {
    for (std::size_t i = 1; i <= n; ++i) x_coords_.push_back(FieldElement(i, field.modulus()));
    validate();
  }

  SchemeParams(std::size_t t, std::vector<FieldElement> x_coords, Field field)
      : n_(x_coords.size()), t_(t), field_(field), x_coords_(std::move(x_coords)) {
    validate();
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t t() const noexcept { return t_; }
  const Field& field() const noexcept { return field_; }
  std::span<const FieldElement> x_coords() const noexcept { return x_coords_; }

 private:
  void validate() const {
    ensure(t_ >= 1 && t_ <= n_, ErrorCode::Usage,
           "threshold must satisfy 1 <= t <= n (t=" + std::to_string(t_) +
               ", n=" + std::to_string(n_) + ")");
    ensure(n_ < field_.modulus(), ErrorCode::Usage, "n must be below p");
    for (std::size_t i = 0; i < x_coords_.size(); ++i) {
      ensure(x_coords_[i].modulus() == field_.modulus(), ErrorCode::Usage,
             "x-coordinate from a different field");
      ensure(!x_coords_[i].is_zero(), ErrorCode::Usage, "x-coordinate 0 is reserved for the secret");
      for (std::size_t j = 0; j < i; ++j) {
        ensure(x_coords_[i] != x_coords_[j], ErrorCode::Usage, "duplicate x-coordinate");
      }
    }
  }

  std::size_t n_;
  std::size_t t_;
  Field field_;
  std::vector<FieldElement> x_coords_;
};

namespace detail {

/// a_0 = secret, a_1..a_{t-1} drawn from rng.
class SecretPolynomial {
 public:
  SecretPolynomial(FieldElement secret, std::size_t t, const Field& field, RandomSource& rng) {
    coeffs_.reserve(t);
    coeffs_.push_back(secret);
    for (std::size_t i = 1; i < t; ++i) coeffs_.push_back(rng.uniform(field));
  }

  // Horner.
  FieldElement operator()(FieldElement x) const {
    FieldElement acc = coeffs_.back();
    for (auto it = coeffs_.rbegin() + 1; it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

 private:
  std::vector<FieldElement> coeffs_;
};

}  // namespace detail

inline std::vector<Share> split(FieldElement secret, const SchemeParams& params, RandomSource& rng) {
  ensure(secret.modulus() == params.field().modulus(), ErrorCode::Usage,
         "secret is not an element of the scheme's field");
  detail::SecretPolynomial f(secret, params.t(), params.field(), rng);
  std::vector<Share> shares;
  shares.reserve(params.n());
  for (FieldElement x : params.x_coords()) shares.push_back({x, f(x)});
  return shares;
}

/// Lagrange basis at zero: w_i = prod_{j != i} x_j / (x_j - x_i).
inline std::vector<FieldElement> lagrange_weights(std::span<const FieldElement> xs) {
  std::vector<FieldElement> weights;
  weights.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ensure(!xs[i].is_zero(), ErrorCode::Usage, "x-coordinate 0 is reserved for the secret");
    FieldElement num(1, xs[i].modulus());
    FieldElement den(1, xs[i].modulus());
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j == i) continue;
      ensure(xs[j] != xs[i], ErrorCode::Usage, "duplicate x-coordinate " + xs[i].to_string());
      num *= xs[j];
      den *= xs[j] - xs[i];
    }
    weights.push_back(num / den);
  }
  return weights;
}

/// Interpolates f(0) from the first t shares. Extra shares are ignored, so
/// inconsistent surplus shares go unnoticed.
inline FieldElement reconstruct(std::span<const Share> shares, const SchemeParams& params) {
  const std::size_t t = params.t();
  ensure(shares.size() >= t, ErrorCode::InsufficientShares,
         "need " + std::to_string(t) + " shares, got " + std::to_string(shares.size()));
  std::vector<FieldElement> xs;
  xs.reserve(t);
  for (std::size_t i = 0; i < t; ++i) {
    ensure(shares[i].x.modulus() == params.field().modulus() &&
               shares[i].y.modulus() == params.field().modulus(),
           ErrorCode::Usage, "share from a different field");
    xs.push_back(shares[i].x);
  }
  auto weights = lagrange_weights(xs);
  FieldElement acc = params.field().zero();
  for (std::size_t i = 0; i < t; ++i) acc += weights[i] * shares[i].y;
  return acc;
}

}  // namespace ssdb::shamir
