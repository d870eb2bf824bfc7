#pragma once

#include <sys/random.h>

#include <bit>
#include <cerrno>
#include <cstdint>
#include <deque>
#include <random>

#include "ssdb/error.hpp"
#include "ssdb/field.hpp"

namespace ssdb {

/// Source of uniform 64-bit words. Field sampling is layered on top so every
/// implementation draws field elements the same way.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual u64 next_u64() = 0;

  /// Uniform element of `field` by masked rejection sampling.
  virtual FieldElement uniform(const Field& field) {
    const u64 p = field.modulus();
    const u64 mask = p == 0 ? ~u64{0} : (~u64{0} >> std::countl_zero(p));
    for (;;) {
      u64 v = next_u64() & mask;
      if (v < p) return FieldElement(v, p);
    }
  }
};

/// Kernel CSPRNG (getrandom(2)).
class OsRandom final : public RandomSource {
 public:
  u64 next_u64() override {
    u64 v = 0;
    auto* out = reinterpret_cast<unsigned char*>(&v);
    std::size_t got = 0;
    while (got < sizeof(v)) {
      ssize_t r = ::getrandom(out + got, sizeof(v) - got, 0);
      if (r < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::Internal, "getrandom failed");
      }
      got += static_cast<std::size_t>(r);
    }
    return v;
  }
};

/// Deterministic source for tests; mt19937_64 output is fixed by the standard.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(u64 seed) : engine_(seed) {}
  u64 next_u64() override { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Replays a fixed script of field values, then falls back to zero.
/// Used to force specific polynomial coefficients.
class ScriptedRandom final : public RandomSource {
 public:
  explicit ScriptedRandom(std::initializer_list<u64> values) : script_(values) {}

  u64 next_u64() override {
    if (script_.empty()) return 0;
    u64 v = script_.front();
    script_.pop_front();
    return v;
  }

  FieldElement uniform(const Field& field) override {
    return FieldElement(next_u64(), field.modulus());
  }

 private:
  std::deque<u64> script_;
};

}  // namespace ssdb
