#include "ssdb/field.hpp"

#include <gtest/gtest.h>

#include <random>

namespace ssdb {
namespace {

// Test-only oracle: modular product by double-and-add, using nothing but
// additions below 2p, so it shares no code path with operator*.
u64 slow_mulmod(u64 a, u64 b, u64 p) {
  u64 acc = 0;
  a %= p;
  while (b != 0) {
    if (b & 1) {
      acc += a;
      if (acc >= p) acc -= p;
    }
    a += a;
    if (a >= p) a -= p;
    b >>= 1;
  }
  return acc;
}

constexpr u64 kSmall = 17;

FieldElement f17(u64 v) { return FieldElement(v, kSmall); }

TEST(FieldTest, AddWrapsAround) {
  Field f;
  EXPECT_EQ((f.element(kMersenne61 - 1) + f.one()).value(), 0u);
  EXPECT_EQ((f17(9) + f17(12)).value(), 4u);
  for (u64 a = 0; a < kSmall; ++a) EXPECT_EQ(f17(a) + f17(0), f17(a));
}

TEST(FieldTest, MulSmallAndMersenne) {
  EXPECT_EQ((f17(3) * f17(6)).value(), 1u);
  Field f;
  EXPECT_EQ((f.element(2) * f.element(u64{1} << 60)).value(), 1u);
  for (u64 a = 0; a < kSmall; ++a) EXPECT_EQ(f17(a) * f17(1), f17(a));
}

TEST(FieldTest, Inverse) {
  EXPECT_EQ(f17(3).inv().value(), 6u);
  Field f;
  EXPECT_EQ(f.element(2).inv().value(), u64{1} << 60);
  for (u64 a = 1; a < kSmall; ++a) EXPECT_EQ(f17(a).inv().inv(), f17(a));
}

TEST(FieldTest, InverseOfZeroThrows) {
  try {
    f17(0).inv();
    FAIL() << "expected DivisionByZero";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DivisionByZero);
  }
}

TEST(FieldTest, Subtraction) {
  EXPECT_EQ((f17(5) - f17(11)).value(), 11u);
  for (u64 a = 0; a < kSmall; ++a) {
    EXPECT_TRUE((f17(a) - f17(a)).is_zero());
    for (u64 b = 0; b < kSmall; ++b) EXPECT_EQ((f17(a) + f17(b)) - f17(b), f17(a));
  }
  EXPECT_EQ(-f17(0), f17(0));
  EXPECT_EQ(-f17(5), f17(12));
}

TEST(FieldTest, MixedModulusIsUsageError) {
  FieldElement big(5, kMersenne61);
  for (auto op : {0, 1, 2}) {
    try {
      if (op == 0) (void)(f17(5) + big);
      if (op == 1) (void)(f17(5) - big);
      if (op == 2) (void)(f17(5) * big);
      FAIL() << "expected Usage error";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Usage);
    }
  }
}

TEST(FieldTest, AxiomsExhaustiveOverGF17) {
  for (u64 a = 0; a < kSmall; ++a) {
    for (u64 b = 0; b < kSmall; ++b) {
      EXPECT_EQ(f17(a) + f17(b), f17(b) + f17(a));
      EXPECT_EQ(f17(a) * f17(b), f17(b) * f17(a));
      EXPECT_EQ((f17(a) * f17(b)).value(), (a * b) % kSmall);
      for (u64 c = 0; c < kSmall; ++c) {
        EXPECT_EQ((f17(a) + f17(b)) + f17(c), f17(a) + (f17(b) + f17(c)));
        EXPECT_EQ((f17(a) * f17(b)) * f17(c), f17(a) * (f17(b) * f17(c)));
        EXPECT_EQ(f17(a) * (f17(b) + f17(c)), f17(a) * f17(b) + f17(a) * f17(c));
      }
    }
    if (a != 0) {
      EXPECT_EQ(f17(a) * f17(a).inv(), f17(1));
    }
    EXPECT_EQ(f17(a) + (-f17(a)), f17(0));
  }
}

TEST(FieldTest, RandomizedMersenneProperties) {
  std::mt19937_64 gen(2024);
  Field f;
  for (int i = 0; i < 10000; ++i) {
    FieldElement a(gen(), kMersenne61), b(gen(), kMersenne61), c(gen(), kMersenne61);
    ASSERT_LT(a.value(), kMersenne61);
    ASSERT_EQ((a * b).value(), slow_mulmod(a.value(), b.value(), kMersenne61));
    ASSERT_EQ((a * b) * c, a * (b * c));
    if (!a.is_zero()) {
      ASSERT_EQ(a * a.inv(), f.one());
    }
    ASSERT_LT((a + b).value(), kMersenne61);
    ASSERT_LT((a - b).value(), kMersenne61);
  }
}

TEST(FieldTest, GenericPrimeMatchesOracle) {
  const u64 p = (u64{1} << 62) - 57;  // prime
  ASSERT_TRUE(is_prime_u64(p));
  std::mt19937_64 gen(7);
  for (int i = 0; i < 2000; ++i) {
    FieldElement a(gen(), p), b(gen(), p);
    ASSERT_EQ((a * b).value(), slow_mulmod(a.value(), b.value(), p));
    if (!a.is_zero()) {
      ASSERT_EQ((a * a.inv()).value(), 1u);
    }
  }
}

TEST(FieldTest, PrimalityCheck) {
  EXPECT_TRUE(is_prime_u64(17));
  EXPECT_TRUE(is_prime_u64(kMersenne61));
  EXPECT_TRUE(is_prime_u64(0xffffffffffffffc5ull));  // 2^64 - 59
  EXPECT_FALSE(is_prime_u64(1));
  EXPECT_FALSE(is_prime_u64(561));                    // Carmichael
  EXPECT_FALSE(is_prime_u64(3215031751ull));          // strong pseudoprime to bases 2,3,5,7
  EXPECT_FALSE(is_prime_u64((u64{1} << 61) + 1));
  // Trial division agrees below 10^4.
  for (u64 n = 0; n < 10000; ++n) {
    bool trial = n >= 2;
    for (u64 d = 2; d * d <= n; ++d) {
      if (n % d == 0) {
        trial = false;
        break;
      }
    }
    ASSERT_EQ(is_prime_u64(n), trial) << n;
  }
  EXPECT_THROW(Field(15), Error);
  EXPECT_NO_THROW(Field(17));
}

TEST(FieldTest, DecimalParsing) {
  Field f;
  EXPECT_EQ(f.from_decimal("0").value(), 0u);
  EXPECT_EQ(f.from_decimal(std::to_string(kMersenne61 - 1)).value(), kMersenne61 - 1);
  try {
    f.from_decimal(std::to_string(kMersenne61));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ValueRange);
  }
  try {
    f.from_decimal("99999999999999999999999999");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ValueRange);
  }
  for (const char* bad : {"", "-1", "1.0", " 1", "0x10"}) {
    try {
      f.from_decimal(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Malformed) << bad;
    }
  }
  EXPECT_THROW(f.element(kMersenne61), Error);
}

}  // namespace
}  // namespace ssdb
