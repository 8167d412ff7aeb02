// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "ja4ml/bytes.hpp"
#include "ja4ml/csv.hpp"
#include "ja4ml/error.hpp"
#include "ja4ml/prng.hpp"

#include <sstream>

using namespace ja4ml;

TEST(Hex, RoundTripIgnoresWhitespaceAndCase) {
  EXPECT_EQ(from_hex("0A ff\n10"), (Bytes{0x0a, 0xff, 0x10}));
  EXPECT_EQ(to_hex(Bytes{0x0a, 0xff, 0x10}), "0aff10");
  EXPECT_EQ(hex16(0x1301), "1301");
  EXPECT_EQ(hex16(0x2f), "002f");
}

TEST(Hex, RejectsOddLengthAndBadCharacters) {
  EXPECT_THROW(from_hex("abc"), ParseError);
  EXPECT_THROW(from_hex("zz"), ParseError);
}

TEST(Sha256, MatchesFipsVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(ByteReader, ReportsAbsoluteOffsets) {
  const Bytes b = {0x00, 0x01, 0x02};
  ByteReader r(b, 100);
  EXPECT_EQ(r.u16("a"), 1);
  try {
    r.u16("field_x");
    FAIL() << "expected ParseError";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.field(), "field_x");
    EXPECT_EQ(e.offset(), 102u);
  }
}

TEST(ByteReader, Vectors) {
  const Bytes b = {0x02, 0xaa, 0xbb, 0x00, 0x01, 0xcc};
  ByteReader r(b);
  auto v8 = r.vec8("v8");
  EXPECT_EQ(v8.remaining(), 2u);
  auto v16 = r.vec16("v16");
  EXPECT_EQ(v16.u8("x"), 0xcc);
  EXPECT_TRUE(r.empty());
  const Bytes short_vec = {0x05, 0x01};
  ByteReader bad(short_vec);
  EXPECT_THROW(bad.vec8("short"), ParseError);
}

// Reference values from an independent Python SplitMix64. The seed-0 output
// 0xe220a8397b1dcdaf is the widely published first value of the generator.
TEST(SplitMix64, MatchesReferenceSequence) {
  SplitMix64 zero(0);
  EXPECT_EQ(zero.next(), 16294208416658607535ULL);
  EXPECT_EQ(zero.next(), 7960286522194355700ULL);
  SplitMix64 r(42);
  EXPECT_EQ(r.next(), 13679457532755275413ULL);
  EXPECT_EQ(r.next(), 2949826092126892291ULL);
  EXPECT_EQ(r.next(), 5139283748462763858ULL);
}

TEST(SplitMix64, BoundedDrawsStayInRange) {
  SplitMix64 r(9);
  for (int i = 0; i < 10000; ++i) {
    EXPECT_LT(r.below(7), 7u);
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(SeededPermutation, MatchesReference) {
  EXPECT_EQ(seeded_permutation(10, 42), (std::vector<std::uint32_t>{0, 9, 5, 8, 6, 4, 7, 2, 1, 3}));
  EXPECT_TRUE(seeded_permutation(0, 1).empty());
  EXPECT_EQ(seeded_permutation(1, 1), std::vector<std::uint32_t>{0});
}

TEST(Csv, EscapesAndParsesQuotedFields) {
  const std::vector<std::string> fields = {"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
  std::istringstream in(csv::join(fields) + "\n" + "a,b\r\n");
  std::vector<std::string> got;
  ASSERT_TRUE(csv::read_record(in, got));
  EXPECT_EQ(got, fields);
  ASSERT_TRUE(csv::read_record(in, got));
  EXPECT_EQ(got, (std::vector<std::string>{"a", "b"}));
  EXPECT_FALSE(csv::read_record(in, got));
}

TEST(Csv, UnterminatedQuoteIsAnError) {
  std::istringstream in("\"open,field\n");
  std::vector<std::string> got;
  EXPECT_THROW(csv::read_record(in, got), DataError);
}
