#include <gtest/gtest.h>

#include <random>

#include "clinagent/text.hpp"

using namespace clinagent;

TEST(NormalizeName, CaseFoldAndPunctuation) {
  EXPECT_EQ(normalize_name("Aggrenox Capsule"), "aggrenox capsule");
  EXPECT_EQ(normalize_name("  ASPIRIN/ Dipyridamole "), "aspirin dipyridamole");
  EXPECT_EQ(normalize_name("a\t\n b"), "a b");
  EXPECT_EQ(normalize_name(""), "");
  EXPECT_EQ(normalize_name("---"), "");
}

// Expected strings produced with Python's unicodedata (NFC) and str.lower().
TEST(NormalizeName, UnicodeAgreesWithReference) {
  EXPECT_EQ(normalize_name("c\xC3\xA9r\xC3\xA9" "bro-vascular"), "c\xC3\xA9r\xC3\xA9" "bro vascular");
  // Decomposed e + combining acute composes to U+00E9.
  EXPECT_EQ(normalize_name("Ce\xCC\x81r\xC3\xA9" "bro-VASCULAR"), "c\xC3\xA9r\xC3\xA9" "bro vascular");
  // Greek final sigma.
  EXPECT_EQ(normalize_name("\xCE\xA3\xCE\x8A\xCE\xA3\xCE\xA5\xCE\xA6\xCE\x9F\xCE\xA3"),
            "\xCF\x83\xCE\xAF\xCF\x83\xCF\x85\xCF\x86\xCE\xBF\xCF\x82");
  // Non-breaking space and em-dash punctuation become separators.
  EXPECT_EQ(normalize_name("beta\xC2\xA0" "blocker\xE2\x80\x94" "x"), "beta blocker x");
}

namespace {

std::string encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

std::string random_text(std::mt19937& rng) {
  // Mix of ASCII, Latin-1, combining marks, Greek, Hangul jamo, dashes and
  // astral characters, the areas where composition and case mapping interact.
  static const std::vector<std::pair<char32_t, char32_t>> ranges{
      {0x20, 0x7E}, {0xC0, 0x17F}, {0x300, 0x36F}, {0x370, 0x3FF}, {0x1100, 0x11FF},
      {0x2010, 0x2027}, {0x1E00, 0x1EFF}, {0x1F600, 0x1F64F}, {0x130, 0x131}};
  std::uniform_int_distribution<int> len(0, 24);
  std::uniform_int_distribution<std::size_t> pick(0, ranges.size() - 1);
  std::string s;
  for (int i = len(rng); i > 0; --i) {
    const auto [lo, hi] = ranges[pick(rng)];
    s += encode(std::uniform_int_distribution<char32_t>(lo, hi)(rng));
  }
  return s;
}

}  // namespace

TEST(NormalizeName, IdempotentOnRandomUnicode) {
  std::mt19937 rng(7);
  for (int i = 0; i < 3000; ++i) {
    const auto s = random_text(rng);
    const auto once = normalize_name(s);
    ASSERT_EQ(normalize_name(once), once) << "input #" << i;
    ASSERT_EQ(once.find("  "), std::string::npos);
    if (!once.empty()) {
      ASSERT_NE(once.front(), ' ');
      ASSERT_NE(once.back(), ' ');
    }
  }
}

TEST(Levenshtein, CountsCodePoints) {
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("abc", "abc"), 0u);
  // One substituted accented letter is one edit even though it is two bytes.
  EXPECT_EQ(levenshtein("cafe", "caf\xC3\xA9"), 1u);
  EXPECT_EQ(code_point_length("caf\xC3\xA9"), 4u);
}

TEST(Hashing, KnownVectors) {
  // Reference values from the published FNV-1a and SHA-256 test vectors.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("aspirin"), 0xbfce0f54ea896207ULL);
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(FormatRate, TrimsTrailingZeros) {
  EXPECT_EQ(format_rate(1.0), "1.0");
  EXPECT_EQ(format_rate(0.0), "0.0");
  EXPECT_EQ(format_rate(0.35970001), "0.3597");
  EXPECT_EQ(format_rate(0.25), "0.25");
  EXPECT_EQ(format_rate(2.0 / 3.0), "0.6667");
}

TEST(Split, KeepsEmptyFields) {
  EXPECT_EQ(split("a;;b", ';'), (std::vector<std::string>{"a", "", "b"}));
  EXPECT_EQ(trim("  x y \t"), "x y");
  EXPECT_EQ(tokenize("Hello, World!"), (std::vector<std::string>{"hello", "world"}));
}
