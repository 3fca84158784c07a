#include "clinagent/text.hpp"

#include <openssl/evp.h>
#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace clinagent {

namespace {

std::vector<UChar32> decode(std::string_view s) {
  std::vector<UChar32> out;
  out.reserve(s.size());
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  int32_t i = 0;
  const auto len = static_cast<int32_t>(s.size());
  while (i < len) {
    UChar32 c;
    U8_NEXT(p, i, len, c);
    out.push_back(c < 0 ? 0xFFFD : c);
  }
  return out;
}

bool is_separator(UChar32 c) {
  if (u_isUWhiteSpace(c)) return true;
  const auto mask = U_GET_GC_MASK(c);
  return (mask & U_GC_P_MASK) != 0 || (mask & U_GC_CC_MASK) != 0;
}

std::string normalize_once(std::string_view name) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");

  icu::UnicodeString text = icu::UnicodeString::fromUTF8(
      icu::StringPiece(name.data(), static_cast<int32_t>(name.size())));
  text = nfc->normalize(text, status);
  text.toLower(icu::Locale::getRoot());
  text = nfc->normalize(text, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");

  icu::UnicodeString cleaned;
  bool pending_space = false;
  for (int32_t i = 0; i < text.length();) {
    const UChar32 c = text.char32At(i);
    i += U16_LENGTH(c);
    if (is_separator(c)) {
      pending_space = !cleaned.isEmpty();
      continue;
    }
    if (pending_space) {
      cleaned.append(static_cast<UChar>(u' '));
      pending_space = false;
    }
    cleaned.append(c);
  }
  cleaned = nfc->normalize(cleaned, status);
  std::string out;
  cleaned.toUTF8String(out);
  return out;
}

}  // namespace

std::string normalize_name(std::string_view name) {
  // Lowercasing and punctuation removal can expose new compositions; iterate
  // to the fixpoint so the function is idempotent for arbitrary input.
  std::string current = normalize_once(name);
  for (int i = 0; i < 4; ++i) {
    std::string next = normalize_once(current);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

std::vector<std::string> tokenize(std::string_view text) {
  return split(normalize_name(text), ' ');
}

std::size_t code_point_length(std::string_view utf8) { return decode(utf8).size(); }

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto s = decode(a);
  const auto t = decode(b);
  if (s.empty()) return t.size();
  if (t.empty()) return s.size();
  std::vector<std::size_t> prev(t.size() + 1), cur(t.size() + 1);
  for (std::size_t j = 0; j <= t.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[t.size()];
}

std::string trim(std::string_view s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int md_len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &md_len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(md_len * 2);
  for (unsigned int i = 0; i < md_len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

std::string format_rate(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  std::string s(buf);
  while (s.size() > 3 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace clinagent
