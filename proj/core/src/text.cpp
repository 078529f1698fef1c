#include "socratic/text.hpp"

#include <cstdint>

namespace socratic {

namespace {

enum class CharClass { kWord, kApostrophe, kHyphen, kSeparator };

struct CodePoint {
  char32_t value;
  CharClass cls;
};

// Decodes one UTF-8 sequence starting at `i`; advances `i`. Returns
// U+FFFD-as-separator (0xFFFFFFFF) for malformed input.
char32_t decode(std::string_view s, std::size_t& i) {
  constexpr char32_t kBad = 0xFFFFFFFF;
  const auto b0 = static_cast<unsigned char>(s[i++]);
  if (b0 < 0x80) return b0;
  int extra = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    return kBad;
  }
  for (int k = 0; k < extra; ++k) {
    if (i >= s.size()) return kBad;
    const auto b = static_cast<unsigned char>(s[i]);
    if ((b & 0xC0) != 0x80) return kBad;
    cp = (cp << 6) | (b & 0x3F);
    ++i;
  }
  return cp;
}

bool in(char32_t c, char32_t lo, char32_t hi) { return c >= lo && c <= hi; }

CharClass classify(char32_t c) {
  if (c == U'\'' || c == 0x2019 || c == 0x02BC) return CharClass::kApostrophe;
  if (c == U'-' || c == 0x2010 || c == 0x2011) return CharClass::kHyphen;
  if (c < 0x80) {
    const bool alnum = in(c, U'a', U'z') || in(c, U'A', U'Z') || in(c, U'0', U'9');
    return alnum ? CharClass::kWord : CharClass::kSeparator;
  }
  if (c == 0xFFFFFFFF) return CharClass::kSeparator;
  // Punctuation, symbol and space blocks; everything else outside ASCII is
  // treated as a letter.
  if (in(c, 0x0080, 0x00BF) || c == 0x00D7 || c == 0x00F7 || in(c, 0x2000, 0x206F) ||
      in(c, 0x20A0, 0x20CF) || in(c, 0x2190, 0x2BFF) || in(c, 0x2E00, 0x2E7F) || in(c, 0x3000, 0x303F) ||
      in(c, 0xE000, 0xF8FF) || in(c, 0xFE30, 0xFE4F) || c == 0xFEFF || in(c, 0xFF00, 0xFF0F) ||
      in(c, 0xFF1A, 0xFF20) || in(c, 0xFF3B, 0xFF40) || in(c, 0xFF5B, 0xFF65) || in(c, 0x1F000, 0x1FAFF))
    return CharClass::kSeparator;
  return CharClass::kWord;
}

char32_t to_lower(char32_t c) {
  if (in(c, U'A', U'Z')) return c + 32;
  if (c < 0x80) return c;
  if (in(c, 0x00C0, 0x00DE) && c != 0x00D7) return c + 0x20;
  if (in(c, 0x0100, 0x0137) || in(c, 0x014A, 0x0177)) return (c % 2 == 0) ? c + 1 : c;
  if (in(c, 0x0139, 0x0148)) return (c % 2 == 1) ? c + 1 : c;
  if (c == 0x0178) return 0x00FF;
  if (in(c, 0x0179, 0x017E)) return (c % 2 == 1) ? c + 1 : c;
  if (in(c, 0x0391, 0x03A9) && c != 0x03A2) return c + 0x20;
  if (in(c, 0x0410, 0x042F)) return c + 0x20;
  if (in(c, 0x0400, 0x040F)) return c + 0x50;
  return c;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out += static_cast<char>(c);
  } else if (c < 0x800) {
    out += static_cast<char>(0xC0 | (c >> 6));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else if (c < 0x10000) {
    out += static_cast<char>(0xE0 | (c >> 12));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (c >> 18));
    out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  }
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  std::vector<CodePoint> cps;
  cps.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const char32_t c = decode(text, i);
    cps.push_back({c, classify(c)});
  }

  TokenSequence tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    switch (cps[i].cls) {
      case CharClass::kWord:
        append_utf8(current, to_lower(cps[i].value));
        break;
      case CharClass::kApostrophe:
      case CharClass::kHyphen: {
        const bool joins = !current.empty() && i + 1 < cps.size() && cps[i + 1].cls == CharClass::kWord;
        if (joins) {
          current += cps[i].cls == CharClass::kApostrophe ? '\'' : '-';
        } else {
          flush();
        }
        break;
      }
      case CharClass::kSeparator:
        flush();
        break;
    }
  }
  flush();
  return tokens;
}

}  // namespace socratic
