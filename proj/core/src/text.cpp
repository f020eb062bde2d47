#include "riskdisc/text.hpp"

#include "riskdisc/error.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace riskdisc {

namespace {

void append_utf8(std::string& out, UChar32 cp) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(buf, len, U8_MAX_LENGTH, cp, error);
  if (!error) out.append(buf, static_cast<std::size_t>(len));
}

// Decodes one code point starting at `pos`, advancing it. Ill-formed
// sequences come back as a negative value.
UChar32 next_code_point(std::string_view text, int32_t& pos) {
  UChar32 cp = 0;
  U8_NEXT(reinterpret_cast<const uint8_t*>(text.data()), pos,
          static_cast<int32_t>(text.size()), cp);
  return cp;
}

bool is_word_char(UChar32 cp) { return cp >= 0 && u_isalnum(cp); }

}  // namespace

std::string normalize_text(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");

  const auto ustr = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString composed = nfc->normalize(ustr, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");

  std::string utf8;
  composed.toUTF8String(utf8);

  std::string out;
  out.reserve(utf8.size());
  bool pending_space = false;
  int32_t pos = 0;
  const auto size = static_cast<int32_t>(utf8.size());
  while (pos < size) {
    UChar32 cp = next_code_point(utf8, pos);
    if (cp < 0) cp = 0xFFFD;
    if (u_isUWhiteSpace(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    append_utf8(out, u_tolower(cp));
  }
  return out;
}

std::vector<std::vector<std::string>> split_clauses(std::string_view text) {
  std::vector<std::vector<std::string>> clauses;
  std::vector<std::string> clause;
  std::string word;

  auto end_word = [&] {
    if (!word.empty()) clause.push_back(std::move(word));
    word.clear();
  };
  auto end_clause = [&] {
    end_word();
    if (!clause.empty()) clauses.push_back(std::move(clause));
    clause.clear();
  };

  const auto size = static_cast<int32_t>(text.size());
  int32_t pos = 0;
  UChar32 prev = -1;
  while (pos < size) {
    const int32_t start = pos;
    const UChar32 cp = next_code_point(text, pos);
    if (is_word_char(cp)) {
      word.append(text.substr(static_cast<std::size_t>(start),
                              static_cast<std::size_t>(pos - start)));
    } else if (cp == '-' && is_word_char(prev) && pos < size) {
      int32_t peek = pos;
      if (is_word_char(next_code_point(text, peek))) {
        word.push_back('-');
      } else {
        end_clause();
      }
    } else if (cp >= 0 && u_isUWhiteSpace(cp)) {
      end_word();
    } else {
      end_clause();
    }
    prev = cp;
  }
  end_clause();
  return clauses;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> words;
  for (auto& clause : split_clauses(text)) {
    for (auto& w : clause) words.push_back(std::move(w));
  }
  return words;
}

std::size_t utf8_length(std::string_view text) {
  std::size_t n = 0;
  int32_t pos = 0;
  const auto size = static_cast<int32_t>(text.size());
  while (pos < size) {
    next_code_point(text, pos);
    ++n;
  }
  return n;
}

}  // namespace riskdisc
