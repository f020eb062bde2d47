#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace riskdisc {

/// Unicode NFC, simple per-code-point lowercase, whitespace runs collapsed to
/// one ASCII space, leading/trailing whitespace removed. Invalid UTF-8 is
/// replaced with U+FFFD.
std::string normalize_text(std::string_view text);

/// Splits text into clauses: runs of words not separated by punctuation.
/// Word characters are Unicode letters and digits; a '-' between two word
/// characters stays inside the word. Whitespace separates words within a
/// clause; any other character ends the clause.
std::vector<std::vector<std::string>> split_clauses(std::string_view text);

/// All words of `text` in order (split_clauses flattened).
std::vector<std::string> tokenize(std::string_view text);

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

}  // namespace riskdisc
