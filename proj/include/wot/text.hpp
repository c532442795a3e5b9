#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wot {

// Lowercases ASCII letters and splits on anything that is not a letter,
// a digit, or a non-ASCII UTF-8 byte. Tokens of a single character and
// tokens made only of digits are dropped.
std::vector<std::string> tokenize(std::string_view text);

// Built-in English stopword list. Only consulted when choosing candidate
// class-words; document statistics keep every token.
bool is_stopword(std::string_view word);
const std::vector<std::string>& stopwords();

}  // namespace wot
