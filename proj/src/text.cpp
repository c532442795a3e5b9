#include "wot/text.hpp"

#include <algorithm>
#include <unordered_set>

namespace wot {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

std::size_t codepoint_count(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

bool all_digits(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

const std::unordered_set<std::string_view>& stopword_set() {
  static const std::unordered_set<std::string_view> set = [] {
    std::unordered_set<std::string_view> s;
    for (const auto& w : stopwords()) s.insert(w);
    return s;
  }();
  return set;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (codepoint_count(current) > 1 && !all_digits(current)) tokens.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      flush();
    }
  }
  if (!current.empty()) flush();
  return tokens;
}

const std::vector<std::string>& stopwords() {
  static const std::vector<std::string> list = {
      "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
      "are", "aren", "as", "at", "be", "because", "been", "before", "being", "below", "between",
      "both", "but", "by", "can", "cannot", "could", "couldn", "did", "didn", "do", "does",
      "doesn", "doing", "don", "down", "during", "each", "else", "etc", "ever", "few", "for",
      "from", "further", "get", "gets", "got", "had", "hadn", "has", "hasn", "have", "haven",
      "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "however",
      "if", "in", "into", "is", "isn", "it", "its", "itself", "just", "let", "ll", "may", "me",
      "might", "more", "most", "must", "mustn", "my", "myself", "no", "nor", "not", "now", "of",
      "off", "on", "once", "one", "only", "or", "other", "ought", "our", "ours", "ourselves",
      "out", "over", "own", "re", "said", "same", "say", "says", "shall", "shan", "she",
      "should", "shouldn", "since", "so", "some", "such", "than", "that", "the", "their",
      "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those",
      "through", "to", "too", "under", "until", "up", "upon", "us", "ve", "very", "was",
      "wasn", "we", "were", "weren", "what", "when", "where", "which", "while", "who", "whom",
      "why", "will", "with", "within", "without", "won", "would", "wouldn", "yet", "you", "your",
      "yours", "yourself", "yourselves"};
  return list;
}

bool is_stopword(std::string_view word) { return stopword_set().count(word) > 0; }

}  // namespace wot
