#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hiertext/utf8.hpp"

namespace hiertext::preprocess {

struct StopwordList {
  std::unordered_set<std::string> entries;
};

struct Options {
  const StopwordList* stopwords = nullptr;
  bool remove_stopwords = true;
};

namespace detail {

// Whitelist: Arabic-script letters (incl. Urdu-specific ranges) survive,
// everything else is dropped. Arabic-block digits and punctuation are
// excluded from the whitelist so they are removed like their ASCII
// counterparts.
inline bool is_arabic_digit(char32_t c) {
  return (c >= 0x0660 && c <= 0x0669) || (c >= 0x06F0 && c <= 0x06F9);
}

inline bool is_arabic_punct(char32_t c) {
  switch (c) {
    case 0x060C:  // comma
    case 0x060D:
    case 0x061B:  // semicolon
    case 0x061F:  // question mark
    case 0x066A:  // percent
    case 0x066B:
    case 0x066C:
    case 0x066D:
    case 0x06D4:  // full stop
      return true;
    default:
      return false;
  }
}

inline bool keep_codepoint(char32_t c) {
  const bool arabic_block = (c >= 0x0600 && c <= 0x06FF) ||
                            (c >= 0x0750 && c <= 0x077F) ||
                            (c >= 0x08A0 && c <= 0x08FF) ||
                            (c >= 0xFB50 && c <= 0xFDFF) ||
                            (c >= 0xFE70 && c <= 0xFEFF);
  return arabic_block && !is_arabic_digit(c) && !is_arabic_punct(c);
}

inline bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
         c == U'\v' || c == 0x00A0 || c == 0x2028 || c == 0x2029;
}

}  // namespace detail

// Keeps Arabic-script letters, maps every other codepoint (Latin, digits,
// punctuation, URLs, zero-width characters) to a separator, then collapses
// separator runs to single spaces and trims.
inline std::string clean(std::string_view text) {
  const auto cps = utf8::decode(text);
  std::string out;
  bool pending_space = false;
  for (char32_t c : cps) {
    if (detail::keep_codepoint(c)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      utf8::append(out, c);
    } else {
      pending_space = true;
    }
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  const auto cps = utf8::decode(text);
  std::string cur;
  for (char32_t c : cps) {
    if (detail::is_space(c)) {
      if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
    } else {
      utf8::append(cur, c);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

inline std::vector<std::string> remove_stopwords(std::vector<std::string> tokens,
                                                 const StopwordList& stoplist) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (auto& t : tokens) {
    if (!stoplist.entries.count(t)) out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<std::string> preprocess_text(std::string_view text,
                                                const Options& opts = {}) {
  auto tokens = tokenize(clean(text));
  if (opts.remove_stopwords && opts.stopwords != nullptr) {
    tokens = remove_stopwords(std::move(tokens), *opts.stopwords);
  }
  return tokens;
}

// One token per line, UTF-8. Blank lines ignored.
inline StopwordList load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stopword file: " + path);
  StopwordList list;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) list.entries.insert(line);
  }
  return list;
}

}  // namespace hiertext::preprocess
