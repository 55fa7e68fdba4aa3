#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tracediag::detail {

enum class TokKind { Name, Number, String, Op, Newline, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;   // source spelling; for strings the decoded body
  int line = 0;       // 1-based line of the first character
  int end_line = 0;   // line of the last character (differs for triple quotes)
};

// Tokenizes a Python-subset script. Comments are dropped, newlines inside
// brackets and after a backslash continuation are not emitted, and blank
// lines produce no Newline token. Throws Error(ParseError) for unterminated
// strings and unbalanced brackets.
std::vector<Token> tokenize(std::string_view source);

}  // namespace tracediag::detail
