#include "python_lexer.hpp"

#include <cctype>
#include <cstring>

#include "tracediag/error.hpp"

namespace tracediag::detail {
namespace {

bool name_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool name_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool is_string_prefix(std::string_view p) {
  if (p.empty() || p.size() > 2) return false;
  for (char c : p) {
    if (!std::strchr("rRbBuUfF", c)) return false;
  }
  return true;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\n') {
        newline();
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
        ++pos_;
        continue;
      }
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
        continue;
      }
      if (c == '\\' && peek(1) == '\n') {
        pos_ += 2;
        ++line_;
        continue;
      }
      if (c == '\\' && peek(1) == '\r' && peek(2) == '\n') {
        pos_ += 3;
        ++line_;
        continue;
      }
      if (c == '"' || c == '\'') {
        string_literal("");
        continue;
      }
      const auto uc = static_cast<unsigned char>(c);
      if (name_start(uc)) {
        name_or_prefixed_string();
        continue;
      }
      if (std::isdigit(uc) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
        number();
        continue;
      }
      op();
    }
    if (!brackets_.empty()) {
      throw Error(ErrorKind::ParseError,
                  std::string("unclosed '") + brackets_.back().first + "'",
                  static_cast<std::size_t>(brackets_.back().second));
    }
    if (!out_.empty() && out_.back().kind != TokKind::Newline) push(TokKind::Newline, "", line_);
    push(TokKind::End, "", line_);
    return std::move(out_);
  }

 private:
  char peek(std::size_t ahead) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void push(TokKind kind, std::string text, int line, int end_line = 0) {
    out_.push_back({kind, std::move(text), line, end_line ? end_line : line});
  }

  void newline() {
    if (brackets_.empty() && !out_.empty() && out_.back().kind != TokKind::Newline) {
      push(TokKind::Newline, "", line_);
    }
    ++pos_;
    ++line_;
  }

  void name_or_prefixed_string() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && name_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view word = src_.substr(start, pos_ - start);
    if (pos_ < src_.size() && (src_[pos_] == '\'' || src_[pos_] == '"') && is_string_prefix(word)) {
      string_literal(word);
      return;
    }
    push(TokKind::Name, std::string(word), line_);
  }

  void number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_') {
        ++pos_;
      } else if ((c == '+' || c == '-') && (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E') &&
                 !(src_[start] == '0' && pos_ > start + 1 &&
                   (src_[start + 1] == 'x' || src_[start + 1] == 'X'))) {
        ++pos_;
      } else {
        break;
      }
    }
    push(TokKind::Number, std::string(src_.substr(start, pos_ - start)), line_);
  }

  void string_literal(std::string_view prefix) {
    const bool raw = prefix.find_first_of("rR") != std::string_view::npos;
    const char quote = src_[pos_];
    const bool triple = peek(1) == quote && peek(2) == quote;
    const int start_line = line_;
    pos_ += triple ? 3 : 1;
    std::string body;
    for (;;) {
      if (pos_ >= src_.size()) {
        throw Error(ErrorKind::ParseError, "unterminated string literal",
                    static_cast<std::size_t>(start_line));
      }
      const char c = src_[pos_];
      if (c == '\n') {
        if (!triple) {
          throw Error(ErrorKind::ParseError, "unterminated string literal",
                      static_cast<std::size_t>(start_line));
        }
        ++line_;
        body += c;
        ++pos_;
        continue;
      }
      if (c == '\\' && pos_ + 1 < src_.size()) {
        const char e = src_[pos_ + 1];
        if (e == '\n') ++line_;
        if (raw) {
          body += c;
          body += e;
        } else {
          switch (e) {
            case 'n': body += '\n'; break;
            case 't': body += '\t'; break;
            case 'r': body += '\r'; break;
            case '0': body += '\0'; break;
            case '\n': break;
            default: body += e; break;
          }
        }
        pos_ += 2;
        continue;
      }
      if (c == quote && (!triple || (peek(1) == quote && peek(2) == quote))) {
        pos_ += triple ? 3 : 1;
        break;
      }
      body += c;
      ++pos_;
    }
    push(TokKind::String, std::move(body), start_line, line_);
  }

  void op() {
    static constexpr const char* kThree[] = {"**=", "//=", ">>=", "<<=", "..."};
    static constexpr const char* kTwo[] = {"**", "//", "==", "!=", "<=", ">=", "->", "+=", "-=",
                                           "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", ":=", "@="};
    const std::string_view rest = src_.substr(pos_);
    for (const char* t : kThree) {
      if (rest.substr(0, 3) == t) {
        push(TokKind::Op, t, line_);
        pos_ += 3;
        return;
      }
    }
    for (const char* t : kTwo) {
      if (rest.substr(0, 2) == t) {
        push(TokKind::Op, t, line_);
        pos_ += 2;
        return;
      }
    }
    const char c = src_[pos_];
    if (c == '(' || c == '[' || c == '{') {
      brackets_.emplace_back(c, line_);
    } else if (c == ')' || c == ']' || c == '}') {
      const char open = c == ')' ? '(' : c == ']' ? '[' : '{';
      if (brackets_.empty() || brackets_.back().first != open) {
        throw Error(ErrorKind::ParseError, std::string("unbalanced '") + c + "'",
                    static_cast<std::size_t>(line_));
      }
      brackets_.pop_back();
    }
    push(TokKind::Op, std::string(1, c), line_);
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::vector<std::pair<char, int>> brackets_;
  std::vector<Token> out_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace tracediag::detail
