#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "morseflow/polynomial.h"

namespace morseflow {

ParseError::ParseError(const std::string &message, std::size_t position)
    : std::runtime_error("at position " + std::to_string(position) + ": " +
                         message),
      position_(position) {}

namespace {

// Exponents larger than this are almost certainly typos and would make
// expansion of sums blow up.
constexpr unsigned kMaxExponent = 1024;

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string> &variables)
      : text_(text), vars_(variables) {}

  Polynomial parse() {
    skip_ws();
    if (at_end()) throw ParseError("empty expression", pos_);
    Polynomial p = expr();
    skip_ws();
    if (!at_end()) {
      throw ParseError(std::string("unexpected character '") + text_[pos_] +
                           "'",
                       pos_);
    }
    return p;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_ws();
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    Polynomial acc = term();
    for (;;) {
      if (accept('+')) {
        acc += term();
      } else if (accept('-')) {
        acc -= term();
      } else {
        return acc;
      }
    }
  }

  Polynomial term() {
    Polynomial acc = factor();
    while (accept('*')) acc = acc * factor();
    return acc;
  }

  Polynomial factor() {
    Polynomial b = base();
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      if (peek() == '-') throw ParseError("negative exponent", start);
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        throw ParseError("expected non-negative integer exponent", start);
      }
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      if (peek() == '.' || peek() == 'e' || peek() == 'E') {
        throw ParseError("non-integer exponent", start);
      }
      unsigned e = 0;
      auto [ptr, ec] =
          std::from_chars(text_.data() + start, text_.data() + pos_, e);
      (void)ptr;
      if (ec != std::errc() || e > kMaxExponent) {
        throw ParseError("exponent too large", start);
      }
      return b.pow(e);
    }
    return b;
  }

  Polynomial base() {
    skip_ws();
    const char c = peek();
    if (c == '-') {
      ++pos_;
      return -base();
    }
    if (c == '(') {
      ++pos_;
      Polynomial inner = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    if (at_end()) throw ParseError("unexpected end of input", pos_);
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  Polynomial number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t mantissa = digits();
    if (peek() == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) throw ParseError("malformed number", start);
    if (peek() == 'e' || peek() == 'E') {
      const std::size_t save = pos_;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (digits() == 0) pos_ = save;  // not an exponent; leave 'e' alone
    }
    double value = 0.0;
    auto [ptr, ec] =
        std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_ || !std::isfinite(value)) {
      throw ParseError("number out of range", start);
    }
    if (std::isalpha(static_cast<unsigned char>(peek()))) {
      throw ParseError("missing '*' between number and identifier", pos_);
    }
    return Polynomial::constant(vars_, value);
  }

  Polynomial identifier() {
    const std::size_t start = pos_;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i] == name) return Polynomial::variable(vars_, i);
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  std::string_view text_;
  const std::vector<std::string> &vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse_polynomial(std::string_view text,
                            const std::vector<std::string> &variables) {
  return Parser(text, variables).parse();
}

}  // namespace morseflow
