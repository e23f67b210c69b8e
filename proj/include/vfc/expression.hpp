#pragma once

// Small arithmetic grammar over the variables r and s, used for custom
// coefficient sets in configuration files:
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('-' | '+') unary | power
//   power  := primary ('^' unary)?
//   primary:= number | 'r' | 's' | ('exp' | 'log') '(' expr ')' | '(' expr ')'

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>

#include "vfc/error.hpp"

namespace vfc {

using Field2 = std::function<double(double, double)>;

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string text) : text_(std::move(text)) {}

  Field2 parse() {
    Field2 e = expr();
    skip_space();
    if (pos_ != text_.size()) error("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::config, "expression '" + text_ + "' at column " + std::to_string(pos_ + 1) + ": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Field2 expr() {
    Field2 lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = [a = lhs, b = term()](double r, double s) { return a(r, s) + b(r, s); };
      } else if (accept('-')) {
        lhs = [a = lhs, b = term()](double r, double s) { return a(r, s) - b(r, s); };
      } else {
        return lhs;
      }
    }
  }

  Field2 term() {
    Field2 lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = [a = lhs, b = unary()](double r, double s) { return a(r, s) * b(r, s); };
      } else if (accept('/')) {
        lhs = [a = lhs, b = unary()](double r, double s) { return a(r, s) / b(r, s); };
      } else {
        return lhs;
      }
    }
  }

  Field2 unary() {
    if (accept('-')) return [a = unary()](double r, double s) { return -a(r, s); };
    if (accept('+')) return unary();
    return power();
  }

  Field2 power() {
    Field2 base = primary();
    if (!accept('^')) return base;
    Field2 ex = unary();
    return [a = base, b = ex](double r, double s) {
      const double e = b(r, s);
      if (e == std::round(e) && std::abs(e) <= 64) return std::pow(a(r, s), static_cast<int>(e));
      return std::pow(a(r, s), e);
    };
  }

  Field2 primary() {
    skip_space();
    if (pos_ >= text_.size()) error("unexpected end of input");
    const char c = text_[pos_];
    if (accept('(')) {
      Field2 inner = expr();
      if (!accept(')')) error("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.c_str() + pos_;
      char* end = nullptr;
      const double value = std::strtod(begin, &end);
      if (end == begin) error("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return [value](double, double) { return value; };
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string name = text_.substr(start, pos_ - start);
      if (name == "r") return [](double r, double) { return r; };
      if (name == "s") return [](double, double s) { return s; };
      if (name == "exp" || name == "log") {
        if (!accept('(')) error("expected '(' after " + name);
        Field2 arg = expr();
        if (!accept(')')) error("expected ')'");
        if (name == "exp") return [a = arg](double r, double s) { return std::exp(a(r, s)); };
        return [a = arg](double r, double s) { return std::log(a(r, s)); };
      }
      pos_ = start;
      error("unknown identifier '" + name + "'");
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  std::string text_;
  std::size_t pos_ = 0;
};

inline Field2 parse_expression(const std::string& text) { return ExpressionParser(text).parse(); }

}  // namespace vfc
