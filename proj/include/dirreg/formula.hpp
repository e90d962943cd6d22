// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_FORMULA_HPP
#define DIRREG_FORMULA_HPP

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "dirreg/errors.hpp"

namespace dirreg {

// Parsed model formula.  Grammar:
//   formula        := response '~' side ('|' side)?
//   side           := '1' | term ('+' term)*
//   response, term := identifier ([A-Za-z_.][A-Za-z0-9_.]*)
// The part after '|' drives the precision submodel; when absent the
// precision is intercept-only ("common" precision).
struct FormulaSpec {
  std::string response;
  std::vector<std::string> mean_terms;       // covariates, intercept implicit
  std::vector<std::string> precision_terms;  // empty = intercept-only

  bool constant_precision() const { return precision_terms.empty(); }
};

namespace detail {

class FormulaParser {
 public:
  explicit FormulaParser(const std::string& text) : text_(text) {}

  FormulaSpec parse() {
    FormulaSpec spec;
    spec.response = expect_ident("response name");
    expect_char('~');
    spec.mean_terms = parse_side();
    skip_ws();
    if (!done()) {
      expect_char('|');
      spec.precision_terms = parse_side();
      skip_ws();
      if (!done()) error("unexpected trailing input");
    }
    check_unique(spec.mean_terms, "mean");
    check_unique(spec.precision_terms, "precision");
    return spec;
  }

 private:
  std::vector<std::string> parse_side() {
    std::vector<std::string> terms;
    for (;;) {
      skip_ws();
      if (peek() == '1' && !is_ident_char(peek_at(pos_ + 1))) {
        ++pos_;  // bare intercept marker contributes no covariate
      } else {
        terms.push_back(expect_ident("term name"));
      }
      skip_ws();
      if (peek() != '+') break;
      ++pos_;
    }
    return terms;
  }

  void check_unique(const std::vector<std::string>& terms, const std::string& side) {
    for (std::size_t i = 0; i < terms.size(); ++i)
      for (std::size_t j = i + 1; j < terms.size(); ++j)
        if (terms[i] == terms[j])
          fail("SyntaxError", "duplicate " + side + " term '" + terms[i] + "'");
  }

  static bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  }
  static bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  }

  std::string expect_ident(const std::string& what) {
    skip_ws();
    if (done() || !is_ident_start(peek())) error("expected " + what);
    std::size_t start = pos_;
    while (!done() && is_ident_char(peek())) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  void expect_char(char c) {
    skip_ws();
    if (done() || peek() != c) error(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (!done() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }
  char peek_at(std::size_t i) const { return i >= text_.size() ? '\0' : text_[i]; }

  [[noreturn]] void error(const std::string& message) const {
    fail("SyntaxError",
         message + " at position " + std::to_string(pos_ + 1) + " in formula '" + text_ + "'");
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline FormulaSpec parse_formula(const std::string& text) {
  return detail::FormulaParser(text).parse();
}

}  // namespace dirreg

#endif  // DIRREG_FORMULA_HPP
