#include "gamlss/formula.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "gamlss/error.hpp"

namespace gamlss {

namespace {

/// Character-level scanner over the formula text. All positions reported
/// to the user are 1-based columns.
class Scanner {
 public:
  explicit Scanner(const std::string& text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool eof() {
    skip_ws();
    return pos_ >= text_.size();
  }

  /// 1-based column of the next token.
  std::size_t column() {
    skip_ws();
    return pos_ + 1;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  /// [A-Za-z_][A-Za-z0-9_]* or empty when the next character starts none.
  std::string ident() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < text_.size() &&
        (std::isalpha(static_cast<unsigned char>(text_[pos_])) ||
         text_[pos_] == '_')) {
      ++pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        ++pos_;
      }
    }
    return text_.substr(start, pos_ - start);
  }

  /// Strictly positive finite number, or a parse failure at `col`.
  double number(std::size_t* col) {
    skip_ws();
    *col = pos_ + 1;
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin || !std::isfinite(value)) {
      fail("malformed df specification (expected a number)", *col);
    }
    pos_ += static_cast<std::size_t>(end - begin);
    return value;
  }

  [[noreturn]] void fail(const std::string& what, std::size_t col) const {
    std::string msg = "column " + std::to_string(col) + ": " + what + "\n  " +
                      text_ + "\n  " + std::string(col - 1, ' ') + "^";
    throw FormulaError(msg, static_cast<int>(col));
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
};

FormulaTerm parse_term(Scanner& s) {
  const std::size_t col = s.column();
  const std::string id = s.ident();
  if (id.empty()) s.fail("expected a term", col);

  FormulaTerm t;
  if (s.peek() != '(') {
    t.variable = id;
    return t;
  }
  if (id == "log") {
    s.consume('(');
    const std::size_t acol = s.column();
    t.variable = s.ident();
    if (t.variable.empty()) {
      s.fail("expected a variable name inside log()", acol);
    }
    if (!s.consume(')')) s.fail("expected ')'", s.column());
    t.log_arg = true;
    return t;
  }
  if (id != "cs") s.fail("unknown function '" + id + "'", col);

  s.consume('(');
  const std::size_t acol = s.column();
  const std::string arg = s.ident();
  if (arg.empty()) s.fail("expected a variable name in cs()", acol);
  if (s.peek() == '(') {
    if (arg != "log") s.fail("unknown function '" + arg + "'", acol);
    s.consume('(');
    const std::size_t icol = s.column();
    t.variable = s.ident();
    if (t.variable.empty()) {
      s.fail("expected a variable name inside log()", icol);
    }
    if (!s.consume(')')) s.fail("expected ')'", s.column());
    t.log_arg = true;
  } else {
    t.variable = arg;
  }
  if (!s.consume(',')) {
    s.fail("malformed df specification (expected ', df=NUMBER')", s.column());
  }
  const std::size_t kcol = s.column();
  if (s.ident() != "df") {
    s.fail("malformed df specification (expected 'df=NUMBER')", kcol);
  }
  if (!s.consume('=')) {
    s.fail("malformed df specification (expected '=')", s.column());
  }
  std::size_t ncol = 0;
  t.df = s.number(&ncol);
  if (!(t.df > 0.0)) s.fail("df literals must be positive", ncol);
  if (!s.consume(')')) s.fail("expected ')'", s.column());
  t.is_spline = true;
  return t;
}

std::vector<FormulaTerm> parse_terms(Scanner& s) {
  // a lone "1" marks an intercept-only term list
  if (s.peek() == '1') {
    const std::size_t col = s.column();
    s.consume('1');
    if (std::isalnum(static_cast<unsigned char>(s.peek())) ||
        s.peek() == '.') {
      s.fail("expected a term", col);
    }
    if (s.peek() == '+') {
      s.fail("the intercept-only marker '1' cannot be combined with terms",
             col);
    }
    return {};
  }

  std::vector<FormulaTerm> out;
  for (;;) {
    const std::size_t col = s.column();
    FormulaTerm t = parse_term(s);
    for (const FormulaTerm& seen : out) {
      if (seen.text() == t.text()) {
        s.fail("duplicate term '" + t.text() + "'", col);
      }
    }
    out.push_back(std::move(t));
    if (!s.consume('+')) break;
  }
  return out;
}

std::string join_terms(const std::vector<FormulaTerm>& terms) {
  if (terms.empty()) return "1";
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += " + ";
    out += terms[i].text();
  }
  return out;
}

} // namespace

std::string FormulaTerm::column() const {
  return log_arg ? "log(" + variable + ")" : variable;
}

std::string FormulaTerm::text() const {
  if (!is_spline) return column();
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", df);
  return "cs(" + column() + ", df=" + buf + ")";
}

std::string FormulaAst::response_column() const {
  return log_response ? "log(" + response + ")" : response;
}

std::string FormulaAst::text() const {
  std::string out = response_column() + " ~ " + join_terms(mu_terms);
  if (has_sigma_part) out += " | sigma: " + join_terms(sigma_terms);
  return out;
}

FormulaAst parse_formula(const std::string& text) {
  Scanner s(text);
  FormulaAst ast;

  const std::size_t rcol = s.column();
  const std::string rid = s.ident();
  if (rid.empty()) s.fail("expected a response variable", rcol);
  if (s.peek() == '(') {
    if (rid != "log") s.fail("unknown function '" + rid + "'", rcol);
    s.consume('(');
    const std::size_t icol = s.column();
    ast.response = s.ident();
    if (ast.response.empty()) {
      s.fail("expected a variable name inside log()", icol);
    }
    if (!s.consume(')')) s.fail("expected ')'", s.column());
    ast.log_response = true;
  } else {
    ast.response = rid;
  }

  if (!s.consume('~')) s.fail("expected '~' after the response", s.column());
  ast.mu_terms = parse_terms(s);

  if (s.consume('|')) {
    const std::size_t kcol = s.column();
    if (s.ident() != "sigma") s.fail("expected 'sigma:' after '|'", kcol);
    if (!s.consume(':')) s.fail("expected ':' after 'sigma'", s.column());
    ast.sigma_terms = parse_terms(s);
    ast.has_sigma_part = true;
  }

  if (!s.eof()) s.fail("unexpected trailing input", s.column());
  return ast;
}

namespace {

void add_terms(const std::vector<FormulaTerm>& terms, Submodel* sub,
               const Dataset& data) {
  for (const FormulaTerm& t : terms) {
    const std::string col = t.column();
    if (!data.has(col)) {
      throw SchemaError("formula references unknown variable '" + col + "'");
    }
    if (!t.is_spline) {
      sub->parametric_terms.push_back(col);
      continue;
    }
    const Vector& v = data.column(col);
    bool binary = true;
    for (Index i = 0; i < v.size(); ++i) {
      if (v[i] != 0.0 && v[i] != 1.0) {
        binary = false;
        break;
      }
    }
    if (binary) {
      throw std::invalid_argument("spline on non-continuous variable '" +
                                  col + "'");
    }
    sub->spline_terms.push_back({col, t.df});
  }
}

} // namespace

BuiltSpec build_spec(const FormulaAst& ast, Family family, LinkId mu_link,
                     LinkId sigma_link, const Dataset& data) {
  BuiltSpec out;
  out.spec.response = ast.response_column();
  if (!data.has(out.spec.response)) {
    throw SchemaError("formula references unknown variable '" +
                      out.spec.response + "'");
  }
  out.spec.family = family;
  out.spec.mu.link = mu_link;
  out.spec.sigma.link = sigma_link;
  add_terms(ast.mu_terms, &out.spec.mu, data);
  add_terms(ast.sigma_terms, &out.spec.sigma, data);

  if (family_info(family).mu_positive && mu_link != LinkId::Log) {
    out.warnings.push_back("the " + link_name(mu_link) +
                           " mu link does not keep mu positive for family " +
                           family_name(family));
  }
  if (sigma_link != LinkId::Log) {
    out.warnings.push_back("the " + link_name(sigma_link) +
                           " sigma link does not keep sigma positive");
  }
  return out;
}

std::vector<std::string> formula_columns(const FormulaAst& ast) {
  std::vector<std::string> out;
  out.push_back(ast.response_column());
  for (const auto* terms : {&ast.mu_terms, &ast.sigma_terms}) {
    for (const FormulaTerm& t : *terms) out.push_back(t.column());
  }
  return out;
}

void ensure_log_columns(Dataset& data, const std::vector<std::string>& names) {
  for (const std::string& name : names) {
    if (data.has(name)) continue;
    if (name.size() < 6 || name.compare(0, 4, "log(") != 0 ||
        name.back() != ')') {
      continue;
    }
    const std::string base = name.substr(4, name.size() - 5);
    if (!data.has(base)) continue;
    const Vector& b = data.column(base);
    Vector v(data.n);
    for (Index i = 0; i < data.n; ++i) {
      if (!(b[i] > 0.0)) {
        throw std::domain_error("log transform needs positive values: column '" +
                                base + "', row " + std::to_string(i + 1) +
                                " is " + std::to_string(b[i]));
      }
      v[i] = std::log(b[i]);
    }
    data.set_column(name, std::move(v));
  }
}

} // namespace gamlss
