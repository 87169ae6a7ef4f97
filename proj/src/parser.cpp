#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <unordered_map>

#include "finslerlab/metric.hpp"

namespace finslerlab {

ParseError::ParseError(ParseErrorKind kind, int line, int column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      kind_(kind),
      line_(line),
      column_(column) {}

namespace {

enum class Tok { Number, Ident, String, Op, End };

struct Token {
  Tok type = Tok::End;
  std::string text;
  int column = 0;  // 1-based
};

const std::set<std::string>& function_names() {
  static const std::set<std::string> names{"sqrt", "sin", "cos", "exp", "log"};
  return names;
}

bool is_reserved(const std::string& s) {
  return function_names().count(s) || s == "and" || s == "or" || s == "dim" || s == "energy" || s == "param" ||
         s == "domain" || s == "label";
}

// Matches x<k> / y<k> with k a positive decimal integer; returns k or 0.
int coordinate_index(const std::string& s, char prefix) {
  if (s.size() < 2 || s[0] != prefix) return -1;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return -1;
  }
  int k = 0;
  std::from_chars(s.data() + 1, s.data() + s.size(), k);
  return k;
}

std::vector<Token> tokenize(std::string_view line, int line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const int col = static_cast<int>(i) + 1;
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < line.size() && std::isdigit(line[i + 1]))) {
      std::size_t j = i;
      while (j < line.size() && (std::isdigit(static_cast<unsigned char>(line[j])) || line[j] == '.')) ++j;
      if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < line.size() && (line[k] == '+' || line[k] == '-')) ++k;
        if (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) {
          j = k;
          while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
        }
      }
      out.push_back({Tok::Number, std::string(line.substr(i, j - i)), col});
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_')) ++j;
      out.push_back({Tok::Ident, std::string(line.substr(i, j - i)), col});
      i = j;
    } else if (c == '"') {
      std::size_t j = i + 1;
      std::string s;
      while (j < line.size() && line[j] != '"') {
        if (line[j] == '\\' && j + 1 < line.size()) ++j;
        s += line[j++];
      }
      if (j >= line.size()) throw ParseError(ParseErrorKind::Syntax, line_no, col, "unterminated string");
      out.push_back({Tok::String, s, col});
      i = j + 1;
    } else {
      static const char* two[] = {">=", "<=", "!="};
      bool matched = false;
      for (const char* op : two) {
        if (line.substr(i, 2) == op) {
          out.push_back({Tok::Op, op, col});
          i += 2;
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (std::string_view("+-*/^(),=<>").find(c) == std::string_view::npos) {
        throw ParseError(ParseErrorKind::Syntax, line_no, col, std::string("unexpected character '") + c + "'");
      }
      out.push_back({Tok::Op, std::string(1, c), col});
      ++i;
    }
  }
  out.push_back({Tok::End, "", static_cast<int>(line.size()) + 1});
  return out;
}

// Decimal literal as an exact rational where it fits, otherwise a double.
Number parse_number(const std::string& text, int line, int col) {
  const auto epos = text.find_first_of("eE");
  const std::string mant = text.substr(0, epos);
  int exp10 = 0;
  if (epos != std::string::npos) {
    const std::string e = text.substr(epos + 1);
    const char* first = e.data() + (!e.empty() && e[0] == '+' ? 1 : 0);
    if (std::from_chars(first, e.data() + e.size(), exp10).ec != std::errc()) {
      throw ParseError(ParseErrorKind::Syntax, line, col, "malformed number '" + text + "'");
    }
  }
  const auto dot = mant.find('.');
  if (dot != std::string::npos && mant.find('.', dot + 1) != std::string::npos) {
    throw ParseError(ParseErrorKind::Syntax, line, col, "malformed number '" + text + "'");
  }
  std::string digits = mant;
  if (dot != std::string::npos) {
    digits.erase(dot, 1);
    exp10 -= static_cast<int>(mant.size() - dot - 1);
  }
  while (digits.size() > 1 && digits[0] == '0') digits.erase(0, 1);
  if (digits.size() <= 15 && std::abs(exp10) <= 15) {
    std::int64_t m = 0;
    if (digits.empty()) digits = "0";
    std::from_chars(digits.data(), digits.data() + digits.size(), m);
    std::int64_t scale = 1;
    for (int k = 0; k < std::abs(exp10); ++k) scale *= 10;
    std::int64_t num = m;
    if (exp10 > 0 && !__builtin_mul_overflow(m, scale, &num)) return Number::exact(num);
    if (exp10 <= 0) return Number::exact(Rational::make(m, scale));
  }
  return Number::real(std::strtod(text.c_str(), nullptr));
}

class ExprParser {
 public:
  ExprParser(const std::vector<Token>& toks, std::size_t pos, int line, int dim, const std::set<std::string>& params)
      : toks_(toks), pos_(pos), line_(line), dim_(dim), params_(params) {}

  Expr expression() {
    Expr lhs = term();
    while (peek_op("+") || peek_op("-")) {
      const std::string op = next().text;
      Expr rhs = term();
      lhs = op == "+" ? lhs + rhs : lhs - rhs;
    }
    return lhs;
  }

  Predicate predicate() {
    Predicate lhs = conjunction();
    while (peek_ident("or")) {
      next();
      lhs = Predicate::either(lhs, conjunction());
    }
    return lhs;
  }

  void expect_end() {
    if (toks_[pos_].type != Tok::End) fail("unexpected '" + toks_[pos_].text + "'");
  }

 private:
  Predicate conjunction() {
    Predicate lhs = comparison();
    while (peek_ident("and")) {
      next();
      lhs = Predicate::both(lhs, comparison());
    }
    return lhs;
  }

  Predicate comparison() {
    Expr lhs = expression();
    static const std::unordered_map<std::string, CompareOp> ops{{">", CompareOp::Greater},
                                                                 {">=", CompareOp::GreaterEq},
                                                                 {"<", CompareOp::Less},
                                                                 {"<=", CompareOp::LessEq},
                                                                 {"!=", CompareOp::NotEq}};
    const Token& t = toks_[pos_];
    auto it = t.type == Tok::Op ? ops.find(t.text) : ops.end();
    if (it == ops.end()) fail("expected comparison operator");
    next();
    Expr rhs = expression();
    return Predicate::compare(lhs, it->second, rhs);
  }

  Expr term() {
    Expr lhs = unary();
    while (peek_op("*") || peek_op("/")) {
      const std::string op = next().text;
      Expr rhs = unary();
      lhs = op == "*" ? lhs * rhs : lhs / rhs;
    }
    return lhs;
  }

  Expr unary() {
    if (peek_op("-")) {
      next();
      return -unary();
    }
    if (peek_op("+")) {
      next();
      return unary();
    }
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (peek_op("^")) {
      const Token& caret = next();
      Expr ex = unary();  // right-associative; allows a^-1
      auto c = ex.constant_value();
      if (!c) fail_at(caret.column, "exponent must be a constant expression");
      return pow(base, *c);
    }
    return base;
  }

  Expr primary() {
    const Token& t = toks_[pos_];
    if (t.type == Tok::Number) {
      next();
      return Expr::constant(parse_number(t.text, line_, t.column));
    }
    if (t.type == Tok::Ident) {
      next();
      if (function_names().count(t.text)) {
        expect("(");
        Expr arg = expression();
        expect(")");
        if (t.text == "sqrt") return sqrt(arg);
        if (t.text == "sin") return sin(arg);
        if (t.text == "cos") return cos(arg);
        if (t.text == "exp") return exp(arg);
        return log(arg);
      }
      for (char prefix : {'x', 'y'}) {
        const int k = coordinate_index(t.text, prefix);
        if (k == -1) continue;
        if (k < 1 || k > dim_) {
          throw ParseError(ParseErrorKind::DimensionMismatch, line_, t.column,
                           "unknown variable " + t.text + " (dim=" + std::to_string(dim_) + ")");
        }
        return prefix == 'x' ? Expr::x(k - 1) : Expr::y(k - 1);
      }
      if (params_.count(t.text)) return Expr::param(t.text);
      throw ParseError(ParseErrorKind::UnknownIdentifier, line_, t.column, "unknown identifier '" + t.text + "'");
    }
    if (t.type == Tok::Op && t.text == "(") {
      next();
      Expr e = expression();
      expect(")");
      return e;
    }
    fail(t.type == Tok::End ? "unexpected end of expression" : "unexpected '" + t.text + "'");
  }

  bool peek_op(const char* op) const { return toks_[pos_].type == Tok::Op && toks_[pos_].text == op; }
  bool peek_ident(const char* s) const { return toks_[pos_].type == Tok::Ident && toks_[pos_].text == s; }
  const Token& next() { return toks_[pos_++]; }
  void expect(const char* op) {
    if (!peek_op(op)) fail(std::string("expected '") + op + "'");
    next();
  }
  [[noreturn]] void fail(const std::string& msg) const { fail_at(toks_[pos_].column, msg); }
  [[noreturn]] void fail_at(int col, const std::string& msg) const {
    throw ParseError(ParseErrorKind::Syntax, line_, col, msg);
  }

  const std::vector<Token>& toks_;
  std::size_t pos_;
  int line_;
  int dim_;
  const std::set<std::string>& params_;
};

std::string strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

const char* compare_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::Greater: return ">";
    case CompareOp::GreaterEq: return ">=";
    case CompareOp::Less: return "<";
    case CompareOp::LessEq: return "<=";
    case CompareOp::NotEq: return "!=";
  }
  return "?";
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Predicate Predicate::compare(Expr lhs, CompareOp op, Expr rhs) {
  Predicate p;
  p.kind = Kind::Compare;
  p.op = op;
  p.lhs = std::move(lhs);
  p.rhs = std::move(rhs);
  return p;
}

Predicate Predicate::both(Predicate a, Predicate b) {
  Predicate p;
  p.kind = Kind::And;
  p.children = {std::move(a), std::move(b)};
  return p;
}

Predicate Predicate::either(Predicate a, Predicate b) {
  Predicate p;
  p.kind = Kind::Or;
  p.children = {std::move(a), std::move(b)};
  return p;
}

std::string Predicate::to_string() const {
  switch (kind) {
    case Kind::Compare: return lhs.to_string() + " " + compare_symbol(op) + " " + rhs.to_string();
    case Kind::And: return children[0].to_string() + " and " + children[1].to_string();
    case Kind::Or:
      // "and" binds tighter, so an Or nested under And cannot be written without parentheses;
      // the grammar never produces that shape.
      return children[0].to_string() + " or " + children[1].to_string();
  }
  return {};
}

bool structurally_equal(const Predicate& a, const Predicate& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Predicate::Kind::Compare) {
    return a.op == b.op && structurally_equal(a.lhs, b.lhs) && structurally_equal(a.rhs, b.rhs);
  }
  return structurally_equal(a.children[0], b.children[0]) && structurally_equal(a.children[1], b.children[1]);
}

std::string MetricSpec::to_text() const {
  std::string out;
  if (!label.empty()) {
    std::string escaped;
    for (char c : label) {
      if (c == '"' || c == '\\') escaped += '\\';
      escaped += c;
    }
    out += "label = \"" + escaped + "\"\n";
  }
  out += "dim = " + std::to_string(dim) + "\n";
  for (const auto& [name, value] : params) out += "param " + name + " = " + format_double(value) + "\n";
  out += "energy = " + energy.to_string() + "\n";
  if (domain) out += "domain = " + domain->to_string() + "\n";
  return out;
}

bool structurally_equal(const MetricSpec& a, const MetricSpec& b) {
  if (a.dim != b.dim || a.label != b.label || a.params != b.params) return false;
  if (!structurally_equal(a.energy, b.energy)) return false;
  if (a.domain.has_value() != b.domain.has_value()) return false;
  return !a.domain || structurally_equal(*a.domain, *b.domain);
}

MetricSpec parse_metric(std::string_view source) {
  struct Pending {
    std::vector<Token> toks;
    int line;
  };
  MetricSpec spec;
  std::optional<Pending> energy, domain;
  bool have_dim = false, have_label = false;

  std::vector<std::string> lines;
  for (std::size_t start = 0; start <= source.size();) {
    const auto nl = source.find('\n', start);
    const auto end = nl == std::string_view::npos ? source.size() : nl;
    lines.push_back(strip_comment(source.substr(start, end - start)));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }

  for (std::size_t li = 0; li < lines.size(); ++li) {
    const int line_no = static_cast<int>(li) + 1;
    auto toks = tokenize(lines[li], line_no);
    if (toks.front().type == Tok::End) continue;
    const Token& head = toks[0];
    auto expect_eq = [&](std::size_t at) {
      if (toks[at].type != Tok::Op || toks[at].text != "=") {
        throw ParseError(ParseErrorKind::Syntax, line_no, toks[at].column, "expected '='");
      }
    };
    if (head.type != Tok::Ident) throw ParseError(ParseErrorKind::Syntax, line_no, head.column, "expected statement");
    if (head.text == "dim") {
      if (have_dim) throw ParseError(ParseErrorKind::Structure, line_no, head.column, "duplicate dim statement");
      expect_eq(1);
      if (toks[2].type != Tok::Number || toks[3].type != Tok::End ||
          toks[2].text.find_first_not_of("0123456789") != std::string::npos) {
        throw ParseError(ParseErrorKind::Syntax, line_no, toks[2].column, "dim must be a positive integer");
      }
      spec.dim = std::stoi(toks[2].text);
      if (spec.dim < 1) throw ParseError(ParseErrorKind::Syntax, line_no, toks[2].column, "dim must be positive");
      have_dim = true;
    } else if (head.text == "param") {
      if (toks[1].type != Tok::Ident) throw ParseError(ParseErrorKind::Syntax, line_no, toks[1].column, "expected parameter name");
      const std::string name = toks[1].text;
      if (is_reserved(name) || coordinate_index(name, 'x') != -1 || coordinate_index(name, 'y') != -1) {
        throw ParseError(ParseErrorKind::Syntax, line_no, toks[1].column, "reserved parameter name '" + name + "'");
      }
      if (spec.params.count(name)) throw ParseError(ParseErrorKind::Structure, line_no, toks[1].column, "duplicate parameter '" + name + "'");
      expect_eq(2);
      std::size_t at = 3;
      bool negative = false;
      if (toks[at].type == Tok::Op && (toks[at].text == "-" || toks[at].text == "+")) negative = toks[at++].text == "-";
      if (toks[at].type != Tok::Number || toks[at + 1].type != Tok::End) {
        throw ParseError(ParseErrorKind::Syntax, line_no, toks[at].column, "parameter value must be a number");
      }
      parse_number(toks[at].text, line_no, toks[at].column);  // validates the literal
      const double v = std::strtod(toks[at].text.c_str(), nullptr);
      spec.params[name] = negative ? -v : v;
    } else if (head.text == "label") {
      if (have_label) throw ParseError(ParseErrorKind::Structure, line_no, head.column, "duplicate label statement");
      expect_eq(1);
      if (toks[2].type != Tok::String || toks[3].type != Tok::End) {
        throw ParseError(ParseErrorKind::Syntax, line_no, toks[2].column, "label must be a quoted string");
      }
      spec.label = toks[2].text;
      have_label = true;
    } else if (head.text == "energy" || head.text == "domain") {
      auto& slot = head.text == "energy" ? energy : domain;
      if (slot) throw ParseError(ParseErrorKind::Structure, line_no, head.column, "duplicate " + head.text + " statement");
      expect_eq(1);
      slot = Pending{std::move(toks), line_no};
    } else {
      throw ParseError(ParseErrorKind::Syntax, line_no, head.column, "unknown statement '" + head.text + "'");
    }
  }
  if (!have_dim) throw ParseError(ParseErrorKind::Structure, 1, 1, "missing dim statement");
  if (!energy) throw ParseError(ParseErrorKind::Structure, 1, 1, "missing energy statement");

  std::set<std::string> names;
  for (const auto& [k, v] : spec.params) names.insert(k);
  {
    ExprParser p(energy->toks, 2, energy->line, spec.dim, names);
    spec.energy = p.expression();
    p.expect_end();
  }
  if (domain) {
    ExprParser p(domain->toks, 2, domain->line, spec.dim, names);
    spec.domain = p.predicate();
    p.expect_end();
  }
  return spec;
}

Expr parse_expression(std::string_view text, int dim, const std::set<std::string>& params) {
  auto toks = tokenize(text, 1);
  ExprParser p(toks, 0, 1, dim, params);
  Expr e = p.expression();
  p.expect_end();
  return e;
}

Predicate parse_predicate(std::string_view text, int dim, const std::set<std::string>& params) {
  auto toks = tokenize(text, 1);
  ExprParser p(toks, 0, 1, dim, params);
  Predicate e = p.predicate();
  p.expect_end();
  return e;
}

DomainTest::DomainTest(const std::optional<Predicate>& predicate, const std::map<std::string, double>& params)
    : predicate_(predicate) {
  if (!predicate_) return;
  std::function<void(const Predicate&)> collect = [&](const Predicate& p) {
    if (p.kind == Predicate::Kind::Compare) {
      sides_.push_back(p.lhs);
      sides_.push_back(p.rhs);
    } else {
      for (const auto& c : p.children) collect(c);
    }
  };
  collect(*predicate_);
  program_ = std::make_shared<Program>(sides_, params);
}

bool DomainTest::contains(std::span<const double> x, std::span<const double> y) const {
  if (!predicate_) return true;
  std::vector<double> values(sides_.size()), scratch;
  if (!program_->run(x, y, values, scratch).ok) return false;
  std::size_t next = 0;
  std::function<bool(const Predicate&)> eval = [&](const Predicate& p) -> bool {
    if (p.kind == Predicate::Kind::Compare) {
      const double a = values[next++];
      const double b = values[next++];
      switch (p.op) {
        case CompareOp::Greater: return a > b;
        case CompareOp::GreaterEq: return a >= b;
        case CompareOp::Less: return a < b;
        case CompareOp::LessEq: return a <= b;
        case CompareOp::NotEq: return a != b;
      }
      return false;
    }
    // Evaluate both children so the side cursor stays aligned.
    const bool l = eval(p.children[0]);
    const bool r = eval(p.children[1]);
    return p.kind == Predicate::Kind::And ? (l && r) : (l || r);
  };
  return eval(*predicate_);
}

}  // namespace finslerlab
