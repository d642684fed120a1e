#include "expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>

namespace helmopt::cli {

struct Expression::Node {
  enum class Kind { Number, X, Y, Unary, Binary, Call } kind = Kind::Number;
  double value = 0.0;
  char op = 0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> a, b;

  double eval(const Vec2& p) const {
    switch (kind) {
      case Kind::Number: return value;
      case Kind::X: return p.x();
      case Kind::Y: return p.y();
      case Kind::Unary: return -a->eval(p);
      case Kind::Call: return fn(a->eval(p));
      case Kind::Binary: {
        const double l = a->eval(p);
        const double r = b->eval(p);
        switch (op) {
          case '+': return l + r;
          case '-': return l - r;
          case '*': return l * r;
          case '/': return l / r;
          default: return std::pow(l, r);
        }
      }
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

double fabs_(double v) { return std::fabs(v); }
double sin_(double v) { return std::sin(v); }
double cos_(double v) { return std::cos(v); }
double tan_(double v) { return std::tan(v); }
double exp_(double v) { return std::exp(v); }
double log_(double v) { return std::log(v); }
double sqrt_(double v) { return std::sqrt(v); }

const std::map<std::string, double (*)(double)>& functions() {
  static const std::map<std::string, double (*)(double)> table{
      {"sin", sin_}, {"cos", cos_}, {"tan", tan_}, {"exp", exp_}, {"log", log_}, {"sqrt", sqrt_}, {"abs", fabs_}};
  return table;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

  bool uses_xy = false;

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("expression \"" + s_ + "\" at position " + std::to_string(pos_) + ": " + msg);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static NodePtr binary(char op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Binary;
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  NodePtr sum() {
    NodePtr n = product();
    for (;;) {
      if (accept('+')) n = binary('+', n, product());
      else if (accept('-')) n = binary('-', n, product());
      else return n;
    }
  }
  NodePtr product() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) n = binary('*', n, unary());
      else if (accept('/')) n = binary('/', n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (accept('-')) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Unary;
      n->a = unary();
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return binary('^', base, unary());
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (accept('(')) {
      NodePtr n = sum();
      if (!accept(')')) fail("missing ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      auto n = std::make_shared<Node>();
      if (name == "x" || name == "y") {
        n->kind = name == "x" ? Node::Kind::X : Node::Kind::Y;
        uses_xy = true;
        return n;
      }
      if (name == "pi") {
        n->value = kPi;
        return n;
      }
      const auto it = functions().find(name);
      if (it == functions().end()) {
        pos_ = start;
        fail("unknown name '" + name + "'");
      }
      if (!accept('(')) fail("expected '(' after " + name);
      n->kind = Node::Kind::Call;
      n->fn = it->second;
      n->a = sum();
      if (!accept(')')) fail("missing ')'");
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Parser p(text);
  Expression e;
  e.root_ = p.parse();
  e.text_ = text;
  e.constant_ = !p.uses_xy;
  return e;
}

double Expression::operator()(const Vec2& p) const { return root_->eval(p); }

}  // namespace helmopt::cli
