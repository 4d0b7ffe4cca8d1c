#include "pathhedge/payoff.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "pathhedge/rng.hpp"

namespace pathhedge {

enum class Op { constant, variable, add, sub, mul, max, min, avg, call, put, digital };

struct PayoffSpec::Node {
  Op op = Op::constant;
  double value = 0.0;
  int fixing = 0;
  int coordinate = 0;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(const Fixings& x) const {
    switch (op) {
      case Op::constant:
        return value;
      case Op::variable:
        return x[fixing](coordinate);
      case Op::add: {
        double s = 0.0;
        for (const auto& a : args) s += a->eval(x);
        return s;
      }
      case Op::sub: {
        if (args.size() == 1) return -args[0]->eval(x);
        double s = args[0]->eval(x);
        for (std::size_t i = 1; i < args.size(); ++i) s -= args[i]->eval(x);
        return s;
      }
      case Op::mul: {
        double s = 1.0;
        for (const auto& a : args) s *= a->eval(x);
        return s;
      }
      case Op::max: {
        double s = args[0]->eval(x);
        for (std::size_t i = 1; i < args.size(); ++i) s = std::max(s, args[i]->eval(x));
        return s;
      }
      case Op::min: {
        double s = args[0]->eval(x);
        for (std::size_t i = 1; i < args.size(); ++i) s = std::min(s, args[i]->eval(x));
        return s;
      }
      case Op::avg: {
        double s = 0.0;
        for (const auto& a : args) s += a->eval(x);
        return s / static_cast<double>(args.size());
      }
      case Op::call:
        return std::max(args[0]->eval(x) - args[1]->eval(x), 0.0);
      case Op::put:
        return std::max(args[1]->eval(x) - args[0]->eval(x), 0.0);
      case Op::digital:
        return args[0]->eval(x) > args[1]->eval(x) ? 1.0 : 0.0;
    }
    return 0.0;
  }
};

namespace {

class Parser {
 public:
  Parser(const std::string& text, int dimension, int last_fixing)
      : text_(text), dimension_(dimension), last_fixing_(last_fixing) {}

  std::shared_ptr<const PayoffSpec::Node> parse_all(std::set<int>& deps, bool& discontinuous) {
    deps_ = &deps;
    discontinuous_ = &discontinuous;
    auto root = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("payoff: " + what + " at offset " + std::to_string(pos_) + " in '" + text_ + "'");
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string token() {
    skip();
    const auto start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
           text_[pos_] != ')')
      ++pos_;
    return text_.substr(start, pos_ - start);
  }

  std::shared_ptr<const PayoffSpec::Node> expr() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == ')') fail("unexpected ')'");
    if (text_[pos_] == '(') {
      ++pos_;
      const std::string name = token();
      if (name.empty()) fail("missing operator");
      auto node = std::make_shared<PayoffSpec::Node>();
      static const std::pair<const char*, Op> ops[] = {{"+", Op::add},      {"-", Op::sub},     {"*", Op::mul},
                                                       {"max", Op::max},    {"min", Op::min},   {"avg", Op::avg},
                                                       {"call", Op::call},  {"put", Op::put},   {"digital", Op::digital}};
      bool known = false;
      for (const auto& [word, op] : ops)
        if (name == word) {
          node->op = op;
          known = true;
        }
      if (!known) fail("unknown operator '" + name + "'");
      for (;;) {
        skip();
        if (pos_ >= text_.size()) fail("missing ')'");
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        node->args.push_back(expr());
      }
      const auto n = node->args.size();
      const bool binary = node->op == Op::call || node->op == Op::put || node->op == Op::digital;
      if (binary && n != 2) fail("'" + name + "' takes exactly two arguments");
      if (node->op == Op::sub && n < 1) fail("'-' needs at least one argument");
      if (!binary && node->op != Op::sub && n < 1) fail("'" + name + "' needs at least one argument");
      if (node->op == Op::digital) *discontinuous_ = true;
      return node;
    }
    const auto at = pos_;
    const std::string word = token();
    if (word.empty()) fail("empty token");
    auto node = std::make_shared<PayoffSpec::Node>();
    if (word[0] == 'x') {
      node->op = Op::variable;
      const auto underscore = word.find('_');
      const std::string k = word.substr(1, underscore == std::string::npos ? std::string::npos : underscore - 1);
      auto digits = [](const std::string& s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
      };
      if (!digits(k)) {
        pos_ = at;
        fail("malformed variable '" + word + "'");
      }
      node->fixing = std::stoi(k);
      if (underscore == std::string::npos) {
        if (dimension_ != 1) fail("variable '" + word + "' needs a coordinate suffix when d > 1");
        node->coordinate = 0;
      } else {
        const std::string j = word.substr(underscore + 1);
        if (!digits(j)) fail("malformed variable '" + word + "'");
        node->coordinate = std::stoi(j) - 1;
      }
      if (node->fixing > last_fixing_)
        throw ValidationError("payoff variable '" + word + "' refers past the last fixing x" +
                              std::to_string(last_fixing_));
      if (node->coordinate < 0 || node->coordinate >= dimension_)
        throw ValidationError("payoff variable '" + word + "' has coordinate outside 1.." + std::to_string(dimension_));
      deps_->insert(node->fixing);
      return node;
    }
    char* end = nullptr;
    node->value = std::strtod(word.c_str(), &end);
    if (end != word.c_str() + word.size() || !std::isfinite(node->value)) {
      pos_ = at;
      fail("malformed number '" + word + "'");
    }
    return node;
  }

  const std::string& text_;
  int dimension_;
  int last_fixing_;
  std::size_t pos_ = 0;
  std::set<int>* deps_ = nullptr;
  bool* discontinuous_ = nullptr;
};

}  // namespace

PayoffSpec PayoffSpec::parse(const std::string& text, int dimension, int last_fixing) {
  if (dimension < 1) throw ValidationError("payoff dimension must be at least 1");
  if (last_fixing < 1) throw ValidationError("schedule needs at least one fixing after t0");
  PayoffSpec spec;
  spec.text_ = text;
  spec.dimension_ = dimension;
  spec.last_fixing_ = last_fixing;
  Parser parser(text, dimension, last_fixing);
  spec.root_ = parser.parse_all(spec.dependencies_, spec.discontinuous_);
  return spec;
}

double PayoffSpec::operator()(const Fixings& x) const {
  if (x.size() != static_cast<std::size_t>(last_fixing_ + 1)) throw ValidationError("payoff needs fixings x0..xN");
  for (int k : dependencies_)
    if (x[k].size() != dimension_) throw ValidationError("payoff fixing has the wrong dimension");
  const double v = root_->eval(x);
  if (!std::isfinite(v)) throw DomainError("payoff evaluated to a non-finite value");
  return v;
}

LipschitzProbe lipschitz_probe(const PayoffSpec& payoff, const Eigen::VectorXd& center, double spread,
                               std::uint64_t seed, int pairs) {
  LipschitzProbe probe;
  if (center.size() != payoff.dimension()) throw ValidationError("probe centre has the wrong dimension");
  if (payoff.discontinuous()) {
    probe.applicable = false;
    return probe;
  }
  const int d = payoff.dimension();
  const int n = payoff.last_fixing() + 1;
  const NormalStream normals(seed, 0);
  std::uint32_t draw = 0;
  auto normal = [&]() {
    const auto p = normals.pair(draw++);
    return p[0];
  };
  Fixings x(n, Eigen::VectorXd(d)), y(n, Eigen::VectorXd(d));
  for (int p = 0; p < pairs; ++p) {
    double dist = 0.0, m = 0.0;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < d; ++i) {
        x[k](i) = center(i) * (1.0 + spread * normal());
        y[k](i) = x[k](i) + center(i) * 0.01 * spread * normal();
        dist += std::abs(x[k](i) - y[k](i));
        m = std::max({m, std::abs(x[k](i)), std::abs(y[k](i))});
      }
    if (dist == 0.0) continue;
    const double ratio = std::abs(payoff(x) - payoff(y)) / ((1.0 + std::pow(m, payoff.lipschitz_exponent)) * dist);
    probe.worst_ratio = std::max(probe.worst_ratio, ratio);
    if (ratio > payoff.lipschitz_constant * (1.0 + 1e-12)) ++probe.violations;
    ++probe.pairs;
  }
  probe.passed = probe.violations == 0;
  return probe;
}

}  // namespace pathhedge
