#pragma once

// Payoff expressions over fixing vectors x0..xN, parsed from prefix notation:
//
//   expr  := number | var | '(' op expr* ')'
//   var   := 'x' K            (d = 1)
//          | 'x' K '_' j      (coordinate j, 1-based)
//   op    := + - * max min avg   (n-ary; unary '-' negates)
//          | call put digital    (binary: (call e k) = max(e - k, 0),
//                                 (put e k) = max(k - e, 0),
//                                 (digital e k) = 1 if e > k else 0)
//
// Example: (call (avg x1 x2) 100).

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "pathhedge/errors.hpp"

namespace pathhedge {

/// x[k] is the fixing vector at t_k.
using Fixings = std::vector<Eigen::VectorXd>;

class PayoffSpec {
 public:
  struct Node;

  /// Parses `text` for a schedule with fixings 0..N of dimension d. Throws
  /// ParseError on malformed text, ValidationError on out-of-range variables.
  static PayoffSpec parse(const std::string& text, int dimension, int last_fixing);

  double operator()(const Fixings& x) const;

  const std::string& text() const { return text_; }
  int dimension() const { return dimension_; }
  int last_fixing() const { return last_fixing_; }

  /// Fixing indices the expression reads.
  const std::set<int>& dependencies() const { return dependencies_; }
  bool depends_on(int fixing) const { return dependencies_.count(fixing) > 0; }

  /// True when the tree contains a discontinuous operator (digital).
  bool discontinuous() const { return discontinuous_; }

  /// Declared local-Lipschitz metadata: |h(x) - h(y)| <= L (1 + m^p) sum |x_i - y_i|
  /// with m the larger max-norm of x and y.
  double lipschitz_exponent = 0.0;
  double lipschitz_constant = 1.0;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
  int dimension_ = 1;
  int last_fixing_ = 1;
  std::set<int> dependencies_;
  bool discontinuous_ = false;
};

struct LipschitzProbe {
  int pairs = 0;
  int violations = 0;
  double worst_ratio = 0.0;  // max |dh| / ((1 + m^p) sum |dx|)
  bool applicable = true;    // false for discontinuous payoffs
  bool passed = false;
};

/// Spot-checks the declared (p, L) on `pairs` random pairs drawn around
/// `center` (relative perturbations of size `spread`). Discontinuous payoffs
/// are reported as not applicable.
LipschitzProbe lipschitz_probe(const PayoffSpec& payoff, const Eigen::VectorXd& center, double spread,
                               std::uint64_t seed, int pairs = 1000);

}  // namespace pathhedge
