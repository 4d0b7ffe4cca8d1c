#pragma once

// Pathwise calculus on dyadic partitions: sampled trajectories, quadratic
// covariation and Foellmer (left-endpoint Riemann-sum) integrals.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pathhedge/errors.hpp"

namespace pathhedge {

/// Whole-space trajectories live in R^d; positive ones in (0, inf)^d.
enum class Flavor { whole_space, positive };

/// Uniform dyadic partitions T_n = {k T / 2^n : k = 0..2^n} for n <= max_level.
class PartitionHierarchy {
 public:
  PartitionHierarchy(double horizon, int max_level) : horizon_(horizon), max_level_(max_level) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw ValidationError("partition horizon must be positive and finite");
    if (max_level < 1 || max_level > 30) throw ValidationError("partition max_level must lie in [1, 30]");
  }

  double horizon() const { return horizon_; }
  int max_level() const { return max_level_; }

  std::int64_t intervals(int level) const {
    check_level(level);
    return std::int64_t{1} << level;
  }
  std::int64_t nodes(int level) const { return intervals(level) + 1; }
  double mesh(int level) const { return horizon_ / static_cast<double>(intervals(level)); }

  double time(int level, std::int64_t k) const {
    return horizon_ * static_cast<double>(k) / static_cast<double>(intervals(level));
  }

  /// Index on the finest level of node k of level n.
  std::int64_t finest_index(int level, std::int64_t k) const {
    check_level(level);
    return k << (max_level_ - level);
  }

  /// Node index of t on level n, or -1 if t is not a node of T_n.
  std::int64_t index_of(int level, double t) const {
    const double scaled = t / horizon_ * static_cast<double>(intervals(level));
    const double k = std::round(scaled);
    if (k < 0.0 || k > static_cast<double>(intervals(level))) return -1;
    if (std::abs(scaled - k) > 1e-9) return -1;
    return static_cast<std::int64_t>(k);
  }
  bool contains(int level, double t) const { return index_of(level, t) >= 0; }

  /// t' = min{u in T_n : u > t}, and T' = T.
  double successor(int level, double t) const {
    const auto k = index_of(level, t);
    if (k < 0) throw ValidationError("successor: time is not a node of the requested level");
    return k == intervals(level) ? horizon_ : time(level, k + 1);
  }

  void check_level(int level) const {
    if (level < 0 || level > max_level_)
      throw ValidationError("level " + std::to_string(level) + " exceeds partition max_level " +
                            std::to_string(max_level_));
  }

  friend bool operator==(const PartitionHierarchy&, const PartitionHierarchy&) = default;

 private:
  double horizon_;
  int max_level_;
};

/// A d-dimensional trajectory stored at every node of the finest partition,
/// linearly interpolated in between. Row k holds S(t_k).
template <typename Scalar>
class BasicSampledPath {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicSampledPath(PartitionHierarchy hierarchy, Matrix values, Flavor flavor)
      : hierarchy_(hierarchy), values_(std::move(values)), flavor_(flavor) {
    const int level = hierarchy_.max_level();
    if (values_.rows() != hierarchy_.nodes(level))
      throw ValidationError("path must hold one row per node of the finest partition");
    if (values_.cols() < 1) throw ValidationError("path dimension must be at least 1");
    if (!values_.allFinite()) throw ValidationError("path values must be finite");
    if (flavor_ == Flavor::positive && (values_.array() <= Scalar(0)).any())
      throw ValidationError("positive-flavor path has a non-positive coordinate");
  }

  const PartitionHierarchy& hierarchy() const { return hierarchy_; }
  int dimension() const { return static_cast<int>(values_.cols()); }
  Flavor flavor() const { return flavor_; }
  int level() const { return hierarchy_.max_level(); }
  const Matrix& values() const { return values_; }

  /// Value at node k of level n (exact, no interpolation).
  Vector node(int level, std::int64_t k) const {
    return values_.row(hierarchy_.finest_index(level, k)).transpose();
  }

  /// Rows restricted to the nodes of level n.
  Matrix on_level(int level) const {
    const auto n = hierarchy_.nodes(level);
    const auto stride = hierarchy_.finest_index(level, 1);
    Matrix out(n, values_.cols());
    for (std::int64_t k = 0; k < n; ++k) out.row(k) = values_.row(k * stride);
    return out;
  }

  /// S(t) with linear interpolation between finest nodes.
  Vector at(double t) const {
    if (t < 0.0 || t > hierarchy_.horizon()) throw DomainError("path evaluated outside [0, T]");
    const auto last = hierarchy_.intervals(level());
    const double scaled = t / hierarchy_.mesh(level());
    const double base = std::floor(scaled);
    const auto k = std::min<std::int64_t>(static_cast<std::int64_t>(base), last);
    const double w = scaled - static_cast<double>(k);
    if (k == last || w <= 1e-12) return values_.row(k).transpose();
    return ((Scalar(1) - Scalar(w)) * values_.row(k) + Scalar(w) * values_.row(k + 1)).transpose();
  }

 private:
  PartitionHierarchy hierarchy_;
  Matrix values_;
  Flavor flavor_;
};

using SampledPath = BasicSampledPath<double>;

/// Discrete covariations sum_{s in T_n, s' <= t} (S_i(s')-S_i(s))(S_j(s')-S_j(s))
/// on the nodes of T_n. Entry k is the partial sum over the first k intervals,
/// so curve(i, j)[k] is the covariation accumulated up to t_k.
template <typename Scalar>
class BasicCovariationCurve {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BasicCovariationCurve(int level, int dimension, Matrix curves, Matrix totals_by_level, Vector cauchy)
      : level_(level),
        dimension_(dimension),
        curves_(std::move(curves)),
        totals_(std::move(totals_by_level)),
        cauchy_(std::move(cauchy)) {}

  int level() const { return level_; }
  int dimension() const { return dimension_; }

  auto curve(int i, int j) const { return curves_.col(pair_index(i, j)); }
  Scalar at_horizon(int i, int j) const { return curves_(curves_.rows() - 1, pair_index(i, j)); }

  /// <S_i,S_j>(T) computed on levels 1..n (row n-1 is level n).
  auto totals_by_level(int i, int j) const { return totals_.col(pair_index(i, j)); }

  /// max_t |curve_n(t) - curve_{n-1}(t)| over t in T_{n-1}; NaN at level 0.
  Scalar cauchy_increment(int i, int j) const { return cauchy_(pair_index(i, j)); }
  Scalar max_cauchy_increment() const { return cauchy_.size() ? cauchy_.maxCoeff() : Scalar(0); }

  /// Covariation matrix at T.
  Matrix matrix_at_horizon() const {
    Matrix m(dimension_, dimension_);
    for (int i = 0; i < dimension_; ++i)
      for (int j = 0; j < dimension_; ++j) m(i, j) = at_horizon(i, j);
    return m;
  }

  int pair_index(int i, int j) const {
    if (i < 0 || j < 0 || i >= dimension_ || j >= dimension_)
      throw ValidationError("covariation index out of range");
    if (i > j) std::swap(i, j);
    return i * dimension_ - i * (i - 1) / 2 + (j - i);
  }

 private:
  int level_;
  int dimension_;
  Matrix curves_;
  Matrix totals_;
  Vector cauchy_;
};

using CovariationCurve = BasicCovariationCurve<double>;

namespace detail {

template <typename Derived>
auto cumulative_from_zero(const Eigen::MatrixBase<Derived>& increments) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(increments.size() + 1);
  out(0) = Scalar(0);
  for (Eigen::Index k = 0; k < increments.size(); ++k) out(k + 1) = out(k) + increments(k);
  return out;
}

}  // namespace detail

/// Quadratic covariation of `path` along T_n for every pair (i, j).
template <typename Scalar>
BasicCovariationCurve<Scalar> covariation(const BasicSampledPath<Scalar>& path, int level) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto& hierarchy = path.hierarchy();
  hierarchy.check_level(level);
  const int d = path.dimension();
  const int pairs = d * (d + 1) / 2;

  auto curves_on = [&](int n) {
    const Matrix on = path.on_level(n);
    const Matrix inc = on.bottomRows(on.rows() - 1) - on.topRows(on.rows() - 1);
    Matrix curves(on.rows(), pairs);
    int p = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j, ++p)
        curves.col(p) = detail::cumulative_from_zero(inc.col(i).cwiseProduct(inc.col(j)));
    return curves;
  };

  const Matrix curves = curves_on(level);
  Matrix totals(std::max(level, 1), pairs);
  totals.setZero();
  Matrix previous;
  for (int n = 1; n <= level; ++n) {
    Matrix current = n == level ? curves : curves_on(n);
    totals.row(n - 1) = current.row(current.rows() - 1);
    if (n == level - 1) previous = std::move(current);
  }
  if (level == 1) previous = curves_on(0);

  Vector cauchy(pairs);
  if (level == 0) {
    cauchy.setConstant(std::numeric_limits<Scalar>::quiet_NaN());
  } else {
    for (int p = 0; p < pairs; ++p) {
      Scalar worst(0);
      for (Eigen::Index k = 0; k < previous.rows(); ++k)
        worst = std::max(worst, Scalar(std::abs(curves(2 * k, p) - previous(k, p))));
      cauchy(p) = worst;
    }
  }
  return BasicCovariationCurve<Scalar>(level, d, curves, totals, cauchy);
}

/// Value curve of a Foellmer integral on the nodes of T_n.
template <typename Scalar>
struct BasicFollmerIntegral {
  int level = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;  // values(k) = sum over the first k intervals
  Scalar cauchy_increment = std::numeric_limits<Scalar>::quiet_NaN();
};

using FollmerIntegral = BasicFollmerIntegral<double>;

/// t -> sum_{s in T_n, s' <= t} xi(s) . (S(s') - S(s)), with xi sampled at the
/// left endpoints of T_n (row k = xi(t_k); 2^n or 2^n + 1 rows). The Cauchy
/// increment compares against the same integrand restricted to T_{n-1}.
template <typename Derived, typename Scalar = typename Derived::Scalar>
BasicFollmerIntegral<Scalar> follmer_integral(const Eigen::MatrixBase<Derived>& integrand,
                                              const BasicSampledPath<Scalar>& path, int level) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto& hierarchy = path.hierarchy();
  hierarchy.check_level(level);
  const auto intervals = hierarchy.intervals(level);
  if (integrand.cols() != path.dimension())
    throw ValidationError("integrand dimension does not match path dimension");
  if (integrand.rows() != intervals && integrand.rows() != intervals + 1)
    throw ValidationError("integrand must be sampled on the left endpoints of the level");

  auto sums = [&](int n, std::int64_t stride) {
    const Matrix on = path.on_level(n);
    const Matrix inc = on.bottomRows(on.rows() - 1) - on.topRows(on.rows() - 1);
    Vector terms(inc.rows());
    for (Eigen::Index k = 0; k < inc.rows(); ++k) terms(k) = integrand.row(k * stride).dot(inc.row(k));
    return detail::cumulative_from_zero(terms);
  };

  BasicFollmerIntegral<Scalar> out;
  out.level = level;
  out.values = sums(level, 1);
  if (level > 0) {
    const Vector coarse = sums(level - 1, 2);
    Scalar worst(0);
    for (Eigen::Index k = 0; k < coarse.size(); ++k)
      worst = std::max(worst, Scalar(std::abs(out.values(2 * k) - coarse(k))));
    out.cauchy_increment = worst;
  }
  return out;
}

/// A non-anticipative integrand: xi(t) as a function of time and S(t).
using Integrand = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x)>;

/// Samples an integrand at the left endpoints t_0..t_{2^n - 1} of T_n.
inline Eigen::MatrixXd sample_integrand(const Integrand& xi, const SampledPath& path, int level) {
  const auto& hierarchy = path.hierarchy();
  const auto intervals = hierarchy.intervals(level);
  Eigen::MatrixXd out(intervals, path.dimension());
  for (std::int64_t k = 0; k < intervals; ++k) {
    const Eigen::VectorXd value = xi(hierarchy.time(level, k), path.node(level, k));
    if (value.size() != path.dimension()) throw ValidationError("integrand returned wrong dimension");
    out.row(k) = value.transpose();
  }
  return out;
}

/// The quadratic strategies xi^{ij}: 2(S_i + S_j - K_ij) in coordinates i and j
/// when i != j, 2(S_i - K_ii) in coordinate i when i == j. Indices are 0-based.
class BasicStrategy {
 public:
  BasicStrategy(int dimension, int i, int j, double strike) : dimension_(dimension), i_(i), j_(j), strike_(strike) {
    if (i < 0 || j < 0 || i >= dimension || j >= dimension) throw ValidationError("strategy index out of range");
  }

  Eigen::VectorXd operator()(double /*t*/, const Eigen::VectorXd& x) const {
    if (x.size() != dimension_) throw ValidationError("strategy evaluated on wrong dimension");
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(dimension_);
    if (i_ == j_) {
      xi(i_) = 2.0 * (x(i_) - strike_);
    } else {
      const double w = 2.0 * (x(i_) + x(j_) - strike_);
      xi(i_) = w;
      xi(j_) = w;
    }
    return xi;
  }

  int i() const { return i_; }
  int j() const { return j_; }
  double strike() const { return strike_; }

 private:
  int dimension_;
  int i_;
  int j_;
  double strike_;
};

inline BasicStrategy basic_strategy(int dimension, int i, int j, double strike) {
  return BasicStrategy(dimension, i, j, strike);
}

/// Overload taking the full strike matrix, which must be symmetric.
inline BasicStrategy basic_strategy(int i, int j, const Eigen::MatrixXd& strikes) {
  if (strikes.rows() != strikes.cols()) throw ValidationError("strike matrix must be square");
  if ((strikes - strikes.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw ValidationError("strike matrix must be symmetric");
  const int d = static_cast<int>(strikes.rows());
  if (i < 0 || j < 0 || i >= d || j >= d) throw ValidationError("strategy index out of range");
  return BasicStrategy(d, i, j, strikes(i, j));
}

struct ItoIdentityCheck {
  double max_abs_error = 0.0;
  double max_relative_error = 0.0;  // relative to the largest term at that node
};

/// Compares the level-n Foellmer integral of xi^{ij} with the discrete Ito
/// expansion (A(t) - K)^2 - (A(0) - K)^2 - sum_{k,l in {i,j}} <S_k,S_l>(t), where
/// A = S_i (i == j) or S_i + S_j, at every node of T_n. Exact algebra.
inline ItoIdentityCheck ito_identity_check(const SampledPath& path, int level, int i, int j, double strike) {
  const BasicStrategy xi(path.dimension(), i, j, strike);
  const auto integral = follmer_integral(sample_integrand(xi, path, level), path, level);
  const auto qv = covariation(path, level);
  const Eigen::MatrixXd on = path.on_level(level);
  const auto quadratic = [&](Eigen::Index k) {
    if (i == j) return qv.curve(i, i)(k);
    return qv.curve(i, i)(k) + 2.0 * qv.curve(i, j)(k) + qv.curve(j, j)(k);
  };
  const auto shifted = [&](Eigen::Index k) { return (i == j ? on(k, i) : on(k, i) + on(k, j)) - strike; };
  const double a0 = shifted(0);
  ItoIdentityCheck check;
  for (Eigen::Index k = 0; k < on.rows(); ++k) {
    const double a = shifted(k);
    const double expansion = a * a - a0 * a0 - quadratic(k);
    const double error = std::abs(integral.values(k) - expansion);
    const double size = std::max({a * a, a0 * a0, std::abs(quadratic(k)), std::abs(integral.values(k))});
    check.max_abs_error = std::max(check.max_abs_error, error);
    if (size > 0.0) check.max_relative_error = std::max(check.max_relative_error, error / size);
  }
  return check;
}

// CSV with header `t,S1,...,Sd`, one row per finest node, 17 significant digits.
void write_path_csv(std::ostream& out, const SampledPath& path);
SampledPath read_path_csv(std::istream& in, Flavor flavor);

}  // namespace pathhedge
