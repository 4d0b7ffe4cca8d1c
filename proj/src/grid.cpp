#include "pathhedge/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace pathhedge {

GridSolution::GridSolution(std::vector<Axis> axes, bool log_space, double t_start, double t_end,
                           std::vector<Eigen::VectorXd> slices)
    : axes_(std::move(axes)), log_space_(log_space), t_start_(t_start), t_end_(t_end), slices_(std::move(slices)) {
  if (axes_.empty() || axes_.size() > 2) throw ValidationError("grid must have one or two axes");
  Eigen::Index expected = 1;
  for (const auto& axis : axes_) {
    if (axis.nodes < 4 || !(axis.upper > axis.lower)) throw ValidationError("grid axis needs >= 4 nodes and upper > lower");
    expected *= axis.nodes;
  }
  if (!(t_end_ > t_start_)) throw ValidationError("grid solution needs t_end > t_start");
  if (slices_.size() < 2) throw ValidationError("grid solution needs at least one time step");
  for (const auto& s : slices_) {
    if (s.size() != expected) throw ValidationError("grid slice has the wrong number of nodes");
    if (!s.allFinite()) throw ValidationError("grid solution contains non-finite values");
  }
}

Eigen::VectorXd GridSolution::node_state(Eigen::Index flat) const {
  Eigen::VectorXd x(dimension());
  Eigen::Index rest = flat;
  for (int i = 0; i < dimension(); ++i) {
    const auto k = rest % axes_[i].nodes;
    rest /= axes_[i].nodes;
    const double y = axes_[i].coordinate(static_cast<int>(k));
    x(i) = log_space_ ? std::exp(y) : y;
  }
  return x;
}

Eigen::VectorXd GridSolution::to_solver(const Eigen::VectorXd& x) const {
  if (x.size() != dimension()) throw ValidationError("state dimension does not match the grid");
  if (!log_space_) return x;
  if ((x.array() <= 0.0).any()) throw DomainError("log grid queried at a non-positive state");
  return x.array().log().matrix();
}

GridSolution::Stencil GridSolution::locate(const Eigen::VectorXd& y, int margin) const {
  Stencil s;
  for (int i = 0; i < dimension(); ++i) {
    const auto& axis = axes_[i];
    const double h = axis.step();
    const double scaled = (y(i) - axis.lower) / h;
    const double lo = margin, hi = axis.nodes - 1 - margin;
    if (!(scaled >= lo - 1e-9) || !(scaled <= hi + 1e-9))
      throw DomainError("grid queried outside its " + std::string(margin ? "interior" : "domain") + " on axis " +
                        std::to_string(i + 1));
    const double clamped = std::clamp(scaled, lo, hi);
    auto base = static_cast<Eigen::Index>(std::floor(clamped));
    base = std::min<Eigen::Index>(base, axis.nodes - 2 - margin);
    s.base[i] = base;
    s.weight[i] = clamped - static_cast<double>(base);
  }
  return s;
}

void GridSolution::time_bracket(double t, int& m, double& w) const {
  const double dt = time_step();
  const double scaled = (t - t_start_) / dt;
  if (scaled < -1e-9 || scaled > time_steps() + 1e-9) throw DomainError("grid solution queried outside its time interval");
  const double clamped = std::clamp(scaled, 0.0, static_cast<double>(time_steps()));
  m = std::min(static_cast<int>(std::floor(clamped)), time_steps() - 1);
  w = clamped - m;
}

template <typename NodeFn>
double GridSolution::interpolate(double t, const Stencil& s, NodeFn&& node_value) const {
  int m = 0;
  double w = 0.0;
  time_bracket(t, m, w);
  auto spatial = [&](int slice) {
    if (dimension() == 1) {
      const auto i = s.base[0];
      const double w0 = s.weight[0];
      return (1 - w0) * node_value(slice, i) + (w0 > 0.0 ? w0 * node_value(slice, i + 1) : 0.0);
    }
    const auto n0 = axes_[0].nodes;
    double acc = 0.0;
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a) {
        const double wa = a ? s.weight[0] : 1 - s.weight[0];
        const double wb = b ? s.weight[1] : 1 - s.weight[1];
        if (wa * wb == 0.0) continue;
        acc += wa * wb * node_value(slice, (s.base[0] + a) + n0 * (s.base[1] + b));
      }
    return acc;
  };
  const double lower = spatial(m);
  return w > 0.0 ? (1 - w) * lower + w * spatial(m + 1) : lower;
}

double GridSolution::value(double t, const Eigen::VectorXd& x) const {
  const auto s = locate(to_solver(x), 0);
  return interpolate(t, s, [&](int m, Eigen::Index k) { return slices_[m](k); });
}

bool GridSolution::covers(const Eigen::VectorXd& x) const {
  try {
    (void)locate(to_solver(x), 0);
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

bool GridSolution::covers_interior(const Eigen::VectorXd& x) const {
  try {
    (void)locate(to_solver(x), 1);
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

Eigen::VectorXd GridSolution::gradient(double t, const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = to_solver(x);
  const auto s = locate(y, 1);
  Eigen::VectorXd g(dimension());
  const auto n0 = axes_[0].nodes;
  for (int i = 0; i < dimension(); ++i) {
    const Eigen::Index stride = i == 0 ? 1 : n0;
    const double h = axes_[i].step();
    g(i) = interpolate(t, s, [&](int m, Eigen::Index k) {
      return (slices_[m](k + stride) - slices_[m](k - stride)) / (2 * h);
    });
    if (log_space_) g(i) /= x(i);
  }
  return g;
}

Eigen::MatrixXd GridSolution::hessian(double t, const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = to_solver(x);
  const auto s = locate(y, 1);
  const int d = dimension();
  const auto n0 = axes_[0].nodes;
  Eigen::MatrixXd hess(d, d);
  Eigen::VectorXd first(d);
  for (int i = 0; i < d; ++i) {
    const Eigen::Index si = i == 0 ? 1 : n0;
    const double hi = axes_[i].step();
    first(i) = interpolate(t, s, [&](int m, Eigen::Index k) { return (slices_[m](k + si) - slices_[m](k - si)) / (2 * hi); });
    for (int j = i; j < d; ++j) {
      const Eigen::Index sj = j == 0 ? 1 : n0;
      const double hj = axes_[j].step();
      double value;
      if (i == j) {
        value = interpolate(t, s, [&](int m, Eigen::Index k) {
          const auto& v = slices_[m];
          return (v(k + si) - 2 * v(k) + v(k - si)) / (hi * hi);
        });
      } else {
        value = interpolate(t, s, [&](int m, Eigen::Index k) {
          const auto& v = slices_[m];
          return (v(k + si + sj) - v(k + si - sj) - v(k - si + sj) + v(k - si - sj)) / (4 * hi * hj);
        });
      }
      hess(i, j) = hess(j, i) = value;
    }
  }
  if (log_space_) {
    for (int i = 0; i < d; ++i) {
      hess(i, i) -= first(i);
      for (int j = 0; j < d; ++j) hess(i, j) /= x(i) * x(j);
    }
  }
  return hess;
}

double GridSolution::time_derivative(double t, const Eigen::VectorXd& x) const {
  const auto s = locate(to_solver(x), 0);
  int m = 0;
  double w = 0.0;
  time_bracket(t, m, w);
  const double dt = time_step();
  // Evaluate the slice difference m+1 - m at the bracketing slice pair only.
  const double probe = time(m);
  return interpolate(probe, s, [&](int slice, Eigen::Index k) {
    const int lo = std::min(slice, time_steps() - 1);
    return (slices_[lo + 1](k) - slices_[lo](k)) / dt;
  });
}

double GridSolution::min_value() const {
  double lo = slices_.front().minCoeff();
  for (const auto& s : slices_) lo = std::min(lo, s.minCoeff());
  return lo;
}

double GridSolution::max_abs_value() const {
  double hi = 0.0;
  for (const auto& s : slices_) hi = std::max(hi, s.cwiseAbs().maxCoeff());
  return hi;
}

ValueField GridSolution::field() const {
  ValueField f;
  f.value = [this](double t, const Eigen::VectorXd& x) { return value(t, x); };
  f.gradient = [this](double t, const Eigen::VectorXd& x) { return gradient(t, x); };
  f.hessian = [this](double t, const Eigen::VectorXd& x) { return hessian(t, x); };
  f.time_derivative = [this](double t, const Eigen::VectorXd& x) { return time_derivative(t, x); };
  return f;
}

void GridSolution::write_csv(std::ostream& out, int stride) const {
  out << 't';
  for (int i = 0; i < dimension(); ++i) out << ",x" << (i + 1);
  out << ",v\n";
  stride = std::max(stride, 1);
  char buffer[32];
  auto emit = [&](double v) {
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    out << buffer;
  };
  for (int m = 0; m <= time_steps(); ++m) {
    if (m % stride != 0 && m != time_steps()) continue;
    for (Eigen::Index k = 0; k < node_count(); ++k) {
      emit(time(m));
      const Eigen::VectorXd x = node_state(k);
      for (int i = 0; i < dimension(); ++i) {
        out << ',';
        emit(x(i));
      }
      out << ',';
      emit(slices_[m](k));
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing grid CSV");
}

}  // namespace pathhedge
