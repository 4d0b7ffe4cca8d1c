#pragma once

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <vector>

#include "pathhedge/errors.hpp"

namespace pathhedge {

/// Uniform axis in solver coordinates (log coordinates for positive models).
struct Axis {
  double lower = 0.0;
  double upper = 1.0;
  int nodes = 2;

  double step() const { return (upper - lower) / (nodes - 1); }
  double coordinate(int i) const { return lower + step() * i; }
  Eigen::VectorXd coordinates() const { return Eigen::VectorXd::LinSpaced(nodes, lower, upper); }
};

enum class BoundaryKind {
  extrapolate,  // PDE at the edge with one-sided stencils exact for quadratics
  zero_slope,   // homogeneous Neumann
  dirichlet,    // prescribed value(t)
};

struct Boundary {
  BoundaryKind kind = BoundaryKind::extrapolate;
  std::function<double(double t)> value;
};

struct GridSpec {
  std::vector<Axis> axes;
  int time_steps = 100;
  /// Fully implicit half-steps replacing the first Crank-Nicolson step.
  bool rannacher = true;
  /// Explicit 2D sub-steps per stored step; 0 picks the CFL minimum.
  int substeps = 0;
  Boundary lower;  // 1D only
  Boundary upper;  // 1D only
};

/// Value, gradient, Hessian and time derivative of v(t, x) in original
/// (price) coordinates.
struct ValueField {
  std::function<double(double, const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> hessian;
  std::function<double(double, const Eigen::VectorXd&)> time_derivative;
};

/// v on a uniform space-time grid over [t_start, t_end]. Slice m holds
/// v(t_start + m dt, nodes); 2D slices are flattened with axis 0 fastest.
class GridSolution {
 public:
  GridSolution(std::vector<Axis> axes, bool log_space, double t_start, double t_end,
               std::vector<Eigen::VectorXd> slices);

  int dimension() const { return static_cast<int>(axes_.size()); }
  const std::vector<Axis>& axes() const { return axes_; }
  bool log_space() const { return log_space_; }
  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  int time_steps() const { return static_cast<int>(slices_.size()) - 1; }
  double time_step() const { return (t_end_ - t_start_) / time_steps(); }
  double time(int m) const { return t_start_ + time_step() * m; }
  const Eigen::VectorXd& slice(int m) const { return slices_.at(m); }
  const std::vector<Eigen::VectorXd>& slices() const { return slices_; }
  Eigen::Index node_count() const { return slices_.front().size(); }

  /// Node coordinates in original space (exp applied for log grids).
  Eigen::VectorXd node_state(Eigen::Index flat) const;

  /// Solver coordinate of an original-space state; throws DomainError for
  /// non-positive coordinates on log grids.
  Eigen::VectorXd to_solver(const Eigen::VectorXd& x) const;

  bool covers(const Eigen::VectorXd& x) const;
  bool covers_interior(const Eigen::VectorXd& x) const;

  double value(double t, const Eigen::VectorXd& x) const;
  /// Central-difference gradient, chain-rule corrected on log grids.
  Eigen::VectorXd gradient(double t, const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(double t, const Eigen::VectorXd& x) const;
  double time_derivative(double t, const Eigen::VectorXd& x) const;

  double min_value() const;
  double max_abs_value() const;
  ValueField field() const;

  /// CSV `t,x1[,x2],v` for every `stride`-th slice (first and last always).
  void write_csv(std::ostream& out, int stride = 1) const;

 private:
  struct Stencil {
    Eigen::Index base[2] = {0, 0};
    double weight[2] = {0.0, 0.0};
  };
  Stencil locate(const Eigen::VectorXd& y, int margin) const;
  template <typename NodeFn>
  double interpolate(double t, const Stencil& s, NodeFn&& node_value) const;
  void time_bracket(double t, int& m, double& w) const;

  std::vector<Axis> axes_;
  bool log_space_;
  double t_start_;
  double t_end_;
  std::vector<Eigen::VectorXd> slices_;
};

}  // namespace pathhedge
