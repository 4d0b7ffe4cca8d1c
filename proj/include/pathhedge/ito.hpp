#pragma once

#include "pathhedge/grid.hpp"
#include "pathhedge/local_vol.hpp"
#include "pathhedge/pathcalc.hpp"

namespace pathhedge {

/// (dv/dt + L v)(t, x) in price coordinates: L = 1/2 sum a_ij d_ij, with
/// x_i x_j weights for positive models.
double generator_term(const ValueField& v, const LocalVolModel& model, double t, const Eigen::VectorXd& x);

/// max over t in T_n of |v(t,S(t)) - v(0,S(0)) - int grad v dS - int (dv/dt + L v) ds|,
/// both integrals as left-endpoint sums on T_n. Throws DomainError if the
/// path leaves the domain of v.
double pathwise_ito_residual(const ValueField& v, const LocalVolModel& model, const SampledPath& path, int level);

}  // namespace pathhedge
