#pragma once

#include <Eigen/Dense>

#include "chaoslab/ofs.hpp"
#include "chaoslab/operators.hpp"
#include "chaoslab/spectral.hpp"

namespace chaoslab::oracle {

/// Largest dimension the matrix-exponential cross-check will handle; the
/// oracle exists to validate small instances, not to run production sizes.
inline constexpr int kMaxDimension = 256;

/// Unitary time-evolution operator U(t) = Q exp(-i E t) Q^T assembled from
/// a spectrum that carries eigenvectors.
Eigen::MatrixXcd propagator(const Spectrum& spec, double t);

/// Weighted eigenstate-averaged overlap |sum_n w_n <n| U1^dag U2 |n>|,
/// where |n> are the columns of q. The weights select (and normalize over)
/// the lowest w.size() columns.
double state_averaged_fidelity(const Eigen::MatrixXcd& u1, const Eigen::MatrixXcd& u2,
                               const Eigen::MatrixXd& q, const StateWeights& w);

/// Finite-difference susceptibility 2 (1 - F) / dl^2 from the fidelity
/// between evolutions at neighbouring couplings. Requires t * dl <= 1e-2 so
/// the quadratic expansion of the fidelity drop is trustworthy.
double fd_susceptibility(const HamiltonianFamily& family, double lambda, double delta_lambda,
                         double t, const TemperatureSpec& temp, int d_c);

/// Richardson-extrapolated finite difference, 2 est(dl/2) - est(dl), which
/// cancels the leading quadratic truncation error of the expansion.
double richardson_susceptibility(const HamiltonianFamily& family, double lambda,
                                 double delta_lambda, double t, const TemperatureSpec& temp,
                                 int d_c);

} // namespace chaoslab::oracle
