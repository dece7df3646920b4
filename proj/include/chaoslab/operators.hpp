#pragma once

#include <Eigen/Core>
#include <string>

#include "chaoslab/basis.hpp"

namespace chaoslab {

/// Real symmetric operator expressed over a named basis.
struct OperatorMatrix {
    Eigen::MatrixXd entries;
    std::string basis_tag;

    Eigen::Index dim() const { return entries.rows(); }
};

/// Single-mode generator matrices over occupation states 0..n_max.
/// The ladder actions are S+|n> = (n+1)|n+1>, S-|n> = n|n-1>, and
/// Sz|n> = (n + 1/2)|n>; all entries are exact dyadic rationals.
Eigen::MatrixXd s_z_single_mode(int n_max);
Eigen::MatrixXd ladder_raise(int n_max); // S+
Eigen::MatrixXd ladder_lower(int n_max); // S-
Eigen::MatrixXd s_x_single_mode(int n_max); // (S+ + S-)/2
/// Sy = i * sy_imag_part; the real antisymmetric factor is returned.
Eigen::MatrixXd sy_imag_part(int n_max);

/// Sigma = Sz + Sx: symmetric tridiagonal, diagonal n + 1/2,
/// off-diagonal (n+1)/2 linking n and n+1.
OperatorMatrix sigma_single_mode(int n_max);

/// Free part of the family: diagonal with entry n + m + 1 per state.
OperatorMatrix build_h0(const ParityBasis& basis);

/// Coupling operator (Sigma^2 (x) Sigma + Sigma (x) Sigma^2)/2 reduced to
/// the even sector. Entries are the exact elements of the untruncated
/// operator between retained states; intermediate single-mode products are
/// formed at occupation cutoff K + 2, so no retained element is clipped.
OperatorMatrix build_v(const ParityBasis& basis);

/// H(lambda) = H0 + lambda * V over one parity basis.
struct HamiltonianFamily {
    OperatorMatrix h0;
    OperatorMatrix v;
    ParityBasis basis;

    Eigen::Index dim() const { return h0.dim(); }
    Eigen::MatrixXd at(double lambda) const { return h0.entries + lambda * v.entries; }
};

HamiltonianFamily make_hamiltonian(const ParityBasis& basis);

/// Dictionary between the oscillator coupling and the field-in-atom
/// parameters: E = -1/(2 eps^2), gamma^2 = lambda (-2E)^2, eta = lambda eps^2.
struct HydrogenMap {
    double lambda = 0.0;
    double epsilon = 0.0;
    double energy = 0.0;
    double gamma = 0.0;
    double eta = 0.0;
};

HydrogenMap hydrogen_map(double lambda, double epsilon);

} // namespace chaoslab
