#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/operators.hpp"

namespace chaoslab {

/// Full spectrum of H(lambda) at one coupling and truncation.
/// Eigenvalues are ascending; eigenvector columns, when present, are
/// orthonormal with the sign fixed so the largest-magnitude component
/// of each column is positive.
struct Spectrum {
    double lambda = 0.0;
    int cutoff = 0;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors; // 0x0 when values-only

    Eigen::Index dim() const { return eigenvalues.size(); }
    bool has_vectors() const { return eigenvectors.size() > 0; }
};

/// Dense symmetric eigensolve. Throws on solver failure, carrying the
/// coupling and truncation in the message.
Spectrum diagonalize(const HamiltonianFamily& family, double lambda, bool with_vectors = true);

/// Eigensolve of an explicit symmetric matrix (used by the propagator and
/// synthetic fixtures). `context` names the matrix in error messages.
void eigh_inplace(Eigen::MatrixXd& a, Eigen::VectorXd& values, bool with_vectors,
                  const std::string& context);

/// Lowest levels stable under truncation growth across a coupling grid.
struct ConvergedWindow {
    int d_c = 0;
    double tol = 0.0;
    int cutoff = 0;
    int cutoff_refined = 0;
    std::vector<double> lambda_grid;
    std::string warning; // set when d_c == 0

    /// The retained indices are always the lowest d_c levels.
    std::vector<int> indices() const;
};

/// d_c = largest d such that |E_i(K) - E_i(K')| <= tol for every i < d at
/// every grid coupling. The two lists must cover the same grid in the same
/// order with cutoff_refined > cutoff. An empty grid is an error; a fully
/// divergent pair yields d_c = 0 with a warning, not an error.
ConvergedWindow convergence_filter(std::span<const Spectrum> coarse,
                                   std::span<const Spectrum> refined, double tol);

/// Coupling operator rotated into the energy eigenbasis, restricted to the
/// lowest d_c levels. Exactly symmetric (symmetrized after the rotation).
struct EigenbasisPerturbation {
    Eigen::MatrixXd entries; // d_c x d_c
    Eigen::VectorXd diag;    // entries.diagonal()

    Eigen::Index dim() const { return entries.rows(); }
};

EigenbasisPerturbation transform_perturbation(const Spectrum& spec, const OperatorMatrix& v,
                                              int d_c);

} // namespace chaoslab
