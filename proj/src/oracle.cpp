#include "chaoslab/oracle.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace chaoslab::oracle {

namespace {

void check_dimension(const char* where, Eigen::Index dim) {
    if (dim > kMaxDimension) {
        throw std::invalid_argument(std::string(where) + ": dimension " + std::to_string(dim) +
                                    " exceeds the cross-check cap of " +
                                    std::to_string(kMaxDimension));
    }
}

} // namespace

Eigen::MatrixXcd propagator(const Spectrum& spec, double t) {
    if (!spec.has_vectors()) {
        throw std::invalid_argument("propagator: spectrum carries no eigenvectors");
    }
    const Eigen::Index dim = static_cast<Eigen::Index>(spec.dim());
    check_dimension("propagator", dim);
    if (t == 0.0) {
        return Eigen::MatrixXcd::Identity(dim, dim);
    }

    Eigen::VectorXcd phases(dim);
    for (Eigen::Index n = 0; n < dim; ++n) {
        const double angle = -spec.eigenvalues[n] * t;
        phases(n) = std::complex<double>(std::cos(angle), std::sin(angle));
    }
    const Eigen::MatrixXcd q = spec.eigenvectors.cast<std::complex<double>>();
    return q * phases.asDiagonal() * q.transpose();
}

double state_averaged_fidelity(const Eigen::MatrixXcd& u1, const Eigen::MatrixXcd& u2,
                               const Eigen::MatrixXd& q, const StateWeights& w) {
    const Eigen::Index dim = u1.rows();
    if (u1.cols() != dim || u2.rows() != dim || u2.cols() != dim) {
        throw std::invalid_argument("state_averaged_fidelity: propagators must be square and equal-sized");
    }
    if (q.rows() != dim) {
        throw std::invalid_argument("state_averaged_fidelity: eigenvector rows do not match propagator dimension");
    }
    const Eigen::Index levels = static_cast<Eigen::Index>(w.size());
    if (levels < 1 || levels > q.cols()) {
        throw std::invalid_argument("state_averaged_fidelity: weight count " +
                                    std::to_string(w.size()) +
                                    " does not fit the eigenvector count " + std::to_string(q.cols()));
    }
    check_dimension("state_averaged_fidelity", dim);

    const Eigen::MatrixXcd overlap = u1.adjoint() * u2;
    std::complex<double> trace = 0.0;
    for (Eigen::Index n = 0; n < levels; ++n) {
        const Eigen::VectorXcd state = q.col(n).cast<std::complex<double>>();
        trace += w.weights[static_cast<std::size_t>(n)] * state.dot(overlap * state);
    }
    return std::abs(trace);
}

double fd_susceptibility(const HamiltonianFamily& family, double lambda, double delta_lambda,
                         double t, const TemperatureSpec& temp, int d_c) {
    if (!(delta_lambda > 0.0)) {
        throw std::domain_error("fd_susceptibility: coupling step must be positive, got " +
                                std::to_string(delta_lambda));
    }
    if (!(t > 0.0)) {
        throw std::domain_error("fd_susceptibility: time scale must be positive, got " +
                                std::to_string(t));
    }
    if (t * delta_lambda > 1e-2) {
        throw std::invalid_argument(
            "fd_susceptibility: t * dl = " + std::to_string(t * delta_lambda) +
            " is too coarse for the quadratic fidelity expansion (need <= 1e-2)");
    }
    check_dimension("fd_susceptibility", static_cast<Eigen::Index>(family.dim()));

    const Spectrum here = diagonalize(family, lambda, /*with_vectors=*/true);
    const Spectrum there = diagonalize(family, lambda + delta_lambda, /*with_vectors=*/true);
    const Eigen::MatrixXcd u1 = propagator(here, t);
    const Eigen::MatrixXcd u2 = propagator(there, t);
    const StateWeights w = make_weights(here, d_c, temp);
    const double fidelity = state_averaged_fidelity(u1, u2, here.eigenvectors, w);
    return 2.0 * (1.0 - fidelity) / (delta_lambda * delta_lambda);
}

double richardson_susceptibility(const HamiltonianFamily& family, double lambda,
                                 double delta_lambda, double t, const TemperatureSpec& temp,
                                 int d_c) {
    const double coarse = fd_susceptibility(family, lambda, delta_lambda, t, temp, d_c);
    const double fine = fd_susceptibility(family, lambda, 0.5 * delta_lambda, t, temp, d_c);
    return 2.0 * fine - coarse;
}

} // namespace chaoslab::oracle
