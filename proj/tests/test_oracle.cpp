#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "chaoslab/oracle.hpp"

using namespace chaoslab;

namespace {

TemperatureSpec gibbs_at(double temperature) {
    TemperatureSpec spec;
    spec.infinite = false;
    spec.temperature = temperature;
    return spec;
}

TemperatureSpec infinite_temp() {
    TemperatureSpec spec;
    spec.infinite = true;
    return spec;
}

Spectrum manual_two_level(double e0, double e1) {
    Spectrum spec;
    spec.lambda = 0.0;
    spec.cutoff = 0;
    spec.eigenvalues = Eigen::Vector2d(e0, e1);
    spec.eigenvectors = Eigen::MatrixXd::Identity(2, 2);
    return spec;
}

/// Family whose free part and coupling are both diagonal, so the evolution
/// has a closed form and only the eigenvalue-variation term survives.
HamiltonianFamily diagonal_family() {
    HamiltonianFamily family = make_hamiltonian(build_basis(1));
    family.h0.entries = Eigen::MatrixXd::Zero(2, 2);
    family.h0.entries.diagonal() << 0.0, 1.0;
    family.v.entries = Eigen::MatrixXd::Zero(2, 2);
    family.v.entries.diagonal() << 0.3, -0.2;
    return family;
}

} // namespace

TEST_CASE("zero time gives the identity exactly") {
    const Spectrum spec = manual_two_level(0.37, 2.11);
    const Eigen::MatrixXcd u = oracle::propagator(spec, 0.0);
    CHECK(u(0, 0) == std::complex<double>(1.0, 0.0));
    CHECK(u(1, 1) == std::complex<double>(1.0, 0.0));
    CHECK(u(0, 1) == std::complex<double>(0.0, 0.0));
    CHECK(u(1, 0) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("diagonal spectra evolve by pure phases") {
    const Spectrum spec = manual_two_level(1.0, 2.0);
    const Eigen::MatrixXcd u = oracle::propagator(spec, std::numbers::pi);
    // exp(-i pi) = -1, exp(-2 i pi) = +1.
    CHECK(std::abs(u(0, 0) - std::complex<double>(-1.0, 0.0)) <= 1e-15);
    CHECK(std::abs(u(1, 1) - std::complex<double>(1.0, 0.0)) <= 1e-15);
    CHECK(std::abs(u(0, 1)) == 0.0);
    CHECK(std::abs(u(1, 0)) == 0.0);
}

TEST_CASE("the propagator is unitary and obeys the group law") {
    const HamiltonianFamily family = make_hamiltonian(build_basis(4));
    const Spectrum spec = diagonalize(family, 2e-3);
    const Eigen::Index dim = spec.dim();
    REQUIRE(dim == 9);

    const Eigen::MatrixXcd u = oracle::propagator(spec, 7.3);
    const Eigen::MatrixXcd gram = u.adjoint() * u;
    CHECK((gram - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff() <= 1e-10);

    const Eigen::MatrixXcd ua = oracle::propagator(spec, 2.6);
    const Eigen::MatrixXcd ub = oracle::propagator(spec, 4.7);
    CHECK((ua * ub - oracle::propagator(spec, 2.6 + 4.7)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("propagator input validation") {
    Spectrum no_vectors = manual_two_level(0.0, 1.0);
    no_vectors.eigenvectors.resize(0, 0);
    CHECK_THROWS_AS(oracle::propagator(no_vectors, 1.0), std::invalid_argument);

    Spectrum huge;
    huge.eigenvalues = Eigen::VectorXd::Zero(300);
    huge.eigenvectors = Eigen::MatrixXd::Identity(300, 300);
    CHECK_THROWS_AS(oracle::propagator(huge, 1.0), std::invalid_argument);
}

TEST_CASE("identical evolutions have unit fidelity") {
    const HamiltonianFamily family = make_hamiltonian(build_basis(4));
    const Spectrum spec = diagonalize(family, 1e-3);
    const Eigen::MatrixXcd u = oracle::propagator(spec, 11.0);
    const StateWeights w = make_weights(spec, 9, gibbs_at(4.5));
    const double f = oracle::state_averaged_fidelity(u, u, spec.eigenvectors, w);
    CHECK(std::abs(f - 1.0) <= 1e-12);
}

TEST_CASE("fidelity ignores a global phase and stays within bounds") {
    const HamiltonianFamily family = make_hamiltonian(build_basis(4));
    const Spectrum a = diagonalize(family, 1e-3);
    const Spectrum b = diagonalize(family, 3e-3);
    const Eigen::MatrixXcd u1 = oracle::propagator(a, 9.0);
    const Eigen::MatrixXcd u2 = oracle::propagator(b, 9.0);
    const StateWeights w = make_weights(a, 9, infinite_temp());

    const double f = oracle::state_averaged_fidelity(u1, u2, a.eigenvectors, w);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0 + 1e-12);

    const std::complex<double> phase(std::cos(0.8), std::sin(0.8));
    const double rotated = oracle::state_averaged_fidelity(u1, phase * u2, a.eigenvectors, w);
    CHECK(std::abs(rotated - f) <= 1e-12);
}

TEST_CASE("fidelity input validation") {
    const Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(3, 3);
    const Eigen::MatrixXcd wide = Eigen::MatrixXcd::Identity(3, 3).topRows(2);
    const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(3, 3);
    StateWeights w;
    w.weights = {0.5, 0.5};

    CHECK_THROWS_AS(oracle::state_averaged_fidelity(wide, u, q, w), std::invalid_argument);
    CHECK_THROWS_AS(
        oracle::state_averaged_fidelity(u, u, Eigen::MatrixXd::Identity(2, 2), w),
        std::invalid_argument);
    StateWeights empty;
    CHECK_THROWS_AS(oracle::state_averaged_fidelity(u, u, q, empty), std::invalid_argument);
    StateWeights overfull;
    overfull.weights = {0.25, 0.25, 0.25, 0.25};
    CHECK_THROWS_AS(oracle::state_averaged_fidelity(u, u, q, overfull), std::invalid_argument);
}

TEST_CASE("a commuting family reduces to the weighted variance closed form") {
    const HamiltonianFamily family = diagonal_family();
    const double lambda = 0.05;
    const double t = 5.0;
    // Large enough that the quadratic fidelity deficit (~1e-8) clears the
    // rounding floor of the propagator products; Richardson removes the
    // remaining quartic truncation term.
    const double delta = 1e-3 / t;

    for (const TemperatureSpec& temp : {infinite_temp(), gibbs_at(4.5), gibbs_at(1.0)}) {
        CAPTURE(temp.label());
        // Weights of the exact levels E = {0.3 lambda, 1 - 0.2 lambda}.
        double w0 = 0.5;
        double w1 = 0.5;
        if (!temp.infinite) {
            const double beta = temp.beta();
            const double gap = (1.0 - 0.2 * lambda) - 0.3 * lambda;
            const double z = 1.0 + std::exp(-beta * gap);
            w0 = 1.0 / z;
            w1 = 1.0 - w0;
        }
        const double mean = w0 * 0.3 + w1 * (-0.2);
        const double variance =
            w0 * (0.3 - mean) * (0.3 - mean) + w1 * (-0.2 - mean) * (-0.2 - mean);
        const double expected = t * t * variance;

        const double estimated =
            oracle::richardson_susceptibility(family, lambda, delta, t, temp, 2);
        CAPTURE(expected);
        CAPTURE(estimated);
        CHECK(std::abs(estimated - expected) <= 1e-6 * expected);
    }
}

TEST_CASE("finite-difference guard rails") {
    const HamiltonianFamily family = diagonal_family();
    const TemperatureSpec temp = infinite_temp();
    CHECK_THROWS_AS(oracle::fd_susceptibility(family, 0.05, 0.0, 5.0, temp, 2),
                    std::domain_error);
    CHECK_THROWS_AS(oracle::fd_susceptibility(family, 0.05, -1e-4, 5.0, temp, 2),
                    std::domain_error);
    CHECK_THROWS_AS(oracle::fd_susceptibility(family, 0.05, 1e-4, 0.0, temp, 2),
                    std::domain_error);
    // Step too coarse for the quadratic expansion: t * dl above 1e-2.
    CHECK_THROWS_AS(oracle::fd_susceptibility(family, 0.05, 1e-2, 5.0, temp, 2),
                    std::invalid_argument);
}

TEST_CASE("the cross-check refuses production dimensions") {
    const HamiltonianFamily family = make_hamiltonian(build_basis(45));
    REQUIRE(family.dim() == 552);
    CHECK_THROWS_AS(
        oracle::fd_susceptibility(family, 1e-3, 1e-5, 5.0, infinite_temp(), 10),
        std::invalid_argument);
}

TEST_CASE("the fidelity drop decomposes into the two susceptibility terms") {
    const HamiltonianFamily family = make_hamiltonian(build_basis(6));
    const int dim = static_cast<int>(family.dim());
    REQUIRE(dim == 16);
    const double lambda = 1e-3;
    const double t = 5.0;
    const double delta = 1e-4 / t;

    const Spectrum spec = diagonalize(family, lambda);
    const EigenbasisPerturbation vp = transform_perturbation(spec, family.v, dim);

    for (const TemperatureSpec& temp : {infinite_temp(), gibbs_at(4.5)}) {
        CAPTURE(temp.label());
        const StateWeights w = make_weights(spec, dim, temp);
        const double decomposed = chi1(spec, vp, w, t, dim) + chi2(vp, w, t);
        const double measured =
            oracle::richardson_susceptibility(family, lambda, delta, t, temp, dim);
        CAPTURE(decomposed);
        CAPTURE(measured);
        CHECK(std::abs(measured - decomposed) <= 1e-3 * std::abs(decomposed));
    }
}
