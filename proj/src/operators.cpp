#include "chaoslab/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace chaoslab {

namespace {

Eigen::MatrixXd zero(int n_max) {
    if (n_max < 0) throw std::invalid_argument("n_max must be non-negative");
    return Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
}

std::string even_tag(int cutoff) { return "even:K=" + std::to_string(cutoff); }

} // namespace

Eigen::MatrixXd s_z_single_mode(int n_max) {
    Eigen::MatrixXd m = zero(n_max);
    for (int n = 0; n <= n_max; ++n) m(n, n) = n + 0.5;
    return m;
}

Eigen::MatrixXd ladder_raise(int n_max) {
    Eigen::MatrixXd m = zero(n_max);
    for (int n = 0; n < n_max; ++n) m(n + 1, n) = n + 1.0;
    return m;
}

Eigen::MatrixXd ladder_lower(int n_max) {
    Eigen::MatrixXd m = zero(n_max);
    for (int n = 1; n <= n_max; ++n) m(n - 1, n) = n;
    return m;
}

Eigen::MatrixXd s_x_single_mode(int n_max) {
    Eigen::MatrixXd m = zero(n_max);
    for (int n = 0; n < n_max; ++n) {
        m(n, n + 1) = 0.5 * (n + 1);
        m(n + 1, n) = 0.5 * (n + 1);
    }
    return m;
}

Eigen::MatrixXd sy_imag_part(int n_max) {
    // Sy = (S+ - S-)/(2i) = i * W with W real antisymmetric.
    Eigen::MatrixXd m = zero(n_max);
    for (int n = 0; n < n_max; ++n) {
        m(n, n + 1) = 0.5 * (n + 1);
        m(n + 1, n) = -0.5 * (n + 1);
    }
    return m;
}

OperatorMatrix sigma_single_mode(int n_max) {
    Eigen::MatrixXd m = zero(n_max);
    for (int n = 0; n <= n_max; ++n) {
        m(n, n) = n + 0.5;
        if (n < n_max) {
            m(n, n + 1) = 0.5 * (n + 1);
            m(n + 1, n) = 0.5 * (n + 1);
        }
    }
    return {std::move(m), "mode:n_max=" + std::to_string(n_max)};
}

OperatorMatrix build_h0(const ParityBasis& basis) {
    const auto dim = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        m(i, i) = basis.states[static_cast<std::size_t>(i)].total() + 1.0;
    }
    return {std::move(m), even_tag(basis.cutoff)};
}

OperatorMatrix build_v(const ParityBasis& basis) {
    // Single-mode Sigma at occupation cutoff K + 2: Sigma^2 needs one
    // intermediate level beyond the largest retained occupation, so the
    // products below are the untruncated elements for all indices <= K.
    const int n_max = basis.cutoff + 2;
    const Eigen::MatrixXd sig = sigma_single_mode(n_max).entries;
    const Eigen::MatrixXd sig2 = sig * sig;

    const auto dim = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);

    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

    for (Eigen::Index row = 0; row < dim; ++row) {
        const auto [a, b] = basis.states[static_cast<std::size_t>(row)];
        for (Eigen::Index col = row; col < dim; ++col) {
            const auto [c, d] = basis.states[static_cast<std::size_t>(col)];
            // Sigma^2 shifts occupation by at most 2 and Sigma by 1.
            if (std::abs((a + b) - (c + d)) > 3) continue;

            // <a,b|V|c,d> + <a,b|V|d,c> over product states, with
            // V = (Sigma^2 (x) Sigma + Sigma (x) Sigma^2)/2.
            const double direct =
                0.5 * (sig2(a, c) * sig(b, d) + sig(a, c) * sig2(b, d));
            const double exchanged =
                0.5 * (sig2(a, d) * sig(b, c) + sig(a, d) * sig2(b, c));

            double pref = 1.0;
            if (a == b && c == d) pref = 0.5;
            else if (a == b || c == d) pref = inv_sqrt2;

            const double value = pref * (direct + exchanged);
            m(row, col) = value;
            m(col, row) = value;
        }
    }
    return {std::move(m), even_tag(basis.cutoff)};
}

HamiltonianFamily make_hamiltonian(const ParityBasis& basis) {
    HamiltonianFamily family{build_h0(basis), build_v(basis), basis};
    if (family.h0.dim() != family.v.dim()) {
        throw std::logic_error("free and coupling parts disagree on dimension");
    }
    return family;
}

HydrogenMap hydrogen_map(double lambda, double epsilon) {
    if (!(lambda >= 0.0)) throw std::domain_error("coupling must be non-negative");
    if (!(epsilon > 0.0)) throw std::domain_error("oscillator eigenvalue must be positive");
    HydrogenMap out;
    out.lambda = lambda;
    out.epsilon = epsilon;
    out.energy = -1.0 / (2.0 * epsilon * epsilon);
    out.gamma = std::sqrt(lambda) * (-2.0 * out.energy);
    out.eta = lambda * epsilon * epsilon;
    return out;
}

} // namespace chaoslab
