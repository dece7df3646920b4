#include "chaoslab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#ifdef CHAOSLAB_USE_LAPACKE
#include <lapacke.h>
#else
#include <Eigen/Eigenvalues>
#endif

namespace chaoslab {

namespace {

void fix_column_signs(Eigen::MatrixXd& q) {
    for (Eigen::Index col = 0; col < q.cols(); ++col) {
        Eigen::Index imax = 0;
        double amax = -1.0;
        for (Eigen::Index row = 0; row < q.rows(); ++row) {
            const double a = std::abs(q(row, col));
            if (a > amax) {
                amax = a;
                imax = row;
            }
        }
        if (q(imax, col) < 0.0) q.col(col) = -q.col(col);
    }
}

} // namespace

void eigh_inplace(Eigen::MatrixXd& a, Eigen::VectorXd& values, bool with_vectors,
                  const std::string& context) {
    const Eigen::Index n = a.rows();
    if (n != a.cols()) throw std::invalid_argument("eigh: matrix must be square (" + context + ")");
    values.resize(n);
    if (n == 0) return;

#ifdef CHAOSLAB_USE_LAPACKE
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, with_vectors ? 'V' : 'N', 'L',
                                    static_cast<lapack_int>(n), a.data(),
                                    static_cast<lapack_int>(n), values.data());
    if (info != 0) {
        std::ostringstream msg;
        msg << "dsyevd failed (info=" << info << ") for " << context;
        throw std::runtime_error(msg.str());
    }
#else
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        a, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("symmetric eigensolver did not converge for " + context);
    }
    values = solver.eigenvalues();
    if (with_vectors) a = solver.eigenvectors();
#endif
    if (with_vectors) fix_column_signs(a);
}

Spectrum diagonalize(const HamiltonianFamily& family, double lambda, bool with_vectors) {
    if (!(lambda >= 0.0)) throw std::domain_error("coupling must be non-negative");

    Spectrum out;
    out.lambda = lambda;
    out.cutoff = family.basis.cutoff;

    Eigen::MatrixXd h = family.at(lambda);
    std::ostringstream ctx;
    ctx << "H(lambda=" << lambda << ", K=" << family.basis.cutoff << ")";
    eigh_inplace(h, out.eigenvalues, with_vectors, ctx.str());
    if (with_vectors) out.eigenvectors = std::move(h);
    return out;
}

std::vector<int> ConvergedWindow::indices() const {
    std::vector<int> idx(static_cast<std::size_t>(d_c));
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

ConvergedWindow convergence_filter(std::span<const Spectrum> coarse,
                                   std::span<const Spectrum> refined, double tol) {
    if (coarse.empty() || refined.empty()) {
        throw std::invalid_argument("convergence filter needs a non-empty coupling grid");
    }
    if (coarse.size() != refined.size()) {
        throw std::invalid_argument("convergence filter: truncation runs cover different grids");
    }
    if (!(tol >= 0.0) && !std::isinf(tol)) {
        throw std::invalid_argument("convergence tolerance must be non-negative");
    }

    ConvergedWindow window;
    window.tol = tol;
    window.cutoff = coarse.front().cutoff;
    window.cutoff_refined = refined.front().cutoff;
    if (window.cutoff_refined <= window.cutoff) {
        throw std::invalid_argument("refined truncation must exceed the base truncation");
    }

    int d_c = static_cast<int>(
        std::min<Eigen::Index>(coarse.front().dim(), refined.front().dim()));
    for (std::size_t g = 0; g < coarse.size(); ++g) {
        const auto& lo = coarse[g];
        const auto& hi = refined[g];
        if (lo.lambda != hi.lambda) {
            throw std::invalid_argument("convergence filter: grid couplings do not match");
        }
        window.lambda_grid.push_back(lo.lambda);
        const int cap = static_cast<int>(std::min<Eigen::Index>(lo.dim(), hi.dim()));
        int first_bad = std::min(d_c, cap);
        for (int i = 0; i < first_bad; ++i) {
            if (!(std::abs(lo.eigenvalues(i) - hi.eigenvalues(i)) <= tol)) {
                first_bad = i;
                break;
            }
        }
        d_c = std::min(d_c, first_bad);
        if (d_c == 0) break;
    }

    window.d_c = d_c;
    if (d_c == 0) {
        window.warning = "no level met the truncation-convergence tolerance on this grid";
    }
    return window;
}

EigenbasisPerturbation transform_perturbation(const Spectrum& spec, const OperatorMatrix& v,
                                              int d_c) {
    if (!spec.has_vectors()) {
        throw std::invalid_argument("eigenbasis rotation needs eigenvectors");
    }
    if (d_c < 0 || d_c > spec.dim()) {
        throw std::invalid_argument("retained level count exceeds the spectrum dimension");
    }
    if (v.dim() != spec.dim()) {
        throw std::invalid_argument("coupling operator dimension does not match the spectrum");
    }

    const auto q = spec.eigenvectors.leftCols(d_c);
    Eigen::MatrixXd rotated = q.transpose() * (v.entries * q);
    // The rotation is symmetric up to rounding; make it exact.
    Eigen::MatrixXd sym = 0.5 * (rotated + rotated.transpose());

    EigenbasisPerturbation out;
    out.diag = sym.diagonal();
    out.entries = std::move(sym);
    return out;
}

} // namespace chaoslab
