#include "chaoslab/basis.hpp"

#include <stdexcept>
#include <string>

namespace chaoslab {

std::optional<std::size_t> ParityBasis::index_of(int n, int m) const {
    if (n > m) std::swap(n, m);
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i].n == n && states[i].m == m) return i;
    }
    return std::nullopt;
}

std::size_t ParityBasis::even_dimension(int cutoff) {
    if (cutoff < 0) throw std::invalid_argument("basis cutoff must be non-negative");
    const std::size_t k = static_cast<std::size_t>(cutoff);
    if (k % 2 == 0) {
        const std::size_t h = k / 2 + 1;
        return h * h;
    }
    const std::size_t h = (k + 1) / 2;
    return h * (h + 1);
}

ParityBasis build_basis(int cutoff, Parity parity) {
    if (cutoff < 0) throw std::invalid_argument("basis cutoff must be non-negative");
    if (parity != Parity::even) {
        throw std::invalid_argument(
            "odd-parity basis is out of scope: only the even (swap-symmetric) sector is supported");
    }

    ParityBasis basis;
    basis.cutoff = cutoff;
    basis.parity = Parity::even;
    basis.states.reserve(ParityBasis::even_dimension(cutoff));

    // (total, n) ascending, n <= m.
    for (int total = 0; total <= cutoff; ++total) {
        for (int n = 0; 2 * n <= total; ++n) {
            basis.states.push_back({n, total - n});
        }
    }

    if (basis.states.size() != ParityBasis::even_dimension(cutoff)) {
        throw std::logic_error("even-sector dimension mismatch for K=" + std::to_string(cutoff));
    }
    return basis;
}

} // namespace chaoslab
