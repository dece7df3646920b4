#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace chaoslab {

/// One symmetrized two-oscillator occupation label, stored with n <= m.
struct OccupationPair {
    int n = 0;
    int m = 0;

    int total() const { return n + m; }
    bool operator==(const OccupationPair&) const = default;
};

enum class Parity { even, odd };

/// Ordered basis of swap-symmetric occupation states under the cutoff
/// n + m <= K. States are sorted by (n + m, n), so the listing is
/// deterministic and the diagonal of the free Hamiltonian is ascending.
struct ParityBasis {
    int cutoff = 0;
    Parity parity = Parity::even;
    std::vector<OccupationPair> states;

    std::size_t size() const { return states.size(); }

    /// Position of (n, m) in the ordered listing, if retained.
    std::optional<std::size_t> index_of(int n, int m) const;

    /// Closed-form dimension of the even sector at cutoff K:
    /// (K/2 + 1)^2 for even K, ((K+1)/2)((K+1)/2 + 1) for odd K.
    static std::size_t even_dimension(int cutoff);
};

/// Enumerate the even-parity basis. Odd parity is rejected: the analysis
/// is restricted to the even sector.
ParityBasis build_basis(int cutoff, Parity parity = Parity::even);

} // namespace chaoslab
