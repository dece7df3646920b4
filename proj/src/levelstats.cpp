#include "chaoslab/levelstats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "chaoslab/kernels/ofs_kernels.hpp"

namespace chaoslab {

namespace {

void require_nonnegative_argument(const char* name, double s) {
    if (s < 0.0) {
        throw std::domain_error(std::string(name) + ": spacing must be non-negative, got " +
                                std::to_string(s));
    }
}

} // namespace

SpacingSample unfold(std::span<const double> eigenvalues, int window) {
    if (window < 1) {
        throw std::invalid_argument("unfold: window must be at least 1, got " +
                                    std::to_string(window));
    }
    const std::size_t levels = eigenvalues.size();
    if (levels < 3) {
        throw std::invalid_argument("unfold: need at least 3 levels, got " +
                                    std::to_string(levels));
    }
    for (std::size_t i = 1; i < levels; ++i) {
        if (eigenvalues[i] < eigenvalues[i - 1]) {
            throw std::invalid_argument("unfold: eigenvalues must be sorted ascending");
        }
    }

    const std::size_t n = levels - 1; // raw spacing count
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        raw[i] = eigenvalues[i + 1] - eigenvalues[i];
    }

    // The sliding block cannot be wider than the sample itself.
    const std::size_t block = std::min<std::size_t>(static_cast<std::size_t>(window), n);

    // Prefix sums make every local mean O(1).
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + raw[i];
    }

    SpacingSample sample;
    sample.window = static_cast<int>(block);
    sample.spacings.resize(n);
    const std::size_t half = block / 2;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t start = (i > half) ? i - half : 0;
        start = std::min(start, n - block);
        const double local_mean = (prefix[start + block] - prefix[start]) / static_cast<double>(block);
        // A vanishing local mean means a fully degenerate block; those
        // spacings are all zero, so zero is the faithful unfolded value.
        sample.spacings[i] = (local_mean > 0.0) ? raw[i] / local_mean : 0.0;
    }

    kernels::KahanAccumulator total;
    for (double s : sample.spacings) {
        total.add(s);
    }
    const double mean = total.sum / static_cast<double>(n);
    if (!(mean > 0.0)) {
        throw std::invalid_argument("unfold: spectrum is fully degenerate, spacings carry no information");
    }
    for (double& s : sample.spacings) {
        s /= mean;
    }
    return sample;
}

SpacingHistogram histogram(const SpacingSample& sample, int bins, double s_max) {
    if (bins < 4) {
        throw std::invalid_argument("histogram: need at least 4 bins, got " + std::to_string(bins));
    }
    if (!(s_max > 0.0)) {
        throw std::invalid_argument("histogram: range end must be positive, got " +
                                    std::to_string(s_max));
    }
    if (sample.spacings.empty()) {
        throw std::invalid_argument("histogram: spacing sample is empty");
    }

    SpacingHistogram h;
    h.total = static_cast<long>(sample.spacings.size());
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    h.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    const double width = s_max / static_cast<double>(bins);
    for (int b = 0; b <= bins; ++b) {
        h.bin_edges[static_cast<std::size_t>(b)] = width * static_cast<double>(b);
    }
    for (double s : sample.spacings) {
        require_nonnegative_argument("histogram", s);
        // Overflow (and the exact right edge) accumulates in the last bin.
        const int b = (s >= s_max) ? bins - 1 : std::min(static_cast<int>(s / width), bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    h.densities.resize(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b) {
        h.densities[static_cast<std::size_t>(b)] =
            static_cast<double>(h.counts[static_cast<std::size_t>(b)]) /
            (static_cast<double>(h.total) * width);
    }
    return h;
}

double reference_poisson(double s) {
    require_nonnegative_argument("reference_poisson", s);
    return std::exp(-s);
}

double reference_wigner(double s) {
    require_nonnegative_argument("reference_wigner", s);
    const double quarter_pi = 0.25 * std::numbers::pi;
    return 0.5 * std::numbers::pi * s * std::exp(-quarter_pi * s * s);
}

double poisson_cdf(double s) {
    require_nonnegative_argument("poisson_cdf", s);
    return 1.0 - std::exp(-s);
}

double wigner_cdf(double s) {
    require_nonnegative_argument("wigner_cdf", s);
    const double quarter_pi = 0.25 * std::numbers::pi;
    return 1.0 - std::exp(-quarter_pi * s * s);
}

double ks_distance(const SpacingSample& sample, Reference reference) {
    if (sample.spacings.empty()) {
        throw std::invalid_argument("ks_distance: spacing sample is empty");
    }
    std::vector<double> sorted = sample.spacings;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double cdf =
            (reference == Reference::poisson) ? poisson_cdf(sorted[i]) : wigner_cdf(sorted[i]);
        const double below = cdf - static_cast<double>(i) / n;
        const double above = static_cast<double>(i + 1) / n - cdf;
        sup = std::max({sup, below, above});
    }
    return sup;
}

} // namespace chaoslab
