#pragma once

#include <span>
#include <vector>

namespace chaoslab {

/// Nearest-neighbour spacing sample after unfolding: non-negative, unit
/// mean, one entry per adjacent eigenvalue pair of the source window.
struct SpacingSample {
    std::vector<double> spacings;
    int window = 0;        // local-mean window actually applied (clamped)
    double lambda = 0.0;   // provenance of the source spectrum
    int d_c = 0;
    int cutoff = 0;
};

/// Divide each raw spacing by the mean of the `window` raw spacings in a
/// centered block (the block slides but is clamped at the spectrum edges so
/// it always holds `window` spacings, or all of them when fewer exist),
/// then rescale the whole sample to exact unit mean.
SpacingSample unfold(std::span<const double> eigenvalues, int window = 25);

struct SpacingHistogram {
    std::vector<double> bin_edges; // bins + 1 ascending edges
    std::vector<double> densities; // probability density per bin
    std::vector<long> counts;
    long total = 0;
};

/// Density-normalized histogram over [0, s_max]; samples at or beyond
/// s_max land in the last bin so the densities always integrate to one.
SpacingHistogram histogram(const SpacingSample& sample, int bins = 25, double s_max = 4.0);

/// Unit-mean reference densities and their closed-form CDFs.
double reference_poisson(double s);
double reference_wigner(double s);
double poisson_cdf(double s);
double wigner_cdf(double s);

enum class Reference { poisson, wigner };

/// One-sample Kolmogorov-Smirnov statistic: sup-norm distance between the
/// sample's empirical CDF and the chosen reference CDF.
double ks_distance(const SpacingSample& sample, Reference reference);

} // namespace chaoslab
