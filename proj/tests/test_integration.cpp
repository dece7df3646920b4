#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <span>
#include <vector>

#include "chaoslab/levelstats.hpp"
#include "chaoslab/ofs.hpp"
#include "chaoslab/oracle.hpp"
#include "chaoslab/spectral.hpp"

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

std::vector<double> geometric_grid(double lo, double hi, int count) {
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double ratio = std::pow(hi / lo, 1.0 / (count - 1));
    double value = lo;
    for (double& g : grid) {
        g = value;
        value *= ratio;
    }
    grid.back() = hi;
    return grid;
}

} // namespace

TEST_CASE("a mid-size sweep is physically sane across the coupling range") {
    SweepConfig config;
    config.cutoff = 20;
    config.cutoff_refined = 24;
    config.lambdas = geometric_grid(1e-4, 1e-2, 6);
    config.times = {100.0};
    config.temps = {gibbs_at(1.0), gibbs_at(4.5), infinite_temp()};

    const SweepResult result = run_sweep(config);
    REQUIRE(result.errors.empty());
    REQUIRE(result.window.d_c >= 20);
    REQUIRE(result.points.size() == 6 * 3);

    for (const OfsPoint& p : result.points) {
        CAPTURE(p.lambda);
        CAPTURE(p.temp.label());
        CHECK(p.chi1 >= 0.0);
        CHECK(p.chi2 > 0.0);
        CHECK(std::isfinite(p.chi1));
        CHECK(std::isfinite(p.chi2));
    }

    // Warming the ensemble never suppresses the eigenvector-variation term:
    // at every coupling the T = 1, 4.5, infinity values come out ordered.
    for (std::size_t base = 0; base < result.points.size(); base += 3) {
        const double cold = result.points[base].chi1;
        const double warm = result.points[base + 1].chi1;
        const double hot = result.points[base + 2].chi1;
        const double slack = 1e-9 * std::max(1.0, hot);
        CAPTURE(result.points[base].lambda);
        CHECK(cold <= warm + slack);
        CHECK(warm <= hot + slack);
    }
}

TEST_CASE("sweep values agree with the fidelity oracle on a full window") {
    const int cutoff = 10;
    SweepConfig config;
    config.cutoff = cutoff;
    config.cutoff_refined = 12;
    config.lambdas = {1e-3};
    config.times = {5.0};
    config.temps = {infinite_temp(), gibbs_at(4.5)};
    config.d_c_fixed = 36; // the full even-sector dimension at this cutoff

    const SweepResult result = run_sweep(config);
    REQUIRE(result.errors.empty());
    REQUIRE(result.points.size() == 2);
    REQUIRE(result.points.front().d_c == 36);

    const HamiltonianFamily family = make_hamiltonian(build_basis(cutoff));
    REQUIRE(family.dim() == 36);
    for (const OfsPoint& p : result.points) {
        CAPTURE(p.temp.label());
        // Step small enough that the post-Richardson residual (quadratic in
        // the step) clears the 1e-3 gate; the fidelity deficit stays ~5e-5,
        // far above the rounding floor of the propagator products.
        const double measured =
            oracle::richardson_susceptibility(family, p.lambda, 1e-4 / p.t, p.t, p.temp, 36);
        const double decomposed = p.chi1 + p.chi2;
        CHECK(std::abs(measured - decomposed) <= 1e-3 * std::abs(decomposed));
    }
}

TEST_CASE("loosening the truncation tolerance never shrinks the window") {
    const std::vector<double> lambdas = geometric_grid(3e-4, 3e-3, 3);
    const HamiltonianFamily base = make_hamiltonian(build_basis(16));
    const HamiltonianFamily refined = make_hamiltonian(build_basis(20));

    std::vector<Spectrum> coarse;
    std::vector<Spectrum> fine;
    for (double lambda : lambdas) {
        coarse.push_back(diagonalize(base, lambda, false));
        Spectrum r = diagonalize(refined, lambda, false);
        r.eigenvalues.conservativeResize(base.dim());
        fine.push_back(std::move(r));
    }

    const int tight = convergence_filter(coarse, fine, 1e-8).d_c;
    const int medium = convergence_filter(coarse, fine, 1e-6).d_c;
    const int loose = convergence_filter(coarse, fine, 1e-3).d_c;
    CAPTURE(tight);
    CAPTURE(medium);
    CAPTURE(loose);
    CHECK(tight <= medium);
    CHECK(medium <= loose);
    CHECK(medium >= 10); // low levels are solidly converged at these couplings
}

TEST_CASE("spacing statistics cross from Poisson-like to Wigner-like") {
    // Same construction the statistics pipeline uses, at a truncation small
    // enough for a quick test. The KS ordering must flip between a weak and
    // a strong coupling; the acceptance harness repeats this at scale.
    // The 1e-3 window tolerance keeps level errors two orders below the
    // mean spacing (~0.15) while admitting enough high levels for the
    // strong-coupling sample to look Wigner-like.
    const HamiltonianFamily base = make_hamiltonian(build_basis(48));
    const HamiltonianFamily refined = make_hamiltonian(build_basis(52));

    auto spacing_sample = [&](double lambda, int& d_c_out) {
        std::vector<Spectrum> coarse{diagonalize(base, lambda, false)};
        Spectrum r = diagonalize(refined, lambda, false);
        r.eigenvalues.conservativeResize(base.dim());
        std::vector<Spectrum> fine{std::move(r)};
        const ConvergedWindow window = convergence_filter(coarse, fine, 1e-3);
        REQUIRE(window.d_c >= 200);
        d_c_out = window.d_c;
        return unfold(std::span<const double>(coarse.front().eigenvalues.data(),
                                              static_cast<std::size_t>(window.d_c)));
    };

    int d_weak = 0;
    const SpacingSample weak = spacing_sample(2.5e-4, d_weak);
    const double weak_poisson = ks_distance(weak, Reference::poisson);
    const double weak_wigner = ks_distance(weak, Reference::wigner);
    CAPTURE(d_weak);
    CAPTURE(weak_poisson);
    CAPTURE(weak_wigner);
    CHECK(weak_poisson < weak_wigner);

    int d_strong = 0;
    const SpacingSample strong = spacing_sample(1e-2, d_strong);
    const double strong_poisson = ks_distance(strong, Reference::poisson);
    const double strong_wigner = ks_distance(strong, Reference::wigner);
    CAPTURE(d_strong);
    CAPTURE(strong_poisson);
    CAPTURE(strong_wigner);
    CHECK(strong_wigner < strong_poisson);
}

TEST_CASE("partial sums plateau inside the converged window at scale") {
    SweepConfig config;
    config.cutoff = 24;
    config.cutoff_refined = 28;
    config.lambdas = {1e-2};
    config.times = {100.0};
    config.temps = {gibbs_at(4.5)};
    config.partial_sum_lambdas = {1e-2};
    config.partial_sum_temperature = 4.5;
    config.partial_sum_time = 100.0;

    const SweepResult result = run_sweep(config);
    REQUIRE(result.errors.empty());
    REQUIRE(result.curves.size() == 1);
    const PartialSumCurve& curve = result.curves.front();
    REQUIRE(curve.values.size() >= 20);

    // The tail of the curve must be flat: the retained window carries the
    // whole double sum, later levels only polish it.
    const double final_value = curve.values.back();
    REQUIRE(final_value > 0.0);
    const std::size_t tail_start = curve.values.size() - curve.values.size() / 10 - 1;
    for (std::size_t d = tail_start; d < curve.values.size(); ++d) {
        CHECK(std::abs(curve.values[d] - final_value) <= 0.05 * final_value);
    }

    // And the curve's endpoint is the sweep's own value at that coupling.
    CHECK(std::abs(curve.values.back() - result.points.front().chi1) <=
          1e-10 * std::max(1.0, std::abs(result.points.front().chi1)));
}
