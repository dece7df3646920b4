#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "chaoslab/ofs.hpp"
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

Spectrum synthetic_spectrum(std::vector<double> energies) {
    Spectrum spec;
    spec.lambda = 0.1;
    spec.cutoff = 0;
    spec.eigenvalues = Eigen::Map<const Eigen::VectorXd>(energies.data(),
                                                         static_cast<Eigen::Index>(energies.size()));
    return spec;
}

EigenbasisPerturbation symmetric_perturbation(const Eigen::MatrixXd& entries) {
    EigenbasisPerturbation vp;
    vp.entries = entries;
    vp.diag = entries.diagonal();
    return vp;
}

/// Random symmetric operator plus a spectrum with gaps bounded away from
/// zero, so the direct-sine reference below carries no catastrophic
/// cancellation.
struct SyntheticSystem {
    Spectrum spec;
    EigenbasisPerturbation vp;
};

SyntheticSystem make_system(int dim, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    std::uniform_real_distribution<double> gap(0.05, 0.4);

    std::vector<double> energies(static_cast<std::size_t>(dim));
    double e = 0.0;
    for (double& value : energies) {
        value = e;
        e += gap(rng);
    }

    Eigen::MatrixXd r(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            r(i, j) = entry(rng);
        }
    }
    const Eigen::MatrixXd sym = 0.5 * (r + r.transpose());

    SyntheticSystem sys;
    sys.spec = synthetic_spectrum(energies);
    sys.vp = symmetric_perturbation(sym);
    return sys;
}

StateWeights manual_weights(std::vector<double> weights) {
    StateWeights w;
    w.mode = WeightMode::gibbs;
    w.beta = 0.0;
    w.weights = std::move(weights);
    w.log_partition = 0.0;
    return w;
}

/// Textbook evaluation of the eigenvector-variation term, one filter call
/// per pair, no shared trigonometry.
double chi1_direct(const Spectrum& spec, const EigenbasisPerturbation& vp, const StateWeights& w,
                   double t, int d_c) {
    double acc = 0.0;
    for (int n = 0; n < d_c; ++n) {
        for (int m = 0; m < d_c; ++m) {
            if (m == n) {
                continue;
            }
            const double v = vp.entries(n, m);
            acc += w.weights[static_cast<std::size_t>(n)] * v * v *
                   gap_kernel(spec.eigenvalues[n] - spec.eigenvalues[m], t);
        }
    }
    return 2.0 * std::numbers::pi * t * acc;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) < 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

/// Integrate an oscillatory function by pre-splitting into panels of about
/// one oscillation each, then adaptive Simpson inside every panel.
double integrate(const std::function<double(double)>& f, double a, double b, int panels,
                 double tol) {
    double total = 0.0;
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double pa = a + p * width;
        const double pb = (p + 1 == panels) ? b : pa + width;
        const double pm = 0.5 * (pa + pb);
        const double fa = f(pa);
        const double fm = f(pm);
        const double fb = f(pb);
        const double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
        total += adaptive_simpson(f, pa, pb, fa, fm, fb, whole, tol / panels, 24);
    }
    return total;
}

void check_close(double actual, double expected, double rel) {
    const double scale = std::max(1.0, std::abs(expected));
    CAPTURE(actual);
    CAPTURE(expected);
    CHECK(std::abs(actual - expected) <= rel * scale);
}

} // namespace

TEST_CASE("gap kernel limit, parity, zeros, and domain") {
    for (double t : {5.0, 100.0, 400.0}) {
        CAPTURE(t);
        CHECK(gap_kernel(0.0, t) == t / (2.0 * std::numbers::pi));
        // Below the switch threshold the limit is used verbatim.
        CHECK(gap_kernel(1e-8 / t, t) == t / (2.0 * std::numbers::pi));
        // Even function, exactly: negation only flips the sign of the sine.
        for (double x : {1e-4, 0.3, 2.7, 19.0}) {
            CHECK(gap_kernel(-x, t) == gap_kernel(x, t));
            CHECK(gap_kernel(x, t) >= 0.0);
        }
        // First zero of the filter sits at a gap of one full period.
        CHECK(gap_kernel(2.0 * std::numbers::pi / t, t) < 1e-30);
    }
    CHECK_THROWS_AS(gap_kernel(1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(gap_kernel(1.0, -5.0), std::domain_error);
}

TEST_CASE("gap kernel carries unit weight") {
    for (double t : {5.0, 100.0}) {
        CAPTURE(t);
        auto f = [t](double x) { return gap_kernel(x, t); };
        const double half = 200.0 / t;
        // ~64 oscillations inside the window; the tail beyond it holds
        // about 2/(200 pi) ~ 3.2e-3 of the mass.
        const double integral = integrate(f, -half, half, 128, 1e-7);
        CHECK(std::abs(integral - 1.0) <= 1e-2);
    }
}

TEST_CASE("two-level system reproduces the closed forms") {
    const Spectrum spec = synthetic_spectrum({0.0, 1.0});
    Eigen::MatrixXd entries(2, 2);
    entries << 0.0, 0.35, 0.35, 0.0;
    const EigenbasisPerturbation vp = symmetric_perturbation(entries);

    for (double t : {5.0, 100.0}) {
        CAPTURE(t);
        const StateWeights uniform = make_weights(spec, 2, infinite_temp());
        const double expected = 2.0 * std::numbers::pi * t * 0.35 * 0.35 * gap_kernel(1.0, t);
        check_close(chi1(spec, vp, uniform, t, 2), expected, 1e-12);

        // Both levels see the same single partner gap, so the value cannot
        // depend on how the weight is split between them.
        const StateWeights gibbs = make_weights(spec, 2, gibbs_at(0.7));
        check_close(chi1(spec, vp, gibbs, t, 2), expected, 1e-12);
    }
}

TEST_CASE("two-level eigenvalue-variation term matches the weighted variance") {
    Eigen::MatrixXd entries(2, 2);
    entries << 1.0, 0.2, 0.2, 0.0;
    const EigenbasisPerturbation vp = symmetric_perturbation(entries);
    const double t = 100.0;

    const StateWeights uniform = manual_weights({0.5, 0.5});
    check_close(chi2(vp, uniform, t), t * t / 4.0, 1e-12);

    // Gibbs weights w0, w1 give variance w0 w1 (V00 - V11)^2.
    const double beta = std::log(2.0);
    const double w0 = 1.0 / (1.0 + std::exp(-beta));
    const double w1 = 1.0 - w0;
    const StateWeights gibbs = manual_weights({w0, w1});
    check_close(chi2(vp, gibbs, t), t * t * w0 * w1, 1e-12);
}

TEST_CASE("a diagonal operator produces exactly zero chi1") {
    const Spectrum spec = synthetic_spectrum({0.0, 0.5, 1.2, 2.9});
    Eigen::MatrixXd entries = Eigen::MatrixXd::Zero(4, 4);
    entries.diagonal() << 0.4, -1.3, 2.2, 0.9;
    const EigenbasisPerturbation vp = symmetric_perturbation(entries);
    const StateWeights w = make_weights(spec, 4, infinite_temp());
    CHECK(chi1(spec, vp, w, 100.0, 4) == 0.0);
}

TEST_CASE("chi1 agrees with a direct per-pair evaluation") {
    const SyntheticSystem sys = make_system(40, 2024);
    for (double t : {5.0, 100.0}) {
        for (const TemperatureSpec& temp : {infinite_temp(), gibbs_at(4.5), gibbs_at(1.0)}) {
            CAPTURE(t);
            CAPTURE(temp.label());
            const StateWeights w = make_weights(sys.spec, 40, temp);
            const double fast = chi1(sys.spec, sys.vp, w, t, 40);
            const double direct = chi1_direct(sys.spec, sys.vp, w, t, 40);
            check_close(fast, direct, 1e-9);
        }
    }
}

TEST_CASE("weights are normalized in every mode") {
    const SyntheticSystem sys = make_system(25, 7);

    const StateWeights uniform = make_weights(sys.spec, 4, infinite_temp());
    REQUIRE(uniform.size() == 4);
    for (double w : uniform.weights) {
        CHECK(w == 0.25);
    }
    CHECK(uniform.log_partition == std::log(4.0));

    for (double temperature : {0.3, 1.0, 4.5, 80.0}) {
        CAPTURE(temperature);
        const StateWeights w = make_weights(sys.spec, 25, gibbs_at(temperature));
        double sum = 0.0;
        for (double value : w.weights) {
            CHECK(value > 0.0);
            sum += value;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        // Colder distributions put more mass on the ground state.
        CHECK(w.weights.front() == *std::max_element(w.weights.begin(), w.weights.end()));
    }

    // Near-zero temperature collapses onto the ground state; the shifted
    // exponentials underflow cleanly instead of overflowing.
    const StateWeights frozen = make_weights(sys.spec, 25, gibbs_at(1e-9));
    CHECK(frozen.weights.front() == 1.0);
    CHECK(frozen.weights[1] == 0.0);
}

TEST_CASE("gibbs log partition matches the closed form") {
    const Spectrum low = synthetic_spectrum({0.0, 1.0});
    const StateWeights a = make_weights(low, 2, gibbs_at(1.0));
    check_close(a.log_partition, std::log(1.0 + std::exp(-1.0)), 1e-14);

    // Shifting every level by 10 multiplies Z by exp(-10 beta).
    const Spectrum high = synthetic_spectrum({10.0, 11.0});
    const StateWeights b = make_weights(high, 2, gibbs_at(1.0));
    check_close(b.log_partition, std::log(1.0 + std::exp(-1.0)) - 10.0, 1e-12);
}

TEST_CASE("weight construction validates its input") {
    const Spectrum spec = synthetic_spectrum({0.0, 1.0, 2.0});
    CHECK_THROWS_AS(make_weights(spec, 0, infinite_temp()), std::invalid_argument);
    CHECK_THROWS_AS(make_weights(spec, 4, infinite_temp()), std::invalid_argument);
    CHECK_THROWS_AS(make_weights(spec, 2, gibbs_at(0.0)), std::domain_error);
    CHECK_THROWS_AS(make_weights(spec, 2, gibbs_at(-4.5)), std::domain_error);
}

TEST_CASE("chi1 is linear in the state weights, chi2 is not") {
    const SyntheticSystem sys = make_system(12, 99);
    const double t = 30.0;
    const StateWeights wa = make_weights(sys.spec, 12, gibbs_at(1.0));
    const StateWeights wb = make_weights(sys.spec, 12, infinite_temp());

    const double alpha = 0.3;
    std::vector<double> mixed(12);
    for (std::size_t i = 0; i < mixed.size(); ++i) {
        mixed[i] = alpha * wa.weights[i] + (1.0 - alpha) * wb.weights[i];
    }
    const StateWeights wm = manual_weights(mixed);

    const double blended = chi1(sys.spec, sys.vp, wm, t, 12);
    const double combined = alpha * chi1(sys.spec, sys.vp, wa, t, 12) +
                            (1.0 - alpha) * chi1(sys.spec, sys.vp, wb, t, 12);
    check_close(blended, combined, 1e-10);

    // Counterexample for the variance term: two point masses each have zero
    // variance, their even mixture does not.
    Eigen::MatrixXd entries = Eigen::MatrixXd::Zero(2, 2);
    entries.diagonal() << 1.0, 0.0;
    const EigenbasisPerturbation vp = symmetric_perturbation(entries);
    const double var_mix = chi2(vp, manual_weights({0.5, 0.5}), t);
    const double var_a = chi2(vp, manual_weights({1.0, 0.0}), t);
    const double var_b = chi2(vp, manual_weights({0.0, 1.0}), t);
    CHECK(var_a == 0.0);
    CHECK(var_b == 0.0);
    CHECK(var_mix == t * t / 4.0);
}

TEST_CASE("chi2 scales exactly as t squared") {
    const SyntheticSystem sys = make_system(18, 5);
    const StateWeights w = make_weights(sys.spec, 18, gibbs_at(4.5));
    for (double t : {1.0, 100.0, 256.0}) {
        CAPTURE(t);
        CHECK(chi2(sys.vp, w, 2.0 * t) == 4.0 * chi2(sys.vp, w, t));
    }
}

TEST_CASE("longer times concentrate the filter on small gaps") {
    double previous = 0.0;
    for (double t : {10.0, 100.0, 1000.0}) {
        const double ratio = gap_kernel(1e-6, t) / gap_kernel(1.3, t);
        CAPTURE(t);
        CHECK(ratio > 2.0 * previous);
        previous = ratio;
    }
}

TEST_CASE("partial sums converge onto the full evaluation") {
    const SyntheticSystem sys = make_system(30, 314);
    const double t = 20.0;
    for (const TemperatureSpec& temp : {gibbs_at(4.5), infinite_temp()}) {
        CAPTURE(temp.label());
        const PartialSumCurve curve = chi1_partial_sums(sys.spec, sys.vp, temp, t, 30);
        REQUIRE(curve.d_c() == 30);
        CHECK(curve.values[0] == 0.0); // a single level has no partner pairs
        for (double value : curve.values) {
            CHECK(value >= 0.0);
        }
        const StateWeights w = make_weights(sys.spec, 30, temp);
        check_close(curve.values.back(), chi1(sys.spec, sys.vp, w, t, 30), 1e-12);

        // Every prefix equals chi1 evaluated on the truncated window.
        for (int d : {2, 7, 19}) {
            const StateWeights wd = make_weights(sys.spec, d, temp);
            check_close(curve.values[static_cast<std::size_t>(d - 1)],
                        chi1(sys.spec, sys.vp, wd, t, d), 1e-12);
        }
    }
}

TEST_CASE("partial sums validate their input") {
    const SyntheticSystem sys = make_system(6, 1);
    CHECK_THROWS_AS(chi1_partial_sums(sys.spec, sys.vp, gibbs_at(4.5), -1.0, 6),
                    std::domain_error);
    CHECK_THROWS_AS(chi1_partial_sums(sys.spec, sys.vp, gibbs_at(0.0), 10.0, 6),
                    std::domain_error);
    CHECK_THROWS_AS(chi1_partial_sums(sys.spec, sys.vp, gibbs_at(4.5), 10.0, 7),
                    std::invalid_argument);
}

TEST_CASE("a small sweep fills every slot in deterministic order") {
    SweepConfig config;
    config.cutoff = 8;
    config.cutoff_refined = 10;
    config.lambdas = {1e-4, 3e-4, 1e-3, 3e-3};
    config.times = {5.0};
    config.temps = {infinite_temp(), gibbs_at(4.5)};
    config.partial_sum_lambdas = {3e-4};
    config.partial_sum_time = 5.0;
    config.partial_sum_temperature = 4.5;

    int last_done = 0;
    int last_total = 0;
    const SweepResult result = run_sweep(config, [&](int done, int total) {
        last_done = done;
        last_total = total;
    });

    CHECK(result.errors.empty());
    CHECK(last_done == last_total);
    CHECK(last_total == 8); // two passes over four couplings

    CHECK(result.window.cutoff == 8);
    CHECK(result.window.cutoff_refined == 10);
    CHECK(result.window.lambda_grid == config.lambdas);
    REQUIRE(result.window.d_c >= 2);
    CHECK(result.window.d_c <= 25);

    REQUIRE(result.points.size() == 8); // 4 couplings x 1 time x 2 temperatures
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        const OfsPoint& p = result.points[i];
        CHECK(p.lambda == config.lambdas[i / 2]);
        CHECK(p.t == 5.0);
        CHECK(p.temp.infinite == (i % 2 == 0));
        CHECK(p.d_c == result.window.d_c);
        CHECK(p.cutoff == 8);
        CHECK(p.chi1 >= 0.0);
        CHECK(p.chi2 >= 0.0);
    }

    REQUIRE(result.curves.size() == 1);
    CHECK(result.curves.front().lambda == 3e-4);
    CHECK(result.curves.front().t == 5.0);
    CHECK(result.curves.front().d_c() == result.window.d_c);

    REQUIRE(result.spectra.size() == 4);
    CHECK(result.spectra.front().cutoff == 8);
    CHECK(result.spectra_refined.front().cutoff == 10);
    CHECK(result.spectra.front().dim() == 25);
    CHECK(result.spectra_refined.front().dim() == 36);
}

TEST_CASE("sweep results do not depend on the worker count") {
    SweepConfig config;
    config.cutoff = 6;
    config.cutoff_refined = 8;
    config.lambdas = {2e-4, 8e-4, 2e-3};
    config.times = {5.0, 10.0};
    config.temps = {infinite_temp()};

    const SweepResult serial = run_sweep(config);
    config.jobs = 3;
    const SweepResult parallel = run_sweep(config);

    REQUIRE(serial.points.size() == parallel.points.size());
    for (std::size_t i = 0; i < serial.points.size(); ++i) {
        CHECK(serial.points[i].chi1 == parallel.points[i].chi1);
        CHECK(serial.points[i].chi2 == parallel.points[i].chi2);
    }
    CHECK(serial.window.d_c == parallel.window.d_c);
}

TEST_CASE("a fixed window override is honored") {
    SweepConfig config;
    config.cutoff = 6;
    config.cutoff_refined = 8;
    config.lambdas = {5e-4};
    config.times = {5.0};
    config.temps = {infinite_temp()};
    config.d_c_fixed = 3;

    const SweepResult result = run_sweep(config);
    REQUIRE(result.points.size() == 1);
    CHECK(result.points.front().d_c == 3);
    CHECK(result.window.d_c == 3);
}

TEST_CASE("sweep configuration is validated") {
    SweepConfig good;
    good.lambdas = {1e-4};
    good.times = {5.0};
    good.temps = {infinite_temp()};
    good.cutoff = 6;
    good.cutoff_refined = 8;

    SweepConfig c = good;
    c.lambdas.clear();
    CHECK_THROWS_AS(run_sweep(c), std::invalid_argument);

    c = good;
    c.lambdas = {0.0};
    CHECK_THROWS_AS(run_sweep(c), std::invalid_argument);

    c = good;
    c.times.clear();
    CHECK_THROWS_AS(run_sweep(c), std::invalid_argument);

    c = good;
    c.temps.clear();
    CHECK_THROWS_AS(run_sweep(c), std::invalid_argument);

    c = good;
    c.cutoff_refined = 6;
    CHECK_THROWS_AS(run_sweep(c), std::invalid_argument);
}
