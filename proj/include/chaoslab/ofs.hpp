#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chaoslab/spectral.hpp"

namespace chaoslab {

/// Spectral filter G_t(x) = 2 sin^2(t x / 2) / (pi t x^2), with the
/// removable singularity at x = 0 evaluated by its limit t / (2 pi).
/// Even in x, non-negative, unit integral over the real line.
double gap_kernel(double x, double t);

enum class WeightMode { gibbs, infinite_temperature };

struct TemperatureSpec {
    bool infinite = false;
    double temperature = 0.0; // meaningful when !infinite

    double beta() const { return infinite ? 0.0 : 1.0 / temperature; }
    std::string label() const;
};

/// Normalized state weights over the lowest d_c levels: Gibbs
/// exp(-beta E_n)/Z or the uniform 1/d_c limit.
struct StateWeights {
    WeightMode mode = WeightMode::infinite_temperature;
    double beta = 0.0;
    std::vector<double> weights;
    double log_partition = 0.0; // log Z(d_c, beta); log(d_c) for uniform

    std::size_t size() const { return weights.size(); }
};

StateWeights make_weights(const Spectrum& spec, int d_c, const TemperatureSpec& temp);

/// Eigenvector-variation term: 2 pi t * sum_n rho_n sum_{m != n}
/// V_nm^2 G_t(E_n - E_m), restricted to the lowest d_c levels.
double chi1(const Spectrum& spec, const EigenbasisPerturbation& vp, const StateWeights& w,
            double t, int d_c);

/// Eigenvalue-variation term: t^2 times the rho-weighted variance of the
/// diagonal elements V_nn.
double chi2(const EigenbasisPerturbation& vp, const StateWeights& w, double t);

/// chi1 partial sums: values[d-1] is the term evaluated with both level
/// sums (and the weight normalization) cut at the lowest d levels.
struct PartialSumCurve {
    double lambda = 0.0;
    double t = 0.0;
    TemperatureSpec temp;
    std::vector<double> values; // length d_c

    int d_c() const { return static_cast<int>(values.size()); }
};

PartialSumCurve chi1_partial_sums(const Spectrum& spec, const EigenbasisPerturbation& vp,
                                  const TemperatureSpec& temp, double t, int d_c);

/// One sweep evaluation record.
struct OfsPoint {
    double lambda = 0.0;
    double t = 0.0;
    TemperatureSpec temp;
    double chi1 = 0.0;
    double chi2 = 0.0;
    int d_c = 0;
    int cutoff = 0;
};

struct SweepConfig {
    int cutoff = 60;
    int cutoff_refined = 66;
    std::vector<double> lambdas;
    double tol = 1e-6;
    std::vector<double> times{100.0, 200.0, 400.0};
    std::vector<TemperatureSpec> temps;
    int d_c_fixed = -1; // auto (convergence filter) when negative
    int jobs = 1;

    // Partial-sum curves are recorded at the grid points nearest these
    // couplings, for every listed time, at one Gibbs temperature.
    std::vector<double> partial_sum_lambdas;
    double partial_sum_temperature = 4.5;
    double partial_sum_time = 100.0;
};

struct SweepResult {
    ConvergedWindow window;
    std::vector<OfsPoint> points;         // grid-major, then time, then mode
    std::vector<PartialSumCurve> curves;
    std::vector<Spectrum> spectra;         // per lambda, base truncation, values only
    std::vector<Spectrum> spectra_refined; // per lambda, refined truncation
    std::vector<std::string> errors;      // "lambda=...: message" entries
};

/// Full pipeline over a coupling grid: diagonalize at both truncations,
/// filter the converged window, rotate the coupling operator per grid
/// point, and evaluate both terms for every (time, temperature).
/// Per-coupling failures are recorded in `errors` and skipped; completed
/// points are kept. `progress`, when set, is called once per finished
/// coupling with (done, total).
SweepResult run_sweep(const SweepConfig& config,
                      const std::function<void(int, int)>& progress = {});

} // namespace chaoslab
