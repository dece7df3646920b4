#include "chaoslab/ofs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "chaoslab/kernels/ofs_kernels.hpp"
#include "chaoslab/operators.hpp"

namespace chaoslab {

namespace {

void require_time(double t) {
    if (!(t > 0.0)) {
        throw std::domain_error("gap kernel: time scale must be positive, got " +
                                std::to_string(t));
    }
}

/// Unnormalized Gibbs factors exp(-beta (E_n - E_min)). The shift by the
/// smallest retained energy keeps every exponent non-positive, so the
/// factors stay in (0, 1] and the largest is exactly 1.
std::vector<double> shifted_boltzmann(const Eigen::VectorXd& energies, int d_c, double beta) {
    const double shift = *std::min_element(energies.data(), energies.data() + d_c);
    std::vector<double> u(static_cast<std::size_t>(d_c));
    for (int n = 0; n < d_c; ++n) {
        u[static_cast<std::size_t>(n)] = std::exp(-beta * (energies[n] - shift));
    }
    return u;
}

struct HalfAngles {
    std::vector<double> sin_half;
    std::vector<double> cos_half;
};

HalfAngles half_angles(const Eigen::VectorXd& energies, int d_c, double t) {
    HalfAngles h;
    h.sin_half.resize(static_cast<std::size_t>(d_c));
    h.cos_half.resize(static_cast<std::size_t>(d_c));
    for (int n = 0; n < d_c; ++n) {
        const double phase = 0.5 * t * energies[n];
        h.sin_half[static_cast<std::size_t>(n)] = std::sin(phase);
        h.cos_half[static_cast<std::size_t>(n)] = std::cos(phase);
    }
    return h;
}

void check_window(const char* where, int d_c, std::size_t available) {
    if (d_c < 1) {
        throw std::invalid_argument(std::string(where) + ": converged window must hold at least one level");
    }
    if (static_cast<std::size_t>(d_c) > available) {
        throw std::invalid_argument(std::string(where) + ": window size " + std::to_string(d_c) +
                                    " exceeds available dimension " + std::to_string(available));
    }
}

} // namespace

double gap_kernel(double x, double t) {
    require_time(t);
    const kernels::GapKernelConstants k = kernels::gap_kernel_constants(t);
    if (std::abs(x) < k.x_switch) {
        return k.limit;
    }
    const double s = std::sin(0.5 * t * x);
    const double r = s / x;
    return k.scale * (r * r);
}

std::string TemperatureSpec::label() const {
    if (infinite) {
        return "inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", temperature);
    return buf;
}

StateWeights make_weights(const Spectrum& spec, int d_c, const TemperatureSpec& temp) {
    check_window("make_weights", d_c, static_cast<std::size_t>(spec.eigenvalues.size()));
    StateWeights w;
    if (temp.infinite) {
        w.mode = WeightMode::infinite_temperature;
        w.beta = 0.0;
        w.weights.assign(static_cast<std::size_t>(d_c), 1.0 / static_cast<double>(d_c));
        w.log_partition = std::log(static_cast<double>(d_c));
        return w;
    }
    if (!(temp.temperature > 0.0)) {
        throw std::domain_error("make_weights: temperature must be positive, got " +
                                std::to_string(temp.temperature));
    }
    w.mode = WeightMode::gibbs;
    w.beta = temp.beta();
    w.weights = shifted_boltzmann(spec.eigenvalues, d_c, w.beta);
    kernels::KahanAccumulator z;
    for (double value : w.weights) {
        z.add(value);
    }
    const double shift =
        *std::min_element(spec.eigenvalues.data(), spec.eigenvalues.data() + d_c);
    w.log_partition = std::log(z.sum) - w.beta * shift;
    for (double& value : w.weights) {
        value /= z.sum;
    }
    return w;
}

double chi1(const Spectrum& spec, const EigenbasisPerturbation& vp, const StateWeights& w,
            double t, int d_c) {
    require_time(t);
    check_window("chi1", d_c, static_cast<std::size_t>(spec.eigenvalues.size()));
    check_window("chi1", d_c, static_cast<std::size_t>(vp.dim()));
    if (w.size() != static_cast<std::size_t>(d_c)) {
        throw std::invalid_argument("chi1: weight vector length " + std::to_string(w.size()) +
                                    " does not match window size " + std::to_string(d_c));
    }

    const kernels::GapKernelConstants k = kernels::gap_kernel_constants(t);
    const HalfAngles angles = half_angles(spec.eigenvalues, d_c, t);
    const std::size_t count = static_cast<std::size_t>(d_c);

    kernels::KahanAccumulator outer;
    for (int n = 0; n < d_c; ++n) {
        const std::size_t un = static_cast<std::size_t>(n);
        // Column n of the symmetric rotated operator is contiguous and
        // equals row n, so it feeds the kernel directly.
        const double* row = vp.entries.col(n).data();
        const kernels::RowSums sums = kernels::gap_filtered_row_sums(
            row, spec.eigenvalues.data(), angles.sin_half.data(), angles.cos_half.data(), nullptr,
            count, spec.eigenvalues[n], angles.sin_half[un], angles.cos_half[un], t);
        // The kernel row includes m = n, where the filter takes its x = 0
        // limit; remove that term with the same expression ordering the
        // kernel used so a diagonal operator yields exactly zero.
        const double diag_term = (row[un] * row[un]) * k.limit;
        outer.add(w.weights[un] * (sums.plain - diag_term));
    }
    return 2.0 * std::numbers::pi * t * outer.sum;
}

double chi2(const EigenbasisPerturbation& vp, const StateWeights& w, double t) {
    require_time(t);
    const std::size_t count = w.size();
    if (count > static_cast<std::size_t>(vp.diag.size())) {
        throw std::invalid_argument("chi2: weight vector length " + std::to_string(count) +
                                    " exceeds operator dimension " + std::to_string(vp.diag.size()));
    }
    if (count == 0) {
        throw std::invalid_argument("chi2: converged window must hold at least one level");
    }
    const double mean = kernels::dot_compensated(w.weights.data(), vp.diag.data(), count);
    const double variance =
        kernels::weighted_centered_sumsq(w.weights.data(), vp.diag.data(), count, mean);
    return t * t * variance;
}

PartialSumCurve chi1_partial_sums(const Spectrum& spec, const EigenbasisPerturbation& vp,
                                  const TemperatureSpec& temp, double t, int d_c) {
    require_time(t);
    check_window("chi1_partial_sums", d_c, static_cast<std::size_t>(spec.eigenvalues.size()));
    check_window("chi1_partial_sums", d_c, static_cast<std::size_t>(vp.dim()));
    if (!temp.infinite && !(temp.temperature > 0.0)) {
        throw std::domain_error("chi1_partial_sums: temperature must be positive, got " +
                                std::to_string(temp.temperature));
    }

    // Unnormalized weights: cutting the window at d levels renormalizes the
    // same factors over the shorter range, so the running double sum can be
    // extended level by level and divided by the running normalization.
    std::vector<double> u;
    if (temp.infinite) {
        u.assign(static_cast<std::size_t>(d_c), 1.0);
    } else {
        u = shifted_boltzmann(spec.eigenvalues, d_c, temp.beta());
    }

    const HalfAngles angles = half_angles(spec.eigenvalues, d_c, t);
    const double two_pi_t = 2.0 * std::numbers::pi * t;

    PartialSumCurve curve;
    curve.lambda = spec.lambda;
    curve.t = t;
    curve.temp = temp;
    curve.values.resize(static_cast<std::size_t>(d_c));

    kernels::KahanAccumulator total; // sum_{n,m < d, n != m} u_n V_nm^2 G_t
    kernels::KahanAccumulator norm;  // sum_{n < d} u_n
    for (int d = 0; d < d_c; ++d) {
        const std::size_t ud = static_cast<std::size_t>(d);
        if (d > 0) {
            // Appending level d adds its row against the previous window
            // twice: once weighted by u_d (row sum) and once by the u_m of
            // the partners (the mirrored column), since V is symmetric and
            // the filter is even in the gap.
            const double* row = vp.entries.col(d).data();
            const kernels::RowSums sums = kernels::gap_filtered_row_sums(
                row, spec.eigenvalues.data(), angles.sin_half.data(), angles.cos_half.data(),
                u.data(), ud, spec.eigenvalues[d], angles.sin_half[ud], angles.cos_half[ud], t);
            total.add(u[ud] * sums.plain);
            total.add(sums.weighted);
        }
        norm.add(u[ud]);
        curve.values[ud] = two_pi_t * total.sum / norm.sum;
    }
    return curve;
}

SweepResult run_sweep(const SweepConfig& config, const std::function<void(int, int)>& progress) {
    if (config.lambdas.empty()) {
        throw std::invalid_argument("run_sweep: coupling grid is empty");
    }
    for (double lambda : config.lambdas) {
        if (!(lambda > 0.0)) {
            throw std::invalid_argument(
                "run_sweep: couplings must be positive (the uncoupled point is degenerate), got " +
                std::to_string(lambda));
        }
    }
    if (config.times.empty()) {
        throw std::invalid_argument("run_sweep: at least one time scale is required");
    }
    if (config.temps.empty()) {
        throw std::invalid_argument("run_sweep: at least one temperature is required");
    }
    if (config.cutoff_refined <= config.cutoff) {
        throw std::invalid_argument("run_sweep: refined truncation must exceed the base truncation");
    }

    const int n_lambda = static_cast<int>(config.lambdas.size());
    const int jobs = std::max(1, config.jobs);

    const HamiltonianFamily base = make_hamiltonian(build_basis(config.cutoff));
    const HamiltonianFamily refined = make_hamiltonian(build_basis(config.cutoff_refined));

    SweepResult result;
    result.spectra.resize(static_cast<std::size_t>(n_lambda));
    result.spectra_refined.resize(static_cast<std::size_t>(n_lambda));
    std::vector<std::string> pass1_errors(static_cast<std::size_t>(n_lambda));

    std::mutex progress_mutex;
    std::atomic<int> done{0};
    const int total_steps = 2 * n_lambda;
    auto report = [&](int steps) {
        if (!progress) {
            return;
        }
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(steps, total_steps);
    };

    auto run_pool = [&](const std::function<void(int)>& work) {
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n_lambda) {
                    return;
                }
                work(i);
                report(done.fetch_add(1) + 1);
            }
        };
        if (jobs == 1) {
            worker();
            return;
        }
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) {
            pool.emplace_back(worker);
        }
        for (std::thread& th : pool) {
            th.join();
        }
    };

    // Pass 1: eigenvalues only, at both truncations, for the convergence
    // filter. Eigenvectors are deliberately not kept across the grid; they
    // are recomputed point by point in pass 2 so peak memory stays at a
    // single dense factorization.
    run_pool([&](int i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        const double lambda = config.lambdas[ui];
        try {
            result.spectra[ui] = diagonalize(base, lambda, /*with_vectors=*/false);
            result.spectra_refined[ui] = diagonalize(refined, lambda, /*with_vectors=*/false);
        } catch (const std::exception& ex) {
            pass1_errors[ui] = "lambda=" + std::to_string(lambda) + ": " + ex.what();
            result.spectra[ui] = Spectrum{};
            result.spectra_refined[ui] = Spectrum{};
        }
    });

    std::vector<int> usable;
    std::vector<Spectrum> base_ok;
    std::vector<Spectrum> refined_ok;
    for (int i = 0; i < n_lambda; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        if (!pass1_errors[ui].empty()) {
            result.errors.push_back(pass1_errors[ui]);
            continue;
        }
        usable.push_back(i);
        base_ok.push_back(result.spectra[ui]);
        refined_ok.push_back(result.spectra_refined[ui]);
    }

    if (usable.empty()) {
        result.window.d_c = 0;
        result.window.tol = config.tol;
        result.window.cutoff = config.cutoff;
        result.window.cutoff_refined = config.cutoff_refined;
        result.window.warning = "no coupling on the grid could be diagonalized";
        return result;
    }

    result.window = convergence_filter(base_ok, refined_ok, config.tol);
    if (config.d_c_fixed > 0) {
        const int dim = static_cast<int>(base.dim());
        result.window.d_c = std::min(config.d_c_fixed, dim);
    }
    const int d_c = result.window.d_c;
    if (d_c < 2) {
        result.window.warning = result.window.warning.empty()
                                    ? "converged window is too small for susceptibility sums"
                                    : result.window.warning;
        return result;
    }

    // Grid points whose partial-sum curves are recorded: nearest usable
    // coupling to each request, deduplicated.
    std::vector<int> curve_indices;
    for (double target : config.partial_sum_lambdas) {
        int best = usable.front();
        double best_gap = std::abs(config.lambdas[static_cast<std::size_t>(best)] - target);
        for (int i : usable) {
            const double gap = std::abs(config.lambdas[static_cast<std::size_t>(i)] - target);
            if (gap < best_gap) {
                best = i;
                best_gap = gap;
            }
        }
        if (std::find(curve_indices.begin(), curve_indices.end(), best) == curve_indices.end()) {
            curve_indices.push_back(best);
        }
    }

    // Pass 2: eigenvectors at the base truncation, operator rotation, and
    // every (time, temperature) evaluation. Slots are preallocated so the
    // merge order is independent of scheduling.
    const std::size_t combos = config.times.size() * config.temps.size();
    std::vector<std::vector<OfsPoint>> point_slots(static_cast<std::size_t>(n_lambda));
    std::vector<std::vector<PartialSumCurve>> curve_slots(static_cast<std::size_t>(n_lambda));
    std::vector<std::string> pass2_errors(static_cast<std::size_t>(n_lambda));

    run_pool([&](int i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        if (!pass1_errors[ui].empty()) {
            return;
        }
        const double lambda = config.lambdas[ui];
        try {
            const Spectrum spec = diagonalize(base, lambda, /*with_vectors=*/true);
            const EigenbasisPerturbation vp = transform_perturbation(spec, base.v, d_c);
            std::vector<OfsPoint>& points = point_slots[ui];
            points.reserve(combos);
            for (double t : config.times) {
                for (const TemperatureSpec& temp : config.temps) {
                    const StateWeights w = make_weights(spec, d_c, temp);
                    OfsPoint p;
                    p.lambda = lambda;
                    p.t = t;
                    p.temp = temp;
                    p.chi1 = chi1(spec, vp, w, t, d_c);
                    p.chi2 = chi2(vp, w, t);
                    p.d_c = d_c;
                    p.cutoff = config.cutoff;
                    points.push_back(p);
                }
            }
            if (std::find(curve_indices.begin(), curve_indices.end(), i) != curve_indices.end()) {
                TemperatureSpec gibbs;
                gibbs.infinite = false;
                gibbs.temperature = config.partial_sum_temperature;
                curve_slots[ui].push_back(
                    chi1_partial_sums(spec, vp, gibbs, config.partial_sum_time, d_c));
            }
        } catch (const std::exception& ex) {
            pass2_errors[ui] = "lambda=" + std::to_string(lambda) + ": " + ex.what();
            point_slots[ui].clear();
            curve_slots[ui].clear();
        }
    });

    for (int i = 0; i < n_lambda; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        if (!pass2_errors[ui].empty()) {
            result.errors.push_back(pass2_errors[ui]);
            continue;
        }
        result.points.insert(result.points.end(), point_slots[ui].begin(), point_slots[ui].end());
        result.curves.insert(result.curves.end(), curve_slots[ui].begin(), curve_slots[ui].end());
    }
    return result;
}

} // namespace chaoslab
