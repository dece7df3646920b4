// chaoslab: spectra, level statistics, and operator-fidelity
// susceptibility for the coupled-oscillator family.
//
// Verbs: spectrum | levelstats | ofs | oracle | all
//
// Option precedence: command-line flag > config file entry > profile
// preset > built-in default. The output root is special: an explicit
// --out beats the OFS_CHAOSLAB_OUT environment variable, which beats the
// config file, which beats the built-in "out".

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "chaoslab/basis.hpp"
#include "chaoslab/grid.hpp"
#include "chaoslab/io/csv.hpp"
#include "chaoslab/io/run_dir.hpp"
#include "chaoslab/io/svg.hpp"
#include "chaoslab/levelstats.hpp"
#include "chaoslab/ofs.hpp"
#include "chaoslab/operators.hpp"
#include "chaoslab/oracle.hpp"
#include "chaoslab/spectral.hpp"

namespace fs = std::filesystem;
using namespace chaoslab;

namespace {

// ---------------------------------------------------------------------------
// Small string utilities

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) {
        --end;
    }
    return s.substr(begin, end - begin);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            parts.push_back(item);
        }
    }
    return parts;
}

double parse_double(const std::string& text, const std::string& name) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(name + ": cannot parse '" + text + "' as a number");
    }
    if (used != text.size()) {
        throw std::invalid_argument(name + ": trailing junk in '" + text + "'");
    }
    return value;
}

long long parse_int(const std::string& text, const std::string& name) {
    std::size_t used = 0;
    long long value = 0;
    try {
        value = std::stoll(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(name + ": cannot parse '" + text + "' as an integer");
    }
    if (used != text.size()) {
        throw std::invalid_argument(name + ": trailing junk in '" + text + "'");
    }
    return value;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& name) {
    std::vector<double> values;
    for (const std::string& item : split_list(text)) {
        values.push_back(parse_double(item, name));
    }
    if (values.empty()) {
        throw std::invalid_argument(name + ": list is empty");
    }
    return values;
}

TemperatureSpec parse_temperature(const std::string& text) {
    TemperatureSpec spec;
    if (text == "inf") {
        spec.infinite = true;
        return spec;
    }
    spec.infinite = false;
    spec.temperature = parse_double(text, "temps");
    if (!(spec.temperature > 0.0)) {
        throw std::invalid_argument("temps: temperatures must be positive or 'inf', got " + text);
    }
    return spec;
}

std::string short_float(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", value);
    return buf;
}

std::string join_floats(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += io::format_float(values[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

struct Settings {
    std::string profile = "desk";
    int jobs = 1;
    fs::path out_root = "out";

    double lambda_min = 1e-5;
    double lambda_max = 1e-2;
    int lambda_count = 48;
    GridSpacing grid = GridSpacing::composite;

    std::vector<double> times{100.0, 200.0, 400.0};
    std::vector<std::string> temp_labels{"1", "2", "4.5", "inf"};
    std::vector<TemperatureSpec> temps;

    std::uint64_t seed = 1;
    int cutoff = 60;
    int cutoff_refined = 66;
    double tol = 1e-6;

    int window = 25;
    int bins = 25;
    std::vector<double> stats_lambdas{2.5e-4, 1.75e-3, 3e-3, 1e-2};
    std::vector<double> partial_lambdas{9.2e-5, 2.5e-4, 2.0e-3, 1.0e-2};
    double partial_temp = 4.5;
    double partial_time = 100.0;

    std::string synthetic; // levelstats source: "", uniform, poisson, wigner
    std::string fixture;   // oracle family: "", diagonal

    std::vector<double> lambdas; // resolved grid

    /// Canonical key for the run directory: every physics-relevant setting,
    /// sorted by name. Deliberately excludes the output root, the worker
    /// count, and the verb, so reruns and follow-up verbs share a directory.
    std::string canonical_key() const {
        std::map<std::string, std::string> kv;
        kv["bins"] = std::to_string(bins);
        kv["cutoff"] = std::to_string(cutoff);
        kv["cutoff_refined"] = std::to_string(cutoff_refined);
        kv["fixture"] = fixture;
        kv["grid"] = grid_spacing_name(grid);
        kv["lambda_count"] = std::to_string(lambda_count);
        kv["lambda_max"] = io::format_float(lambda_max);
        kv["lambda_min"] = io::format_float(lambda_min);
        kv["partial_lambdas"] = join_floats(partial_lambdas);
        kv["partial_t"] = io::format_float(partial_time);
        kv["partial_temp"] = io::format_float(partial_temp);
        kv["seed"] = std::to_string(seed);
        kv["stats_lambdas"] = join_floats(stats_lambdas);
        kv["synthetic"] = synthetic;
        std::string t_list;
        for (std::size_t i = 0; i < times.size(); ++i) {
            t_list += (i ? "," : "") + io::format_float(times[i]);
        }
        kv["t"] = t_list;
        std::string temp_list;
        for (std::size_t i = 0; i < temps.size(); ++i) {
            temp_list += (i ? "," : "") + temps[i].label();
        }
        kv["temps"] = temp_list;
        kv["tol"] = io::format_float(tol);
        kv["window"] = std::to_string(window);
        std::string key;
        for (const auto& [k, v] : kv) {
            key += k + "=" + v + ";";
        }
        return key;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["profile"] = profile;
        j["lambda_min"] = lambda_min;
        j["lambda_max"] = lambda_max;
        j["lambda_count"] = lambda_count;
        j["grid"] = grid_spacing_name(grid);
        j["t"] = times;
        nlohmann::json temp_json = nlohmann::json::array();
        for (const TemperatureSpec& temp : temps) {
            temp_json.push_back(temp.label());
        }
        j["temps"] = temp_json;
        j["seed"] = seed;
        j["cutoff"] = cutoff;
        j["cutoff_refined"] = cutoff_refined;
        j["tol"] = tol;
        j["window"] = window;
        j["bins"] = bins;
        j["stats_lambdas"] = stats_lambdas;
        j["partial_lambdas"] = partial_lambdas;
        j["partial_temp"] = partial_temp;
        j["partial_t"] = partial_time;
        j["synthetic"] = synthetic;
        j["fixture"] = fixture;
        return j;
    }
};

std::map<std::string, std::string> read_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in.good()) {
        throw std::runtime_error("config: cannot open " + path.string());
    }
    std::map<std::string, std::string> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t comment = line.find('#');
        if (comment != std::string::npos) {
            line = line.substr(0, comment);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config: line " + std::to_string(lineno) +
                                     " is not a key=value entry: '" + line + "'");
        }
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw std::runtime_error("config: line " + std::to_string(lineno) + " has an empty key");
        }
        entries[key] = value;
    }
    return entries;
}

/// Raw command-line values; CLI11 fills these and counts which were given.
struct CliValues {
    std::string config_path;
    std::string profile;
    int jobs = 1;
    std::string out;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    int lambda_count = 0;
    std::string grid;
    std::string times;
    std::string temps;
    std::uint64_t seed = 0;
    int cutoff = 0;
    int cutoff_refined = 0;
    double tol = 0.0;
    int window = 0;
    int bins = 0;
    std::string stats_lambdas;
    std::string partial_lambdas;
    double partial_temp = 0.0;
    double partial_time = 0.0;
    std::string synthetic;
    std::string fixture;
};

Settings resolve_settings(const CLI::App& app, const CliValues& cli) {
    std::map<std::string, std::string> file;
    if (app.count("--config") > 0) {
        file = read_config_file(cli.config_path);
    }

    const std::set<std::string> known = {
        "profile", "jobs", "out", "lambda-min", "lambda-max", "lambda-count",
        "grid", "t", "temps", "seed", "cutoff", "cutoff-refined", "tol",
        "window", "bins", "stats-lambdas", "partial-lambdas", "partial-temp",
        "partial-t", "synthetic", "fixture"};
    for (const auto& [key, value] : file) {
        if (known.find(key) == known.end()) {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }

    auto from_file = [&](const char* key) -> std::optional<std::string> {
        const auto it = file.find(key);
        if (it == file.end()) {
            return std::nullopt;
        }
        return it->second;
    };
    auto given = [&](const char* flag) { return app.count(flag) > 0; };

    Settings s;

    // Profile first: it supplies the preset for the truncation pair and the
    // grid resolution when nothing more specific is given.
    if (given("--profile")) {
        s.profile = cli.profile;
    } else if (auto v = from_file("profile")) {
        if (*v != "desk" && *v != "full") {
            throw std::invalid_argument("config: profile must be desk or full, got '" + *v + "'");
        }
        s.profile = *v;
    }
    const bool full = s.profile == "full";
    s.cutoff = full ? 120 : 60;
    s.cutoff_refined = full ? 126 : 66;
    s.lambda_count = full ? 96 : 48;

    if (given("--jobs")) {
        s.jobs = cli.jobs;
    } else if (auto v = from_file("jobs")) {
        s.jobs = static_cast<int>(parse_int(*v, "jobs"));
    }
    if (s.jobs < 1) {
        throw std::invalid_argument("jobs: need at least one worker");
    }

    // Output root: flag > environment > config file > default.
    if (given("--out")) {
        s.out_root = cli.out;
    } else if (const char* env = std::getenv("OFS_CHAOSLAB_OUT"); env != nullptr && *env != '\0') {
        s.out_root = env;
    } else if (auto v = from_file("out")) {
        s.out_root = *v;
    }

    auto pick_double = [&](const char* flag, const char* key, double cli_value,
                           double fallback) -> double {
        if (given(flag)) {
            return cli_value;
        }
        if (auto v = from_file(key)) {
            return parse_double(*v, key);
        }
        return fallback;
    };
    auto pick_int = [&](const char* flag, const char* key, int cli_value, int fallback) -> int {
        if (given(flag)) {
            return cli_value;
        }
        if (auto v = from_file(key)) {
            return static_cast<int>(parse_int(*v, key));
        }
        return fallback;
    };

    s.lambda_min = pick_double("--lambda-min", "lambda-min", cli.lambda_min, s.lambda_min);
    s.lambda_max = pick_double("--lambda-max", "lambda-max", cli.lambda_max, s.lambda_max);
    s.lambda_count = pick_int("--lambda-count", "lambda-count", cli.lambda_count, s.lambda_count);
    s.cutoff = pick_int("--cutoff", "cutoff", cli.cutoff, s.cutoff);
    s.cutoff_refined =
        pick_int("--cutoff-refined", "cutoff-refined", cli.cutoff_refined, s.cutoff_refined);
    s.tol = pick_double("--tol", "tol", cli.tol, s.tol);
    s.window = pick_int("--window", "window", cli.window, s.window);
    s.bins = pick_int("--bins", "bins", cli.bins, s.bins);
    s.partial_temp = pick_double("--partial-temp", "partial-temp", cli.partial_temp, s.partial_temp);
    s.partial_time = pick_double("--partial-t", "partial-t", cli.partial_time, s.partial_time);

    if (given("--grid")) {
        s.grid = parse_grid_spacing(cli.grid);
    } else if (auto v = from_file("grid")) {
        s.grid = parse_grid_spacing(*v);
    }

    if (given("--seed")) {
        s.seed = cli.seed;
    } else if (auto v = from_file("seed")) {
        s.seed = static_cast<std::uint64_t>(parse_int(*v, "seed"));
    }

    if (given("--t")) {
        s.times = parse_double_list(cli.times, "t");
    } else if (auto v = from_file("t")) {
        s.times = parse_double_list(*v, "t");
    }
    for (double t : s.times) {
        if (!(t > 0.0)) {
            throw std::invalid_argument("t: time scales must be positive");
        }
    }

    std::vector<std::string> temp_labels = s.temp_labels;
    if (given("--temps")) {
        temp_labels = split_list(cli.temps);
    } else if (auto v = from_file("temps")) {
        temp_labels = split_list(*v);
    }
    if (temp_labels.empty()) {
        throw std::invalid_argument("temps: list is empty");
    }
    s.temps.clear();
    for (const std::string& label : temp_labels) {
        s.temps.push_back(parse_temperature(label));
    }

    if (given("--stats-lambdas")) {
        s.stats_lambdas = parse_double_list(cli.stats_lambdas, "stats-lambdas");
    } else if (auto v = from_file("stats-lambdas")) {
        s.stats_lambdas = parse_double_list(*v, "stats-lambdas");
    }
    if (given("--partial-lambdas")) {
        s.partial_lambdas = parse_double_list(cli.partial_lambdas, "partial-lambdas");
    } else if (auto v = from_file("partial-lambdas")) {
        s.partial_lambdas = parse_double_list(*v, "partial-lambdas");
    }

    if (given("--synthetic")) {
        s.synthetic = cli.synthetic;
    } else if (auto v = from_file("synthetic")) {
        s.synthetic = *v;
    }
    if (!s.synthetic.empty() && s.synthetic != "uniform" && s.synthetic != "poisson" &&
        s.synthetic != "wigner") {
        throw std::invalid_argument("synthetic: must be uniform, poisson, or wigner");
    }
    if (given("--fixture")) {
        s.fixture = cli.fixture;
    } else if (auto v = from_file("fixture")) {
        s.fixture = *v;
    }
    if (!s.fixture.empty() && s.fixture != "diagonal") {
        throw std::invalid_argument("fixture: must be diagonal");
    }

    if (s.cutoff < 1 || s.cutoff_refined <= s.cutoff) {
        throw std::invalid_argument("cutoff: need cutoff >= 1 and cutoff-refined > cutoff");
    }

    s.lambdas = make_lambda_grid(s.lambda_min, s.lambda_max, s.lambda_count, s.grid);
    return s;
}

// ---------------------------------------------------------------------------
// Shared helpers

void merge_manifest(const io::RunPaths& paths, const Settings& s, const std::string& verb,
                    nlohmann::json verb_entry) {
    nlohmann::json manifest;
    if (fs::exists(paths.manifest)) {
        manifest = io::read_manifest(paths.manifest);
    }
    manifest["config_key"] = s.canonical_key();
    manifest["settings"] = s.to_json();
    manifest[verb] = std::move(verb_entry);
    io::write_manifest(paths.manifest, manifest);
}

/// Index-parallel loop with a deterministic result layout.
void parallel_for(int count, int jobs, const std::function<void(int)>& work) {
    if (jobs <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) {
            work(i);
        }
        return;
    }
    std::atomic<int> next{0};
    auto runner = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            work(i);
        }
    };
    std::vector<std::thread> pool;
    const int workers = std::min(jobs, count);
    pool.reserve(static_cast<std::size_t>(workers));
    for (int j = 0; j < workers; ++j) {
        pool.emplace_back(runner);
    }
    for (std::thread& th : pool) {
        th.join();
    }
}

std::string spectrum_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "lambda_%04d.csv", index);
    return buf;
}

const std::vector<std::string> kSpectrumHeader = {"level", "energy", "energy_refined"};

/// Try to reuse a previously written spectrum file. Returns both energy
/// columns when the file exists and is structurally sound.
bool load_spectrum_file(const fs::path& path, int expected_rows, Eigen::VectorXd& energy,
                        Eigen::VectorXd& energy_refined) {
    if (!fs::exists(path)) {
        return false;
    }
    try {
        const io::CsvTable table = io::read_csv(path);
        if (table.header != kSpectrumHeader ||
            table.rows.size() != static_cast<std::size_t>(expected_rows)) {
            return false;
        }
        energy.resize(expected_rows);
        energy_refined.resize(expected_rows);
        for (int i = 0; i < expected_rows; ++i) {
            const auto& row = table.rows[static_cast<std::size_t>(i)];
            if (parse_int(row[0], "level") != i) {
                return false;
            }
            energy[i] = parse_double(row[1], "energy");
            energy_refined[i] = parse_double(row[2], "energy_refined");
        }
        return true;
    } catch (const std::exception&) {
        return false; // malformed file: recompute and overwrite
    }
}

struct GridSpectra {
    std::vector<Spectrum> base;
    std::vector<Spectrum> refined;
    int reused = 0;
};

/// Diagonalize (or reload) the full coupling grid at both truncations and
/// persist one CSV per coupling. The refined column is clipped to the base
/// dimension; the convergence filter never looks past it.
GridSpectra solve_grid(const Settings& s, const fs::path& dir, bool write_files) {
    const HamiltonianFamily base_family = make_hamiltonian(build_basis(s.cutoff));
    const HamiltonianFamily refined_family = make_hamiltonian(build_basis(s.cutoff_refined));
    const int n = static_cast<int>(s.lambdas.size());
    const int dim = static_cast<int>(base_family.dim());

    GridSpectra out;
    out.base.resize(static_cast<std::size_t>(n));
    out.refined.resize(static_cast<std::size_t>(n));
    std::atomic<int> reused{0};
    std::atomic<int> done{0};
    std::mutex log_mutex;

    parallel_for(n, s.jobs, [&](int i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        const double lambda = s.lambdas[ui];
        const fs::path file = dir / spectrum_file_name(i);

        Eigen::VectorXd energy;
        Eigen::VectorXd energy_refined;
        if (write_files && load_spectrum_file(file, dim, energy, energy_refined)) {
            Spectrum b;
            b.lambda = lambda;
            b.cutoff = s.cutoff;
            b.eigenvalues = energy;
            Spectrum r;
            r.lambda = lambda;
            r.cutoff = s.cutoff_refined;
            r.eigenvalues = energy_refined;
            out.base[ui] = std::move(b);
            out.refined[ui] = std::move(r);
            reused.fetch_add(1);
        } else {
            out.base[ui] = diagonalize(base_family, lambda, /*with_vectors=*/false);
            out.refined[ui] = diagonalize(refined_family, lambda, /*with_vectors=*/false);
            if (write_files) {
                io::CsvTable table;
                table.header = kSpectrumHeader;
                for (int level = 0; level < dim; ++level) {
                    table.add_row({std::to_string(level),
                                   io::format_float(out.base[ui].eigenvalues[level]),
                                   io::format_float(out.refined[ui].eigenvalues[level])});
                }
                io::write_csv(file, table);
            }
        }
        const int finished = done.fetch_add(1) + 1;
        std::lock_guard<std::mutex> lock(log_mutex);
        std::fprintf(stderr, "\rdiagonalize: %d/%d couplings", finished, n);
        std::fflush(stderr);
    });
    std::fprintf(stderr, "\n");

    // The filter compares level by level, so the refined list is clipped to
    // the base dimension up front.
    for (Spectrum& spec : out.refined) {
        if (spec.eigenvalues.size() > dim) {
            spec.eigenvalues.conservativeResize(dim);
        }
    }
    out.reused = reused.load();
    return out;
}

std::string mode_name(const TemperatureSpec& temp) {
    return temp.infinite ? "inf" : "gibbs";
}

bool same_temp(const TemperatureSpec& a, const TemperatureSpec& b) {
    if (a.infinite != b.infinite) {
        return false;
    }
    return a.infinite || a.temperature == b.temperature;
}

// ---------------------------------------------------------------------------
// spectrum

int cmd_spectrum(const Settings& s, const io::RunPaths& paths) {
    const GridSpectra grid = solve_grid(s, paths.spectra, /*write_files=*/true);
    const ConvergedWindow window = convergence_filter(grid.base, grid.refined, s.tol);

    nlohmann::json entry;
    entry["couplings"] = static_cast<int>(s.lambdas.size());
    entry["dimension"] = static_cast<int>(grid.base.front().dim());
    entry["d_c"] = window.d_c;
    entry["tol"] = window.tol;
    entry["reused_files"] = grid.reused;
    merge_manifest(paths, s, "spectrum", entry);

    std::printf("spectrum: %zu couplings at K=%d/%d, dim %d, converged window D_c=%d (tol %s)\n",
                s.lambdas.size(), s.cutoff, s.cutoff_refined,
                static_cast<int>(grid.base.front().dim()), window.d_c,
                short_float(s.tol).c_str());
    if (grid.reused > 0) {
        std::printf("spectrum: reused %d existing spectrum files\n", grid.reused);
    }
    if (!window.warning.empty()) {
        std::fprintf(stderr, "warning: %s\n", window.warning.c_str());
    }
    return 0;
}

// ---------------------------------------------------------------------------
// levelstats

SpacingSample synthetic_sample(const std::string& kind, std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    SpacingSample sample;
    sample.spacings.resize(static_cast<std::size_t>(count));
    for (double& spacing : sample.spacings) {
        const double u = uniform(rng);
        if (kind == "poisson") {
            spacing = -std::log(1.0 - u);
        } else if (kind == "wigner") {
            spacing = std::sqrt(-(4.0 / std::numbers::pi) * std::log(1.0 - u));
        } else {
            spacing = 2.0 * u; // uniform spacings with unit mean
        }
    }
    return sample;
}

void write_histogram_csv(const fs::path& path, const SpacingHistogram& hist) {
    io::CsvTable table;
    table.header = {"bin_left", "bin_right", "density", "poisson_ref_midpoint",
                    "wigner_ref_midpoint"};
    for (std::size_t b = 0; b < hist.densities.size(); ++b) {
        const double left = hist.bin_edges[b];
        const double right = hist.bin_edges[b + 1];
        const double mid = 0.5 * (left + right);
        table.add_row({io::format_float(left), io::format_float(right),
                       io::format_float(hist.densities[b]),
                       io::format_float(reference_poisson(mid)),
                       io::format_float(reference_wigner(mid))});
    }
    io::write_csv(path, table);
}

int cmd_levelstats(const Settings& s, const io::RunPaths& paths) {
    io::CsvTable summary;
    summary.header = {"lambda", "KS_poisson", "KS_wigner", "n_levels"};
    nlohmann::json entry;

    if (!s.synthetic.empty()) {
        const int count = 10000;
        const SpacingSample sample = synthetic_sample(s.synthetic, s.seed, count);
        write_histogram_csv(paths.stats / "hist_synthetic.csv", histogram(sample, s.bins));
        const double ks_p = ks_distance(sample, Reference::poisson);
        const double ks_w = ks_distance(sample, Reference::wigner);
        summary.add_row({io::format_float(0.0), io::format_float(ks_p), io::format_float(ks_w),
                         std::to_string(count)});
        io::write_csv(paths.stats / "summary.csv", summary);
        entry["synthetic"] = s.synthetic;
        entry["samples"] = count;
        merge_manifest(paths, s, "levelstats", entry);
        std::printf("levelstats[%s]: KS_poisson=%.4f KS_wigner=%.4f (n=%d)\n",
                    s.synthetic.c_str(), ks_p, ks_w, count);
        return 0;
    }

    // Self-contained: solve the requested couplings at both truncations and
    // keep only the levels stable between them.
    Settings stat_cfg = s;
    stat_cfg.lambdas = s.stats_lambdas;
    const GridSpectra grid = solve_grid(stat_cfg, paths.stats, /*write_files=*/false);
    const ConvergedWindow window = convergence_filter(grid.base, grid.refined, s.tol);
    if (window.d_c < 3) {
        std::fprintf(stderr, "error: converged window D_c=%d is too small for spacing statistics\n",
                     window.d_c);
        return 1;
    }

    for (std::size_t i = 0; i < stat_cfg.lambdas.size(); ++i) {
        const Spectrum& spec = grid.base[i];
        SpacingSample sample =
            unfold(std::span<const double>(spec.eigenvalues.data(),
                                           static_cast<std::size_t>(window.d_c)),
                   s.window);
        sample.lambda = spec.lambda;
        sample.d_c = window.d_c;
        sample.cutoff = s.cutoff;

        char name[32];
        std::snprintf(name, sizeof(name), "hist_%04d.csv", static_cast<int>(i));
        write_histogram_csv(paths.stats / name, histogram(sample, s.bins));

        const double ks_p = ks_distance(sample, Reference::poisson);
        const double ks_w = ks_distance(sample, Reference::wigner);
        summary.add_row({io::format_float(spec.lambda), io::format_float(ks_p),
                         io::format_float(ks_w), std::to_string(window.d_c)});
        std::printf("levelstats: lambda=%s KS_poisson=%.4f KS_wigner=%.4f (%s, n=%d)\n",
                    short_float(spec.lambda).c_str(), ks_p, ks_w,
                    ks_p < ks_w ? "poisson-like" : "wigner-like", window.d_c);
    }
    io::write_csv(paths.stats / "summary.csv", summary);

    entry["couplings"] = stat_cfg.lambdas;
    entry["d_c"] = window.d_c;
    entry["window"] = s.window;
    merge_manifest(paths, s, "levelstats", entry);
    return 0;
}

// ---------------------------------------------------------------------------
// ofs

void write_sweep_csv(const fs::path& path, const SweepResult& result) {
    io::CsvTable table;
    table.header = {"lambda", "t", "mode", "beta", "chi1", "chi2", "D_c", "K"};
    for (const OfsPoint& p : result.points) {
        table.add_row({io::format_float(p.lambda), io::format_float(p.t), mode_name(p.temp),
                       io::format_float(p.temp.beta()), io::format_float(p.chi1),
                       io::format_float(p.chi2), std::to_string(p.d_c),
                       std::to_string(p.cutoff)});
    }
    io::write_csv(path, table);
}

void write_partial_csv(const fs::path& path, const SweepResult& result) {
    io::CsvTable table;
    table.header = {"lambda", "t", "mode", "D", "chi1_partial"};
    for (const PartialSumCurve& curve : result.curves) {
        for (std::size_t d = 0; d < curve.values.size(); ++d) {
            table.add_row({io::format_float(curve.lambda), io::format_float(curve.t),
                           mode_name(curve.temp), std::to_string(d + 1),
                           io::format_float(curve.values[d])});
        }
    }
    io::write_csv(path, table);
}

io::Series curve_series(const SweepResult& result, double t, const TemperatureSpec& temp,
                        bool second_term) {
    io::Series series;
    series.label = "T = " + (temp.infinite ? std::string("inf") : short_float(temp.temperature));
    for (const OfsPoint& p : result.points) {
        if (p.t == t && same_temp(p.temp, temp)) {
            series.points.emplace_back(p.lambda, second_term ? p.chi2 : p.chi1);
        }
    }
    return series;
}

void emit_figures(const fs::path& dir, const Settings& s, const SweepResult& result) {
    // Partial-sum convergence at the probe couplings.
    if (!result.curves.empty()) {
        io::LinePlot plot;
        plot.title = "chi1 partial sums (t = " + short_float(s.partial_time) +
                     ", T = " + short_float(s.partial_temp) + ")";
        plot.x_label = "window size D";
        plot.y_label = "chi1 partial sum";
        plot.log_y = true;
        for (const PartialSumCurve& curve : result.curves) {
            io::Series series;
            series.label = "lambda = " + short_float(curve.lambda);
            for (std::size_t d = 0; d < curve.values.size(); ++d) {
                series.points.emplace_back(static_cast<double>(d + 1), curve.values[d]);
            }
            plot.series.push_back(std::move(series));
        }
        io::write_svg(dir / "fig3.svg", plot);
    }

    struct FigureSpec {
        const char* file;
        double t;
        std::vector<TemperatureSpec> temps;
        bool second_term;
        std::string title;
    };
    auto gibbs = [](double temp) {
        TemperatureSpec spec;
        spec.temperature = temp;
        return spec;
    };
    TemperatureSpec inf_temp;
    inf_temp.infinite = true;

    const std::vector<FigureSpec> figures = {
        {"fig4a.svg", 100.0, {gibbs(1.0), gibbs(2.0)}, false, "chi1 vs coupling (t = 100, low T)"},
        {"fig4b.svg", 100.0, {gibbs(4.5), inf_temp}, false, "chi1 vs coupling (t = 100, high T)"},
        {"fig5a.svg", 200.0, {gibbs(4.5), inf_temp}, false, "chi1 vs coupling (t = 200)"},
        {"fig5b.svg", 400.0, {gibbs(4.5), inf_temp}, false, "chi1 vs coupling (t = 400)"},
        {"fig6.svg", 100.0, {gibbs(1.0), gibbs(2.0), gibbs(4.5), inf_temp}, true,
         "chi2 vs coupling (t = 100)"},
    };

    for (const FigureSpec& fig : figures) {
        io::LinePlot plot;
        plot.title = fig.title;
        plot.x_label = "coupling";
        plot.y_label = fig.second_term ? "chi2" : "chi1";
        plot.log_x = true;
        plot.log_y = true;
        for (const TemperatureSpec& temp : fig.temps) {
            io::Series series = curve_series(result, fig.t, temp, fig.second_term);
            if (!series.points.empty()) {
                plot.series.push_back(std::move(series));
            }
        }
        if (!plot.series.empty()) {
            io::write_svg(dir / fig.file, plot);
        }
    }
}

int cmd_ofs(const Settings& s, const io::RunPaths& paths) {
    SweepConfig config;
    config.cutoff = s.cutoff;
    config.cutoff_refined = s.cutoff_refined;
    config.lambdas = s.lambdas;
    config.tol = s.tol;
    config.times = s.times;
    config.temps = s.temps;
    config.jobs = s.jobs;
    config.partial_sum_lambdas = s.partial_lambdas;
    config.partial_sum_temperature = s.partial_temp;
    config.partial_sum_time = s.partial_time;

    const SweepResult result = run_sweep(config, [](int done, int total) {
        std::fprintf(stderr, "\rofs: %d/%d steps", done, total);
        std::fflush(stderr);
    });
    std::fprintf(stderr, "\n");

    if (result.window.d_c < 2) {
        std::fprintf(stderr, "error: converged window D_c=%d is too small (%s)\n",
                     result.window.d_c, result.window.warning.c_str());
        return 1;
    }

    write_sweep_csv(paths.ofs / "ofs_sweep.csv", result);
    write_partial_csv(paths.ofs / "partial_sums.csv", result);
    emit_figures(paths.ofs, s, result);

    nlohmann::json entry;
    entry["points"] = static_cast<int>(result.points.size());
    entry["curves"] = static_cast<int>(result.curves.size());
    entry["d_c"] = result.window.d_c;
    entry["errors"] = result.errors;
    merge_manifest(paths, s, "ofs", entry);

    std::printf("ofs: %zu points over %zu couplings, D_c=%d\n", result.points.size(),
                s.lambdas.size(), result.window.d_c);

    // Quick-look extrema of the leading response curve.
    TemperatureSpec probe;
    probe.infinite = true;
    const bool have_inf =
        std::any_of(s.temps.begin(), s.temps.end(), [](const TemperatureSpec& t) { return t.infinite; });
    if (!have_inf) {
        probe = s.temps.front();
    }
    const double probe_t = std::find(s.times.begin(), s.times.end(), 100.0) != s.times.end()
                               ? 100.0
                               : s.times.front();
    const io::Series curve = curve_series(result, probe_t, probe, false);
    if (curve.points.size() >= 3) {
        std::size_t arg_max = 0;
        std::size_t arg_min = 0;
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            if (curve.points[i].second > curve.points[arg_max].second) {
                arg_max = i;
            }
            if (curve.points[i].second < curve.points[arg_min].second) {
                arg_min = i;
            }
        }
        std::printf("ofs: chi1(T=%s, t=%s) min at lambda=%s, max at lambda=%s\n",
                    probe.infinite ? "inf" : short_float(probe.temperature).c_str(),
                    short_float(probe_t).c_str(),
                    short_float(curve.points[arg_min].first).c_str(),
                    short_float(curve.points[arg_max].first).c_str());
    }

    if (!result.errors.empty()) {
        for (const std::string& message : result.errors) {
            std::fprintf(stderr, "error: %s\n", message.c_str());
        }
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// oracle

int cmd_oracle(const Settings& s, const io::RunPaths& paths) {
    struct Suite {
        std::vector<int> cutoffs{6, 8, 10};
        std::vector<double> lambdas{1e-4, 1e-3};
        std::vector<double> times{5.0, 10.0};
    } suite;

    TemperatureSpec gibbs;
    gibbs.temperature = 4.5;
    TemperatureSpec inf_temp;
    inf_temp.infinite = true;
    const std::vector<TemperatureSpec> temps{gibbs, inf_temp};
    const double mismatch_tol = 1e-3;

    io::CsvTable table;
    table.header = {"K", "lambda", "delta_lambda", "t", "mode", "F", "fd_chi", "chi1", "chi2",
                    "mismatch"};
    double worst = 0.0;
    int failures = 0;

    auto run_family = [&](const HamiltonianFamily& family, int label_cutoff) {
        const int dim = static_cast<int>(family.dim());
        for (double lambda : suite.lambdas) {
            const Spectrum spec = diagonalize(family, lambda);
            const EigenbasisPerturbation vp = transform_perturbation(spec, family.v, dim);
            for (double t : suite.times) {
                // Post-Richardson residual scales with the step squared;
                // 1e-4/t keeps it well under the mismatch gate while the
                // fidelity deficit stays above the rounding floor.
                const double delta = 1e-4 / t;
                for (const TemperatureSpec& temp : temps) {
                    const StateWeights w = make_weights(spec, dim, temp);
                    const double c1 = chi1(spec, vp, w, t, dim);
                    const double c2 = chi2(vp, w, t);
                    const double fd =
                        oracle::richardson_susceptibility(family, lambda, delta, t, temp, dim);
                    const double coarse =
                        oracle::fd_susceptibility(family, lambda, delta, t, temp, dim);
                    const double fidelity = 1.0 - 0.5 * coarse * delta * delta;
                    const double reference = std::abs(c1 + c2);
                    const double mismatch =
                        std::abs(fd - (c1 + c2)) / std::max(reference, 1e-30);
                    worst = std::max(worst, mismatch);
                    if (mismatch > mismatch_tol) {
                        ++failures;
                        std::fprintf(stderr,
                                     "oracle mismatch: K=%d lambda=%s t=%s %s: fd=%.12g vs "
                                     "chi1+chi2=%.12g (rel %.3g)\n",
                                     label_cutoff, short_float(lambda).c_str(),
                                     short_float(t).c_str(), temp.label().c_str(), fd, c1 + c2,
                                     mismatch);
                    }
                    table.add_row({std::to_string(label_cutoff), io::format_float(lambda),
                                   io::format_float(delta), io::format_float(t), mode_name(temp),
                                   io::format_float(fidelity), io::format_float(fd),
                                   io::format_float(c1), io::format_float(c2),
                                   io::format_float(mismatch)});
                }
            }
        }
    };

    if (s.fixture == "diagonal") {
        HamiltonianFamily family = make_hamiltonian(build_basis(1));
        family.h0.entries = Eigen::MatrixXd::Zero(2, 2);
        family.h0.entries.diagonal() << 0.0, 1.0;
        family.v.entries = Eigen::MatrixXd::Zero(2, 2);
        family.v.entries.diagonal() << 0.3, -0.2;
        run_family(family, 1);
    } else {
        for (int cutoff : suite.cutoffs) {
            run_family(make_hamiltonian(build_basis(cutoff)), cutoff);
        }
    }

    io::write_csv(paths.oracle / "oracle_report.csv", table);

    nlohmann::json entry;
    entry["rows"] = static_cast<int>(table.rows.size());
    entry["worst_mismatch"] = worst;
    entry["failures"] = failures;
    entry["tolerance"] = mismatch_tol;
    merge_manifest(paths, s, "oracle", entry);

    std::printf("oracle: %zu checks, worst relative mismatch %.3g (tolerance %g)\n",
                table.rows.size(), worst, mismatch_tol);
    if (failures > 0) {
        std::fprintf(stderr, "error: %d oracle checks exceeded the mismatch tolerance\n", failures);
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------

void print_usage(std::FILE* out) {
    std::fprintf(out,
                 "usage: chaoslab <verb> [options]\n"
                 "\n"
                 "verbs:\n"
                 "  spectrum    diagonalize the coupling grid at both truncations\n"
                 "  levelstats  unfolded level-spacing histograms and KS distances\n"
                 "  ofs         susceptibility sweep with CSV and SVG outputs\n"
                 "  oracle      fidelity cross-check of the susceptibility decomposition\n"
                 "  all         every verb above, in order\n"
                 "\n"
                 "run 'chaoslab <verb> --help' for the option list\n");
}

} // namespace

int main(int argc, char** argv) {
    // Nested BLAS threading would break run-to-run determinism; parallelism
    // lives in --jobs. An explicit environment setting wins.
    setenv("OPENBLAS_NUM_THREADS", "1", /*overwrite=*/0);

    if (argc < 2) {
        print_usage(stderr);
        return 2;
    }
    const std::string verb = argv[1];
    if (verb == "-h" || verb == "--help") {
        print_usage(stdout);
        return 0;
    }
    const std::vector<std::string> verbs = {"spectrum", "levelstats", "ofs", "oracle", "all"};
    if (std::find(verbs.begin(), verbs.end(), verb) == verbs.end()) {
        std::fprintf(stderr, "error: unknown verb '%s'\n\n", verb.c_str());
        print_usage(stderr);
        return 2;
    }

    CLI::App app{"coupled-oscillator spectra and operator-fidelity susceptibility"};
    CliValues cli;
    app.add_option("--config", cli.config_path, "key=value settings file");
    app.add_option("--profile", cli.profile, "preset: desk (K=60, 48 couplings) or full (K=120, 96)")
        ->check(CLI::IsMember({"desk", "full"}));
    app.add_option("--jobs", cli.jobs, "worker threads");
    app.add_option("--out", cli.out, "output root (beats OFS_CHAOSLAB_OUT)");
    app.add_option("--lambda-min", cli.lambda_min, "smallest coupling");
    app.add_option("--lambda-max", cli.lambda_max, "largest coupling");
    app.add_option("--lambda-count", cli.lambda_count, "grid size");
    app.add_option("--grid", cli.grid, "grid spacing: linear, geometric, composite")
        ->check(CLI::IsMember({"linear", "geometric", "composite"}));
    app.add_option("--t", cli.times, "comma-separated time scales");
    app.add_option("--temps", cli.temps, "comma-separated temperatures; 'inf' allowed");
    app.add_option("--seed", cli.seed, "seed for synthetic samplers");
    app.add_option("--cutoff", cli.cutoff, "occupation truncation K");
    app.add_option("--cutoff-refined", cli.cutoff_refined, "refined truncation K'");
    app.add_option("--tol", cli.tol, "convergence tolerance between truncations");
    app.add_option("--window", cli.window, "unfolding window (spacings)");
    app.add_option("--bins", cli.bins, "histogram bins");
    app.add_option("--stats-lambdas", cli.stats_lambdas, "couplings for levelstats");
    app.add_option("--partial-lambdas", cli.partial_lambdas, "couplings for partial-sum curves");
    app.add_option("--partial-temp", cli.partial_temp, "temperature for partial-sum curves");
    app.add_option("--partial-t", cli.partial_time, "time scale for partial-sum curves");
    app.add_option("--synthetic", cli.synthetic, "levelstats sampler: uniform, poisson, wigner")
        ->check(CLI::IsMember({"uniform", "poisson", "wigner"}));
    app.add_option("--fixture", cli.fixture, "oracle fixture: diagonal")
        ->check(CLI::IsMember({"diagonal"}));

    try {
        app.parse(argc - 1, argv + 1);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const Settings settings = resolve_settings(app, cli);
        const io::RunPaths paths = io::make_run_paths(settings.out_root, settings.canonical_key());
        std::printf("run directory: %s\n", paths.root.string().c_str());

        if (verb == "spectrum") {
            return cmd_spectrum(settings, paths);
        }
        if (verb == "levelstats") {
            return cmd_levelstats(settings, paths);
        }
        if (verb == "ofs") {
            return cmd_ofs(settings, paths);
        }
        if (verb == "oracle") {
            return cmd_oracle(settings, paths);
        }
        int status = 0;
        status = std::max(status, cmd_spectrum(settings, paths));
        status = std::max(status, cmd_levelstats(settings, paths));
        status = std::max(status, cmd_ofs(settings, paths));
        status = std::max(status, cmd_oracle(settings, paths));
        return status;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
}
