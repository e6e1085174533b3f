#include "atomline/experiments.hpp"

#include "atomline/baselines.hpp"
#include "atomline/dual_certificate.hpp"
#include "atomline/jackson_kernel.hpp"
#include "atomline/rng.hpp"
#include "atomline/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <numbers>

namespace atomline {

namespace {

// numerical equality slack for the sigma = 0, lambda = 0 cells
constexpr double kExactSlack = 1e-12;

using Clock = std::chrono::steady_clock;

long elapsed_ms(Clock::time_point t0) {
    return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count());
}

std::string bool_str(bool b) { return b ? "1" : "0"; }

const KernelContext& context_for(int n) {
    // built once per n before any parallel region touches it
    static std::map<int, std::unique_ptr<KernelContext>> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<KernelContext>(KernelContext::from_n(n))).first;
    return *it->second;
}

CVec unit_coeffs(int k, std::uint64_t key) { return random_coeffs(k, 1.0, 1.0, key); }

CVec signs_of(const CVec& c) {
    CVec s(c.size());
    for (Eigen::Index l = 0; l < c.size(); ++l) s[l] = c[l] / std::abs(c[l]);
    return s;
}

struct Instance {
    LineSpectrum truth;
    SampleVector clean;
    SampleVector noisy;
    double sigma = 0.0;
    double gamma0 = 0.0;
};

Instance make_instance(int n, const RVec& freqs, const CVec& coeffs, double sigma, std::uint64_t noise_key) {
    Instance in;
    in.truth = LineSpectrum(freqs, coeffs);
    in.clean = synthesize(in.truth, n);
    in.noisy = add_noise(in.clean, NoiseSpec{sigma, noise_key});
    in.sigma = sigma;
    in.gamma0 = gamma0(sigma, n);
    return in;
}

SolverConfig solver_config(const ExperimentConfig& c, double lambda) {
    SolverConfig s;
    s.lambda = lambda;
    s.max_iters = c.max_iters;
    s.tol = c.tol;
    return s;
}

// one atomic-mode trial of the success-rate sweep
TrialRecord phase_trial(const ExperimentConfig& c, Mode mode, int cell, int trial, double x, double gamma) {
    const auto t0 = Clock::now();
    TrialRecord r;
    r.cell = cell;
    r.trial = trial;
    r.mode = mode_name(mode);
    r.x = x;
    r.gamma = gamma;
    const std::uint64_t key = derive_key(c.seed, static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(trial));
    r.seed = key;
    const int n = c.n;
    const KernelContext& ctx = context_for(n);
    const RVec f = random_separated_freqs(c.k, c.sep_min / n, derive_key(key, 1));
    const CVec co = unit_coeffs(c.k, derive_key(key, 2));
    // gamma = gamma0 / c_min with c_min = 1
    const double g0 = gamma;
    const double sigma = g0 / std::sqrt(std::log(static_cast<double>(n)) / n);
    const Instance in = make_instance(n, f, co, sigma, derive_key(key, 3));
    const double lambda = x * g0;
    r.lambda = lambda;

    SolveResult sr;
    try {
        if (mode == Mode::AtomicWitness) {
            sr = solve_witness(ctx, in.clean, in.noisy, in.truth, solver_config(c, lambda));
        } else {
            sr = solve_blind(ctx, in.noisy, solver_config(c, lambda), c.k);
        }
    } catch (const std::exception& e) {
        r.note = e.what();
        r.runtime_ms = elapsed_ms(t0);
        return r;
    }
    r.converged = sr.converged;
    if (!sr.message.empty()) r.note = sr.message;
    const LineSpectrum est = sr.theta.spectrum();
    const MatchResult m = match_supports(in.truth, est);
    r.freq_err = m.freq_err_weighted;
    r.freq_err_raw = m.freq_err_raw;
    r.coeff_err = m.coeff_err;
    r.rule_ok = !m.order_mismatch && sr.converged && r.freq_err_raw <= gamma / (2.0 * n) + kExactSlack &&
                r.coeff_err <= 2.0 * lambda + kExactSlack;
    if (lambda > 0.0 && est.k() > 0 && !sr.degenerate) {
        const DualPolynomial Q = dual_from_primal(ctx, in.noisy, est, lambda);
        const CertificateReport rep = verify_bip(Q, est.freqs, signs_of(est.coeffs), c.grid_factor * n);
        r.certificate_ok = rep.verdict;
        r.success = r.rule_ok && r.certificate_ok;
    } else {
        // no regularization: the estimate is compared without a certificate
        r.success = r.rule_ok && lambda == 0.0;
        if (lambda == 0.0) r.note += (r.note.empty() ? "" : "; ") + std::string("lambda=0, certificate not applicable");
    }
    r.runtime_ms = elapsed_ms(t0);
    if (r.runtime_ms > static_cast<long>(c.timeout_s * 1000.0)) {
        r.success = false;
        r.note += (r.note.empty() ? "" : "; ") + std::string("timeout");
    }
    return r;
}

}  // namespace

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::AtomicWitness: return "atomic_witness";
        case Mode::AtomicBlind: return "atomic_blind";
        case Mode::Music: return "music";
        default: return "mle";
    }
}

Mode mode_from_name(const std::string& s) {
    if (s == "atomic_witness") return Mode::AtomicWitness;
    if (s == "atomic_blind") return Mode::AtomicBlind;
    if (s == "music") return Mode::Music;
    if (s == "mle") return Mode::Mle;
    throw InvalidArgument("unknown mode " + s);
}

void ExperimentConfig::validate() const {
    if (n < 4 || n % 2 != 0) throw InvalidArgument("n must be an even integer >= 4");
    if (k < 1) throw InvalidArgument("k must be positive");
    if (trials < 1) throw InvalidArgument("trials must be positive");
    if (x_grid.empty() || gamma_grid.empty()) throw InvalidArgument("grids must be nonempty");
    if (modes.empty()) throw InvalidArgument("at least one mode is required");
    if (k * sep_min / n > 1.0) throw InvalidArgument("k frequencies cannot be packed at this separation");
    if (grid_factor < 8) throw InvalidArgument("grid_factor must be at least 8");
    for (double sp : sep_grid)
        if (k * sp / n > 1.0) throw InvalidArgument("sep_grid entry too large for k");
}

json ExperimentConfig::to_json() const {
    json j;
    j["n"] = n;
    j["k"] = k;
    j["sep_min"] = sep_min;
    j["trials"] = trials;
    j["x_grid"] = x_grid;
    j["gamma_grid"] = gamma_grid;
    j["seed"] = seed;
    j["modes"] = json::array();
    for (Mode m : modes) j["modes"].push_back(mode_name(m));
    j["sep_grid"] = sep_grid;
    j["snr_db_grid"] = snr_db_grid;
    j["lambda_x"] = lambda_x;
    j["music_subarray"] = music_subarray;
    j["max_iters"] = max_iters;
    j["tol"] = tol;
    j["timeout_s"] = timeout_s;
    j["grid_factor"] = grid_factor;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    c.n = j.value("n", c.n);
    c.k = j.value("k", c.k);
    c.sep_min = j.value("sep_min", c.sep_min);
    c.trials = j.value("trials", c.trials);
    c.x_grid = j.value("x_grid", c.x_grid);
    c.gamma_grid = j.value("gamma_grid", c.gamma_grid);
    c.seed = j.value("seed", c.seed);
    if (j.contains("modes")) {
        c.modes.clear();
        for (const auto& m : j["modes"]) c.modes.push_back(mode_from_name(m.get<std::string>()));
    }
    c.sep_grid = j.value("sep_grid", c.sep_grid);
    c.snr_db_grid = j.value("snr_db_grid", c.snr_db_grid);
    c.lambda_x = j.value("lambda_x", c.lambda_x);
    c.music_subarray = j.value("music_subarray", c.music_subarray);
    c.max_iters = j.value("max_iters", c.max_iters);
    c.tol = j.value("tol", c.tol);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.grid_factor = j.value("grid_factor", c.grid_factor);
    c.validate();
    return c;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_json().dump()); }

PhaseResult run_phase_transition(const ExperimentConfig& c) {
    c.validate();
    context_for(c.n);
    PhaseResult res;
    for (Mode m : c.modes)
        if (m == Mode::AtomicWitness || m == Mode::AtomicBlind) res.modes.push_back(m);
    if (res.modes.empty()) throw InvalidArgument("the success-rate sweep needs an atomic mode");
    const int nx = static_cast<int>(c.x_grid.size()), ng = static_cast<int>(c.gamma_grid.size());
    const int nm = static_cast<int>(res.modes.size());
    const int total = nm * nx * ng * c.trials;
    res.records.resize(total);
#pragma omp parallel for schedule(dynamic)
    for (int w = 0; w < total; ++w) {
        const int trial = w % c.trials;
        const int cell = (w / c.trials) % (nx * ng);
        const int mi = w / (c.trials * nx * ng);
        const int ix = cell / ng, ig = cell % ng;
        // the instance depends on the cell and trial only, so modes see identical data
        res.records[w] = phase_trial(c, res.modes[mi], cell, trial, c.x_grid[ix], c.gamma_grid[ig]);
    }
    res.rate.assign(nm, std::vector<std::vector<double>>(nx, std::vector<double>(ng, 0.0)));
    for (const auto& r : res.records) {
        const int mi = static_cast<int>(std::find_if(res.modes.begin(), res.modes.end(),
                                                     [&](Mode m) { return mode_name(m) == r.mode; }) -
                                        res.modes.begin());
        if (r.success) res.rate[mi][r.cell / ng][r.cell % ng] += 1.0;
    }
    for (auto& a : res.rate)
        for (auto& b : a)
            for (double& v : b) v /= c.trials;
    return res;
}

ComparisonResult run_crb_comparison(const ExperimentConfig& c) {
    c.validate();
    context_for(c.n);
    const int n = c.n;
    const int ns = static_cast<int>(c.sep_grid.size()), nsnr = static_cast<int>(c.snr_db_grid.size());
    const int nm = static_cast<int>(c.modes.size());
    const int total = ns * nsnr * c.trials;
    std::vector<std::vector<TrialRecord>> per(total);
    std::vector<double> crb_vals(total, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int w = 0; w < total; ++w) {
        const int trial = w % c.trials;
        const int cell = w / c.trials;
        const int is = cell / nsnr, ir = cell % nsnr;
        const std::uint64_t key = derive_key(c.seed, 0x637262ULL + static_cast<std::uint64_t>(cell),
                                             static_cast<std::uint64_t>(trial));
        // equally spaced cluster at exactly the cell separation, random position and phases
        CounterRng rng(derive_key(key, 1));
        const double base = rng.uniform();
        RVec f(c.k);
        for (int l = 0; l < c.k; ++l) f[l] = canonical_freq(base + l * c.sep_grid[is] / n);
        const CVec co = unit_coeffs(c.k, derive_key(key, 2));
        const double sigma = std::pow(10.0, -c.snr_db_grid[ir] / 20.0);
        const Instance in = make_instance(n, f, co, sigma, derive_key(key, 3));
        if (sigma > 0.0) crb_vals[w] = crb(in.truth, n, sigma).per_frequency_variance.mean();
        const KernelContext& ctx = context_for(n);
        for (int mi = 0; mi < nm; ++mi) {
            const auto t0 = Clock::now();
            TrialRecord r;
            r.cell = cell;
            r.trial = trial;
            r.seed = key;
            r.mode = mode_name(c.modes[mi]);
            r.gamma = in.gamma0;
            r.x = c.lambda_x;
            LineSpectrum est;
            bool ok = true;
            try {
                switch (c.modes[mi]) {
                    case Mode::AtomicWitness: {
                        r.lambda = c.lambda_x * in.gamma0;
                        const SolveResult sr = solve_witness(ctx, in.clean, in.noisy, in.truth, solver_config(c, r.lambda));
                        ok = sr.converged;
                        r.note = sr.message;
                        est = sr.theta.spectrum();
                        break;
                    }
                    case Mode::AtomicBlind: {
                        r.lambda = c.lambda_x * in.gamma0;
                        const SolveResult sr = solve_blind(ctx, in.noisy, solver_config(c, r.lambda), c.k);
                        ok = sr.converged;
                        r.note = sr.message;
                        est = sr.theta.spectrum();
                        break;
                    }
                    case Mode::Music: est = music(in.noisy, c.k, c.music_subarray); break;
                    case Mode::Mle: {
                        const MleResult mr = mle_refine_full(in.noisy, in.truth);
                        ok = !mr.breakdown;
                        r.note = mr.message;
                        est = mr.estimate;
                        break;
                    }
                }
            } catch (const std::exception& e) {
                ok = false;
                r.note = e.what();
            }
            r.converged = ok;
            if (ok) {
                const MatchResult m = match_supports(in.truth, est);
                if (m.order_mismatch) {
                    r.converged = false;
                    r.note = "model order mismatch";
                } else {
                    double se = 0.0;
                    for (double e : m.freq_errors) se += e * e;
                    // mean squared frequency error of this trial stored in freq_err
                    r.freq_err = se / static_cast<double>(m.freq_errors.size());
                    r.freq_err_raw = m.freq_err_raw;
                    r.coeff_err = m.coeff_err;
                }
            }
            r.success = r.converged;
            r.runtime_ms = elapsed_ms(t0);
            per[w].push_back(r);
        }
    }
    ComparisonResult res;
    for (int cell = 0; cell < ns * nsnr; ++cell) {
        const int is = cell / nsnr, ir = cell % nsnr;
        double crb_sum = 0.0;
        for (int t = 0; t < c.trials; ++t) crb_sum += crb_vals[cell * c.trials + t];
        for (int mi = 0; mi < nm; ++mi) {
            ComparisonRow row;
            row.method = mode_name(c.modes[mi]);
            row.sep = c.sep_grid[is];
            row.snr_db = c.snr_db_grid[ir];
            row.trials = c.trials;
            row.crb = crb_sum / c.trials;
            double acc = 0.0;
            int used = 0;
            for (int t = 0; t < c.trials; ++t) {
                const TrialRecord& r = per[cell * c.trials + t][mi];
                if (!r.converged) {
                    ++row.failures;
                    continue;
                }
                acc += r.freq_err;
                ++used;
            }
            row.mse = used ? acc / used : std::numeric_limits<double>::quiet_NaN();
            res.rows.push_back(row);
        }
    }
    for (auto& v : per)
        for (auto& r : v) res.records.push_back(r);
    return res;
}

ScalingResult run_scaling_check(const std::vector<int>& n_list, const ScalingScenario& sc) {
    if (n_list.size() < 3) throw InvalidArgument("the scaling fit needs at least three values of n");
    ScalingResult res;
    res.n_list = n_list;
    for (int n : n_list) context_for(n);
    const int nn = static_cast<int>(n_list.size());
    std::vector<double> errs(static_cast<size_t>(nn) * sc.trials, 0.0);
    std::vector<char> failed(errs.size(), 0);
#pragma omp parallel for schedule(dynamic)
    for (int w = 0; w < nn * sc.trials; ++w) {
        const int i = w / sc.trials, t = w % sc.trials;
        const int n = n_list[i];
        const std::uint64_t key = derive_key(sc.seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(t));
        const RVec f = random_separated_freqs(sc.k, sc.sep_min / n, derive_key(key, 1));
        const CVec co = unit_coeffs(sc.k, derive_key(key, 2));
        const Instance in = make_instance(n, f, co, sc.sigma, derive_key(key, 3));
        SolverConfig cfg;
        cfg.lambda = sc.lambda_x * in.gamma0;
        const SolveResult sr = solve_witness(context_for(n), in.clean, in.noisy, in.truth, cfg);
        if (!sr.converged) failed[w] = 1;
        errs[w] = match_supports(in.truth, sr.theta.spectrum()).freq_err_weighted;
    }
    int nfail = 0;
    for (char f : failed) nfail += f;
    if (nfail) res.note = std::to_string(nfail) + " non-converged solves included";
    for (int i = 0; i < nn; ++i) {
        std::vector<double> v(errs.begin() + static_cast<long>(i) * sc.trials,
                              errs.begin() + static_cast<long>(i + 1) * sc.trials);
        std::sort(v.begin(), v.end());
        const size_t m = v.size();
        const double med = (m % 2) ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
        res.median_weighted_err.push_back(med);
        const double n = n_list[i];
        res.rate_curve.push_back(std::sqrt(std::log(n)) / std::pow(n, 1.5));
    }
    const bool any_zero = std::any_of(res.median_weighted_err.begin(), res.median_weighted_err.end(),
                                      [](double v) { return !(v > 0.0); });
    if (any_zero) {
        res.fit_skipped = true;
        res.note += (res.note.empty() ? "" : "; ") + std::string("zero median error, fit skipped");
        return res;
    }
    // least-squares slope of log error against log rate
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < nn; ++i) {
        mx += std::log(res.rate_curve[i]);
        my += std::log(res.median_weighted_err[i]);
    }
    mx /= nn;
    my /= nn;
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < nn; ++i) {
        const double dx = std::log(res.rate_curve[i]) - mx;
        sxy += dx * (std::log(res.median_weighted_err[i]) - my);
        sxx += dx * dx;
    }
    res.slope = sxy / sxx;
    return res;
}

std::string phase_csv(const PhaseResult& r, const ExperimentConfig& c) {
    std::string s = csv_row({"mode", "x", "gamma", "trials", "successes", "rate"});
    for (size_t mi = 0; mi < r.modes.size(); ++mi)
        for (size_t ix = 0; ix < c.x_grid.size(); ++ix)
            for (size_t ig = 0; ig < c.gamma_grid.size(); ++ig) {
                const double rate = r.rate[mi][ix][ig];
                const long succ = std::lround(rate * c.trials);
                s += csv_row({mode_name(r.modes[mi]), format_double(c.x_grid[ix]), format_double(c.gamma_grid[ig]),
                              std::to_string(c.trials), std::to_string(succ), format_double(rate)});
            }
    return s;
}

std::string trials_csv(const std::vector<TrialRecord>& records) {
    std::string s = csv_row({"cell", "trial", "seed", "mode", "x", "gamma", "lambda", "freq_err", "freq_err_raw",
                             "coeff_err", "rule_ok", "certificate_ok", "success", "converged", "note"});
    for (const auto& r : records)
        s += csv_row({std::to_string(r.cell), std::to_string(r.trial), std::to_string(r.seed), r.mode,
                      format_double(r.x), format_double(r.gamma), format_double(r.lambda), format_double(r.freq_err),
                      format_double(r.freq_err_raw), format_double(r.coeff_err), bool_str(r.rule_ok),
                      bool_str(r.certificate_ok), bool_str(r.success), bool_str(r.converged), r.note});
    return s;
}

std::string comparison_csv(const ComparisonResult& r) {
    std::string s = csv_row({"method", "sep", "snr_db", "mse", "crb", "mse_over_crb", "failures", "trials"});
    for (const auto& row : r.rows)
        s += csv_row({row.method, format_double(row.sep), format_double(row.snr_db), format_double(row.mse),
                      format_double(row.crb), format_double(row.mse / row.crb), std::to_string(row.failures),
                      std::to_string(row.trials)});
    return s;
}

std::string scaling_csv(const ScalingResult& r) {
    std::string s = csv_row({"n", "median_weighted_err", "rate_curve"});
    for (size_t i = 0; i < r.n_list.size(); ++i)
        s += csv_row({std::to_string(r.n_list[i]), format_double(r.median_weighted_err[i]),
                      format_double(r.rate_curve[i])});
    return s;
}

json manifest(const ExperimentConfig& c, const std::string& kind, double wall_seconds, long trial_ms_total) {
    json m;
    m["kind"] = kind;
    m["config"] = c.to_json();
    m["config_hash"] = c.hash();
    m["seed"] = c.seed;
    m["seed_derivation"] = "trial key = derive_key(seed, cell, trial); instance streams derive_key(key, 1..3)";
    m["wall_seconds"] = wall_seconds;
    m["trial_ms_total"] = trial_ms_total;
    return m;
}

namespace {

const char* kPhasePlot = R"PY(import csv, sys
import matplotlib.pyplot as plt
rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "phase.csv")))
for mode in sorted(set(r["mode"] for r in rows)):
    sub = [r for r in rows if r["mode"] == mode]
    xs = sorted(set(float(r["x"]) for r in sub))
    gs = sorted(set(float(r["gamma"]) for r in sub))
    grid = [[0.0] * len(xs) for _ in gs]
    for r in sub:
        grid[gs.index(float(r["gamma"]))][xs.index(float(r["x"]))] = float(r["rate"])
    plt.figure()
    plt.imshow(grid, origin="lower", aspect="auto", vmin=0, vmax=1, cmap="gray")
    plt.xticks(range(len(xs)), xs)
    plt.yticks(range(len(gs)), gs)
    plt.xlabel("x (lambda = x gamma0)")
    plt.ylabel("gamma")
    plt.title(mode)
    plt.colorbar()
    plt.savefig("phase_" + mode + ".png", dpi=150)
)PY";

const char* kCrbPlot = R"PY(import csv, sys
import matplotlib.pyplot as plt
rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "comparison.csv")))
for sep in sorted(set(float(r["sep"]) for r in rows)):
    plt.figure()
    sub = [r for r in rows if float(r["sep"]) == sep]
    for m in sorted(set(r["method"] for r in sub)):
        pts = sorted((float(r["snr_db"]), float(r["mse"])) for r in sub if r["method"] == m)
        plt.semilogy([p[0] for p in pts], [p[1] for p in pts], marker="o", label=m)
    pts = sorted(set((float(r["snr_db"]), float(r["crb"])) for r in sub))
    plt.semilogy([p[0] for p in pts], [p[1] for p in pts], "k--", label="CRB")
    plt.xlabel("SNR (dB)")
    plt.ylabel("frequency MSE")
    plt.title("separation %g/n" % sep)
    plt.legend()
    plt.savefig("comparison_sep%g.png" % sep, dpi=150)
)PY";

long total_ms(const std::vector<TrialRecord>& rs) {
    long t = 0;
    for (const auto& r : rs) t += r.runtime_ms;
    return t;
}

}  // namespace

void write_phase_outputs(const std::string& dir, const PhaseResult& r, const ExperimentConfig& c, double wall_s) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path d(dir);
    write_text_file((d / "phase.csv").string(), phase_csv(r, c));
    write_text_file((d / "trials.csv").string(), trials_csv(r.records));
    write_text_file((d / "manifest.json").string(), manifest(c, "phase", wall_s, total_ms(r.records)).dump(2) + "\n");
    write_text_file((d / "plot_phase.py").string(), kPhasePlot);
}

void write_comparison_outputs(const std::string& dir, const ComparisonResult& r, const ExperimentConfig& c,
                              double wall_s) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path d(dir);
    write_text_file((d / "comparison.csv").string(), comparison_csv(r));
    write_text_file((d / "trials.csv").string(), trials_csv(r.records));
    write_text_file((d / "manifest.json").string(),
                    manifest(c, "crb-compare", wall_s, total_ms(r.records)).dump(2) + "\n");
    write_text_file((d / "plot_comparison.py").string(), kCrbPlot);
}

}  // namespace atomline
