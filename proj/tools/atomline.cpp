#include "atomline/baselines.hpp"
#include "atomline/dual_certificate.hpp"
#include "atomline/experiments.hpp"
#include "atomline/io.hpp"
#include "atomline/jackson_kernel.hpp"
#include "atomline/rng.hpp"
#include "atomline/solver.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

using namespace atomline;

namespace {

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return ExperimentConfig{};
    return ExperimentConfig::from_json(read_json_file(path));
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

SampleFile load_samples(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
        SampleFile f;
        f.samples = samples_from_csv(read_text_file(path));
        return f;
    }
    return samples_from_json(read_json_file(path));
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_text_file(out, text);
}

double resolve_lambda(double lambda, double lambda_x, const SampleFile& f) {
    if (lambda > 0.0) return lambda;
    if (!f.sigma) throw InvalidArgument("give --lambda, or a sample file with sigma and --lambda-x");
    return lambda_x * gamma0(*f.sigma, f.samples.n);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"atomline: off-grid line spectral estimation by atomic norm fixed points"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* phase = app.add_subcommand("phase", "success-rate sweep over (x, gamma)");
    phase->add_option("--config", config_path, "config JSON");
    phase->add_option("--out", out_dir, "output directory")->required();

    std::string cmp_config, cmp_out;
    auto* cmp = app.add_subcommand("crb-compare", "frequency MSE of each method against the CRB");
    cmp->add_option("--config", cmp_config, "config JSON");
    cmp->add_option("--out", cmp_out, "output directory")->required();

    std::string scale_n = "130,260,520", scale_out;
    ScalingScenario scen;
    auto* scale = app.add_subcommand("scaling", "median weighted frequency error against n");
    scale->add_option("--n", scale_n, "comma separated n values");
    scale->add_option("--k", scen.k);
    scale->add_option("--sep", scen.sep_min, "minimum separation in units of 1/n");
    scale->add_option("--sigma", scen.sigma);
    scale->add_option("--lambda-x", scen.lambda_x);
    scale->add_option("--trials", scen.trials);
    scale->add_option("--seed", scen.seed);
    scale->add_option("--out", scale_out, "CSV path (stdout when absent)");

    int table_n = 130;
    std::string table_out;
    auto* tables = app.add_subcommand("kernel-tables", "kernel bound tables against the reference values");
    tables->add_option("--n", table_n);
    tables->add_option("--out", table_out, "CSV path (stdout when absent)");

    std::string solve_in, solve_out, solve_mode = "witness";
    double solve_lambda = 0.0, solve_lx = 2.0;
    int solve_k = 0, solve_iters = 5000;
    auto* solve = app.add_subcommand("solve", "estimate a line spectrum from samples");
    solve->add_option("--input", solve_in, "sample JSON (witness mode needs the true spectrum)")->required();
    solve->add_option("--mode", solve_mode)->check(CLI::IsMember({"witness", "blind"}));
    solve->add_option("--lambda", solve_lambda);
    solve->add_option("--lambda-x", solve_lx, "lambda = x gamma0 when --lambda is absent");
    solve->add_option("--k", solve_k, "model order for blind mode (MDL when absent)");
    solve->add_option("--max-iters", solve_iters);
    solve->add_option("--out", solve_out, "estimate JSON (stdout when absent)");

    std::string cert_samples, cert_est, cert_grid_out;
    double cert_lambda = 0.0;
    int cert_factor = kDefaultGridFactor;
    auto* cert = app.add_subcommand("certify", "check the bounded interpolation property of a dual polynomial");
    cert->add_option("--samples", cert_samples)->required();
    cert->add_option("--estimate", cert_est)->required();
    cert->add_option("--lambda", cert_lambda)->required();
    cert->add_option("--grid-factor", cert_factor);
    cert->add_option("--grid-out", cert_grid_out, "CSV of f,|Q| on the grid");

    std::string base_method, base_samples, base_init, base_out;
    int base_k = 0, base_sub = 0;
    auto* base = app.add_subcommand("baseline", "MUSIC, MLE refinement or the CRB");
    base->add_option("--method", base_method)->required()->check(CLI::IsMember({"music", "mle", "crb"}));
    base->add_option("--samples", base_samples)->required();
    base->add_option("--k", base_k);
    base->add_option("--subarray", base_sub);
    base->add_option("--init", base_init, "initial spectrum JSON for mle");
    base->add_option("--out", base_out);

    int syn_n = 130, syn_k = 3;
    double syn_sep = 2.5, syn_sigma = 0.0;
    std::uint64_t syn_seed = 1;
    std::string syn_out;
    auto* syn = app.add_subcommand("synth", "draw a random instance");
    syn->add_option("--n", syn_n);
    syn->add_option("--k", syn_k);
    syn->add_option("--sep", syn_sep, "minimum separation in units of 1/n");
    syn->add_option("--sigma", syn_sigma);
    syn->add_option("--seed", syn_seed);
    syn->add_option("--out", syn_out);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto t0 = std::chrono::steady_clock::now();
        if (*phase) {
            const ExperimentConfig c = load_config(config_path);
            const PhaseResult r = run_phase_transition(c);
            write_phase_outputs(out_dir, r, c, elapsed_s(t0));
            std::cout << phase_csv(r, c);
        } else if (*cmp) {
            ExperimentConfig c = load_config(cmp_config);
            if (cmp_config.empty()) c.modes = {Mode::AtomicWitness, Mode::Music, Mode::Mle};
            const ComparisonResult r = run_crb_comparison(c);
            write_comparison_outputs(cmp_out, r, c, elapsed_s(t0));
            std::cout << comparison_csv(r);
        } else if (*scale) {
            const ScalingResult r = run_scaling_check(parse_int_list(scale_n), scen);
            emit(scale_out, scaling_csv(r));
            if (r.fit_skipped)
                std::cerr << "fit skipped: " << r.note << "\n";
            else
                std::cerr << "slope " << r.slope << (r.note.empty() ? "" : " (" + r.note + ")") << "\n";
        } else if (*tables) {
            std::string s = csv_row({"table", "quantity", "n_power", "reference_value", "computed_value", "ratio",
                                     "numeric_value", "match"});
            for (const auto& e : kernel_tables(table_n))
                s += csv_row({e.table, e.quantity, std::to_string(e.n_power), format_double(e.reference_value),
                              format_double(e.computed_value), format_double(e.ratio()),
                              e.has_numeric ? format_double(e.numeric_value) : "",
                              matches_sig_digits(e.computed_value, e.reference_value) ? "1" : "0"});
            emit(table_out, s);
        } else if (*solve) {
            const SampleFile f = samples_from_json(read_json_file(solve_in));
            const KernelContext ctx = KernelContext::from_n(f.samples.n);
            SolverConfig cfg;
            cfg.lambda = resolve_lambda(solve_lambda, solve_lx, f);
            cfg.max_iters = solve_iters;
            SolveResult r;
            if (solve_mode == "witness") {
                if (!f.truth) throw InvalidArgument("witness mode needs freqs and coeffs in the input");
                r = solve_witness(ctx, synthesize(*f.truth, f.samples.n), f.samples, *f.truth, cfg);
            } else {
                r = solve_blind(ctx, f.samples, cfg, solve_k > 0 ? std::optional<int>(solve_k) : std::nullopt);
            }
            json j = spectrum_to_json(r.theta.spectrum(), f.samples.n);
            j["lambda"] = cfg.lambda;
            j["iterations"] = r.iterations;
            j["residual"] = r.residual;
            j["converged"] = r.converged;
            if (!r.message.empty()) j["message"] = r.message;
            if (f.truth) {
                const MatchResult m = match_supports(*f.truth, r.theta.spectrum());
                j["freq_err_raw"] = m.freq_err_raw;
                j["freq_err_weighted"] = m.freq_err_weighted;
                j["coeff_err"] = m.coeff_err;
            }
            emit(solve_out, j.dump(2) + "\n");
            return r.converged ? 0 : 2;
        } else if (*cert) {
            const SampleFile f = load_samples(cert_samples);
            const LineSpectrum est = spectrum_from_json(read_json_file(cert_est));
            const KernelContext ctx = KernelContext::from_n(f.samples.n);
            const DualPolynomial Q = dual_from_primal(ctx, f.samples, est, cert_lambda);
            CVec signs(est.k());
            for (Eigen::Index l = 0; l < est.k(); ++l) signs[l] = est.coeffs[l] / std::abs(est.coeffs[l]);
            const int N = cert_factor * f.samples.n;
            const CertificateReport rep = verify_bip(Q, est.freqs, signs, N);
            json j;
            j["verdict"] = rep.verdict;
            j["interp_residuals"] = rep.interp_residuals;
            j["boundedness_margin"] = rep.boundedness_margin;
            j["second_order_ok"] = rep.second_order_ok;
            j["sufficient_concavity_ok"] = rep.sufficient_concavity_ok;
            j["max_abs_off_support"] = rep.max_abs_off_support;
            j["max_abs_middle"] = rep.max_abs_middle;
            j["max_abs_far"] = rep.max_abs_far;
            j["grid_size"] = rep.grid_size;
            j["refinement_inconclusive"] = rep.refinement_inconclusive;
            std::cout << j.dump(2) << "\n";
            if (!cert_grid_out.empty()) {
                const RVec a = Q.abs_on_grid(N);
                std::string s = csv_row({"f", "abs_q"});
                for (int i = 0; i < N; ++i)
                    s += csv_row({format_double(static_cast<double>(i) / N), format_double(a[i])});
                write_text_file(cert_grid_out, s);
            }
            return rep.verdict ? 0 : 3;
        } else if (*base) {
            const SampleFile f = load_samples(base_samples);
            const int n = f.samples.n;
            json j;
            if (base_method == "music") {
                const int k = base_k > 0 ? base_k : estimate_model_order(f.samples, base_sub > 0 ? base_sub : music_default_subarray(n));
                j = spectrum_to_json(music(f.samples, k, base_sub), n);
            } else if (base_method == "mle") {
                LineSpectrum init;
                if (!base_init.empty())
                    init = spectrum_from_json(read_json_file(base_init));
                else if (f.truth)
                    init = *f.truth;
                else
                    throw InvalidArgument("mle needs --init or a sample file carrying the true spectrum");
                const MleResult r = mle_refine_full(f.samples, init);
                j = spectrum_to_json(r.estimate, n);
                j["iterations"] = r.iterations;
                j["breakdown"] = r.breakdown;
                if (!r.message.empty()) j["message"] = r.message;
            } else {
                if (!f.truth || !f.sigma) throw InvalidArgument("crb needs a sample file with the spectrum and sigma");
                const CrbResult r = crb(*f.truth, n, *f.sigma);
                j["per_frequency_variance"] = std::vector<double>(r.per_frequency_variance.data(),
                                                                  r.per_frequency_variance.data() + r.per_frequency_variance.size());
                j["fisher_condition"] = r.fisher_condition;
            }
            emit(base_out, j.dump(2) + "\n");
        } else if (*syn) {
            const RVec fr = random_separated_freqs(syn_k, syn_sep / syn_n, derive_key(syn_seed, 1));
            const CVec co = random_coeffs(syn_k, 1.0, 1.0, derive_key(syn_seed, 2));
            SampleFile f;
            f.truth = LineSpectrum(fr, co);
            f.samples = add_noise(synthesize(*f.truth, syn_n), NoiseSpec{syn_sigma, derive_key(syn_seed, 3)});
            f.sigma = syn_sigma;
            emit(syn_out, samples_to_json(f).dump(2) + "\n");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
