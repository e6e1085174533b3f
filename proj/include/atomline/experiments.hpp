#pragma once

#include "atomline/io.hpp"
#include "atomline/signal_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace atomline {

enum class Mode { AtomicWitness, AtomicBlind, Music, Mle };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& s);

struct ExperimentConfig {
    int n = 130;
    int k = 3;
    double sep_min = 2.5;  // units of 1/n
    int trials = 20;
    std::vector<double> x_grid{0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0};
    std::vector<double> gamma_grid{1e-5, 1e-4, 1e-3, 1e-2};
    std::uint64_t seed = 1;
    std::vector<Mode> modes{Mode::AtomicWitness};

    // comparison sweep
    std::vector<double> sep_grid{1.5, 2.0, 3.0, 4.0};  // units of 1/n
    std::vector<double> snr_db_grid{10.0, 20.0, 30.0, 40.0};
    double lambda_x = 2.0;    // lambda = lambda_x * gamma0 in the comparison sweep
    int music_subarray = 0;   // 0 selects the default

    int max_iters = 5000;
    double tol = 1e-10;
    double timeout_s = 30.0;
    // certificate grid points per unit n
    int grid_factor = 32;

    void validate() const;
    json to_json() const;
    static ExperimentConfig from_json(const json& j);
    std::string hash() const;
};

struct TrialRecord {
    int cell = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    std::string mode;
    double x = 0.0;
    double gamma = 0.0;
    double lambda = 0.0;
    double freq_err = 0.0;      // max |c*| |f_hat - f*|
    double freq_err_raw = 0.0;  // max |f_hat - f*|
    double coeff_err = 0.0;
    bool rule_ok = false;       // the frequency and coefficient error rule alone
    bool certificate_ok = false;
    bool success = false;       // rule_ok, and certified for atomic modes
    bool converged = false;
    long runtime_ms = 0;
    std::string note;
};

struct PhaseResult {
    std::vector<TrialRecord> records;
    // rate[mode][ix][ig]
    std::vector<std::vector<std::vector<double>>> rate;
    std::vector<Mode> modes;
};

PhaseResult run_phase_transition(const ExperimentConfig& config);

struct ComparisonRow {
    std::string method;
    double sep = 0.0;  // units of 1/n
    double snr_db = 0.0;
    double mse = 0.0;  // mean over trials and frequencies of (f_hat - f*)^2
    double crb = 0.0;  // mean per-frequency CRB
    int failures = 0;
    int trials = 0;
};

struct ComparisonResult {
    std::vector<ComparisonRow> rows;
    std::vector<TrialRecord> records;
};

ComparisonResult run_crb_comparison(const ExperimentConfig& config);

struct ScalingScenario {
    int k = 2;
    double sep_min = 3.0;  // units of 1/n
    double sigma = 0.05;
    double lambda_x = 2.0;
    int trials = 50;
    std::uint64_t seed = 7;
};

struct ScalingResult {
    std::vector<int> n_list;
    std::vector<double> median_weighted_err;
    std::vector<double> rate_curve;  // sqrt(log n) / n^1.5
    double slope = 0.0;
    bool fit_skipped = false;
    std::string note;
};

ScalingResult run_scaling_check(const std::vector<int>& n_list, const ScalingScenario& scenario);

// deterministic CSV and manifest writers
std::string phase_csv(const PhaseResult& r, const ExperimentConfig& c);
std::string trials_csv(const std::vector<TrialRecord>& records);
std::string comparison_csv(const ComparisonResult& r);
std::string scaling_csv(const ScalingResult& r);
json manifest(const ExperimentConfig& c, const std::string& kind, double wall_seconds, long trial_ms_total);

void write_phase_outputs(const std::string& dir, const PhaseResult& r, const ExperimentConfig& c, double wall_s);
void write_comparison_outputs(const std::string& dir, const ComparisonResult& r, const ExperimentConfig& c,
                              double wall_s);

}  // namespace atomline
