#include "atomline/experiments.hpp"

#include <doctest.h>

#include <cmath>

using namespace atomline;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.trials = 3;
    c.x_grid = {0.5, 3.0};
    c.gamma_grid = {1e-4, 1e-3};
    c.seed = 99;
    return c;
}

}  // namespace

TEST_CASE("config round trip and hash") {
    ExperimentConfig c = small_config();
    c.modes = {Mode::AtomicWitness, Mode::Music};
    const ExperimentConfig d = ExperimentConfig::from_json(c.to_json());
    CHECK(d.to_json() == c.to_json());
    CHECK(d.hash() == c.hash());
    ExperimentConfig e = c;
    e.seed = 100;
    CHECK(e.hash() != c.hash());
    CHECK(mode_from_name("atomic_blind") == Mode::AtomicBlind);
    CHECK_THROWS_AS(mode_from_name("lasso"), InvalidArgument);
}

TEST_CASE("config validation") {
    ExperimentConfig c = small_config();
    c.trials = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = small_config();
    c.x_grid.clear();
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = small_config();
    c.k = 60;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = small_config();
    c.n = 131;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("phase sweep is deterministic and consistent") {
    const ExperimentConfig c = small_config();
    const PhaseResult a = run_phase_transition(c);
    const PhaseResult b = run_phase_transition(c);
    CHECK(phase_csv(a, c) == phase_csv(b, c));
    CHECK(trials_csv(a.records) == trials_csv(b.records));
    CHECK(a.records.size() == 12);
    for (const auto& r : a.records) {
        if (r.success) CHECK(r.certificate_ok);
        if (r.success) CHECK(r.rule_ok);
        if (r.rule_ok) CHECK(r.freq_err_raw <= r.gamma / (2.0 * c.n) + 1e-12);
    }
    // x = 3 at gamma = 1e-4 should succeed
    CHECK(a.rate[0][1][0] == doctest::Approx(1.0));
}

TEST_CASE("noiseless cell with vanishing lambda succeeds") {
    ExperimentConfig c = small_config();
    c.gamma_grid = {0.0};
    c.x_grid = {1.0};
    const PhaseResult r = run_phase_transition(c);
    CHECK(r.rate[0][0][0] == doctest::Approx(1.0));
}

TEST_CASE("comparison sweep") {
    ExperimentConfig c;
    c.k = 2;
    c.trials = 4;
    c.sep_grid = {4.0};
    c.snr_db_grid = {40.0};
    c.modes = {Mode::AtomicWitness, Mode::Music, Mode::Mle};
    const ComparisonResult r = run_crb_comparison(c);
    REQUIRE(r.rows.size() == 3);
    for (const auto& row : r.rows) {
        CHECK(row.failures == 0);
        CHECK(row.mse <= 10.0 * row.crb);
    }
    CHECK(comparison_csv(r) == comparison_csv(run_crb_comparison(c)));
}

TEST_CASE("scaling check preconditions") {
    CHECK_THROWS_AS(run_scaling_check({130}, ScalingScenario{}), InvalidArgument);
    ScalingScenario s;
    s.sigma = 0.0;
    s.trials = 3;
    const ScalingResult r = run_scaling_check({40, 60, 80}, s);
    CHECK(r.fit_skipped);
}

TEST_CASE("csv quoting and line endings") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_row({"a", "b"}) == "a,b\r\n");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-5) == "1e-05");
}

TEST_CASE("sample csv round trip") {
    CVec v(5);
    v << cplx(1, 2), cplx(0.5, -1), cplx(3, 0), cplx(0, 0), cplx(-2, 1e-9);
    const SampleVector y(2, v);
    const SampleVector z = samples_from_csv(samples_to_csv(y));
    CHECK(z.n == 2);
    CHECK(z.values == y.values);
}

TEST_CASE("success rate does not grow with gamma at x >= 2") {
    ExperimentConfig c;
    c.trials = 10;
    c.x_grid = {2.0, 3.0};
    c.seed = 321;
    const PhaseResult r = run_phase_transition(c);
    for (size_t ix = 0; ix < c.x_grid.size(); ++ix)
        for (size_t ig = 0; ig + 1 < c.gamma_grid.size(); ++ig) {
            const double p = r.rate[0][ix][ig];
            // one-sided binomial slack of about two standard errors
            const double slack = 2.0 * std::sqrt(std::max(p * (1 - p), 0.09) / c.trials) + 1.0 / c.trials;
            CHECK(r.rate[0][ix][ig + 1] <= p + slack);
        }
}
