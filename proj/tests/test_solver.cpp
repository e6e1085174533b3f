#include "atomline/rng.hpp"
#include "atomline/solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace atomline;

namespace {

struct Case {
    LineSpectrum truth;
    SampleVector clean;
    SampleVector noisy;
    double sigma;
};

Case make_case(int n, int k, double sep, double gamma, std::uint64_t seed) {
    Case c;
    c.truth = LineSpectrum(random_separated_freqs(k, sep / n, derive_key(seed, 1)),
                           random_coeffs(k, 1.0, 1.0, derive_key(seed, 2)));
    c.clean = synthesize(c.truth, n);
    c.sigma = gamma / std::sqrt(std::log(static_cast<double>(n)) / n);
    c.noisy = add_noise(c.clean, NoiseSpec{c.sigma, derive_key(seed, 3)});
    return c;
}

JointParameter perturbed(const LineSpectrum& s, int n, std::uint64_t key) {
    CounterRng rng(key);
    JointParameter p = JointParameter::from_spectrum(s);
    for (Eigen::Index l = 0; l < p.k(); ++l) {
        p.freqs[l] += 0.1 / n * (rng.uniform() - 0.5);
        p.u[l] += 0.2 * (rng.uniform() - 0.5);
        p.v[l] += 0.2 * (rng.uniform() - 0.5);
    }
    return p;
}

}  // namespace

TEST_CASE("joint parameter stacking") {
    RVec f(2);
    f << 0.1, 0.6;
    CVec c(2);
    c << cplx(1, 2), cplx(-3, 0.5);
    const JointParameter p = JointParameter::from_spectrum(LineSpectrum(f, c));
    const JointParameter q = JointParameter::from_stacked(p.stacked());
    CHECK(q.freqs == p.freqs);
    CHECK((q.coeffs() - c).norm() == 0.0);
}

TEST_CASE("objective matches the explicit reference") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    for (int trial = 0; trial < 10; ++trial) {
        const Case c = make_case(n, 3, 2.5, 1e-2, derive_key(31, trial));
        const JointParameter th = perturbed(c.truth, n, derive_key(32, trial));
        const double lam = 0.01;
        const double a = objective(ctx, c.noisy, th, lam), b = objective_reference(ctx, c.noisy, th, lam);
        CHECK(a == doctest::Approx(b).epsilon(1e-10));
        const RVec g = gradient(ctx, c.noisy, th, lam), gr = gradient_reference(ctx, c.noisy, th, lam);
        CHECK((g - gr).norm() <= 1e-9 * gr.norm());
    }
}

TEST_CASE("gradient and Hessian match finite differences") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    for (int trial = 0; trial < 20; ++trial) {
        const Case c = make_case(n, 1 + trial % 4, 2.6, 1e-2, derive_key(41, trial));
        const JointParameter th = perturbed(c.truth, n, derive_key(42, trial));
        const double lam = 0.02;
        const Objective G(ctx, c.noisy, lam);
        const RVec x = th.stacked();
        const RVec g = G.gradient(th);
        const RMat H = G.hessian(th);
        const Eigen::Index d = x.size();
        RVec gfd(d);
        RMat Hfd(d, d);
        for (Eigen::Index i = 0; i < d; ++i) {
            const double h = (i < th.k()) ? 1e-7 / n : 1e-6;
            RVec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const JointParameter tp = JointParameter::from_stacked(xp), tm = JointParameter::from_stacked(xm);
            gfd[i] = (G.value(tp) - G.value(tm)) / (2 * h);
            Hfd.col(i) = (G.gradient(tp) - G.gradient(tm)) / (2 * h);
        }
        CHECK((g - gfd).norm() <= 1e-6 * std::max(1.0, g.norm()));
        CHECK((H - Hfd).norm() <= 1e-5 * H.norm());
        CHECK((H - H.transpose()).norm() <= 1e-10 * H.norm());
    }
}

TEST_CASE("single atom witness solve is the soft threshold") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    RVec f(1);
    f << 0.3172;
    CVec c(1);
    c << std::polar(1.7, 0.4);
    const LineSpectrum truth(f, c);
    const SampleVector y = synthesize(truth, n);
    SolverConfig cfg;
    cfg.lambda = 0.05;
    const SolveResult r = solve_witness(ctx, y, y, truth, cfg);
    CHECK(r.converged);
    const LineSpectrum est = r.theta.spectrum();
    CHECK(std::abs(wrap_difference(est.freqs[0], f[0])) < 1e-8);
    CHECK(std::abs(est.coeffs[0] - c[0] * (1.0 - cfg.lambda / std::abs(c[0]))) < 1e-8);
}

TEST_CASE("noiseless witness solve stays near the truth for small lambda") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    for (int trial = 0; trial < 5; ++trial) {
        const Case c = make_case(n, 3, 2.6, 0.0, derive_key(51, trial));
        SolverConfig cfg;
        cfg.lambda = 1e-4;
        const SolveResult r = solve_witness(ctx, c.clean, c.clean, c.truth, cfg);
        CHECK(r.converged);
        const MatchResult m = match_supports(c.truth, r.theta.spectrum());
        CHECK(m.coeff_err <= 2 * cfg.lambda);
        CHECK(m.freq_err_raw <= 1e-4 / n);
    }
}

TEST_CASE("noisy witness solve error scales with lambda") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    const Case c = make_case(n, 3, 2.6, 1e-4, 61);
    SolverConfig cfg;
    cfg.lambda = 2.0 * gamma0(c.sigma, n);
    const SolveResult r = solve_witness(ctx, c.clean, c.noisy, c.truth, cfg);
    CHECK(r.converged);
    CHECK(r.theta_lambda.has_value());
    CHECK(r.contraction_estimate < 1.0);
    const MatchResult m = match_supports(c.truth, r.theta.spectrum());
    CHECK(m.coeff_err <= 2 * cfg.lambda);
}

TEST_CASE("fixed point map leaves the solution unchanged") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    const Case c = make_case(n, 2, 3.0, 1e-3, 71);
    SolverConfig cfg;
    cfg.lambda = 2.0 * gamma0(c.sigma, n);
    const SolveResult r = solve_witness(ctx, c.clean, c.noisy, c.truth, cfg);
    const Objective G(ctx, c.noisy, cfg.lambda);
    const WeightedNorm w = WeightedNorm::from_coeffs(ctx, c.truth.coeffs);
    const JointParameter next = fixed_point_map(G, r.theta, 1.0, w);
    CHECK(w.distance(next, r.theta) <= 1e-8);
}

TEST_CASE("weighted norm wraps frequency differences") {
    const KernelContext ctx = KernelContext::from_n(130);
    const WeightedNorm w = WeightedNorm::from_coeffs(ctx, CVec::Ones(1));
    RVec fa(1), fb(1), z(1);
    fa << 0.999;
    fb << 0.001;
    z << 0.0;
    const JointParameter a(fa, z, z), b(fb, z, z);
    CHECK(w.distance(a, b) == doctest::Approx(std::sqrt(ctx.tau) * 0.002));
}

TEST_CASE("weighted least squares is exact on noiseless data") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    const Case c = make_case(n, 4, 2.5, 0.0, 81);
    const CVec est = weighted_ls_coeffs(ctx, c.clean, c.truth.freqs);
    CHECK((est - c.truth.coeffs).norm() < 1e-10);
}

TEST_CASE("blind solve recovers a well separated noiseless signal") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    const Case c = make_case(n, 3, 4.0, 0.0, 91);
    SolverConfig cfg;
    cfg.lambda = 1e-3;
    const SolveResult r = solve_blind(ctx, c.clean, cfg);
    REQUIRE(r.theta.k() == 3);
    const MatchResult m = match_supports(c.truth, r.theta.spectrum());
    CHECK(m.freq_err_raw <= 1e-3 / n);
    CHECK(m.coeff_err <= 2 * cfg.lambda);
}

TEST_CASE("an overwhelming lambda prunes every atom") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    const Case c = make_case(n, 2, 4.0, 0.0, 95);
    SolverConfig cfg;
    cfg.lambda = 10.0;
    const SolveResult r = solve_blind(ctx, c.clean, cfg, 2);
    CHECK(r.theta.k() == 0);
}

TEST_CASE("blind and witness solutions agree on two tones") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    int agree = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::uint64_t key = derive_key(1234, trial);
        RVec f(2);
        CounterRng rng(derive_key(key, 1));
        f[0] = rng.uniform();
        f[1] = canonical_freq(f[0] + 3.0 / n);
        const LineSpectrum truth(f, random_coeffs(2, 1.0, 1.0, derive_key(key, 2)));
        const double sigma = std::pow(10.0, -30.0 / 20.0);
        const SampleVector clean = synthesize(truth, n);
        const SampleVector noisy = add_noise(clean, NoiseSpec{sigma, derive_key(key, 3)});
        SolverConfig cfg;
        cfg.lambda = 2.0 * gamma0(sigma, n);
        const SolveResult w = solve_witness(ctx, clean, noisy, truth, cfg);
        const SolveResult b = solve_blind(ctx, noisy, cfg, 2);
        if (b.theta.k() != 2) continue;
        const MatchResult m = match_supports(w.theta.spectrum(), b.theta.spectrum());
        const WeightedNorm wn = WeightedNorm::from_coeffs(ctx, truth.coeffs);
        JointParameter bp = b.theta;
        for (int l = 0; l < 2; ++l) {
            bp.freqs[l] = b.theta.freqs[m.assignment[l]];
            bp.u[l] = b.theta.u[m.assignment[l]];
            bp.v[l] = b.theta.v[m.assignment[l]];
        }
        if (wn.distance(w.theta, bp) <= 1e-6) ++agree;
    }
    CHECK(agree >= 48);
}

TEST_CASE("blind solve of a single strong tone") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    RVec f(1);
    f << 0.4321;
    CVec c(1);
    c << std::polar(2.0, 1.1);
    const LineSpectrum truth(f, c);
    const double sigma = 0.01;
    const SampleVector y = add_noise(synthesize(truth, n), NoiseSpec{sigma, 5});
    SolverConfig cfg;
    cfg.lambda = 2.0 * gamma0(sigma, n);
    const SolveResult r = solve_blind(ctx, y, cfg);
    REQUIRE(r.theta.k() == 1);
    CHECK(std::abs(wrap_difference(r.theta.freqs[0], f[0])) <= 10.0 * gamma0(sigma, n) / (n * std::abs(c[0])));
}

TEST_CASE("blind solve of a zero signal") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    SolverConfig cfg;
    cfg.lambda = 1e-3;
    const SolveResult r = solve_blind(ctx, SampleVector(n, CVec::Zero(2 * n + 1)), cfg, 1);
    CHECK(r.theta.k() == 0);
}

TEST_CASE("solutions keep the support separated") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    for (int trial = 0; trial < 20; ++trial) {
        const Case c = make_case(n, 4, 2.6, 1e-3, derive_key(2468, trial));
        SolverConfig cfg;
        cfg.lambda = SolverConfig::lambda_from_noise(3.0, c.sigma, n);
        const SolveResult r = solve_witness(ctx, c.clean, c.noisy, c.truth, cfg);
        CHECK(r.converged);
        CHECK(r.theta.spectrum().separation() >= 2.5 / n);
    }
}
