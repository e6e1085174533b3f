#include "atomline/dual_certificate.hpp"
#include "atomline/rng.hpp"
#include "atomline/solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace atomline;

namespace {

LineSpectrum spectrum(int n, int k, double sep, std::uint64_t seed) {
    return LineSpectrum(random_separated_freqs(k, sep / n, derive_key(seed, 1)),
                        random_coeffs(k, 1.0, 1.0, derive_key(seed, 2)));
}

CVec signs(const CVec& c) { return c.array() / c.cwiseAbs().cast<cplx>().array(); }

}  // namespace

TEST_CASE("dual polynomial derivatives") {
    const int n = 40;
    const KernelContext ctx = KernelContext::from_n(n);
    CounterRng rng(3);
    CVec q(2 * n + 1);
    for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = rng.complex_normal(1.0);
    const DualPolynomial Q(ctx, q);
    const double h = 1e-6;
    for (double f : {0.1, 0.45, 0.9}) {
        const cplx d1 = (Q.eval(f + h) - Q.eval(f - h)) / (2 * h);
        const cplx d2 = (Q.eval(f + h, 1) - Q.eval(f - h, 1)) / (2 * h);
        CHECK(std::abs(d1 - Q.eval(f, 1)) <= 1e-6 * std::abs(Q.eval(f, 1)) + 1e-6);
        CHECK(std::abs(d2 - Q.eval(f, 2)) <= 1e-5 * std::abs(Q.eval(f, 2)) + 1e-4);
        cplx a, b, c;
        Q.eval3(f, a, b, c);
        CHECK(std::abs(a - Q.eval(f)) < 1e-12);
        CHECK(std::abs(c - Q.eval(f, 2)) < 1e-9 * std::abs(c) + 1e-9);
    }
}

TEST_CASE("parallel and serial grid scans agree exactly") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    const NoiselessCertificate cert = construct_noiseless_certificate(spectrum(n, 4, 2.6, 5), ctx);
    const RVec a = cert.Q.abs_on_grid(32 * n), b = cert.Q.abs_on_grid_serial(32 * n);
    CHECK(a == b);
    // grid values equal pointwise evaluation
    for (int i = 0; i < 32 * n; i += 97) CHECK(a[i] == doctest::Approx(std::abs(cert.Q.eval(static_cast<double>(i) / (32 * n)))));
}

TEST_CASE("noiseless certificate interpolates and is bounded") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    for (int trial = 0; trial < 5; ++trial) {
        const LineSpectrum s = spectrum(n, 3, 2.5009, derive_key(9, trial));
        const NoiselessCertificate cert = construct_noiseless_certificate(s, ctx);
        CHECK(cert.interp_residual < 1e-10);
        CHECK(cert.stationarity_residual < 1e-8);
        const CertificateReport rep = verify_bip(cert.Q, s.freqs, signs(s.coeffs), 32 * n);
        CHECK(rep.verdict);
        CHECK(rep.max_abs_far < 0.7342 + 1e-3);
        CHECK(cert.alpha.cwiseAbs().maxCoeff() <= 1.00766);
        CHECK(cert.beta.cwiseAbs().maxCoeff() <= 0.00386 / n);
    }
}

TEST_CASE("certificate from a solved instance") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    const LineSpectrum s = spectrum(n, 3, 2.6, 13);
    const SampleVector y = synthesize(s, n);
    const double sigma = 1e-4 / std::sqrt(std::log(130.0) / n);
    const SampleVector yn = add_noise(y, NoiseSpec{sigma, 14});
    SolverConfig cfg;
    cfg.lambda = 3.0 * gamma0(sigma, n);
    const SolveResult r = solve_witness(ctx, y, yn, s, cfg);
    const LineSpectrum est = r.theta.spectrum();
    const DualPolynomial Q = dual_from_primal(ctx, yn, est, cfg.lambda);
    const CertificateReport rep = verify_bip(Q, est.freqs, signs(est.coeffs), 32 * n);
    CHECK(rep.verdict);
    for (double e : rep.interp_residuals) CHECK(e < 1e-6);
    CHECK_THROWS_AS(dual_from_primal(ctx, yn, est, 0.0), InvalidArgument);
}

TEST_CASE("wrong support fails") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    const LineSpectrum s = spectrum(n, 3, 3.0, 17);
    const SampleVector y = synthesize(s, n);
    RVec shifted = s.freqs;
    shifted[0] = canonical_freq(shifted[0] + 0.3 / n);
    const LineSpectrum est(shifted, s.coeffs);
    const DualPolynomial Q = dual_from_primal(ctx, y, est, 0.01);
    CHECK_FALSE(verify_bip(Q, est.freqs, signs(est.coeffs), 32 * n).verdict);
}

TEST_CASE("grid must be fine enough") {
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    const LineSpectrum s = spectrum(n, 2, 3.0, 19);
    const NoiselessCertificate cert = construct_noiseless_certificate(s, ctx);
    CHECK_THROWS_AS(verify_bip(cert.Q, s.freqs, signs(s.coeffs), 4 * n), InvalidArgument);
}

TEST_CASE("noise dual norm") {
    CHECK(noise_grid_size(130) >= 4 * 3.14159265 * 261);
    const int n = 130;
    const KernelContext ctx = KernelContext::from_n(n);
    const SampleVector w = add_noise(SampleVector(n, CVec::Zero(2 * n + 1)), NoiseSpec{1.0, 23});
    const double refined = noise_dual_norm(ctx, w), grid = noise_dual_norm_grid_only(ctx, w);
    CHECK(refined >= grid);
    CHECK(refined <= grid * 1.01);
    CHECK(noise_dual_bound_value(n, 1.0) == doctest::Approx(6.534 * std::sqrt(std::log(130.0) / 130.0)));
    const NoiseDualBound b = noise_bound_check(n, 1.0, 10, 29);
    CHECK(b.exceedances == 0);
    CHECK(b.max_observed < b.bound);
}
