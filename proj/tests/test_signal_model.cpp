#include "atomline/rng.hpp"
#include "atomline/signal_model.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

using namespace atomline;

TEST_CASE("frequency wrapping") {
    CHECK(canonical_freq(1.25) == doctest::Approx(0.25));
    CHECK(canonical_freq(-0.25) == doctest::Approx(0.75));
    CHECK(wrap_distance(0.01, 0.99) == doctest::Approx(0.02));
    CHECK(wrap_difference(0.01, 0.99) == doctest::Approx(0.02));
    CHECK(wrap_difference(0.99, 0.01) == doctest::Approx(-0.02));
    CounterRng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double a = 4 * rng.uniform() - 2, b = 4 * rng.uniform() - 2;
        const double d = wrap_difference(a, b);
        CHECK(d >= -0.5);
        CHECK(d < 0.5);
        CHECK(std::abs(d) == doctest::Approx(wrap_distance(a, b)));
    }
}

TEST_CASE("line spectrum invariants") {
    RVec f(3);
    f << 0.1, 0.98, 0.5;
    CVec c(3);
    c << cplx(1, 0), cplx(0, 2), cplx(-0.5, 0);
    LineSpectrum s(f, c);
    CHECK(s.separation() == doctest::Approx(0.12));
    CHECK(s.c_min() == doctest::Approx(0.5));
    CHECK(s.c_max() == doctest::Approx(2.0));
    CHECK(s.dynamic_range() == doctest::Approx(4.0));

    RVec dup(2);
    dup << 0.2, 0.2;
    CHECK_THROWS_AS(LineSpectrum(dup, CVec::Ones(2)).validate(), InvalidArgument);
    CHECK_THROWS_AS(LineSpectrum(f, CVec::Ones(2)), InvalidArgument);
    RVec one(1);
    one << 0.3;
    CHECK(std::isinf(LineSpectrum(one, CVec::Ones(1)).separation()));
}

TEST_CASE("sample vector shape") {
    CHECK_THROWS_AS(SampleVector(5, CVec::Zero(11)), InvalidArgument);
    CHECK_THROWS_AS(SampleVector(6, CVec::Zero(12)), InvalidArgument);
    CVec v = CVec::Zero(13);
    v[0] = 7.0;
    SampleVector y(6, v);
    CHECK(y.at(-6) == cplx(7.0, 0.0));
    CHECK(y.M() == 3);
}

TEST_CASE("atoms and their derivatives") {
    const int n = 20;
    RVec f(2);
    f << 0.123, 0.777;
    const CMat A = atom_matrix(n, f);
    CHECK(A.rows() == 2 * n + 1);
    for (int t = -n; t <= n; ++t)
        CHECK(std::abs(A(t + n, 0) - std::polar(1.0, 2 * std::numbers::pi * t * 0.123)) < 1e-13);
    // central differences of the atoms
    const double h = 1e-6;
    RVec fp = f, fm = f;
    fp.array() += h;
    fm.array() -= h;
    const CMat fd = (atom_matrix(n, fp) - atom_matrix(n, fm)) / (2 * h);
    const CMat d1 = atom_matrix_derivative(n, f, 1);
    CHECK((fd - d1).cwiseAbs().maxCoeff() / d1.cwiseAbs().maxCoeff() < 1e-8);
    const CMat d2 = atom_matrix_derivative(n, f, 2);
    const CMat fd2 = (atom_matrix_derivative(n, fp, 1) - atom_matrix_derivative(n, fm, 1)) / (2 * h);
    CHECK((fd2 - d2).cwiseAbs().maxCoeff() / d2.cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("synthesis and noise") {
    const int n = 16;
    RVec f(1);
    f << 0.25;
    CVec c(1);
    c << cplx(2.0, 0.0);
    const SampleVector y = synthesize(LineSpectrum(f, c), n);
    CHECK(std::abs(y.at(1) - cplx(0.0, 2.0)) < 1e-14);
    CHECK(std::abs(y.at(0) - cplx(2.0, 0.0)) < 1e-14);

    const SampleVector z = add_noise(SampleVector(n, CVec::Zero(2 * n + 1)), NoiseSpec{0.0, 4});
    CHECK(z.values.norm() == 0.0);

    const int big = 20000;
    const SampleVector w = add_noise(SampleVector(big, CVec::Zero(2 * big + 1)), NoiseSpec{0.5, 9});
    const double var = w.values.squaredNorm() / w.size();
    CHECK(var == doctest::Approx(0.25).epsilon(0.03));
    const SampleVector w2 = add_noise(SampleVector(big, CVec::Zero(2 * big + 1)), NoiseSpec{0.5, 9});
    CHECK(w.values == w2.values);
}

TEST_CASE("gamma0") {
    CHECK(gamma0(1.0, 130) == doctest::Approx(std::sqrt(std::log(130.0) / 130.0)));
    CHECK(gamma0(0.0, 130) == 0.0);
}

namespace {

// brute force over every permutation of the estimate, minimizing the summed weighted distance
double brute_force_cost(const LineSpectrum& truth, const LineSpectrum& est) {
    std::vector<int> p(static_cast<size_t>(est.k()));
    std::iota(p.begin(), p.end(), 0);
    double best = 1e300;
    do {
        double cost = 0.0;
        for (Eigen::Index l = 0; l < truth.k(); ++l) cost += wrap_distance(truth.freqs[l], est.freqs[p[l]]);
        best = std::min(best, cost);
    } while (std::next_permutation(p.begin(), p.end()));
    return best;
}

}  // namespace

TEST_CASE("support matching agrees with brute force") {
    for (int trial = 0; trial < 30; ++trial) {
        const int k = 2 + trial % 5;
        const RVec f = random_separated_freqs(k, 0.05, derive_key(100, trial, 1));
        CounterRng rng(derive_key(100, trial, 2));
        RVec ef = f;
        for (Eigen::Index l = 0; l < k; ++l) ef[l] = canonical_freq(f[l] + 0.01 * (rng.uniform() - 0.5));
        // shuffle the estimate
        for (int l = k - 1; l > 0; --l) std::swap(ef[l], ef[static_cast<int>(rng.uniform() * (l + 1))]);
        const LineSpectrum truth(f, CVec::Ones(k)), est(ef, CVec::Ones(k));
        const MatchResult m = match_supports(truth, est);
        CHECK(m.exhaustive);
        CHECK_FALSE(m.order_mismatch);
        double cost = 0.0;
        for (double e : m.freq_errors) cost += e;
        CHECK(cost == doctest::Approx(brute_force_cost(truth, est)).epsilon(1e-12));
        CHECK(m.freq_err_raw <= 0.005 + 1e-15);
    }
}

TEST_CASE("support matching reports order mismatch") {
    RVec f(2), g(3);
    f << 0.1, 0.5;
    g << 0.1, 0.5, 0.8;
    const MatchResult m = match_supports(LineSpectrum(f, CVec::Ones(2)), LineSpectrum(g, CVec::Ones(3)));
    CHECK(m.order_mismatch);
    CHECK(m.unmatched_estimate.size() == 3);
}

TEST_CASE("random separated frequencies") {
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 130;
        const double sep = 2.5 / n;
        const RVec f = random_separated_freqs(10, sep, derive_key(7, trial));
        CHECK(LineSpectrum(f, CVec::Ones(10)).separation() >= sep * (1 - 1e-12));
    }
    CHECK(random_separated_freqs(3, 0.1, 42) == random_separated_freqs(3, 0.1, 42));
    CHECK_THROWS_AS(random_separated_freqs(11, 0.1, 1), InvalidArgument);
}

TEST_CASE("random coefficients") {
    const CVec c = random_coeffs(200, 0.5, 4.0, 5);
    CHECK(c.cwiseAbs().minCoeff() >= 0.5 - 1e-14);
    CHECK(c.cwiseAbs().maxCoeff() <= 4.0 + 1e-14);
    const CVec u = random_coeffs(20, 1.0, 1.0, 6);
    CHECK((u.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("counter rng streams are independent of draw history") {
    CounterRng a(11), b(11);
    for (int i = 0; i < 5; ++i) a.next_u64();
    for (int i = 0; i < 5; ++i) b.next_u64();
    CHECK(a.next_u64() == b.next_u64());
    CHECK(derive_key(1, 2, 3) != derive_key(1, 3, 2));
    CounterRng u(12);
    double mean = 0.0;
    for (int i = 0; i < 100000; ++i) mean += u.uniform();
    CHECK(mean / 100000 == doctest::Approx(0.5).epsilon(0.01));
}
