#include "atomline/signal_model.hpp"

#include "atomline/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace atomline {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double canonical_freq(double f) {
    double r = f - std::floor(f);
    if (r >= 1.0) r = 0.0;
    return r;
}

double wrap_difference(double a, double b) {
    double d = a - b;
    d -= std::floor(d + 0.5);
    return d;
}

double wrap_distance(double a, double b) {
    return std::min(std::abs(wrap_difference(a, b)), 0.5);
}

LineSpectrum::LineSpectrum(RVec f, CVec c) : freqs(std::move(f)), coeffs(std::move(c)) {
    if (freqs.size() != coeffs.size()) throw InvalidArgument("freqs and coeffs differ in length");
    for (Eigen::Index i = 0; i < freqs.size(); ++i) freqs[i] = canonical_freq(freqs[i]);
}

double LineSpectrum::separation() const {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k(); ++i)
        for (Eigen::Index j = i + 1; j < k(); ++j) best = std::min(best, wrap_distance(freqs[i], freqs[j]));
    return best;
}

double LineSpectrum::c_min() const { return coeffs.size() ? coeffs.cwiseAbs().minCoeff() : 0.0; }
double LineSpectrum::c_max() const { return coeffs.size() ? coeffs.cwiseAbs().maxCoeff() : 0.0; }

void LineSpectrum::validate() const {
    if (k() < 1) throw InvalidArgument("spectrum is empty");
    if (freqs.size() != coeffs.size()) throw InvalidArgument("freqs and coeffs differ in length");
    for (Eigen::Index i = 0; i < k(); ++i)
        if (coeffs[i] == cplx(0.0, 0.0)) throw InvalidArgument("zero coefficient");
    if (k() > 1 && !(separation() > 0.0)) throw InvalidArgument("repeated frequency");
}

SampleVector::SampleVector(int n_, CVec v) : n(n_), values(std::move(v)) {
    if (n <= 0 || n % 2 != 0) throw InvalidArgument("n must be a positive even integer");
    if (values.size() != 2 * n + 1) throw InvalidArgument("sample vector length must be 2n+1");
}

double gamma0(double sigma, int n) {
    return sigma * std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(n));
}

RVec time_index(int n) {
    return RVec::LinSpaced(2 * n + 1, -n, n);
}

CMat atom_matrix(int n, const RVec& freqs) {
    const Eigen::Index len = 2 * n + 1;
    CMat A(len, freqs.size());
    for (Eigen::Index l = 0; l < freqs.size(); ++l) {
        // exact per-entry phases; the recurrence version drifts for large n
        for (Eigen::Index i = 0; i < len; ++i) {
            const double t = static_cast<double>(i - n);
            const double ph = kTwoPi * wrap_difference(t * freqs[l], 0.0);
            A(i, l) = cplx(std::cos(ph), std::sin(ph));
        }
    }
    return A;
}

CMat atom_matrix_derivative(int n, const RVec& freqs, int order) {
    CMat A = atom_matrix(n, freqs);
    if (order == 0) return A;
    const RVec t = time_index(n);
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const cplx s = std::pow(cplx(0.0, kTwoPi * t[i]), order);
        A.row(i) *= s;
    }
    return A;
}

SampleVector synthesize(const LineSpectrum& spectrum, int n) {
    if (n < 2 || n % 2 != 0) throw InvalidArgument("n must be an even integer >= 2");
    if (spectrum.k() < 1) throw InvalidArgument("spectrum is empty");
    return SampleVector(n, atom_matrix(n, spectrum.freqs) * spectrum.coeffs);
}

SampleVector add_noise(const SampleVector& x, const NoiseSpec& noise) {
    if (noise.sigma < 0.0) throw InvalidArgument("sigma must be nonnegative");
    SampleVector y = x;
    if (noise.sigma == 0.0) return y;
    CounterRng rng(noise.seed);
    const double var = noise.sigma * noise.sigma;
    for (Eigen::Index i = 0; i < y.values.size(); ++i) y.values[i] += rng.complex_normal(var);
    return y;
}

namespace {

void fill_errors(const LineSpectrum& truth, const LineSpectrum& est, MatchResult& r) {
    const Eigen::Index k = truth.k();
    r.freq_errors.assign(k, 0.0);
    r.coeff_errors.assign(k, 0.0);
    r.total_cost = 0.0;
    r.freq_err_raw = r.freq_err_weighted = r.coeff_err = 0.0;
    for (Eigen::Index l = 0; l < k; ++l) {
        const int j = r.assignment[l];
        const double df = wrap_distance(est.freqs[j], truth.freqs[l]);
        const double dc = std::abs(est.coeffs[j] - truth.coeffs[l]);
        r.freq_errors[l] = df;
        r.coeff_errors[l] = dc;
        r.total_cost += df;
        r.freq_err_raw = std::max(r.freq_err_raw, df);
        r.freq_err_weighted = std::max(r.freq_err_weighted, std::abs(truth.coeffs[l]) * df);
        r.coeff_err = std::max(r.coeff_err, dc);
    }
}

}  // namespace

MatchResult match_supports(const LineSpectrum& truth, const LineSpectrum& estimate) {
    MatchResult r;
    const Eigen::Index kt = truth.k(), ke = estimate.k();
    if (kt != ke) {
        r.order_mismatch = true;
        // report nearest-neighbour pairs for inspection, nothing is assigned
        for (Eigen::Index l = 0; l < kt; ++l) r.unmatched_truth.push_back(static_cast<int>(l));
        for (Eigen::Index l = 0; l < ke; ++l) r.unmatched_estimate.push_back(static_cast<int>(l));
        r.freq_err_raw = r.freq_err_weighted = r.coeff_err = std::numeric_limits<double>::infinity();
        return r;
    }
    const int k = static_cast<int>(kt);
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    if (k <= kExhaustiveMatchLimit) {
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> best_perm = perm;
        do {
            double cost = 0.0;
            for (int l = 0; l < k; ++l) cost += wrap_distance(estimate.freqs[perm[l]], truth.freqs[l]);
            if (cost < best) {
                best = cost;
                best_perm = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        r.assignment = best_perm;
    } else {
        // greedy on globally sorted pair distances; may be suboptimal
        r.exhaustive = false;
        std::vector<std::tuple<double, int, int>> pairs;
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) pairs.emplace_back(wrap_distance(estimate.freqs[b], truth.freqs[a]), a, b);
        std::sort(pairs.begin(), pairs.end());
        std::vector<int> assign(k, -1);
        std::vector<bool> used(k, false);
        for (const auto& [d, a, b] : pairs) {
            if (assign[a] < 0 && !used[b]) {
                assign[a] = b;
                used[b] = true;
            }
        }
        r.assignment = assign;
    }
    fill_errors(truth, estimate, r);
    return r;
}

RVec random_separated_freqs(int k, double sep, std::uint64_t key) {
    if (k < 1) throw InvalidArgument("k must be positive");
    const double slack = 1.0 - k * sep;
    if (slack < 0.0) throw InvalidArgument("separation too large for k frequencies");
    CounterRng rng(key);
    std::vector<double> u(k);
    for (int i = 0; i < k; ++i) u[i] = slack * rng.uniform();
    std::sort(u.begin(), u.end());
    const double shift = rng.uniform();
    RVec f(k);
    for (int i = 0; i < k; ++i) f[i] = canonical_freq(u[i] - u[0] + i * sep + shift);
    return f;
}

CVec random_coeffs(int k, double c_min, double c_max, std::uint64_t key) {
    CounterRng rng(key);
    CVec c(k);
    for (int i = 0; i < k; ++i) {
        const double mag = (c_max > c_min) ? c_min * std::pow(c_max / c_min, rng.uniform()) : c_min;
        const double ph = kTwoPi * rng.uniform();
        c[i] = std::polar(mag, ph);
    }
    return c;
}

}  // namespace atomline
