#include "atomline/baselines.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace atomline {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// real-ified least squares for complex systems with real unknowns
RVec real_lstsq(const CMat& J, const CVec& r) {
    RMat Jr(2 * J.rows(), J.cols());
    Jr << J.real(), J.imag();
    RVec rr(2 * r.size());
    rr << r.real(), r.imag();
    return Jr.colPivHouseholderQr().solve(rr);
}
}  // namespace

double crb_single_tone(int n, double sigma) {
    double s = 0.0;
    for (int t = -n; t <= n; ++t) s += static_cast<double>(t) * t;
    return sigma * sigma / (8.0 * std::numbers::pi * std::numbers::pi * s);
}

CrbResult crb(const LineSpectrum& truth, int n, double sigma) {
    if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
    truth.validate();
    const Eigen::Index k = truth.k();
    const CMat A = atom_matrix(n, truth.freqs);
    const CMat A1 = atom_matrix_derivative(n, truth.freqs, 1);
    CMat J(A.rows(), 3 * k);
    for (Eigen::Index l = 0; l < k; ++l) {
        J.col(l) = A1.col(l) * truth.coeffs[l];
        J.col(k + l) = A.col(l);
        J.col(2 * k + l) = A.col(l) * cplx(0.0, 1.0);
    }
    CrbResult res;
    res.fisher = (2.0 / (sigma * sigma)) * (J.adjoint() * J).real();
    res.fisher = 0.5 * (res.fisher + res.fisher.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<RMat> es(res.fisher);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    res.fisher_condition = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(lo > 0.0) || res.fisher_condition > 1e15) throw std::runtime_error("singular Fisher information");
    const RMat inv = res.fisher.ldlt().solve(RMat::Identity(3 * k, 3 * k));
    res.per_frequency_variance = inv.diagonal().head(k);
    return res;
}

int music_default_subarray(int n) { return (2 * n + 1) / 2; }

CMat smoothed_covariance(const SampleVector& y, int L, bool forward_backward) {
    const int N = static_cast<int>(y.size());
    const int windows = N - L + 1;
    CMat R = CMat::Zero(L, L);
    for (int i = 0; i < windows; ++i) {
        const CVec s = y.values.segment(i, L);
        R.noalias() += s * s.adjoint();
    }
    R /= static_cast<double>(windows);
    if (forward_backward) {
        const CMat Rb = R.conjugate().reverse();
        R = 0.5 * (R + Rb);
    }
    return 0.5 * (R + R.adjoint());
}

double music_null_spectrum(const CMat& Es, double f) {
    const Eigen::Index L = Es.rows();
    CVec a(L);
    for (Eigen::Index j = 0; j < L; ++j) {
        const double ph = kTwoPi * wrap_difference(j * f, 0.0);
        a[j] = cplx(std::cos(ph), std::sin(ph));
    }
    return static_cast<double>(L) - (Es.adjoint() * a).squaredNorm();
}

namespace {

double golden_min(const auto& g, double a, double b, int iters) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double g1 = g(x1), g2 = g(x2);
    for (int i = 0; i < iters; ++i) {
        if (g1 > g2) {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + phi * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - phi * (b - a);
            g1 = g(x1);
        }
    }
    return (g1 < g2) ? x1 : x2;
}

}  // namespace

MusicResult music_full(const SampleVector& y, int k, const MusicOptions& opts) {
    const int L = opts.subarray > 0 ? opts.subarray : music_default_subarray(y.n);
    if (k < 1) throw InvalidArgument("k must be positive");
    if (k >= L) throw InvalidArgument("k must be smaller than the subarray length");
    if (L > y.n + 1) throw InvalidArgument("subarray longer than n+1");
    const CMat R = smoothed_covariance(y, L, opts.forward_backward);
    Eigen::SelfAdjointEigenSolver<CMat> es(R);
    const CMat Es = es.eigenvectors().rightCols(k);

    const int G = opts.grid_factor * static_cast<int>(y.size());
    RVec d(G);
    for (int i = 0; i < G; ++i) d[i] = music_null_spectrum(Es, static_cast<double>(i) / G);
    std::vector<int> minima;
    for (int i = 0; i < G; ++i) {
        const double l = d[(i + G - 1) % G], r = d[(i + 1) % G];
        if (d[i] <= l && d[i] < r) minima.push_back(i);
    }
    std::sort(minima.begin(), minima.end(), [&](int a, int b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
    if (static_cast<int>(minima.size()) > k) minima.resize(k);

    RVec f(static_cast<Eigen::Index>(minima.size()));
    const double h = 1.0 / G;
    for (size_t j = 0; j < minima.size(); ++j) {
        const int i = minima[j];
        const double fl = d[(i + G - 1) % G], fc = d[i], fr = d[(i + 1) % G];
        // parabolic vertex, then golden section inside the bracketing cells
        const double den = fl - 2.0 * fc + fr;
        double x0 = static_cast<double>(i) / G;
        if (den > 0.0) x0 += 0.5 * h * (fl - fr) / den;
        const double lo = x0 - h, hi = x0 + h;
        const double x = golden_min([&](double ff) { return music_null_spectrum(Es, ff); }, lo, hi, 80);
        f[static_cast<Eigen::Index>(j)] = canonical_freq(x);
    }
    MusicResult out;
    out.subarray = L;
    out.eigenvalues = es.eigenvalues();
    out.estimate = LineSpectrum(f, f.size() ? ls_coeffs(y, f) : CVec());
    return out;
}

LineSpectrum music(const SampleVector& y, int k, int subarray) {
    MusicOptions o;
    o.subarray = subarray;
    return music_full(y, k, o).estimate;
}

int estimate_model_order(const SampleVector& y, int L) {
    const CMat R = smoothed_covariance(y, L, true);
    Eigen::SelfAdjointEigenSolver<CMat> es(R, Eigen::EigenvaluesOnly);
    RVec ev = es.eigenvalues().reverse();  // descending
    const double snapshots = static_cast<double>(y.size() - L + 1);
    const double floor_ev = std::max(ev[0], 1e-300) * 1e-15;
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int kk = 0; kk < L / 2; ++kk) {
        const int m = L - kk;
        double log_geo = 0.0, arith = 0.0;
        for (int i = kk; i < L; ++i) {
            const double e = std::max(ev[i], floor_ev);
            log_geo += std::log(e);
            arith += e;
        }
        log_geo /= m;
        arith /= m;
        const double val = -snapshots * m * (log_geo - std::log(arith)) + 0.5 * kk * (2.0 * L - kk) * std::log(snapshots);
        if (val < best_val) {
            best_val = val;
            best = kk;
        }
    }
    return best;
}

CVec ls_coeffs(const SampleVector& y, const RVec& freqs) {
    const CMat A = atom_matrix(y.n, freqs);
    return A.colPivHouseholderQr().solve(y.values);
}

double projected_residual(const SampleVector& y, const RVec& freqs) {
    const CMat A = atom_matrix(y.n, freqs);
    const CVec c = A.colPivHouseholderQr().solve(y.values);
    return (y.values - A * c).squaredNorm();
}

MleResult mle_refine_full(const SampleVector& y, const LineSpectrum& init, int max_iters) {
    if (init.k() < 1) throw InvalidArgument("initial support is empty");
    MleResult res;
    RVec f = init.freqs;
    const Eigen::Index k = f.size();
    double obj = projected_residual(y, f);
    for (int it = 0; it < max_iters; ++it) {
        const CMat A = atom_matrix(y.n, f);
        const CVec c = A.colPivHouseholderQr().solve(y.values);
        const CVec r = y.values - A * c;
        const CMat A1 = atom_matrix_derivative(y.n, f, 1);
        CMat J(A.rows(), 3 * k);
        for (Eigen::Index l = 0; l < k; ++l) {
            J.col(l) = A1.col(l) * c[l];
            J.col(k + l) = A.col(l);
            J.col(2 * k + l) = A.col(l) * cplx(0.0, 1.0);
        }
        const RVec step = real_lstsq(J, r);
        const RVec df = step.head(k);
        if (!df.allFinite()) {
            res.breakdown = true;
            res.message = "Gauss-Newton step not finite";
            break;
        }
        double s = 1.0;
        bool accepted = false;
        RVec trial;
        double trial_obj = obj;
        for (int bt = 0; bt < 40; ++bt) {
            trial = f + s * df;
            for (Eigen::Index l = 0; l < k; ++l) trial[l] = canonical_freq(trial[l]);
            trial_obj = projected_residual(y, trial);
            if (trial_obj <= obj) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        res.iterations = it + 1;
        if (!accepted) {
            // no descent along the Gauss-Newton direction; f is a local minimizer to precision
            break;
        }
        const double dec = obj - trial_obj;
        f = trial;
        obj = trial_obj;
        if (s * df.cwiseAbs().maxCoeff() < 1e-15 || dec <= 1e-16 * std::max(obj, 1e-300)) break;
    }
    res.objective = obj;
    res.estimate = LineSpectrum(f, ls_coeffs(y, f));
    return res;
}

LineSpectrum mle_refine(const SampleVector& y, const LineSpectrum& init) { return mle_refine_full(y, init).estimate; }

}  // namespace atomline
