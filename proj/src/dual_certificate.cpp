#include "atomline/dual_certificate.hpp"

#include "atomline/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace atomline {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kNearSamples = 64;

cplx unit_phase(double x) {
    const double ph = kTwoPi * wrap_difference(x, 0.0);
    return {std::cos(ph), std::sin(ph)};
}
}  // namespace

DualPolynomial::DualPolynomial(const KernelContext& ctx, CVec q) : n_(ctx.n), q_(std::move(q)) {
    if (q_.size() != 2 * n_ + 1) throw InvalidArgument("dual vector length must be 2n+1");
    zq_ = ctx.z.entries.cwiseProduct(q_);
}

void DualPolynomial::eval3(double f, cplx& q0, cplx& q1, cplx& q2) const {
    q0 = q1 = q2 = cplx(0.0, 0.0);
    for (int i = 0; i <= 2 * n_; ++i) {
        const double t = i - n_;
        const cplx term = zq_[i] * unit_phase(-t * f);
        const double w = kTwoPi * t;
        q0 += term;
        q1 += cplx(0.0, -w) * term;
        q2 += -w * w * term;
    }
}

cplx DualPolynomial::eval(double f, int order) const {
    if (order < 0 || order > 2) throw InvalidArgument("dual polynomial derivative order out of range");
    cplx q0, q1, q2;
    eval3(f, q0, q1, q2);
    return order == 0 ? q0 : (order == 1 ? q1 : q2);
}

namespace {

// one grid node by phase recurrence from t = -n
double abs_at_node(const CVec& zq, int n, double f) {
    const cplx step = unit_phase(-f);
    cplx e = unit_phase(static_cast<double>(n) * f);
    cplx acc(0.0, 0.0);
    for (int i = 0; i <= 2 * n; ++i) {
        acc += zq[i] * e;
        e *= step;
    }
    return std::abs(acc);
}

}  // namespace

RVec DualPolynomial::abs_on_grid(int N) const {
    RVec out(N);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < N; ++i) out[i] = abs_at_node(zq_, n_, static_cast<double>(i) / N);
    return out;
}

RVec DualPolynomial::abs_on_grid_serial(int N) const {
    RVec out(N);
    for (int i = 0; i < N; ++i) out[i] = abs_at_node(zq_, n_, static_cast<double>(i) / N);
    return out;
}

DualPolynomial dual_from_primal(const KernelContext& ctx, const SampleVector& y, const LineSpectrum& estimate,
                                double lambda) {
    if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
    CVec r = y.values;
    if (estimate.k() > 0) r -= atom_matrix(ctx.n, estimate.freqs) * estimate.coeffs;
    return DualPolynomial(ctx, r / lambda);
}

namespace {

// refine a local maximum of |Q|^2 inside [a, b]; returns the refined modulus
double refine_peak(const DualPolynomial& Q, double a, double b, double x0, bool& inconclusive) {
    auto h_at = [&](double x, double& hp, double& mag) {
        cplx q0, q1, q2;
        Q.eval3(x, q0, q1, q2);
        hp = 2.0 * (std::norm(q1) + (std::conj(q0) * q2).real());
        mag = std::abs(q0);
        return 2.0 * (std::conj(q0) * q1).real();
    };
    double hpa, ma, hpb, mb;
    const double ha = h_at(a, hpa, ma), hb = h_at(b, hpb, mb);
    if (!(ha >= 0.0 && hb <= 0.0)) {
        inconclusive = true;
        return std::max(ma, mb);
    }
    double lo = a, hi = b, x = x0, best = 0.0;
    for (int it = 0; it < 60; ++it) {
        double hp, mag;
        const double h = h_at(x, hp, mag);
        best = std::max(best, mag);
        if (h > 0.0) lo = x;
        else hi = x;
        double nx = (hp < 0.0) ? x - h / hp : 0.5 * (lo + hi);
        if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
        if (std::abs(nx - x) < 1e-16 || hi - lo < 1e-16) {
            x = nx;
            break;
        }
        x = nx;
    }
    double hp, mag;
    h_at(x, hp, mag);
    return std::max(best, mag);
}

double nearest_support_distance(const RVec& support, double f) {
    double d = std::numeric_limits<double>::infinity();
    for (Eigen::Index l = 0; l < support.size(); ++l) d = std::min(d, wrap_distance(f, support[l]));
    return d;
}

}  // namespace

CertificateReport verify_bip(const DualPolynomial& Q, const RVec& support, const CVec& signs, int grid_size,
                             double interp_tol) {
    const int n = Q.n();
    if (grid_size < 8 * n) throw InvalidArgument("grid_size must be at least 8n");
    if (support.size() != signs.size()) throw InvalidArgument("support and signs differ in length");
    CertificateReport rep;
    rep.grid_size = grid_size;
    rep.interp_tol = interp_tol;
    const double r_near = kNearRadius / n, r_far = kFarRadius / n;

    bool interp_ok = support.size() > 0;
    for (Eigen::Index l = 0; l < support.size(); ++l) {
        const double res = std::abs(Q.eval(support[l]) - signs[l]);
        rep.interp_residuals.push_back(res);
        interp_ok = interp_ok && res <= interp_tol;
    }

    const RVec mag = Q.abs_on_grid(grid_size);
    std::vector<char> allowed(grid_size);
    std::vector<double> dist(grid_size);
    for (int i = 0; i < grid_size; ++i) {
        dist[i] = nearest_support_distance(support, static_cast<double>(i) / grid_size);
        allowed[i] = dist[i] >= r_near;
    }
    const double h = 1.0 / grid_size;
    double max_off = 0.0, max_mid = 0.0, max_far = 0.0;
    auto record = [&](double value, double d) {
        max_off = std::max(max_off, value);
        if (d >= r_far) max_far = std::max(max_far, value);
        else max_mid = std::max(max_mid, value);
    };
    for (int i = 0; i < grid_size; ++i) {
        if (!allowed[i]) continue;
        record(mag[i], dist[i]);
        const int il = (i + grid_size - 1) % grid_size, ir = (i + 1) % grid_size;
        if (!(mag[i] >= mag[il] && mag[i] >= mag[ir])) continue;
        if (!allowed[il] || !allowed[ir]) continue;  // boundary of an excised region
        const double x0 = static_cast<double>(i) / grid_size;
        bool inconclusive = false;
        const double v = refine_peak(Q, x0 - h, x0 + h, x0, inconclusive);
        if (inconclusive) {
            rep.refinement_inconclusive = true;
            continue;
        }
        record(std::max(v, mag[i]), dist[i]);
    }
    rep.max_abs_off_support = max_off;
    rep.max_abs_middle = max_mid;
    rep.max_abs_far = max_far;
    rep.boundedness_margin = 1.0 - max_off;

    bool concave = support.size() > 0, sufficient_form = support.size() > 0;
    for (Eigen::Index l = 0; l < support.size(); ++l) {
        const cplx rot = std::conj(signs[l]) / std::abs(signs[l]);
        for (int j = 0; j <= kNearSamples; ++j) {
            const double x = support[l] - r_near + 2.0 * r_near * j / kNearSamples;
            cplx q0, q1, q2;
            Q.eval3(x, q0, q1, q2);
            const double sq = std::norm(q1) + (std::conj(q0) * q2).real();
            concave = concave && sq < 0.0;
            q0 *= rot;
            q1 *= rot;
            q2 *= rot;
            const double pf = q0.real() * q2.real() + std::norm(q1) + std::abs(q0.imag()) * std::abs(q2.imag());
            sufficient_form = sufficient_form && pf < 0.0;
        }
    }
    rep.second_order_ok = concave;
    rep.sufficient_concavity_ok = sufficient_form;
    rep.verdict = interp_ok && rep.boundedness_margin > 0.0 && rep.second_order_ok;
    return rep;
}

NoiselessCertificate construct_noiseless_certificate(const LineSpectrum& truth, const KernelContext& ctx) {
    truth.validate();
    const Eigen::Index k = truth.k();
    const RVec& f = truth.freqs;
    const RMat D0 = kernel_matrix(ctx, 0, f), D1 = kernel_matrix(ctx, 1, f), D2 = kernel_matrix(ctx, 2, f);
    CVec s(k);
    for (Eigen::Index l = 0; l < k; ++l) s[l] = truth.coeffs[l] / std::abs(truth.coeffs[l]);

    // unknowns x = (alpha_R, alpha_I, b) with beta = s .* b
    auto residual_parts = [&](const RVec& x, CVec& interp, RVec& stat) {
        const CVec alpha = x.head(k).cast<cplx>() + cplx(0.0, 1.0) * x.segment(k, k).cast<cplx>();
        const CVec beta = s.cwiseProduct(x.tail(k).cast<cplx>());
        interp = D0.cast<cplx>() * alpha + D1.cast<cplx>() * beta;
        const CVec d = D1.cast<cplx>() * alpha + D2.cast<cplx>() * beta;
        stat = (s.conjugate().cwiseProduct(d)).real();
    };
    RMat Msys(3 * k, 3 * k);
    for (Eigen::Index j = 0; j < 3 * k; ++j) {
        RVec e = RVec::Zero(3 * k);
        e[j] = 1.0;
        CVec interp;
        RVec stat;
        residual_parts(e, interp, stat);
        Msys.col(j) << interp.real(), interp.imag(), stat;
    }
    RVec rhs(3 * k);
    rhs << s.real(), s.imag(), RVec::Zero(k);
    Eigen::FullPivLU<RMat> lu(Msys);
    if (!lu.isInvertible()) throw std::runtime_error("noiseless certificate system is singular");
    const RVec x = lu.solve(rhs);

    const CVec alpha = x.head(k).cast<cplx>() + cplx(0.0, 1.0) * x.segment(k, k).cast<cplx>();
    const CVec beta = s.cwiseProduct(x.tail(k).cast<cplx>());
    const CMat A = atom_matrix(ctx.n, f), A1 = atom_matrix_derivative(ctx.n, f, 1);
    NoiselessCertificate out{DualPolynomial(ctx, A * alpha + A1 * beta), alpha, beta, 0.0, 0.0, {}};
    if (k > 1 && truth.separation() < 2.5 / ctx.n) out.warning = "support separation below 2.5/n";
    for (Eigen::Index l = 0; l < k; ++l) {
        out.interp_residual = std::max(out.interp_residual, std::abs(out.Q.eval(f[l]) - s[l]));
        out.stationarity_residual =
            std::max(out.stationarity_residual, std::abs((std::conj(s[l]) * out.Q.eval(f[l], 1)).real()));
    }
    return out;
}

int noise_grid_size(int n) { return static_cast<int>(std::ceil(4.0 * std::numbers::pi * (2 * n + 1))); }

double noise_dual_norm_grid_only(const KernelContext& ctx, const SampleVector& w) {
    const DualPolynomial Q(ctx, w.values);
    return Q.abs_on_grid(noise_grid_size(ctx.n)).maxCoeff();
}

double noise_dual_norm(const KernelContext& ctx, const SampleVector& w) {
    const DualPolynomial Q(ctx, w.values);
    const int N = noise_grid_size(ctx.n);
    const RVec mag = Q.abs_on_grid_serial(N);
    double best = mag.size() ? mag.maxCoeff() : 0.0;
    if (best == 0.0) return 0.0;
    const double h = 1.0 / N;
    const double floor = 0.5 * best;
    for (int i = 0; i < N; ++i) {
        const double l = mag[(i + N - 1) % N], r = mag[(i + 1) % N];
        if (mag[i] < floor || mag[i] < l || mag[i] < r) continue;
        bool inconclusive = false;
        const double x0 = static_cast<double>(i) / N;
        best = std::max(best, refine_peak(Q, x0 - h, x0 + h, x0, inconclusive));
    }
    return best;
}

double noise_dual_bound_value(int n, double sigma) {
    return 6.534 * std::sqrt(std::log(static_cast<double>(n)) / n) * sigma;
}

NoiseDualBound noise_bound_check(int n, double sigma, int trials, std::uint64_t seed) {
    if (trials < 1) throw InvalidArgument("trials must be positive");
    const KernelContext ctx = KernelContext::from_n(n);
    NoiseDualBound out;
    out.n = n;
    out.sigma = sigma;
    out.trials = trials;
    out.sample_count = noise_grid_size(n);
    out.bound = noise_dual_bound_value(n, sigma);
    std::vector<double> obs(trials);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < trials; ++i) {
        const SampleVector zero(n, CVec::Zero(2 * n + 1));
        const SampleVector w = add_noise(zero, NoiseSpec{sigma, derive_key(seed, 0x6e6f697365ULL, i)});
        obs[i] = noise_dual_norm(ctx, w);
    }
    for (double o : obs) {
        out.max_observed = std::max(out.max_observed, o);
        if (o > out.bound) ++out.exceedances;
    }
    return out;
}

}  // namespace atomline
