#include "atomline/solver.hpp"

#include "atomline/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace atomline {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

JointParameter::JointParameter(RVec f, RVec u_, RVec v_) : freqs(std::move(f)), u(std::move(u_)), v(std::move(v_)) {
    if (freqs.size() != u.size() || freqs.size() != v.size()) throw InvalidArgument("theta blocks differ in length");
}

JointParameter JointParameter::from_spectrum(const LineSpectrum& s) {
    return JointParameter(s.freqs, s.coeffs.real(), s.coeffs.imag());
}

CVec JointParameter::coeffs() const {
    CVec c(k());
    for (Eigen::Index l = 0; l < k(); ++l) c[l] = cplx(u[l], v[l]);
    return c;
}

LineSpectrum JointParameter::spectrum() const { return LineSpectrum(freqs, coeffs()); }

RVec JointParameter::stacked() const {
    RVec x(3 * k());
    x << freqs, u, v;
    return x;
}

JointParameter JointParameter::from_stacked(const RVec& x) {
    const Eigen::Index k = x.size() / 3;
    return JointParameter(x.head(k), x.segment(k, k), x.tail(k));
}

WeightedNorm WeightedNorm::from_coeffs(const KernelContext& ctx, const CVec& c) {
    WeightedNorm w;
    w.tau = ctx.tau;
    w.scale = std::sqrt(ctx.tau) * c.cwiseAbs();
    return w;
}

double WeightedNorm::norm(const JointParameter& d) const {
    double m = 0.0;
    for (Eigen::Index l = 0; l < d.k(); ++l)
        m = std::max({m, scale[l] * std::abs(d.freqs[l]), std::abs(d.u[l]), std::abs(d.v[l])});
    return m;
}

double WeightedNorm::distance(const JointParameter& a, const JointParameter& b) const {
    double m = 0.0;
    for (Eigen::Index l = 0; l < a.k(); ++l)
        m = std::max({m, scale[l] * std::abs(wrap_difference(a.freqs[l], b.freqs[l])), std::abs(a.u[l] - b.u[l]),
                      std::abs(a.v[l] - b.v[l])});
    return m;
}

Objective::Objective(const KernelContext& ctx, const SampleVector& y, double lambda)
    : ctx_(ctx), y_(y), lambda_(lambda) {
    if (y.n != ctx.n) throw InvalidArgument("sample length does not match kernel context");
    const CVec zy = ctx.z.entries.cwiseProduct(y.values);
    zy_re_ = zy.real();
    zy_im_ = zy.imag();
    yzy_ = (y.values.conjugate().cwiseProduct(zy)).real().sum();
}

CVec Objective::correlate(const RVec& freqs, int order) const {
    const int n = ctx_.n;
    CVec b(freqs.size());
    for (Eigen::Index l = 0; l < freqs.size(); ++l) {
        cplx acc(0.0, 0.0);
        for (int i = 0; i <= 2 * n; ++i) {
            const double t = i - n;
            const double ph = -kTwoPi * wrap_difference(t * freqs[l], 0.0);
            cplx term = cplx(std::cos(ph), std::sin(ph)) * cplx(zy_re_[i], zy_im_[i]);
            if (order > 0) term *= std::pow(cplx(0.0, -kTwoPi * t), order);
            acc += term;
        }
        b[l] = acc;
    }
    return b;
}

namespace {

void check_coeffs(const JointParameter& theta) {
    for (Eigen::Index l = 0; l < theta.k(); ++l)
        if (std::hypot(theta.u[l], theta.v[l]) < kDegenerateCoeff) throw DegeneratePath("coefficient collapsed to zero");
}

}  // namespace

double Objective::value(const JointParameter& theta) const {
    const CVec c = theta.coeffs();
    const RMat D0 = kernel_matrix(ctx_, 0, theta.freqs);
    const CVec b0 = correlate(theta.freqs, 0);
    const double quad = (c.adjoint() * D0.cast<cplx>() * c)(0, 0).real() - 2.0 * c.dot(b0).real() + yzy_;
    return 0.5 * quad + lambda_ * c.cwiseAbs().sum();
}

RVec Objective::gradient(const JointParameter& theta) const {
    check_coeffs(theta);
    const Eigen::Index k = theta.k();
    const CVec c = theta.coeffs();
    const CMat D0 = kernel_matrix(ctx_, 0, theta.freqs).cast<cplx>();
    const CMat D1 = kernel_matrix(ctx_, 1, theta.freqs).cast<cplx>();
    const CVec p = D0 * c - correlate(theta.freqs, 0);
    const CVec p1 = -D1 * c - correlate(theta.freqs, 1);
    RVec g(3 * k);
    for (Eigen::Index l = 0; l < k; ++l) {
        const cplx q = p[l] + lambda_ * c[l] / std::abs(c[l]);
        g[l] = (std::conj(c[l]) * p1[l]).real();
        g[k + l] = q.real();
        g[2 * k + l] = q.imag();
    }
    return g;
}

RMat Objective::hessian(const JointParameter& theta) const {
    check_coeffs(theta);
    const Eigen::Index k = theta.k();
    const CVec c = theta.coeffs();
    const RMat D0 = kernel_matrix(ctx_, 0, theta.freqs);
    const RMat D1 = kernel_matrix(ctx_, 1, theta.freqs);
    const RMat D2 = kernel_matrix(ctx_, 2, theta.freqs);
    const CVec p1 = -D1.cast<cplx>() * c - correlate(theta.freqs, 1);
    const CVec p2 = D2.cast<cplx>() * c - correlate(theta.freqs, 2);

    RMat H = RMat::Zero(3 * k, 3 * k);
    for (Eigen::Index a = 0; a < k; ++a) {
        const double ca = std::abs(c[a]), ca3 = ca * ca * ca;
        for (Eigen::Index b = 0; b < k; ++b) {
            const cplx cc = std::conj(c[a]);
            H(a, b) = (cc * c[b] * (-D2(a, b))).real();
            H(a, k + b) = (cc * (-D1(a, b))).real();
            H(a, 2 * k + b) = (cplx(0.0, 1.0) * cc * (-D1(a, b))).real();
            H(k + a, k + b) = D0(a, b);
            H(2 * k + a, 2 * k + b) = D0(a, b);
        }
        H(a, a) += (std::conj(c[a]) * p2[a]).real();
        H(a, k + a) += p1[a].real();
        H(a, 2 * k + a) += p1[a].imag();
        H(k + a, k + a) += lambda_ * theta.v[a] * theta.v[a] / ca3;
        H(2 * k + a, 2 * k + a) += lambda_ * theta.u[a] * theta.u[a] / ca3;
        H(k + a, 2 * k + a) = -lambda_ * theta.u[a] * theta.v[a] / ca3;
    }
    // mirror the f-row blocks and the u-v block
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) {
            H(k + b, a) = H(a, k + b);
            H(2 * k + b, a) = H(a, 2 * k + b);
            H(2 * k + b, k + a) = H(k + a, 2 * k + b);
        }
    return H;
}

double objective(const KernelContext& ctx, const SampleVector& y, const JointParameter& theta, double lambda) {
    return Objective(ctx, y, lambda).value(theta);
}

RVec gradient(const KernelContext& ctx, const SampleVector& y, const JointParameter& theta, double lambda) {
    return Objective(ctx, y, lambda).gradient(theta);
}

RMat hessian(const KernelContext& ctx, const SampleVector& y, const JointParameter& theta, double lambda) {
    return Objective(ctx, y, lambda).hessian(theta);
}

double objective_reference(const KernelContext& ctx, const SampleVector& y, const JointParameter& theta,
                           double lambda) {
    const CMat A = atom_matrix(ctx.n, theta.freqs);
    const CVec c = theta.coeffs();
    const CVec r = A * c - y.values;
    const double quad = (r.adjoint() * ctx.z.entries.asDiagonal() * r)(0, 0).real();
    return 0.5 * quad + lambda * c.cwiseAbs().sum();
}

RVec gradient_reference(const KernelContext& ctx, const SampleVector& y, const JointParameter& theta,
                        double lambda) {
    check_coeffs(theta);
    const Eigen::Index k = theta.k();
    const CMat A = atom_matrix(ctx.n, theta.freqs);
    const CMat A1 = atom_matrix_derivative(ctx.n, theta.freqs, 1);
    const CVec c = theta.coeffs();
    const CVec zr = ctx.z.entries.asDiagonal() * (A * c - y.values);
    const CVec p = A.adjoint() * zr;
    const CVec p1 = (A1 * c.asDiagonal()).adjoint() * zr;
    RVec g(3 * k);
    for (Eigen::Index l = 0; l < k; ++l) {
        const cplx q = p[l] + lambda * c[l] / std::abs(c[l]);
        g[l] = p1[l].real();
        g[k + l] = q.real();
        g[2 * k + l] = q.imag();
    }
    return g;
}

JointParameter fixed_point_map(const Objective& G, const JointParameter& theta, double step_damping,
                               const WeightedNorm& weights) {
    const Eigen::Index k = theta.k();
    const RVec g = G.gradient(theta);
    JointParameter out = theta;
    for (Eigen::Index l = 0; l < k; ++l) {
        const double s2 = weights.scale[l] * weights.scale[l];
        out.freqs[l] = canonical_freq(theta.freqs[l] - step_damping * g[l] / s2);
        out.u[l] = theta.u[l] - step_damping * g[k + l];
        out.v[l] = theta.v[l] - step_damping * g[2 * k + l];
    }
    return out;
}

SolveResult iterate_fixed_point(const Objective& G, const JointParameter& theta0, const WeightedNorm& weights,
                                const SolverConfig& config) {
    if (config.max_iters < 1 || !(config.tol > 0.0)) throw InvalidArgument("invalid solver configuration");
    SolveResult res;
    res.theta = theta0;
    // the dual witness interpolates to within residual / lambda, so the tolerance follows lambda
    double scale = 1.0 + (theta0.k() > 0 ? theta0.coeffs().cwiseAbs().maxCoeff() : 0.0);
    if (G.lambda() > 0.0) scale = std::min(scale, 100.0 * G.lambda());
    const double tol_abs = std::max(config.tol * scale, 64.0 * std::numeric_limits<double>::epsilon());
    double damping = config.step_damping;
    double prev = -1.0;
    try {
        for (int it = 0; it < config.max_iters; ++it) {
            const JointParameter full = fixed_point_map(G, res.theta, 1.0, weights);
            const double r = weights.distance(full, res.theta);
            res.residual = r;
            if (prev > 0.0 && it > 0) res.contraction_estimate = std::max(res.contraction_estimate, r / prev);
            if (r <= tol_abs) {
                res.converged = true;
                res.iterations = it;
                return res;
            }
            if (prev > 0.0 && r > prev && damping > 1e-6) damping *= 0.5;
            prev = r;
            res.theta = (damping == 1.0) ? full : fixed_point_map(G, res.theta, damping, weights);
            res.iterations = it + 1;
        }
        const JointParameter full = fixed_point_map(G, res.theta, 1.0, weights);
        res.residual = weights.distance(full, res.theta);
        res.converged = res.residual <= tol_abs;
        if (!res.converged) res.message = "fixed-point iteration did not converge";
    } catch (const DegeneratePath& e) {
        res.degenerate = true;
        res.converged = false;
        res.message = e.what();
    }
    return res;
}

SolveResult solve_witness(const KernelContext& ctx, const SampleVector& y_clean, const SampleVector& y_noisy,
                          const LineSpectrum& truth, const SolverConfig& config) {
    truth.validate();
    const WeightedNorm weights = WeightedNorm::from_coeffs(ctx, truth.coeffs);
    const JointParameter theta_star = JointParameter::from_spectrum(truth);
    std::string warn;
    if (truth.k() > 1 && truth.separation() < 2.5009 / ctx.n) warn = "support separation below 2.5009/n; ";

    SolveResult step1;
    step1.theta = theta_star;
    step1.converged = true;
    int total = 0;
    double rho = 0.0;
    const int stages = std::max(config.continuation_stages, 0);
    for (int s = 1; s <= std::max(stages, 1); ++s) {
        const double lam = stages > 0 ? config.lambda * s / stages : config.lambda;
        const Objective G1(ctx, y_clean, lam);
        step1 = iterate_fixed_point(G1, step1.theta, weights, config);
        total += step1.iterations;
        rho = std::max(rho, step1.contraction_estimate);
        if (step1.degenerate) break;
    }
    if (step1.degenerate || !step1.converged) {
        step1.iterations = total;
        step1.message = warn + "step 1: " + step1.message;
        return step1;
    }

    const Objective G2(ctx, y_noisy, config.lambda);
    SolveResult res = iterate_fixed_point(G2, step1.theta, weights, config);
    res.theta_lambda = step1.theta;
    res.iterations += total;
    res.contraction_estimate = std::max(res.contraction_estimate, rho);
    if (!warn.empty() || !res.message.empty()) res.message = warn + res.message;
    return res;
}

CVec weighted_ls_coeffs(const KernelContext& ctx, const SampleVector& y, const RVec& freqs) {
    const Objective G(ctx, y, 0.0);
    const RMat D0 = kernel_matrix(ctx, 0, freqs);
    return D0.cast<cplx>().colPivHouseholderQr().solve(G.correlate(freqs, 0));
}

RVec blind_initial_freqs(const KernelContext& ctx, const SampleVector& y, int k) {
    const int N = 16 * ctx.n;
    const CVec zy = ctx.z.entries.cwiseProduct(y.values);
    RVec mag(N);
    for (int i = 0; i < N; ++i) {
        const double f = static_cast<double>(i) / N;
        cplx acc(0.0, 0.0);
        for (int j = 0; j <= 2 * ctx.n; ++j) {
            const double ph = -kTwoPi * wrap_difference((j - ctx.n) * f, 0.0);
            acc += cplx(std::cos(ph), std::sin(ph)) * zy[j];
        }
        mag[i] = std::abs(acc);
    }
    std::vector<int> peaks;
    for (int i = 0; i < N; ++i) {
        const double l = mag[(i + N - 1) % N], r = mag[(i + 1) % N];
        if (mag[i] >= l && mag[i] > r) peaks.push_back(i);
    }
    std::sort(peaks.begin(), peaks.end(), [&](int a, int b) { return mag[a] > mag[b] || (mag[a] == mag[b] && a < b); });
    const double min_gap = 2.0 / ctx.n;
    std::vector<double> chosen;
    for (int i : peaks) {
        if (static_cast<int>(chosen.size()) == k) break;
        const double f = static_cast<double>(i) / N;
        bool ok = true;
        for (double g : chosen) ok = ok && wrap_distance(f, g) >= min_gap;
        if (ok) chosen.push_back(f);
    }
    RVec out(static_cast<Eigen::Index>(chosen.size()));
    for (size_t i = 0; i < chosen.size(); ++i) out[static_cast<Eigen::Index>(i)] = chosen[i];
    return out;
}

namespace {

JointParameter drop_atom(const JointParameter& th, Eigen::Index idx) {
    const Eigen::Index k = th.k();
    JointParameter out(RVec(k - 1), RVec(k - 1), RVec(k - 1));
    for (Eigen::Index l = 0, m = 0; l < k; ++l) {
        if (l == idx) continue;
        out.freqs[m] = th.freqs[l];
        out.u[m] = th.u[l];
        out.v[m] = th.v[l];
        ++m;
    }
    return out;
}

// an atom whose proximal step would soft-threshold it to zero
Eigen::Index find_vanishing_atom(const Objective& G, const JointParameter& th) {
    const CVec c = th.coeffs();
    const RMat D0 = kernel_matrix(G.ctx(), 0, th.freqs);
    const CVec p = D0.cast<cplx>() * c - G.correlate(th.freqs, 0);
    Eigen::Index worst = -1;
    double worst_mag = 0.0;
    for (Eigen::Index l = 0; l < th.k(); ++l) {
        const double m = std::abs(c[l] - p[l]);
        if (std::abs(c[l]) < kDegenerateCoeff || m <= G.lambda()) {
            if (worst < 0 || m < worst_mag) {
                worst = l;
                worst_mag = m;
            }
        }
    }
    return worst;
}

}  // namespace

SolveResult solve_blind(const KernelContext& ctx, const SampleVector& y, const SolverConfig& config,
                        std::optional<int> k_hint) {
    SolveResult res;
    int k = 0;
    if (k_hint) {
        k = *k_hint;
    } else {
        const int est = estimate_model_order(y, music_default_subarray(y.n));
        if (est < 1) {
            res.message = "no model order could be inferred";
            res.degenerate = true;
            res.theta = JointParameter(RVec(0), RVec(0), RVec(0));
            return res;
        }
        k = est;
    }
    if (k < 1) throw InvalidArgument("k_hint must be positive");

    const RVec f0 = blind_initial_freqs(ctx, y, k);
    if (f0.size() == 0) {
        res.theta = JointParameter(RVec(0), RVec(0), RVec(0));
        res.converged = true;
        res.message = "no correlation peaks; zero-signal estimate";
        return res;
    }
    const CVec c0 = weighted_ls_coeffs(ctx, y, f0);
    JointParameter th(f0, c0.real(), c0.imag());
    const Objective G(ctx, y, config.lambda);

    int total = 0;
    bool pruned = false;
    SolverConfig chunk = config;
    chunk.max_iters = std::max(1, config.weight_refresh);
    while (true) {
        if (th.k() == 0) break;
        const Eigen::Index drop = find_vanishing_atom(G, th);
        if (drop >= 0) {
            th = drop_atom(th, drop);
            pruned = true;
            continue;
        }
        const WeightedNorm weights = WeightedNorm::from_coeffs(ctx, th.coeffs());
        SolveResult part = iterate_fixed_point(G, th, weights, chunk);
        total += part.iterations;
        res.contraction_estimate = std::max(res.contraction_estimate, part.contraction_estimate);
        res.residual = part.residual;
        if (part.degenerate) {
            // remove the smallest atom and resume from the last iterate
            Eigen::Index idx = 0;
            th.coeffs().cwiseAbs().minCoeff(&idx);
            th = drop_atom(part.theta.k() == th.k() ? part.theta : th, idx);
            pruned = true;
            continue;
        }
        th = part.theta;
        if (part.converged) {
            res.converged = true;
            break;
        }
        if (total >= config.max_iters) {
            res.message = "fixed-point iteration did not converge";
            break;
        }
    }
    res.theta = th;
    res.iterations = total;
    if (th.k() == 0) {
        res.converged = true;
        res.degenerate = true;
        res.message = "all coefficients thresholded to zero";
    } else if (pruned) {
        res.message = "atoms pruned by soft-threshold during iteration";
    }
    return res;
}

}  // namespace atomline
