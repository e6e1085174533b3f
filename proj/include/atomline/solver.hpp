#pragma once

#include "atomline/jackson_kernel.hpp"
#include "atomline/signal_model.hpp"

#include <optional>
#include <string>

namespace atomline {

struct JointParameter {
    RVec freqs;
    RVec u;
    RVec v;

    JointParameter() = default;
    JointParameter(RVec f, RVec u_, RVec v_);
    static JointParameter from_spectrum(const LineSpectrum& s);

    Eigen::Index k() const { return freqs.size(); }
    CVec coeffs() const;
    LineSpectrum spectrum() const;
    // stacked (f, u, v)
    RVec stacked() const;
    static JointParameter from_stacked(const RVec& x);
};

struct WeightedNorm {
    RVec scale;  // sqrt(tau) |c_star_l|
    double tau = 0.0;

    static WeightedNorm from_coeffs(const KernelContext& ctx, const CVec& c);
    double norm(const JointParameter& d) const;
    // distance with frequency differences taken on the circle
    double distance(const JointParameter& a, const JointParameter& b) const;
};

struct SolverConfig {
    double lambda = 0.0;
    double X_star = 0.0;
    int max_iters = 5000;
    // relative tolerance; the absolute one is tol * min(1 + max|c_0|, 100 lambda)
    double tol = 1e-10;
    double step_damping = 1.0;
    // lambda ramped geometrically over this many stages in the first step (0 = fixed)
    int continuation_stages = 0;
    // blind mode: refresh cadence of the preconditioner
    int weight_refresh = 10;

    static double lambda_from_noise(double X_star, double sigma, int n) { return 0.646 * X_star * gamma0(sigma, n); }
};

struct SolveResult {
    JointParameter theta;
    int iterations = 0;
    double residual = 0.0;
    double contraction_estimate = 0.0;
    bool converged = false;
    bool degenerate = false;
    std::string message;
    // witness mode: the intermediate noiseless fixed point
    std::optional<JointParameter> theta_lambda;
};

struct DegeneratePath : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Holds y, Z and the correlations needed by G and its derivatives.
class Objective {
public:
    Objective(const KernelContext& ctx, const SampleVector& y, double lambda);

    double value(const JointParameter& theta) const;
    RVec gradient(const JointParameter& theta) const;
    RMat hessian(const JointParameter& theta) const;

    // b_l^(d) = a^(d)(f_l)^H Z y for d = 0, 1, 2
    CVec correlate(const RVec& freqs, int order) const;

    const KernelContext& ctx() const { return ctx_; }
    const SampleVector& y() const { return y_; }
    double lambda() const { return lambda_; }

private:
    const KernelContext& ctx_;
    SampleVector y_;
    RVec zy_re_, zy_im_;  // Z y split for the correlation loops
    double lambda_;
    double yzy_;  // y^H Z y
};

double objective(const KernelContext& ctx, const SampleVector& y, const JointParameter& theta, double lambda);
RVec gradient(const KernelContext& ctx, const SampleVector& y, const JointParameter& theta, double lambda);
RMat hessian(const KernelContext& ctx, const SampleVector& y, const JointParameter& theta, double lambda);

// Reference G and gradient from explicit (2n+1)-length products.
double objective_reference(const KernelContext& ctx, const SampleVector& y, const JointParameter& theta, double lambda);
RVec gradient_reference(const KernelContext& ctx, const SampleVector& y, const JointParameter& theta, double lambda);

// theta - step_damping * W gradient, W = diag(1/scale^2, I, I)
JointParameter fixed_point_map(const Objective& G, const JointParameter& theta, double step_damping,
                               const WeightedNorm& weights);

// step 1 from theta_star on the noiseless map, step 2 on the noisy map
SolveResult solve_witness(const KernelContext& ctx, const SampleVector& y_clean, const SampleVector& y_noisy,
                          const LineSpectrum& truth, const SolverConfig& config);

// iterates a single map from theta0 to its fixed point
SolveResult iterate_fixed_point(const Objective& G, const JointParameter& theta0, const WeightedNorm& weights,
                                const SolverConfig& config);

// grid-initialized solve; k_hint inferred from MUSIC eigenvalues when absent
SolveResult solve_blind(const KernelContext& ctx, const SampleVector& y, const SolverConfig& config,
                        std::optional<int> k_hint = std::nullopt);

// largest well-separated local maxima of |a(f)^H Z y| on a 16n grid
RVec blind_initial_freqs(const KernelContext& ctx, const SampleVector& y, int k);

// weighted least squares coefficients on a fixed support
CVec weighted_ls_coeffs(const KernelContext& ctx, const SampleVector& y, const RVec& freqs);

inline constexpr double kDegenerateCoeff = 1e-14;

}  // namespace atomline
