#pragma once

#include "atomline/jackson_kernel.hpp"
#include "atomline/signal_model.hpp"

#include <cstdint>
#include <string>

namespace atomline {

class DualPolynomial {
public:
    DualPolynomial(const KernelContext& ctx, CVec q);

    // Q^(order)(f) for order 0..2
    cplx eval(double f, int order = 0) const;
    // Q, Q', Q'' in one pass
    void eval3(double f, cplx& q0, cplx& q1, cplx& q2) const;

    // |Q| at f_i = i/N; the parallel and serial scans return identical values
    RVec abs_on_grid(int N) const;
    RVec abs_on_grid_serial(int N) const;

    const CVec& q() const { return q_; }
    int n() const { return n_; }

private:
    int n_;
    CVec q_;
    CVec zq_;  // Z q
};

// q = (y - A(f_hat) c_hat) / lambda
DualPolynomial dual_from_primal(const KernelContext& ctx, const SampleVector& y, const LineSpectrum& estimate,
                                double lambda);

struct CertificateReport {
    std::vector<double> interp_residuals;
    double boundedness_margin = 0.0;
    bool second_order_ok = false;
    // the sufficient form Q_R Q_R'' + |Q'|^2 + |Q_I||Q_I''| < 0 after sign rotation
    bool sufficient_concavity_ok = false;
    bool verdict = false;
    int grid_size = 0;
    bool refinement_inconclusive = false;
    double max_abs_off_support = 0.0;
    double max_abs_middle = 0.0;  // distance in [0.24/n, 0.75/n)
    double max_abs_far = 0.0;     // distance >= 0.75/n
    double interp_tol = 0.0;
};

inline constexpr double kNearRadius = 0.24;  // units of 1/n
inline constexpr double kFarRadius = 0.75;   // units of 1/n
inline constexpr double kDefaultInterpTol = 1e-6;
inline constexpr int kDefaultGridFactor = 32;

CertificateReport verify_bip(const DualPolynomial& Q, const RVec& support, const CVec& signs, int grid_size,
                             double interp_tol = kDefaultInterpTol);

struct NoiselessCertificate {
    DualPolynomial Q;
    CVec alpha;
    CVec beta;
    double interp_residual = 0.0;      // max |Q(f_l) - sign(c_l)|
    double stationarity_residual = 0.0;  // max |Re{conj(c_l) Q'(f_l)}| / |c_l|
    std::string warning;
};

// alpha, beta = sign(c) * real; throws std::runtime_error on a singular system
NoiselessCertificate construct_noiseless_certificate(const LineSpectrum& truth, const KernelContext& ctx);

// grid size N >= 4 pi (2n+1)
int noise_grid_size(int n);

// sup_f |a(f)^H Z w| via N equispaced samples and local refinement
double noise_dual_norm(const KernelContext& ctx, const SampleVector& w);
double noise_dual_norm_grid_only(const KernelContext& ctx, const SampleVector& w);

struct NoiseDualBound {
    int n = 0;
    double sigma = 0.0;
    int sample_count = 0;
    int trials = 0;
    int exceedances = 0;
    double max_observed = 0.0;
    double bound = 0.0;  // 6.534 sqrt(log n / n) sigma

    double rate() const { return trials ? static_cast<double>(exceedances) / trials : 0.0; }
};

double noise_dual_bound_value(int n, double sigma);

NoiseDualBound noise_bound_check(int n, double sigma, int trials, std::uint64_t seed);

}  // namespace atomline
