#pragma once

#include "atomline/signal_model.hpp"

#include <string>

namespace atomline {

struct CrbResult {
    RVec per_frequency_variance;
    double fisher_condition = 0.0;
    RMat fisher;  // 3k x 3k in (f, u, v) order
};

// Fisher information of y = A(f) c + w, w circular Gaussian with E|w_t|^2 = sigma^2
CrbResult crb(const LineSpectrum& truth, int n, double sigma);

// sigma^2 / (8 pi^2 sum_t t^2)
double crb_single_tone(int n, double sigma);

struct MusicOptions {
    int subarray = 0;        // 0 selects the default
    int grid_factor = 16;    // grid points per sample of the full record
    bool forward_backward = true;
};

int music_default_subarray(int n);

// forward-backward smoothed covariance of the single snapshot
CMat smoothed_covariance(const SampleVector& y, int subarray, bool forward_backward = true);

struct MusicResult {
    LineSpectrum estimate;
    RVec eigenvalues;  // ascending
    int subarray = 0;
};

MusicResult music_full(const SampleVector& y, int k, const MusicOptions& opts = {});
LineSpectrum music(const SampleVector& y, int k, int subarray = 0);

// null-spectrum ||E_noise^H a_L(f)||^2 of a smoothed covariance
double music_null_spectrum(const CMat& signal_basis, double f);

// MDL order estimate from the smoothed covariance eigenvalues
int estimate_model_order(const SampleVector& y, int subarray);

// unweighted least-squares coefficients on a fixed support
CVec ls_coeffs(const SampleVector& y, const RVec& freqs);

struct MleResult {
    LineSpectrum estimate;
    int iterations = 0;
    double objective = 0.0;
    bool breakdown = false;
    std::string message;
};

// variable projection with Gauss-Newton steps on f and backtracking
MleResult mle_refine_full(const SampleVector& y, const LineSpectrum& init, int max_iters = 100);
LineSpectrum mle_refine(const SampleVector& y, const LineSpectrum& init);

// ||y - A(f) c_ls(f)||^2
double projected_residual(const SampleVector& y, const RVec& freqs);

}  // namespace atomline
