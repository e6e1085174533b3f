#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace atomline {

using cplx = std::complex<double>;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Frequencies live on the unit circle. Stored canonically in [0, 1).
double canonical_freq(double f);

// min over integers m of |a - b + m|, in [0, 1/2]
double wrap_distance(double a, double b);

// signed representative of a - b in [-1/2, 1/2)
double wrap_difference(double a, double b);

struct LineSpectrum {
    RVec freqs;
    CVec coeffs;

    LineSpectrum() = default;
    LineSpectrum(RVec f, CVec c);

    Eigen::Index k() const { return freqs.size(); }
    // minimum pairwise wrap-around distance; +inf for k < 2
    double separation() const;
    double c_min() const;
    double c_max() const;
    double dynamic_range() const { return c_max() / c_min(); }
    // throws InvalidArgument when an invariant is broken
    void validate() const;
};

struct SampleVector {
    int n = 0;
    CVec values;  // index t + n holds sample t, t = -n..n

    SampleVector() = default;
    SampleVector(int n_, CVec v);

    Eigen::Index size() const { return values.size(); }
    cplx at(int t) const { return values[t + n]; }
    int M() const { return n / 2; }
};

struct NoiseSpec {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

double gamma0(double sigma, int n);

// t = -n..n as doubles
RVec time_index(int n);

// columns a(f_l) with entries exp(i 2 pi t f_l)
CMat atom_matrix(int n, const RVec& freqs);

// (i 2 pi diag(t))^order A(f)
CMat atom_matrix_derivative(int n, const RVec& freqs, int order);

SampleVector synthesize(const LineSpectrum& spectrum, int n);

SampleVector add_noise(const SampleVector& x, const NoiseSpec& noise);

struct MatchResult {
    bool order_mismatch = false;
    bool exhaustive = true;
    // assignment[l] = index into the estimate matched to truth l
    std::vector<int> assignment;
    std::vector<int> unmatched_truth;
    std::vector<int> unmatched_estimate;
    std::vector<double> freq_errors;   // wrap distance per matched pair
    std::vector<double> coeff_errors;  // |c_hat - c_star| per matched pair
    double total_cost = 0.0;
    double freq_err_raw = 0.0;       // max_l |f_hat - f_star|
    double freq_err_weighted = 0.0;  // max_l |c_star| |f_hat - f_star|
    double coeff_err = 0.0;          // max_l |c_hat - c_star|
};

// Exhaustive permutation search up to this k, greedy nearest neighbour above.
inline constexpr int kExhaustiveMatchLimit = 8;

MatchResult match_supports(const LineSpectrum& truth, const LineSpectrum& estimate);

// Draws k frequencies uniformly among configurations with wrap separation >= sep.
RVec random_separated_freqs(int k, double sep, std::uint64_t key);

// k coefficients with modulus in [c_min, c_max] (log-uniform) and uniform phase.
CVec random_coeffs(int k, double c_min, double c_max, std::uint64_t key);

}  // namespace atomline
