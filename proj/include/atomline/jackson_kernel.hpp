#pragma once

#include "atomline/signal_model.hpp"

#include <string>
#include <vector>

namespace atomline {

struct WeightDiagonal {
    int M = 0;
    RVec entries;  // g_M(l)/M for l = -2M..2M

    double at(int l) const { return entries[l + 2 * M]; }
};

struct KernelContext {
    int M = 0;
    int n = 0;
    double tau = 0.0;  // |K''(0)| = pi^2 (n^2 - 4) / 3
    WeightDiagonal z;

    static KernelContext from_n(int n);
};

// g_M(l) by the exact convolution sum
double g_M(int M, int l);

WeightDiagonal weight_diagonal(int M);

// K^(ell)(f) for ell = 0..4. Closed forms away from the origin, the finite
// cosine series within kSeriesRadius/M of an integer.
double kernel_derivative(const KernelContext& ctx, int ell, double f);

// The finite cosine series sum_t w_t (i 2 pi t)^ell e^{i 2 pi t f}; exact, O(n).
double kernel_derivative_series(const KernelContext& ctx, int ell, double f);

inline constexpr double kSeriesRadius = 0.5;

// [D_ell]_{nm} = K^(ell)(f2_m - f1_n), real-valued, returned as a real matrix
RMat kernel_matrix(const KernelContext& ctx, int ell, const RVec& f1, const RVec& f2);
inline RMat kernel_matrix(const KernelContext& ctx, int ell, const RVec& f) { return kernel_matrix(ctx, ell, f, f); }

// (-1)^j A^(j)(f1)^H Z A^(ell-j)(f2) by explicit (2n+1)-length products
CMat kernel_matrix_factored(const KernelContext& ctx, int ell, int j, const RVec& f1, const RVec& f2);

struct KernelBoundSet {
    int ell = 0;
    int M = 0;
    double c1 = 0.0;
    double c2 = 0.0;

    static KernelBoundSet make(int ell, int M);
};

// trig-extremum constants, evaluated from their closed expressions
double bound_constant_c1();
double bound_constant_c2();

// s(f) = 1/(M f (3 - 4 f^2)) on (0, 1/2]
double bound_s(int M, double f);

// B_ell(f) on (0, 1/2]
double bound_B(const KernelBoundSet& set, double f);

// B_ell after folding f onto (0, 1/2] by symmetry and periodicity
double bound_B_wrapped(const KernelBoundSet& set, double f);

// Minimum separation the F and W sums are built on.
double bound_delta_min(int n);

// F_ell(delta, f) = F+ + F-, with delta_min = 2.5/n
double bound_F(const KernelContext& ctx, int ell, double delta, double f);
double bound_F_plus(const KernelContext& ctx, int ell, double delta, double f);
double bound_F_minus(const KernelContext& ctx, int ell, double delta, double f);

// W_ell(f_lo, f_hi)
double bound_W(const KernelContext& ctx, int ell, double f_lo, double f_hi);

// max over [a, b] of |K^(ell)| (or of K^(ell) itself when signed) via dense
// grid plus golden-section refinement
double region_extrema(const KernelContext& ctx, int ell, double a, double b, bool signed_max = false);

// Closed-form upper bounds on |K^(ell)| and K'' over [0, b] near the origin,
// quadratic-envelope type, valid for small b n.
double envelope_abs_bound(const KernelContext& ctx, int ell, double b);
double envelope_second_derivative_max(const KernelContext& ctx, double b);

struct TableEntry {
    std::string table;     // "F", "W" or "K"
    std::string quantity;  // human label
    int n_power = 0;       // computed column is divided by n^n_power
    double reference_value = 0.0;
    double computed_value = 0.0;
    // numeric maximum, for K-table rows whose computed value is an envelope
    double numeric_value = 0.0;
    bool has_numeric = false;

    double ratio() const { return computed_value / reference_value; }
};

std::vector<TableEntry> kernel_tables(int n);

// |computed - reference| within half a unit of the reference value's 3rd significant digit
bool matches_sig_digits(double computed, double reference, int digits = 3);

}  // namespace atomline
