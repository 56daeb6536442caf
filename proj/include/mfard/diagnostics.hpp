#pragma once

#include "mfard/data_model.hpp"

#include <span>

namespace mfard {

struct ModelParams;
struct ParticleState;

struct Overlap {
    double m_S = 0.0;  // c^T f / P_eval
    double g = 0.0;    // c^T c / P_eval
};

// c_mu = chi_S(x_mu) on the eval rows.
Overlap empirical_mS(const Vector& f, const Dataset& eval, std::span<const int> S);

// Teacher overlap used for sweep records: Walsh overlap on parity tasks and
// y^T f / y^T y on single-index tasks (1 for a perfect predictor).
double teacher_overlap(const Vector& f, const Dataset& eval);

struct TestError {
    double mse = 0.0;          // 1/2 mean (f - y)^2
    double f_bar_sq = 0.0;     // mean f^2
    double m_S = 0.0;
    double g = 0.0;
    double decomposed = 0.0;   // 1/2 (f_bar_sq - 2 m_S + g); parity only
};

// For single-index tasks only `mse` and `f_bar_sq` are filled; the
// decomposition fields are NaN.
TestError test_error(const Vector& f, const Dataset& eval, std::span<const int> S);

// J_S(w) estimated on the eval rows: (1/P) sum_mu relu(w . x_mu + b) chi_S(x_mu).
Vector coupling_estimate(const Matrix& W, const Vector* bias, const Dataset& eval, std::span<const int> S);

// Per-unit m~_i = a_i * J_S(w_i).
Vector specialization(const ModelParams& params, const Dataset& eval, std::span<const int> S);
Vector specialization(const ParticleState& state, const Dataset& eval, std::span<const int> S);

struct MarginalStats {
    Vector variance;         // [d], unbiased sample variance per column
    Vector excess_kurtosis;  // [d], Fisher convention; 0 for a degenerate column
};

MarginalStats weight_marginal_stats(const Matrix& W);

// chi_S^T K chi_S / tr K with K = (1/N) Phi Phi^T, Phi_{mu i} = relu(w_i . x_mu).
double kernel_outlier_ratio(const Matrix& W, const Matrix& X, std::span<const int> S);
// Same statistic on an explicitly supplied kernel.
double kernel_outlier_ratio(const Matrix& K, const Vector& chi);

// Coordinate-space Gram W^T W / N  ([d x d]).
Matrix gram_wwt(const Matrix& W);
// Unit-space Gram W W^T / d  ([N x N]).
Matrix gram_unit_space(const Matrix& W);

}  // namespace mfard
