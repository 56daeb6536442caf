#pragma once

#include "mfard/data_model.hpp"

#include <cstdint>
#include <optional>

namespace mfard {

// Weight prior of the kernel: isotropic N(0, sigma_w^2/d I) when rho is
// absent, otherwise N(0, diag(rho)^-1).
struct KernelPrior {
    double sigma_w = 1.0;
    double sigma_a = 1.0;
    std::optional<Vector> rho;
};

// Draws the M x d weight sample shared by every entry of a kernel.
Matrix kernel_weights(const KernelPrior& prior, int d, int M, std::uint64_t seed);

// K_{mu nu} = sigma_a^2 / M sum_m relu(w_m . x_mu) relu(w_m . x_nu).
// When X1 and X2 are the same matrix the result is exactly symmetric.
// Labels never enter: the kernel cannot adapt to the task.
Matrix mc_kernel(const Matrix& X1, const Matrix& X2, const KernelPrior& prior, int M, std::uint64_t seed);
Matrix mc_kernel(const Matrix& X, const KernelPrior& prior, int M, std::uint64_t seed);

// f = K_cross (K + tau I)^-1 y via Cholesky. Throws IllConditionedError.
Vector krr_predict(const Matrix& K, const Matrix& K_cross, const Vector& y, double tau);
// Same with a per-row ridge tau / weight[i]. Replicated observations of one
// input collapse to a single row whose ridge is divided by the multiplicity.
Vector krr_predict_weighted(const Matrix& K, const Matrix& K_cross, const Vector& y, double tau,
                            const Vector& weight);

enum class RidgeConvention {
    KappaSqOverSigmaASq,     // tau = kappa^2 / sigma_a^2 (default)
    KappaSqOverTwoSigmaASq,  // tau = kappa^2 / (2 sigma_a^2)
};

double ridge_tau(const Hyperparams& hyper, RidgeConvention conv);

struct NngpResult {
    Vector predictions;  // on the eval rows
    double m_S = 0.0;
    double test_mse = 0.0;   // 1/2 mean (f - y)^2 on eval
    double train_mse = 0.0;  // mean (f - y)^2 on train
};

NngpResult nngp_run(const Dataset& train, const Dataset& eval, const Hyperparams& hyper,
                    const std::optional<Vector>& rho, int M, std::uint64_t seed,
                    RidgeConvention conv = RidgeConvention::KappaSqOverSigmaASq);

}  // namespace mfard
