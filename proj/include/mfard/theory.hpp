#pragma once

#include <vector>

namespace mfard {

// ReLU/parity constants at the equal-weight direction on S:
// J_S = alpha D_k, Sigma = alpha^2 C_k, R_k = D_k^2 / C_k.
struct TheoryConstants {
    int k = 0;
    double C = 0.0;
    double D = 0.0;
    double R = 0.0;
};

// Closed-form binomial sums, 1 <= k <= 25.
TheoryConstants parity_constants(int k);
// Independent oracle: enumerates all 2^k sign patterns of x_S in integer
// arithmetic, k <= 20.
TheoryConstants brute_constants(int k);

struct OnsetInputs {
    double C = 1.0;      // weight-prior curvature: d k / sigma_w^2 (MF) or k rho_on (ARD)
    int N = 1;
    double gamma = 0.5;
    double sigma_a = 1.0;
    double kappa = 1.0;
    double m_S = 0.0;

    void validate() const;
};

// Positive root A* of C kappa^2 N^2g A^2 + C_k A - (1 - m)^2 D_k^2 sigma_a^-2 / kappa^2 = 0.
double a_star(const OnsetInputs& in, const TheoryConstants& ck);

// F(m) = (1 - m) N R_k (1 - sigma_a^-2 / A*(m)), with in.m_S ignored.
double fp_map(const OnsetInputs& in, const TheoryConstants& ck, double m);

// Fixed point of F on [0, 1), 0 when F(0) <= 0. Bisection to 1e-10.
double solve_scalar_fp(const OnsetInputs& in, const TheoryConstants& ck);

// kappa -> 0 limit N R / (1 + N R).
double small_noise_fp(const OnsetInputs& in, const TheoryConstants& ck);

// Critical noise kappa_c^2; kappa and m_S of `in` are ignored.
double kappa_c(const OnsetInputs& in, const TheoryConstants& ck);

enum class ScalingMode { MF, ARD };

struct ScalingRow {
    ScalingMode mode;
    int d = 0;
    int k = 0;
    double kappa_c_sq = 0.0;
};

struct ScalingParams {
    int N = 1;
    double gamma = 0.5;
    double sigma_w = 1.0;
    double sigma_a = 1.0;
    double rho_on = 1.0;  // ARD on-support precision
};

std::vector<ScalingRow> scaling_table(ScalingMode mode, const std::vector<int>& d_list, int k,
                                      const ScalingParams& params);

const char* to_string(ScalingMode mode);

}  // namespace mfard
