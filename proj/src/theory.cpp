#include "mfard/theory.hpp"

#include "mfard/errors.hpp"

#include <cmath>
#include <cstdint>
#include <string>

namespace mfard {

namespace {

std::int64_t binomial(int n, int r) {
    std::int64_t c = 1;
    for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;  // exact at every step
    return c;
}

TheoryConstants from_sums(int k, std::int64_t c_sum, std::int64_t d_sum) {
    const double scale = std::ldexp(1.0, -k);
    TheoryConstants t{k, static_cast<double>(c_sum) * scale, static_cast<double>(d_sum) * scale, 0.0};
    t.R = t.C > 0 ? t.D * t.D / t.C : 0.0;
    return t;
}

}  // namespace

TheoryConstants parity_constants(int k) {
    if (k < 1 || k > 25) throw ConfigError("parity_constants: k must lie in [1, 25]");
    std::int64_t c_sum = 0, d_sum = 0;
    for (int r = 0; r <= (k - 1) / 2; ++r) {
        const std::int64_t b = binomial(k, r);
        const std::int64_t s = k - 2 * r;
        c_sum += b * s * s;
        d_sum += (r % 2 == 0 ? 1 : -1) * b * s;
    }
    return from_sums(k, c_sum, d_sum);
}

TheoryConstants brute_constants(int k) {
    if (k < 1) throw ConfigError("brute_constants: k must be >= 1");
    if (k > 20) throw ResourceError("brute_constants: 2^k enumeration limited to k <= 20");
    std::int64_t c_sum = 0, d_sum = 0;
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
        // Bit j set means x_j = -1.
        int sum = 0, parity = 1;
        for (int j = 0; j < k; ++j) {
            const int x = (mask >> j) & 1u ? -1 : 1;
            sum += x;
            parity *= x;
        }
        const int relu = sum > 0 ? sum : 0;
        c_sum += static_cast<std::int64_t>(relu) * relu;
        d_sum += static_cast<std::int64_t>(relu) * parity;
    }
    return from_sums(k, c_sum, d_sum);
}

void OnsetInputs::validate() const {
    if (!(C > 0)) throw ConfigError("onset: C must be > 0");
    if (N < 1) throw ConfigError("onset: N must be >= 1");
    if (!(sigma_a > 0)) throw ConfigError("onset: sigma_a must be > 0");
    if (!(kappa > 0)) throw ConfigError("onset: kappa must be > 0");
}

double a_star(const OnsetInputs& in, const TheoryConstants& ck) {
    in.validate();
    const double n2g = std::pow(static_cast<double>(in.N), 2.0 * in.gamma);
    const double inv_sa2 = 1.0 / (in.sigma_a * in.sigma_a);
    const double one_m = 1.0 - in.m_S;
    const double qa = in.C * in.kappa * in.kappa * n2g;
    const double qb = ck.C;
    const double qc = one_m * one_m * ck.D * ck.D * inv_sa2 / (in.kappa * in.kappa);
    if (qc == 0.0) return 0.0;
    // 2c / (b + sqrt(b^2 + 4ac)) is the positive root without cancellation.
    return 2.0 * qc / (qb + std::sqrt(qb * qb + 4.0 * qa * qc));
}

double fp_map(const OnsetInputs& in, const TheoryConstants& ck, double m) {
    OnsetInputs at = in;
    at.m_S = m;
    const double A = a_star(at, ck);
    const double inv_sa2 = 1.0 / (in.sigma_a * in.sigma_a);
    if (A <= 0.0) return ck.R > 0 ? -INFINITY : 0.0;
    return (1.0 - m) * in.N * ck.R * (1.0 - inv_sa2 / A);
}

double solve_scalar_fp(const OnsetInputs& in, const TheoryConstants& ck) {
    in.validate();
    if (fp_map(in, ck, 0.0) <= 0.0) return 0.0;
    // h(m) = m - F(m) is strictly increasing, negative at 0 and +inf as m -> 1.
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (mid - fp_map(in, ck, mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double small_noise_fp(const OnsetInputs& in, const TheoryConstants& ck) {
    const double nr = in.N * ck.R;
    return nr / (1.0 + nr);
}

double kappa_c(const OnsetInputs& in, const TheoryConstants& ck) {
    if (!(in.C > 0)) throw ConfigError("kappa_c: C must be > 0");
    const double n2g = std::pow(static_cast<double>(in.N), 2.0 * in.gamma);
    const double inv_sa2 = 1.0 / (in.sigma_a * in.sigma_a);
    const double disc = std::sqrt(ck.C * ck.C + 4.0 * in.C * n2g * ck.D * ck.D * inv_sa2);
    // (sqrt(disc) - C_k) / (2 C sigma_a^-2 N^2g) rationalized.
    return 2.0 * ck.D * ck.D / (disc + ck.C);
}

std::vector<ScalingRow> scaling_table(ScalingMode mode, const std::vector<int>& d_list, int k,
                                      const ScalingParams& params) {
    if (d_list.empty()) throw ConfigError("scaling_table: d list is empty");
    if (mode == ScalingMode::ARD && !(params.rho_on > 0)) throw ConfigError("scaling_table: rho_on must be > 0");
    const TheoryConstants ck = parity_constants(k);
    std::vector<ScalingRow> rows;
    for (int d : d_list) {
        if (d < k) throw ConfigError("scaling_table: d = " + std::to_string(d) + " is smaller than k");
        OnsetInputs in;
        in.C = mode == ScalingMode::MF ? static_cast<double>(d) * k / (params.sigma_w * params.sigma_w)
                                       : k * params.rho_on;
        in.N = params.N;
        in.gamma = params.gamma;
        in.sigma_a = params.sigma_a;
        rows.push_back({mode, d, k, kappa_c(in, ck)});
    }
    return rows;
}

const char* to_string(ScalingMode mode) { return mode == ScalingMode::MF ? "MF" : "ARD"; }

}  // namespace mfard
