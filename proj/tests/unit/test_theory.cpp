#include "doctest.h"

#include "mfard/errors.hpp"
#include "mfard/rng.hpp"
#include "mfard/theory.hpp"

#include <cmath>

using namespace mfard;

TEST_SUITE("theory") {

TEST_CASE("closed-form constants equal the enumeration exactly") {
    for (int k = 1; k <= 16; ++k) {
        const TheoryConstants a = parity_constants(k);
        const TheoryConstants b = brute_constants(k);
        CHECK(a.C == b.C);
        CHECK(a.D == b.D);
        CHECK(a.R == b.R);
    }
}

TEST_CASE("constants for small k") {
    const TheoryConstants k2 = parity_constants(2);
    CHECK(k2.C == 1.0);
    CHECK(k2.D == 0.5);
    CHECK(k2.R == 0.25);
    const TheoryConstants k3 = parity_constants(3);
    CHECK(k3.C == 1.5);
    CHECK(k3.D == 0.0);
    CHECK(k3.R == 0.0);
    const TheoryConstants k4 = parity_constants(4);
    CHECK(k4.C == 2.0);
    CHECK(k4.D == -0.25);
    CHECK(k4.R == 0.03125);
    CHECK_THROWS_AS(parity_constants(0), ConfigError);
    CHECK_THROWS_AS(brute_constants(21), ResourceError);
}

TEST_CASE("onset root") {
    OnsetInputs in{16.0, 100, 0.5, 1.0, 0.1, 0.0};
    const TheoryConstants ck = parity_constants(2);
    const double A = a_star(in, ck);
    // substitute back into the quadratic
    const double qa = in.C * in.kappa * in.kappa * 100.0;
    const double qc = ck.D * ck.D / (in.kappa * in.kappa);
    CHECK(std::abs(qa * A * A + ck.C * A - qc) <= 1e-12 * qc);
    CHECK(A > 0.0);
    // odd k: D = 0 gives the trivial root
    CHECK(a_star(in, parity_constants(3)) == 0.0);
}

TEST_CASE("critical noise example") {
    OnsetInputs in{16.0, 100, 0.5, 1.0, 1.0, 0.0};
    const double kc2 = kappa_c(in, parity_constants(2));
    CHECK(kc2 == doctest::Approx((std::sqrt(1601.0) - 1.0) / 3200.0).epsilon(1e-14));
    CHECK(kc2 == doctest::Approx(0.0121914).epsilon(1e-5));
    // threshold: A* = sigma_a^-2 there
    in.kappa = std::sqrt(kc2);
    CHECK(a_star(in, parity_constants(2)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("threshold identity on random inputs") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        OnsetInputs in;
        in.C = std::exp(std::log(0.5) + rng.uniform() * std::log(2e4));
        in.N = 1 + static_cast<int>(rng.uniform() * 4000);
        in.gamma = 0.5 + 0.5 * rng.uniform();
        in.sigma_a = 0.3 + 2.0 * rng.uniform();
        const TheoryConstants ck = parity_constants(trial % 2 ? 2 : 4);
        const double kc2 = kappa_c(in, ck);
        in.kappa = std::sqrt(kc2);
        CHECK(a_star(in, ck) * in.sigma_a * in.sigma_a == doctest::Approx(1.0).epsilon(1e-9));
        in.kappa = std::sqrt(1.01 * kc2);
        CHECK(solve_scalar_fp(in, ck) == 0.0);
        in.kappa = std::sqrt(0.99 * kc2);
        const double m = solve_scalar_fp(in, ck);
        CHECK(m > 0.0);
        CHECK(m < 1.0);
        // m brackets the root of m - F(m) to bisection accuracy
        CHECK(m - 1e-9 - fp_map(in, ck, m - 1e-9) < 0.0);
        CHECK(m + 1e-9 - fp_map(in, ck, m + 1e-9) > 0.0);
    }
}

TEST_CASE("small-noise limit") {
    OnsetInputs in{16.0, 100, 0.5, 1.0, 1e-6, 0.0};
    const TheoryConstants ck = parity_constants(2);
    CHECK(std::abs(solve_scalar_fp(in, ck) - small_noise_fp(in, ck)) <= 1e-3);
    CHECK(small_noise_fp(in, ck) == doctest::Approx(25.0 / 26.0));
}

TEST_CASE("fixed point decreases with noise") {
    OnsetInputs in{16.0, 100, 0.5, 1.0, 1e-4, 0.0};
    const TheoryConstants ck = parity_constants(2);
    double prev = 1.0;
    for (double kappa = 1e-4; kappa < 1.0; kappa *= 1.5) {
        in.kappa = kappa;
        const double m = solve_scalar_fp(in, ck);
        CHECK(m <= prev + 1e-12);
        prev = m;
    }
    CHECK(prev == 0.0);
}

TEST_CASE("threshold scaling") {
    const TheoryConstants ck = parity_constants(2);
    OnsetInputs in{1e6, 1, 0.5, 1.0, 1.0, 0.0};
    const double a = kappa_c(in, ck);
    in.C = 4e6;
    CHECK(kappa_c(in, ck) / a == doctest::Approx(0.5).epsilon(0.01));

    const ScalingParams p{1'000'000, 0.5, 1.0, 1.0, 1.0};
    const auto mf = scaling_table(ScalingMode::MF, {64, 128, 256, 512}, 2, p);
    for (std::size_t i = 1; i < mf.size(); ++i)
        CHECK(mf[i].kappa_c_sq / mf[i - 1].kappa_c_sq == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02));
    const auto ard = scaling_table(ScalingMode::ARD, {64, 128, 256, 512}, 2, p);
    for (const auto& row : ard) CHECK(row.kappa_c_sq == ard.front().kappa_c_sq);
    // ARD over MF grows like sqrt(d) when C is large
    for (std::size_t i = 0; i < mf.size(); ++i)
        CHECK(ard[i].kappa_c_sq / mf[i].kappa_c_sq == doctest::Approx(std::sqrt(mf[i].d)).epsilon(0.02));
    CHECK_THROWS_AS(scaling_table(ScalingMode::MF, {1}, 2, p), ConfigError);
}

}
