#include "doctest.h"
#include "support.hpp"

#include "mfard/errors.hpp"
#include "mfard/nngp.hpp"
#include "mfard/rng.hpp"

#include <numbers>

using namespace mfard;
using mfard::testing::hypercube;

namespace {

// E[relu(w.x) relu(w.x')] for w ~ N(0, s^2/d I) and |x|^2 = |x'|^2 = d.
double arc_cosine(const Vector& x, const Vector& xp, double sigma_w, double sigma_a) {
    const double c = std::clamp(x.dot(xp) / (x.norm() * xp.norm()), -1.0, 1.0);
    const double th = std::acos(c);
    return sigma_a * sigma_a * sigma_w * sigma_w * (std::sin(th) + (std::numbers::pi - th) * c) /
           (2.0 * std::numbers::pi);
}

Matrix random_cube_rows(int n, int d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix X(n, d);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.sign();
    return X;
}

}  // namespace

TEST_SUITE("nngp") {

TEST_CASE("diagonal tends to one half") {
    const Matrix X = random_cube_rows(5, 12, 1);
    const int M = 16384;
    const Matrix K = mc_kernel(X, KernelPrior{}, M, 3);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(K(i, i) - 0.5) <= 3.0 / std::sqrt(M));
}

TEST_CASE("Monte-Carlo kernel against the arc-cosine form") {
    const Matrix X = random_cube_rows(16, 10, 2);
    const int M = 16384;
    const KernelPrior prior{0.7, 1.3, std::nullopt};
    const Matrix K = mc_kernel(X, prior, M, 5);
    double worst = 0.0;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j)
            worst = std::max(worst, std::abs(K(i, j) - arc_cosine(X.row(i), X.row(j), 0.7, 1.3)));
    CHECK(worst < 5.0 * prior.sigma_a * prior.sigma_a * prior.sigma_w * prior.sigma_w / std::sqrt(M));
}

TEST_CASE("kernel is symmetric and positive semidefinite") {
    const Matrix X = random_cube_rows(40, 6, 3);
    const Matrix K = mc_kernel(X, KernelPrior{}, 3000, 7);
    CHECK(K == K.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(K);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12 * es.eigenvalues().maxCoeff());
    // cross kernel with the same weights agrees with the symmetric one
    const Matrix Kx = mc_kernel(X, Matrix(X), KernelPrior{}, 3000, 7);
    CHECK((Kx - K).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("huge precisions collapse the kernel") {
    const Matrix X = random_cube_rows(4, 5, 4);
    KernelPrior p;
    p.rho = Vector::Constant(5, 1e30);
    CHECK(mc_kernel(X, p, 256, 1).cwiseAbs().maxCoeff() < 1e-25);
    p.rho = Vector::Constant(4, 1.0);
    CHECK_THROWS_AS(mc_kernel(X, p, 256, 1), InputDomainError);
}

TEST_CASE("kernel ridge regression examples") {
    SUBCASE("identity kernel with unit ridge halves the labels") {
        const Vector y = Vector::LinSpaced(5, -1.0, 1.0);
        const Matrix I = Matrix::Identity(5, 5);
        CHECK((krr_predict(I, I, y, 1.0) - 0.5 * y).norm() <= 1e-14);
    }
    SUBCASE("tiny ridge interpolates") {
        Rng rng(1);
        Matrix A(6, 6);
        for (int i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
        const Matrix K = A * A.transpose() + Matrix::Identity(6, 6);
        Vector y(6);
        for (int i = 0; i < 6; ++i) y[i] = rng.normal();
        CHECK((krr_predict(K, K, y, 1e-12) - y).norm() <= 1e-9);
    }
    SUBCASE("rank one kernel") {
        Vector u(4);
        u << 1, -2, 0.5, 3;
        const double c = 0.7, tau = 0.3;
        const Matrix K = c * u * u.transpose();
        const Vector y = 2.0 * u;
        const double shrink = c * u.squaredNorm() / (c * u.squaredNorm() + tau);
        CHECK((krr_predict(K, K, y, tau) - shrink * y).norm() <= 1e-12);
    }
    SUBCASE("singular system") {
        const Matrix K = Matrix::Zero(3, 3);
        CHECK_THROWS_AS(krr_predict(K, K, Vector::Ones(3), 0.0), IllConditionedError);
    }
}

TEST_CASE("ridge conventions") {
    const Hyperparams h{8, 0.5, 1.0, 2.0, 0.4};
    CHECK(ridge_tau(h, RidgeConvention::KappaSqOverSigmaASq) == doctest::Approx(0.04));
    CHECK(ridge_tau(h, RidgeConvention::KappaSqOverTwoSigmaASq) == doctest::Approx(0.02));
}

TEST_CASE("predictions are invariant when kernel and ridge scale together") {
    Rng rng(2);
    Matrix A(5, 5);
    for (int i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
    const Matrix K = A * A.transpose();
    const Matrix Kc = A.topRows(3) * A.transpose();
    const Vector y = Vector::LinSpaced(5, -1.0, 2.0);
    CHECK((krr_predict(K, Kc, y, 0.3) - krr_predict(4.0 * K, 4.0 * Kc, y, 1.2)).norm() <= 1e-10);

    // With tau = kappa^2 / sigma_a^2, tau scales like K when sigma_a^2 -> c sigma_a^2
    // and kappa^2 -> c^2 kappa^2.
    const TaskSpec spec = TaskSpec::parity(6, {0, 1});
    const Dataset train = gen_parity_dataset(spec, 30, 1);
    const Dataset eval = gen_parity_dataset(spec, 40, 2);
    const Hyperparams h{8, 0.5, 1.0, 1.0, 0.1};
    Hyperparams h4 = h;
    h4.sigma_a = 2.0;
    h4.kappa = 0.4;
    const NngpResult a = nngp_run(train, eval, h, std::nullopt, 2048, 3);
    const NngpResult b = nngp_run(train, eval, h4, std::nullopt, 2048, 3);
    CHECK((a.predictions - b.predictions).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("grouped duplicate rows equal the full regression") {
    // P = 200 on d = 5 repeats most points
    const TaskSpec spec = TaskSpec::parity(5, {0, 1});
    const Dataset train = gen_parity_dataset(spec, 200, 1);
    const Dataset eval = gen_parity_dataset(spec, 50, 2);
    const Hyperparams h{8, 0.5, 1.0, 1.0, 0.3};
    const int M = 1024;
    const NngpResult grouped = nngp_run(train, eval, h, std::nullopt, M, 9);
    const KernelPrior prior{1.0, 1.0, std::nullopt};
    const Matrix K = mc_kernel(train.X, prior, M, 9);
    const Matrix Kc = mc_kernel(eval.X, train.X, prior, M, 9);
    const Vector f = krr_predict(K, Kc, train.y, ridge_tau(h, RidgeConvention::KappaSqOverSigmaASq));
    CHECK((grouped.predictions - f).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("learning curve is smooth in P") {
    const TaskSpec spec = TaskSpec::parity(8, {0, 1});
    const Dataset eval{hypercube(8), walsh_column(spec.support, hypercube(8)), spec};
    const Hyperparams h{128, 0.5, 1.0, 1.0, 5e-3};
    double prev = -1.0;
    for (int P = 50; P <= 1600; P *= 2) {
        const Dataset train = gen_parity_dataset(spec, P, 100 + P);
        const double m = nngp_run(train, eval, h, std::nullopt, 4096, 1).m_S;
        CHECK(m >= prev - 0.05);
        prev = m;
    }
}

}
