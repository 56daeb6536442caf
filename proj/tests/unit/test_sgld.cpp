#include "doctest.h"
#include "support.hpp"

#include "mfard/errors.hpp"
#include "mfard/sgld.hpp"

using namespace mfard;
using mfard::testing::central_diff;

namespace {

WeightedDesign single_point(double x, double y) {
    WeightedDesign w;
    w.X = Matrix::Constant(1, 1, x);
    w.y = Vector::Constant(1, y);
    w.count = Vector::Ones(1);
    w.P = 1;
    return w;
}

// Random network and Gaussian design whose preactivations all stay at least
// `margin` away from the ReLU kink.
struct SmoothInstance {
    ModelParams params;
    WeightedDesign design;
};

SmoothInstance smooth_instance(std::uint64_t seed, bool bias, double margin = 1e-3) {
    Rng rng(seed);
    Hyperparams h{3 + static_cast<int>(seed % 6), 0.5 + 0.1 * static_cast<double>(seed % 5), 0.8, 1.3,
                  0.2 + 0.05 * static_cast<double>(seed % 7)};
    const int d = 2 + static_cast<int>(seed % 4);
    for (;;) {
        ModelParams p = init_params(h, d, bias, rng.next_u64(), 0.7);
        const int P = 7;
        WeightedDesign w;
        w.X = Matrix(P, d);
        for (int r = 0; r < P; ++r)
            for (int j = 0; j < d; ++j) w.X(r, j) = rng.normal();
        w.y = Vector(P);
        for (int r = 0; r < P; ++r) w.y[r] = rng.normal();
        w.count = Vector::Ones(P);
        w.count[0] = 3.0;  // exercise multiplicities
        w.P = P + 2;
        Matrix Z = w.X * p.W.transpose();
        if (p.b) Z.rowwise() += p.b->transpose();
        if (Z.cwiseAbs().minCoeff() > margin) return {p, w};
    }
}

}  // namespace

TEST_SUITE("sgld") {

TEST_CASE("learning-rate schedule") {
    LrSchedule s{5e-3, 5e-4, 1000, 2};
    CHECK(lr_at(s, 0) == doctest::Approx(5e-3));
    CHECK(lr_at(s, 500) == doctest::Approx(1.625e-3).epsilon(1e-12));
    CHECK(lr_at(s, 1000) == 5e-4);
    CHECK(lr_at(s, 10'000'000) == 5e-4);
    for (std::int64_t t = 0; t < 1000; t += 37) CHECK(lr_at(s, t + 1) <= lr_at(s, t));
    CHECK_THROWS_AS(lr_at(s, -1), InputDomainError);
}

TEST_CASE("one step on a single unit") {
    // N=1, d=1, P=1, x=1, y=0, w=a=1, gamma=0: dL/da = 2, dL/dw = 2
    ModelParams p{Matrix::Ones(1, 1), Vector::Ones(1), std::nullopt, Hyperparams{1, 0.0, 1.0, 1.0, 0.1}, 1.0};
    const double T = p.hyper.temperature();
    const double eta = 0.01;
    Rng rng(0);
    const ModelParams next = sgld_step(p, single_point(1.0, 0.0), eta, rng, StepOptions{true, false});
    CHECK(next.a[0] - 1.0 == doctest::Approx(-eta * (T * 1.0 + 2.0)));
    CHECK(next.W(0, 0) - 1.0 == doctest::Approx(-eta * (T * 1.0 + 2.0)));
}

TEST_CASE("forward examples and scale equivariance") {
    ModelParams p{Matrix(2, 2), Vector(2), std::nullopt, Hyperparams{4, 0.5, 1, 1, 1}, 1.0};
    p.W << 1, 0, 0, -1;
    p.a << 2, 3;
    p.hyper.N = 2;
    Matrix X(2, 2);
    X << 1, 1, 1, -1;
    const Vector f = forward(p, X);
    // unit 2 is inactive on row 0, active on row 1
    CHECK(f[0] == doctest::Approx(2.0 / std::sqrt(2.0)));
    CHECK(f[1] == doctest::Approx((2.0 + 3.0) / std::sqrt(2.0)));
    for (double c : {-2.0, 0.0, 0.5, 7.0}) {
        ModelParams q = p;
        q.a *= c;
        CHECK((forward(q, X) - c * f).norm() <= 1e-14);
    }
    CHECK_THROWS_AS(forward(p, Matrix::Ones(1, 3)), InputDomainError);
}

TEST_CASE("potential gradient matches central differences") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        for (bool bias : {false, true}) {
            SmoothInstance inst = smooth_instance(seed, bias);
            ModelParams& p = inst.params;
            const ParamGradients g = potential_gradient(p, inst.design);
            auto U = [&] { return potential(p, inst.design); };
            const double h = 1e-5;
            Matrix fdW(p.W.rows(), p.W.cols());
            for (Eigen::Index i = 0; i < p.W.rows(); ++i)
                for (Eigen::Index j = 0; j < p.W.cols(); ++j) fdW(i, j) = central_diff(U, p.W(i, j), h);
            Vector fda(p.a.size());
            for (Eigen::Index i = 0; i < p.a.size(); ++i) fda[i] = central_diff(U, p.a[i], h);
            CHECK((fdW - g.W).norm() <= 1e-5 * g.W.norm());
            CHECK((fda - g.a).norm() <= 1e-5 * g.a.norm());
            if (bias) {
                Vector fdb(p.b->size());
                for (Eigen::Index i = 0; i < fdb.size(); ++i) fdb[i] = central_diff(U, (*p.b)[i], h);
                CHECK((fdb - *g.b).norm() <= 1e-5 * g.b->norm());
            }
        }
    }
}

TEST_CASE("prior-only gradient is the linear decay") {
    SmoothInstance inst = smooth_instance(3, true);
    const ModelParams& p = inst.params;
    const ParamGradients g = potential_gradient(p, inst.design, false);
    const double T = p.hyper.temperature();
    CHECK((g.W - T * p.d() / (p.hyper.sigma_w * p.hyper.sigma_w) * p.W).norm() <= 1e-12);
    CHECK((g.a - T / (p.hyper.sigma_a * p.hyper.sigma_a) * p.a).norm() <= 1e-12);
    CHECK((*g.b - T / (p.sigma_b * p.sigma_b) * *p.b).norm() <= 1e-12);
}

TEST_CASE("prior-only dynamics reach the prior variance") {
    // Ornstein-Uhlenbeck per coordinate: stationary variance T / gamma_theta.
    const Hyperparams h{64, 0.5, 1.0, 1.0, 1.0};
    const int d = 10;
    const Dataset data = gen_parity_dataset(TaskSpec::parity(d, {0, 1}), 4, 1);
    SgldConfig cfg;
    cfg.hyper = h;
    cfg.schedule = LrSchedule{1e-3, 1e-3, 1, 2};
    cfg.data_term = false;
    cfg.steps = 1000;
    cfg.log_stride = 1000;
    ModelParams p = init_params(h, d, false, 5);
    Rng noise(6);
    double sw = 0, sa = 0;
    long nw = 0, na = 0;
    for (int block = 0; block < 200; ++block) {
        p = train_sgld_from(cfg, data, p, noise, block * cfg.steps).params;
        sw += p.W.squaredNorm();
        nw += p.W.size();
        sa += p.a.squaredNorm();
        na += p.a.size();
    }
    CHECK(sw / nw == doctest::Approx(1.0 / d).epsilon(0.1));
    CHECK(sa / na == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("training is reproducible and restartable") {
    const Dataset data = gen_parity_dataset(TaskSpec::parity(6, {0, 1}), 64, 3);
    SgldConfig cfg;
    cfg.hyper = Hyperparams{16, 0.5, 1, 1, 0.1};
    cfg.steps = 200;
    cfg.schedule = LrSchedule{5e-3, 5e-4, 100, 2};
    cfg.log_stride = 50;
    const SgldResult a = train_sgld(cfg, data, 9);
    const SgldResult b = train_sgld(cfg, data, 9);
    CHECK(a.params.W == b.params.W);
    CHECK(a.trace.size() == 4);
    CHECK(a.steps_run == 200);

    // 200 steps in one go equal 120 + 80 with the stream carried over
    ModelParams start = init_params(cfg.hyper, 6, false, derive_seed(9, "sgld-init"));
    Rng n1(derive_seed(9, "sgld-noise"));
    SgldConfig first = cfg;
    first.steps = 120;
    const SgldResult part = train_sgld_from(first, data, start, n1);
    SgldConfig second = cfg;
    second.steps = 80;
    const SgldResult rest = train_sgld_from(second, data, part.params, n1, 120);
    CHECK((rest.params.W - a.params.W).norm() == 0.0);
    CHECK((rest.params.a - a.params.a).norm() == 0.0);
}

TEST_CASE("tail snapshots end at the final iterate") {
    const Dataset data = gen_parity_dataset(TaskSpec::parity(4, {0, 1}), 16, 3);
    SgldConfig cfg;
    cfg.hyper = Hyperparams{8, 0.5, 1, 1, 0.1};
    cfg.steps = 100;
    cfg.tail_snapshots = 3;
    cfg.tail_stride = 10;
    const SgldResult r = train_sgld(cfg, data, 1);
    REQUIRE(r.tail.size() == 3);
    CHECK(r.tail.back().W == r.params.W);
}

TEST_CASE("divergence is reported with its step") {
    const Dataset data = gen_parity_dataset(TaskSpec::parity(4, {0, 1}), 16, 3);
    SgldConfig cfg;
    cfg.hyper = Hyperparams{8, 0.5, 1, 1, 0.1};
    cfg.steps = 1000;
    cfg.schedule = LrSchedule{50.0, 50.0, 1, 2};
    try {
        train_sgld(cfg, data, 1);
        FAIL("expected divergence");
    } catch (const NumericalDivergence& e) {
        CHECK(e.step() >= 0);
        CHECK(e.step() < 1000);
    }
}

TEST_CASE("invalid configuration") {
    SgldConfig cfg;
    cfg.hyper = Hyperparams{8, 0.5, 1, 1, 0.1};
    cfg.schedule = LrSchedule{1e-4, 1e-3, 10, 2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.schedule = LrSchedule{};
    cfg.hyper.gamma = 0.2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

}
