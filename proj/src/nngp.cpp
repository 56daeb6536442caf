#include "mfard/nngp.hpp"

#include "mfard/diagnostics.hpp"
#include "mfard/errors.hpp"
#include "mfard/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>

namespace mfard {

namespace {

constexpr int kWeightBlock = 1024;

void check_prior(const KernelPrior& prior, int d, int M) {
    if (M < 1) throw ConfigError("mc_kernel: M must be >= 1");
    if (prior.rho) {
        if (prior.rho->size() != d) throw InputDomainError("mc_kernel: rho has wrong length");
        if ((prior.rho->array() <= 0.0).any()) throw InputDomainError("mc_kernel: rho must be positive");
    }
}

// Indices of distinct rows plus the map from each row to its distinct index.
struct RowGroups {
    std::vector<Eigen::Index> first;
    std::vector<Eigen::Index> of_row;
    Vector count;
};

RowGroups group_rows(const Matrix& X) {
    RowGroups g;
    std::map<std::vector<double>, Eigen::Index> index;
    std::vector<double> key(static_cast<std::size_t>(X.cols()));
    std::vector<double> counts;
    g.of_row.resize(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index mu = 0; mu < X.rows(); ++mu) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) key[static_cast<std::size_t>(j)] = X(mu, j);
        auto [it, inserted] = index.try_emplace(key, static_cast<Eigen::Index>(g.first.size()));
        if (inserted) {
            g.first.push_back(mu);
            counts.push_back(0.0);
        }
        counts[static_cast<std::size_t>(it->second)] += 1.0;
        g.of_row[static_cast<std::size_t>(mu)] = it->second;
    }
    g.count = Eigen::Map<Vector>(counts.data(), static_cast<Eigen::Index>(counts.size()));
    return g;
}

Matrix select_rows(const Matrix& X, const std::vector<Eigen::Index>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    return out;
}

}  // namespace

Matrix kernel_weights(const KernelPrior& prior, int d, int M, std::uint64_t seed) {
    check_prior(prior, d, M);
    Rng rng(seed);
    Matrix Wm(M, d);
    const double iso = prior.sigma_w / std::sqrt(static_cast<double>(d));
    for (int m = 0; m < M; ++m)
        for (int j = 0; j < d; ++j)
            Wm(m, j) = rng.normal() * (prior.rho ? 1.0 / std::sqrt((*prior.rho)[j]) : iso);
    return Wm;
}

Matrix mc_kernel(const Matrix& X1, const Matrix& X2, const KernelPrior& prior, int M, std::uint64_t seed) {
    if (&X1 == &X2) return mc_kernel(X1, prior, M, seed);
    if (X1.cols() != X2.cols()) throw InputDomainError("mc_kernel: input dimension mismatch");
    const Matrix Wm = kernel_weights(prior, static_cast<int>(X1.cols()), M, seed);
    Matrix K = Matrix::Zero(X1.rows(), X2.rows());
    for (int m0 = 0; m0 < M; m0 += kWeightBlock) {
        const int len = std::min(kWeightBlock, M - m0);
        const Matrix P1 = (X1 * Wm.middleRows(m0, len).transpose()).cwiseMax(0.0);
        const Matrix P2 = (X2 * Wm.middleRows(m0, len).transpose()).cwiseMax(0.0);
        K.noalias() += P1 * P2.transpose();
    }
    return K * (prior.sigma_a * prior.sigma_a / M);
}

Matrix mc_kernel(const Matrix& X, const KernelPrior& prior, int M, std::uint64_t seed) {
    const Matrix Wm = kernel_weights(prior, static_cast<int>(X.cols()), M, seed);
    const Eigen::Index P = X.rows();
    Matrix K = Matrix::Zero(P, P);
    for (int m0 = 0; m0 < M; m0 += kWeightBlock) {
        const int len = std::min(kWeightBlock, M - m0);
        const Matrix Phi = (X * Wm.middleRows(m0, len).transpose()).cwiseMax(0.0);
        K.selfadjointView<Eigen::Lower>().rankUpdate(Phi);
    }
    K = K.selfadjointView<Eigen::Lower>();
    return K * (prior.sigma_a * prior.sigma_a / M);
}

Vector krr_predict_weighted(const Matrix& K, const Matrix& K_cross, const Vector& y, double tau,
                            const Vector& weight) {
    if (K.rows() != K.cols() || K.rows() != y.size() || K_cross.cols() != K.rows() || weight.size() != y.size())
        throw InputDomainError("krr_predict: shape mismatch");
    if (!(tau >= 0)) throw InputDomainError("krr_predict: tau must be >= 0");
    Matrix A = K;
    A.diagonal() += (tau / weight.array()).matrix();
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
        const auto ev = es.eigenvalues().cwiseAbs();
        const double cond = ev.minCoeff() > 0 ? ev.maxCoeff() / ev.minCoeff() : INFINITY;
        throw IllConditionedError(cond, "krr_predict: K + tau I is not positive definite");
    }
    return K_cross * llt.solve(y);
}

Vector krr_predict(const Matrix& K, const Matrix& K_cross, const Vector& y, double tau) {
    return krr_predict_weighted(K, K_cross, y, tau, Vector::Ones(y.size()));
}

double ridge_tau(const Hyperparams& hyper, RidgeConvention conv) {
    const double base = hyper.kappa * hyper.kappa / (hyper.sigma_a * hyper.sigma_a);
    return conv == RidgeConvention::KappaSqOverSigmaASq ? base : 0.5 * base;
}

NngpResult nngp_run(const Dataset& train, const Dataset& eval, const Hyperparams& hyper,
                    const std::optional<Vector>& rho, int M, std::uint64_t seed, RidgeConvention conv) {
    if (train.X.cols() != eval.X.cols()) throw InputDomainError("nngp_run: train/eval dimension mismatch");
    const KernelPrior prior{hyper.sigma_w, hyper.sigma_a, rho};
    // Kernel entries only depend on the input pair, so work on distinct rows.
    const RowGroups tg = group_rows(train.X);
    const RowGroups eg = group_rows(eval.X);
    const Matrix Xt = select_rows(train.X, tg.first);
    const Matrix Xe = select_rows(eval.X, eg.first);
    Vector yt(Xt.rows());
    for (std::size_t u = 0; u < tg.first.size(); ++u) yt[static_cast<Eigen::Index>(u)] = train.y[tg.first[u]];

    const Matrix Wm = kernel_weights(prior, static_cast<int>(train.X.cols()), M, seed);
    Matrix K = Matrix::Zero(Xt.rows(), Xt.rows());
    Matrix Kc = Matrix::Zero(Xe.rows() + Xt.rows(), Xt.rows());
    Matrix Xall(Xe.rows() + Xt.rows(), Xt.cols());
    Xall << Xe, Xt;
    for (int m0 = 0; m0 < M; m0 += kWeightBlock) {
        const int len = std::min(kWeightBlock, M - m0);
        const Matrix Phi = (Xt * Wm.middleRows(m0, len).transpose()).cwiseMax(0.0);
        const Matrix PhiAll = (Xall * Wm.middleRows(m0, len).transpose()).cwiseMax(0.0);
        K.selfadjointView<Eigen::Lower>().rankUpdate(Phi);
        Kc.noalias() += PhiAll * Phi.transpose();
    }
    const double scale = hyper.sigma_a * hyper.sigma_a / M;
    K = K.selfadjointView<Eigen::Lower>();
    K *= scale;
    Kc *= scale;

    const Vector f_all = krr_predict_weighted(K, Kc, yt, ridge_tau(hyper, conv), tg.count);
    NngpResult res;
    res.predictions.resize(eval.P());
    for (Eigen::Index mu = 0; mu < eval.P(); ++mu)
        res.predictions[mu] = f_all[eg.of_row[static_cast<std::size_t>(mu)]];
    const Vector f_train_u = f_all.tail(Xt.rows());
    double sse = 0.0;
    for (Eigen::Index mu = 0; mu < train.P(); ++mu) {
        const double e = f_train_u[tg.of_row[static_cast<std::size_t>(mu)]] - train.y[mu];
        sse += e * e;
    }
    res.train_mse = sse / static_cast<double>(train.P());
    res.m_S = teacher_overlap(res.predictions, eval);
    res.test_mse = 0.5 * (res.predictions - eval.y).squaredNorm() / static_cast<double>(eval.P());
    return res;
}

}  // namespace mfard
