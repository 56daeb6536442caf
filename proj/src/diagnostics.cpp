#include "mfard/diagnostics.hpp"

#include "mfard/errors.hpp"
#include "mfard/mf_solver.hpp"
#include "mfard/sgld.hpp"

#include <cmath>
#include <limits>

namespace mfard {

namespace {

void require_eval(const Vector& f, const Dataset& eval) {
    if (eval.P() == 0) throw InputDomainError("eval set is empty");
    if (f.size() != eval.P()) throw InputDomainError("prediction length does not match eval set");
}

}  // namespace

Overlap empirical_mS(const Vector& f, const Dataset& eval, std::span<const int> S) {
    require_eval(f, eval);
    const Vector c = walsh_column(S, eval.X);
    const double inv = 1.0 / static_cast<double>(eval.P());
    return {c.dot(f) * inv, c.squaredNorm() * inv};
}

double teacher_overlap(const Vector& f, const Dataset& eval) {
    if (eval.spec.kind == TaskKind::Parity) return empirical_mS(f, eval, eval.spec.support).m_S;
    require_eval(f, eval);
    const double yy = eval.y.squaredNorm();
    return yy > 0 ? eval.y.dot(f) / yy : 0.0;
}

TestError test_error(const Vector& f, const Dataset& eval, std::span<const int> S) {
    require_eval(f, eval);
    const double inv = 1.0 / static_cast<double>(eval.P());
    TestError e;
    e.mse = 0.5 * (f - eval.y).squaredNorm() * inv;
    e.f_bar_sq = f.squaredNorm() * inv;
    if (eval.spec.kind == TaskKind::Parity) {
        const Overlap o = empirical_mS(f, eval, S);
        e.m_S = o.m_S;
        e.g = o.g;
        e.decomposed = 0.5 * (e.f_bar_sq - 2.0 * e.m_S + e.g);
    } else {
        e.m_S = e.g = e.decomposed = std::numeric_limits<double>::quiet_NaN();
    }
    return e;
}

Vector coupling_estimate(const Matrix& W, const Vector* bias, const Dataset& eval, std::span<const int> S) {
    if (eval.P() == 0) throw InputDomainError("eval set is empty");
    if (W.cols() != eval.X.cols()) throw InputDomainError("weight/eval dimension mismatch");
    Matrix Z = eval.X * W.transpose();
    if (bias) Z.rowwise() += bias->transpose();
    const Vector c = walsh_column(S, eval.X);
    return Z.cwiseMax(0.0).transpose() * c / static_cast<double>(eval.P());
}

Vector specialization(const ModelParams& params, const Dataset& eval, std::span<const int> S) {
    const Vector* bias = params.b ? &*params.b : nullptr;
    return params.a.cwiseProduct(coupling_estimate(params.W, bias, eval, S));
}

Vector specialization(const ParticleState& state, const Dataset& eval, std::span<const int> S) {
    const Vector* bias = state.b ? &*state.b : nullptr;
    return state.a.cwiseProduct(coupling_estimate(state.W, bias, eval, S));
}

MarginalStats weight_marginal_stats(const Matrix& W) {
    if (W.rows() < 4) throw InputDomainError("weight_marginal_stats: need at least 4 rows");
    const Eigen::Index n = W.rows(), d = W.cols();
    MarginalStats out{Vector(d), Vector(d)};
    for (Eigen::Index j = 0; j < d; ++j) {
        const Vector centered = W.col(j).array() - W.col(j).mean();
        const double m2 = centered.squaredNorm() / static_cast<double>(n);
        const double m4 = centered.array().pow(4).sum() / static_cast<double>(n);
        out.variance[j] = centered.squaredNorm() / static_cast<double>(n - 1);
        out.excess_kurtosis[j] = m2 > 0 ? m4 / (m2 * m2) - 3.0 : 0.0;
    }
    return out;
}

double kernel_outlier_ratio(const Matrix& K, const Vector& chi) {
    if (K.rows() != K.cols() || K.rows() != chi.size() || K.rows() == 0)
        throw InputDomainError("kernel_outlier_ratio: shape mismatch");
    return chi.dot(K * chi) / K.trace();
}

double kernel_outlier_ratio(const Matrix& W, const Matrix& X, std::span<const int> S) {
    if (X.rows() < 1) throw InputDomainError("kernel_outlier_ratio: need P >= 1");
    if (W.cols() != X.cols()) throw InputDomainError("kernel_outlier_ratio: dimension mismatch");
    const Matrix Phi = (X * W.transpose()).cwiseMax(0.0);
    const Vector chi = walsh_column(S, X);
    // chi^T K chi = |Phi^T chi|^2 / N and tr K = |Phi|_F^2 / N; the 1/N cancels.
    return (Phi.transpose() * chi).squaredNorm() / Phi.squaredNorm();
}

Matrix gram_wwt(const Matrix& W) { return W.transpose() * W / static_cast<double>(W.rows()); }

Matrix gram_unit_space(const Matrix& W) { return W * W.transpose() / static_cast<double>(W.cols()); }

}  // namespace mfard
