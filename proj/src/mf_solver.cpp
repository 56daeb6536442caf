#include "mfard/mf_solver.hpp"

#include "mfard/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace mfard {

double particle_scale(const Hyperparams& hyper, int B) {
    return std::pow(static_cast<double>(hyper.N), 1.0 - hyper.gamma) / static_cast<double>(B);
}

void ArdConfig::validate() const {
    if (!(alpha0 > 0)) throw ConfigError("ard: alpha0 must be > 0");
    if (beta0 && !(*beta0 > 0)) throw ConfigError("ard: beta0 must be > 0");
    if (!(lambda > 0 && lambda <= 1)) throw ConfigError("ard: lambda must lie in (0, 1]");
    if (!(rho_min > 0 && rho_max >= rho_min)) throw ConfigError("ard: rho clip interval must be positive and ordered");
}

ParticleState mf_init(const Hyperparams& hyper, int d, int B, const ArdConfig& ard, std::uint64_t seed,
                      bool with_bias, double sigma_b) {
    hyper.validate();
    ard.validate();
    if (B < 1) throw ConfigError("mf_init: B must be >= 1");
    if (d < 1) throw ConfigError("mf_init: d must be >= 1");
    Rng rng(seed);
    ParticleState s;
    s.hyper = hyper;
    s.sigma_b = sigma_b;
    s.W.resize(B, d);
    s.a.resize(B);
    const double sw = hyper.sigma_w / std::sqrt(static_cast<double>(d));
    for (int b = 0; b < B; ++b)
        for (int j = 0; j < d; ++j) s.W(b, j) = sw * rng.normal();
    for (int b = 0; b < B; ++b) s.a[b] = hyper.sigma_a * rng.normal();
    if (with_bias) {
        s.b = Vector(B);
        for (int b = 0; b < B; ++b) (*s.b)[b] = sigma_b * rng.normal();
    }
    s.rho = Vector::Constant(d, d / (hyper.sigma_w * hyper.sigma_w));
    s.s_f = particle_scale(hyper, B);
    return s;
}

namespace {

Matrix particle_preactivations(const ParticleState& s, const Matrix& X) {
    if (X.cols() != s.W.cols()) throw InputDomainError("particles: input dimension mismatch");
    Matrix Z = X * s.W.transpose();
    if (s.b) Z.rowwise() += s.b->transpose();
    return Z;
}

WeightedDesign unit_design(const Dataset& data) {
    return {data.X, data.y, Vector::Ones(data.P()), data.P()};
}

}  // namespace

namespace {

struct StatsWorkspace {
    Matrix Z, H, M;
    Vector cr, sa;
};

void compute_stats_into(const ParticleState& state, const WeightedDesign& design, const Vector& residual,
                        SufficientStats& st, StatsWorkspace& ws) {
    if (residual.size() != design.X.rows()) throw InputDomainError("compute_stats: residual length mismatch");
    if (design.X.cols() != state.W.cols()) throw InputDomainError("particles: input dimension mismatch");
    ws.Z.noalias() = design.X * state.W.transpose();
    if (state.b) ws.Z.rowwise() += state.b->transpose();
    ws.H = ws.Z.cwiseMax(0.0);
    ws.cr = design.count.cwiseProduct(residual);
    st.C1.noalias() = ws.H.transpose() * ws.cr;
    st.C2.noalias() = ws.H.cwiseAbs2().transpose() * design.count;
    // M_pb = count_p (r_p - s a_b h_pb) 1[z_pb > 0] s a_b
    ws.sa = state.s_f * state.a;
    ws.M.noalias() = -ws.H * ws.sa.asDiagonal();
    ws.M.colwise() += residual;
    ws.M = (ws.Z.array() > 0.0).select(ws.M, 0.0);
    ws.M = design.count.asDiagonal() * ws.M * ws.sa.asDiagonal();
    const double coef = -2.0 / static_cast<double>(design.P);
    st.G_data.noalias() = coef * (ws.M.transpose() * design.X);
    if (state.b) st.G_bias = coef * ws.M.colwise().sum().transpose();
    else st.G_bias.reset();
}

}  // namespace

SufficientStats compute_stats(const ParticleState& state, const WeightedDesign& design, const Vector& residual) {
    SufficientStats st;
    StatsWorkspace ws;
    compute_stats_into(state, design, residual, st, ws);
    return st;
}

SufficientStats compute_stats(const ParticleState& state, const Dataset& data, const Vector& residual) {
    return compute_stats(state, unit_design(data), residual);
}

ParticleGradients mf_gradients(const ParticleState& state, const SufficientStats& stats, Eigen::Index P) {
    if (P <= 0) throw InputDomainError("mf_gradients: P must be > 0");
    const double T = state.hyper.temperature();
    const double inv_p = 1.0 / static_cast<double>(P);
    const double sa2 = state.hyper.sigma_a * state.hyper.sigma_a;
    ParticleGradients g;
    g.a = (T / sa2) * state.a - (2.0 * state.s_f * inv_p) * stats.C1 +
          (2.0 * state.s_f * state.s_f * inv_p) * stats.C2.cwiseProduct(state.a);
    g.W = stats.G_data + T * (state.W * state.rho.asDiagonal());
    if (state.b) g.b = *stats.G_bias + (T / (state.sigma_b * state.sigma_b)) * *state.b;
    return g;
}

double particle_potential(const ParticleState& state, const WeightedDesign& design, const Vector& residual) {
    const double T = state.hyper.temperature();
    double prior = 0.5 * (state.W.cwiseAbs2() * state.rho).sum() +
                   0.5 / (state.hyper.sigma_a * state.hyper.sigma_a) * state.a.squaredNorm();
    if (state.b) prior += 0.5 / (state.sigma_b * state.sigma_b) * state.b->squaredNorm();
    const Matrix H = particle_preactivations(state, design.X).cwiseMax(0.0);
    const Matrix fit = ((-H) * (state.s_f * state.a).asDiagonal()).colwise() + residual;
    const double data = (fit.cwiseAbs2().transpose() * design.count).sum() / static_cast<double>(design.P);
    return T * prior + data;
}

Vector mf_predict(const ParticleState& state, const Matrix& X) {
    return state.s_f * (particle_preactivations(state, X).cwiseMax(0.0) * state.a);
}

Vector mf_residual(const ParticleState& state, const WeightedDesign& design) {
    return design.y - mf_predict(state, design.X);
}

void check_finite(const ParticleState& s, std::int64_t step) {
    auto bad = [](const auto& m) {
        return !m.allFinite() || (m.size() > 0 && m.cwiseAbs().maxCoeff() > kDivergenceGuard);
    };
    if (bad(s.W) || bad(s.a) || (s.b && bad(*s.b))) throw NumericalDivergence(step, "particle non-finite or above guard");
    if (!s.rho.allFinite() || (s.rho.array() <= 0.0).any()) throw NumericalDivergence(step, "ARD precision invalid");
}

namespace {

struct InnerWorkspace {
    StatsWorkspace stats_ws;
    SufficientStats stats;
};

void inner_step_in_place(ParticleState& s, const WeightedDesign& design, const Vector& residual, double lr,
                         Rng& noise, bool with_noise, InnerWorkspace& ws) {
    compute_stats_into(s, design, residual, ws.stats, ws.stats_ws);
    const ParticleGradients g = mf_gradients(s, ws.stats, design.P);
    s.W -= lr * g.W;
    s.a -= lr * g.a;
    if (s.b) *s.b -= lr * *g.b;
    if (!with_noise) return;
    const double scale = std::sqrt(2.0 * s.hyper.temperature() * lr);
    for (Eigen::Index b = 0; b < s.W.rows(); ++b)
        for (Eigen::Index j = 0; j < s.W.cols(); ++j) s.W(b, j) += scale * noise.normal();
    for (Eigen::Index b = 0; b < s.a.size(); ++b) s.a[b] += scale * noise.normal();
    if (s.b)
        for (Eigen::Index b = 0; b < s.b->size(); ++b) (*s.b)[b] += scale * noise.normal();
}

}  // namespace

ParticleState mf_inner_step(const ParticleState& state, const WeightedDesign& design, const Vector& residual,
                            double lr, Rng& noise, bool with_noise, std::int64_t step) {
    ParticleState next = state;
    InnerWorkspace ws;
    inner_step_in_place(next, design, residual, lr, noise, with_noise, ws);
    check_finite(next, step);
    return next;
}

Vector ard_target(const ParticleState& state, const ArdConfig& ard) {
    const double alpha_post = ard.alpha0 + 0.5 * state.B();
    const Vector beta_post = (ard.beta0_for(state.d()) + 0.5 * state.W.cwiseAbs2().colwise().sum().array()).matrix().transpose();
    return (alpha_post / beta_post.array()).matrix();
}

Vector ard_update(const ParticleState& state, const ArdConfig& ard, int* clipped) {
    const Vector mixed = (1.0 - ard.lambda) * state.rho + ard.lambda * ard_target(state, ard);
    Vector out = mixed.cwiseMax(ard.rho_min).cwiseMin(ard.rho_max);
    if (clipped) *clipped = static_cast<int>((out.array() != mixed.array()).count());
    return out;
}

void MfConfig::validate() const {
    hyper.validate();
    schedule.validate();
    if (ard.enabled) ard.validate();
    if (B < 1) throw ConfigError("mf: B must be >= 1");
    if (outer_steps < 0) throw ConfigError("mf: outer_steps must be >= 0");
    if (K_min < 1 || K0 < K_min) throw ConfigError("mf: need K0 >= K_min >= 1");
    if (K_decay_steps < 1) throw ConfigError("mf: K_decay_steps must be >= 1");
    if (log_stride < 1) throw ConfigError("mf: log_stride must be >= 1");
    if (with_bias && !(sigma_b > 0)) throw ConfigError("mf: sigma_b must be > 0");
}

int inner_steps_at(const MfConfig& c, std::int64_t t) {
    const double frac = std::min(1.0, static_cast<double>(t) / static_cast<double>(c.K_decay_steps));
    return static_cast<int>(std::lround(c.K0 - (c.K0 - c.K_min) * frac));
}

MfResult mf_outer_solve(const MfConfig& config, const Dataset& data, std::uint64_t seed, const Dataset* eval) {
    config.validate();
    ParticleState start = mf_init(config.hyper, static_cast<int>(data.X.cols()), config.B, config.ard,
                                  derive_seed(seed, "mf-init"), config.with_bias, config.sigma_b);
    Rng noise(derive_seed(seed, "mf-noise"));
    return mf_outer_solve_from(config, data, std::move(start), noise, eval);
}

namespace {

MfTracePoint make_trace_point(const ParticleState& s, const WeightedDesign& design, const Dataset& data,
                              const Dataset* eval, std::int64_t step) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    MfTracePoint tp{step, nan, nan, 0.0, 0.0, nan};
    const Vector r = mf_residual(s, design);
    tp.train_mse = design.count.dot(r.cwiseAbs2()) / static_cast<double>(design.P);
    if (eval) {
        const Vector f = mf_predict(s, eval->X);
        tp.m_S = teacher_overlap(f, *eval);
        tp.test_mse = 0.5 * (f - eval->y).squaredNorm() / static_cast<double>(eval->P());
    }
    const auto& S = data.spec.support;
    double on = 0.0, off = 0.0;
    for (int j = 0; j < s.d(); ++j) {
        if (std::find(S.begin(), S.end(), j) != S.end()) on += s.rho[j];
        else off += s.rho[j];
    }
    tp.rho_on = on / static_cast<double>(S.size());
    if (s.d() > static_cast<int>(S.size())) tp.rho_off = off / static_cast<double>(s.d() - static_cast<int>(S.size()));
    return tp;
}

}  // namespace

MfResult mf_outer_solve_from(const MfConfig& config, const Dataset& data, ParticleState start, Rng& noise,
                             const Dataset* eval, std::int64_t first_step) {
    config.validate();
    if (start.d() != data.X.cols()) throw InputDomainError("mf_outer_solve: state/data dimension mismatch");
    const WeightedDesign design = compress_rows(data);
    const auto t0 = std::chrono::steady_clock::now();
    MfResult res{std::move(start), {}, 0, 0, 0};
    const std::int64_t end = first_step + config.outer_steps;
    std::int64_t inner_counter = 0;
    InnerWorkspace ws;

    for (std::int64_t t = first_step; t < end; ++t) {
        // Residual frozen for the whole inner loop.
        const Vector residual = mf_residual(res.state, design);
        const double lr = lr_at(config.schedule, t);
        const int K = inner_steps_at(config, t);
        for (int k = 0; k < K; ++k) {
            inner_step_in_place(res.state, design, residual, lr, noise, true, ws);
            ++inner_counter;
        }
        if (config.ard.enabled) {
            int clipped = 0;
            res.state.rho = ard_update(res.state, config.ard, &clipped);
            res.clip_events += clipped;
        }
        check_finite(res.state, t);
        ++res.outer_steps_run;
        res.inner_steps_run = inner_counter;
        const bool last = (t + 1 == end);
        if ((t + 1 - first_step) % config.log_stride == 0 || last) {
            res.trace.push_back(make_trace_point(res.state, design, data, eval, t + 1));
            if (!std::isfinite(res.trace.back().train_mse) || res.trace.back().train_mse > kDivergenceGuard)
                throw NumericalDivergence(t, "train MSE non-finite or above guard");
            if (config.wall_budget_seconds > 0) {
                const std::chrono::duration<double> el = std::chrono::steady_clock::now() - t0;
                if (el.count() > config.wall_budget_seconds && !last) throw MfTimeout(t + 1, res);
            }
        }
    }
    return res;
}

}  // namespace mfard
