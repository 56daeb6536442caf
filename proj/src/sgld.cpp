#include "mfard/sgld.hpp"

#include <chrono>
#include <cmath>

namespace mfard {

double ModelParams::output_scale() const { return std::pow(static_cast<double>(N()), -hyper.gamma); }

void LrSchedule::validate() const {
    if (!(eta_end > 0)) throw ConfigError("schedule: eta_end must be > 0");
    if (!(eta_start >= eta_end)) throw ConfigError("schedule: eta_start must be >= eta_end");
    if (decay_steps < 1) throw ConfigError("schedule: decay_steps must be >= 1");
    if (power < 1) throw ConfigError("schedule: power must be >= 1");
}

double lr_at(const LrSchedule& sched, std::int64_t step) {
    if (step < 0) throw InputDomainError("lr_at: step must be >= 0");
    if (step >= sched.decay_steps) return sched.eta_end;
    const double frac = 1.0 - static_cast<double>(step) / static_cast<double>(sched.decay_steps);
    return sched.eta_end + (sched.eta_start - sched.eta_end) * std::pow(frac, sched.power);
}

ModelParams init_params(const Hyperparams& hyper, int d, bool with_bias, std::uint64_t seed, double sigma_b) {
    hyper.validate();
    if (d < 1) throw ConfigError("init_params: d must be >= 1");
    Rng rng(seed);
    ModelParams p{Matrix(hyper.N, d), Vector(hyper.N), std::nullopt, hyper, sigma_b};
    const double sw = hyper.sigma_w / std::sqrt(static_cast<double>(d));
    for (int i = 0; i < hyper.N; ++i)
        for (int j = 0; j < d; ++j) p.W(i, j) = sw * rng.normal();
    for (int i = 0; i < hyper.N; ++i) p.a[i] = hyper.sigma_a * rng.normal();
    if (with_bias) {
        p.b = Vector(hyper.N);
        for (int i = 0; i < hyper.N; ++i) (*p.b)[i] = sigma_b * rng.normal();
    }
    return p;
}

namespace {

Matrix preactivations(const ModelParams& params, const Matrix& X) {
    if (X.cols() != params.W.cols())
        throw InputDomainError("forward: X has " + std::to_string(X.cols()) + " columns, expected d = " +
                               std::to_string(params.W.cols()));
    Matrix Z = X * params.W.transpose();
    if (params.b) Z.rowwise() += params.b->transpose();
    return Z;
}

double prior_energy(const ModelParams& p) {
    const double d = p.d();
    double e = 0.5 * d / (p.hyper.sigma_w * p.hyper.sigma_w) * p.W.squaredNorm() +
               0.5 / (p.hyper.sigma_a * p.hyper.sigma_a) * p.a.squaredNorm();
    if (p.b) e += 0.5 / (p.sigma_b * p.sigma_b) * p.b->squaredNorm();
    return e;
}

// Buffers reused across steps so the training loop does not allocate.
struct Workspace {
    Matrix Z, H, D;
    Vector err, dldf;
};

// Data part of the gradient of (1/P) sum (f - y)^2; returns the MSE.
double data_gradient(const ModelParams& p, const WeightedDesign& design, ParamGradients& g, Workspace& ws) {
    if (design.X.cols() != p.W.cols()) throw InputDomainError("sgld: design/parameter dimension mismatch");
    ws.Z.noalias() = design.X * p.W.transpose();
    if (p.b) ws.Z.rowwise() += p.b->transpose();
    ws.H = ws.Z.cwiseMax(0.0);
    const double s = p.output_scale();
    ws.err.noalias() = ws.H * p.a;
    ws.err = s * ws.err - design.y;
    const double inv_p = 1.0 / static_cast<double>(design.P);
    ws.dldf = (2.0 * inv_p) * design.count.cwiseProduct(ws.err);
    g.a.noalias() = s * (ws.H.transpose() * ws.dldf);
    // D_uj = s * dL/df_u * a_j * 1[z_uj > 0]; subgradient 0 at the kink.
    ws.D.noalias() = ws.dldf * (s * p.a).transpose();
    ws.D = (ws.Z.array() > 0.0).select(ws.D, 0.0);
    g.W.noalias() = ws.D.transpose() * design.X;
    if (p.b) g.b = ws.D.colwise().sum().transpose();
    return inv_p * design.count.dot(ws.err.cwiseAbs2());
}

double data_gradient(const ModelParams& p, const WeightedDesign& design, ParamGradients& g) {
    Workspace ws;
    return data_gradient(p, design, g, ws);
}

void add_prior_gradient(const ModelParams& p, double T, ParamGradients& g) {
    const double gw = T * p.d() / (p.hyper.sigma_w * p.hyper.sigma_w);
    const double ga = T / (p.hyper.sigma_a * p.hyper.sigma_a);
    g.W += gw * p.W;
    g.a += ga * p.a;
    if (p.b) *g.b += T / (p.sigma_b * p.sigma_b) * *p.b;
}

ParamGradients zero_like(const ModelParams& p) {
    ParamGradients g{Matrix::Zero(p.W.rows(), p.W.cols()), Vector::Zero(p.a.size()), std::nullopt};
    if (p.b) g.b = Vector::Zero(p.b->size());
    return g;
}

void add_noise(Matrix& M, double scale, Rng& rng) {
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) += scale * rng.normal();
}

void add_noise(Vector& v, double scale, Rng& rng) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += scale * rng.normal();
}

// Applies one step in place; returns the pre-step train MSE (0 without data term).
double step_in_place(ModelParams& p, const WeightedDesign& design, double lr, Rng& noise, StepOptions opts,
                     Workspace& ws, ParamGradients& g) {
    double mse = 0.0;
    if (opts.data_term) {
        mse = data_gradient(p, design, g, ws);
    } else {
        g.W.setZero();
        g.a.setZero();
        if (g.b) g.b->setZero();
    }
    const double T = p.hyper.temperature();
    add_prior_gradient(p, T, g);
    p.W -= lr * g.W;
    p.a -= lr * g.a;
    if (p.b) *p.b -= lr * *g.b;
    if (opts.noise) {
        const double scale = std::sqrt(2.0 * T * lr);
        add_noise(p.W, scale, noise);
        add_noise(p.a, scale, noise);
        if (p.b) add_noise(*p.b, scale, noise);
    }
    return mse;
}

}  // namespace

void check_finite(const ModelParams& p, std::int64_t step) {
    auto bad = [](const auto& m) {
        return !m.allFinite() || (m.size() > 0 && m.cwiseAbs().maxCoeff() > kDivergenceGuard);
    };
    if (bad(p.W) || bad(p.a) || (p.b && bad(*p.b)))
        throw NumericalDivergence(step, "parameter non-finite or above guard");
}

Vector forward(const ModelParams& params, const Matrix& X) {
    const Matrix Z = preactivations(params, X);
    return params.output_scale() * (Z.cwiseMax(0.0) * params.a);
}

double train_mse(const ModelParams& params, const WeightedDesign& design) {
    const Vector err = forward(params, design.X) - design.y;
    return design.count.dot(err.cwiseAbs2()) / static_cast<double>(design.P);
}

double potential(const ModelParams& params, const WeightedDesign& design, bool include_data) {
    double u = params.hyper.temperature() * prior_energy(params);
    if (include_data) u += train_mse(params, design);
    return u;
}

ParamGradients potential_gradient(const ModelParams& params, const WeightedDesign& design, bool include_data) {
    ParamGradients g = zero_like(params);
    if (include_data) data_gradient(params, design, g);
    add_prior_gradient(params, params.hyper.temperature(), g);
    return g;
}

ModelParams sgld_step(const ModelParams& params, const WeightedDesign& design, double lr, Rng& noise,
                      StepOptions opts, std::int64_t step) {
    ModelParams next = params;
    Workspace ws;
    ParamGradients g = zero_like(next);
    step_in_place(next, design, lr, noise, opts, ws, g);
    check_finite(next, step);
    return next;
}

ModelParams sgld_step(const ModelParams& params, const Dataset& data, double lr, Rng& noise, StepOptions opts,
                      std::int64_t step) {
    return sgld_step(params, compress_rows(data), lr, noise, opts, step);
}

void SgldConfig::validate() const {
    hyper.validate();
    schedule.validate();
    if (steps < 0) throw ConfigError("sgld: steps must be >= 0");
    if (log_stride < 1) throw ConfigError("sgld: log_stride must be >= 1");
    if (tail_snapshots < 0) throw ConfigError("sgld: tail_snapshots must be >= 0");
    if (tail_stride < 1) throw ConfigError("sgld: tail_stride must be >= 1");
    if (with_bias && !(sigma_b > 0)) throw ConfigError("sgld: sigma_b must be > 0");
}

SgldResult train_sgld(const SgldConfig& config, const Dataset& data, std::uint64_t seed) {
    config.validate();
    ModelParams start = init_params(config.hyper, static_cast<int>(data.X.cols()), config.with_bias,
                                    derive_seed(seed, "sgld-init"), config.sigma_b);
    Rng noise(derive_seed(seed, "sgld-noise"));
    return train_sgld_from(config, data, std::move(start), noise);
}

SgldResult train_sgld_from(const SgldConfig& config, const Dataset& data, ModelParams start, Rng& noise,
                           std::int64_t first_step) {
    config.validate();
    const WeightedDesign design = compress_rows(data);
    const auto t0 = std::chrono::steady_clock::now();
    SgldResult res{std::move(start), {}, {}, 0};
    const StepOptions opts{config.data_term, true};
    const std::int64_t end = first_step + config.steps;
    Workspace ws;
    ParamGradients g = zero_like(res.params);
    const std::int64_t tail_begin = end - static_cast<std::int64_t>(config.tail_snapshots) * config.tail_stride;

    for (std::int64_t s = first_step; s < end; ++s) {
        const double mse = step_in_place(res.params, design, lr_at(config.schedule, s), noise, opts, ws, g);
        if (!std::isfinite(mse) || mse > kDivergenceGuard)
            throw NumericalDivergence(s, "train MSE non-finite or above guard");
        ++res.steps_run;
        const bool last = (s + 1 == end);
        if ((s + 1 - first_step) % config.log_stride == 0 || last) {
            check_finite(res.params, s);
            res.trace.push_back({s + 1, config.data_term ? train_mse(res.params, design) : 0.0});
            if (config.wall_budget_seconds > 0) {
                const std::chrono::duration<double> el = std::chrono::steady_clock::now() - t0;
                if (el.count() > config.wall_budget_seconds && !last) throw SgldTimeout(s + 1, res);
            }
        }
        if (config.tail_snapshots > 0 && s + 1 > tail_begin && (end - (s + 1)) % config.tail_stride == 0)
            res.tail.push_back(res.params);
    }
    if (config.steps > 0) check_finite(res.params, end - 1);
    return res;
}

}  // namespace mfard
