#pragma once

#include "mfard/data_model.hpp"
#include "mfard/errors.hpp"
#include "mfard/rng.hpp"
#include "mfard/sgld.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mfard {

// B single-neuron particles whose predictor is f(x) = s_f sum_b a_b relu(w_b . x [+ b_b]).
// Particles interact only through the residual they are handed.
struct ParticleState {
    Matrix W;                // [B x d]
    Vector a;                // [B]
    std::optional<Vector> b; // [B]; never touched by ARD
    Vector rho;              // [d] per-coordinate prior precisions
    double s_f = 1.0;        // N^(1-gamma) / B
    Hyperparams hyper;
    double sigma_b = 1.0;

    int B() const { return static_cast<int>(W.rows()); }
    int d() const { return static_cast<int>(W.cols()); }
};

double particle_scale(const Hyperparams& hyper, int B);

struct ArdConfig {
    bool enabled = false;
    double alpha0 = 4.0;
    std::optional<double> beta0;  // defaults to alpha0 / d
    double lambda = 0.5;
    double rho_min = 2.2250738585072014e-308;  // smallest positive normal double
    double rho_max = 1e18;

    double beta0_for(int d) const { return beta0 ? *beta0 : alpha0 / d; }
    void validate() const;
};

struct SufficientStats {
    Vector C1;                      // [B]  sum_p relu(z_pb) r_p
    Vector C2;                      // [B]  sum_p relu(z_pb)^2
    Matrix G_data;                  // [B x d]
    std::optional<Vector> G_bias;   // [B], present iff the particles carry a bias
};

struct ParticleGradients {
    Vector a;                       // [B]
    Matrix W;                       // [B x d]
    std::optional<Vector> b;
};

ParticleState mf_init(const Hyperparams& hyper, int d, int B, const ArdConfig& ard, std::uint64_t seed,
                      bool with_bias = false, double sigma_b = 1.0);

// The design is weighted by multiplicity; C1 and C2 are sums over samples
// (so they scale with P) while G_data carries the 1/P.
SufficientStats compute_stats(const ParticleState& state, const WeightedDesign& design, const Vector& residual);
SufficientStats compute_stats(const ParticleState& state, const Dataset& data, const Vector& residual);

ParticleGradients mf_gradients(const ParticleState& state, const SufficientStats& stats, Eigen::Index P);

// Frozen-residual single-particle potential whose gradient mf_gradients returns:
// U = T E_prior + (1/P) sum_b sum_p (r_p - s_f a_b relu(z_pb))^2.
double particle_potential(const ParticleState& state, const WeightedDesign& design, const Vector& residual);

Vector mf_predict(const ParticleState& state, const Matrix& X);
// y - f on the design rows.
Vector mf_residual(const ParticleState& state, const WeightedDesign& design);

// One Euler-Maruyama step of every particle against the frozen residual.
ParticleState mf_inner_step(const ParticleState& state, const WeightedDesign& design, const Vector& residual,
                            double lr, Rng& noise, bool with_noise = true, std::int64_t step = 0);

// Per-coordinate conjugate update of the ARD precisions with EMA mixing and
// clipping. `clipped`, when given, receives the number of clipped coordinates.
Vector ard_update(const ParticleState& state, const ArdConfig& ard, int* clipped = nullptr);
// alpha_post / beta_post before mixing and clipping.
Vector ard_target(const ParticleState& state, const ArdConfig& ard);

struct MfConfig {
    Hyperparams hyper;
    int B = 1;
    std::int64_t outer_steps = 0;
    int K0 = 12;
    int K_min = 2;
    std::int64_t K_decay_steps = 1;
    LrSchedule schedule;
    ArdConfig ard;
    bool with_bias = false;
    double sigma_b = 1.0;
    std::int64_t log_stride = 100;
    double wall_budget_seconds = 0.0;

    void validate() const;
};

// Inner-step count at outer step t: linear from K0 down to K_min.
int inner_steps_at(const MfConfig& config, std::int64_t outer_step);

struct MfTracePoint {
    std::int64_t outer_step = 0;
    double m_S = 0.0;        // on the eval set; NaN when no eval set was given
    double test_mse = 0.0;   // 1/2 mean (f - y)^2 on the eval set
    double train_mse = 0.0;  // mean (f - y)^2 on the training set
    double rho_on = 0.0;     // mean rho over the task support
    double rho_off = 0.0;    // mean rho off the support (NaN if k = d)
};

struct MfResult {
    ParticleState state;
    std::vector<MfTracePoint> trace;
    std::int64_t outer_steps_run = 0;
    std::int64_t inner_steps_run = 0;
    std::int64_t clip_events = 0;
};

class MfTimeout : public TimeoutError {
public:
    MfTimeout(std::int64_t step, MfResult partial) : TimeoutError(step, "mf_outer_solve"), partial_(std::move(partial)) {}
    const MfResult& partial() const noexcept { return partial_; }

private:
    MfResult partial_;
};

// Residual refresh, K inner steps against the frozen residual, optional ARD
// update; repeated for config.outer_steps.
MfResult mf_outer_solve(const MfConfig& config, const Dataset& data, std::uint64_t seed,
                        const Dataset* eval = nullptr);
// Continues from an existing state with the caller's noise stream.
MfResult mf_outer_solve_from(const MfConfig& config, const Dataset& data, ParticleState start, Rng& noise,
                             const Dataset* eval = nullptr, std::int64_t first_step = 0);

void check_finite(const ParticleState& state, std::int64_t step);

}  // namespace mfard
