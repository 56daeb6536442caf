#pragma once

#include "mfard/data_model.hpp"
#include "mfard/errors.hpp"
#include "mfard/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mfard {

// Two-layer ReLU network f(x) = N^-gamma * sum_i a_i relu(w_i . x + b_i).
struct ModelParams {
    Matrix W;                // [N x d], rows are w_i
    Vector a;                // [N]
    std::optional<Vector> b; // [N], single-index tasks only
    Hyperparams hyper;
    double sigma_b = 1.0;    // prior scale of the bias, ignored without bias

    int N() const { return static_cast<int>(W.rows()); }
    int d() const { return static_cast<int>(W.cols()); }
    double output_scale() const;  // N^-gamma
};

// Same shapes as ModelParams; holds dU/dtheta.
struct ParamGradients {
    Matrix W;
    Vector a;
    std::optional<Vector> b;
};

// eta(s) = eta_end + (eta_start - eta_end) * (1 - s/decay_steps)^power, then eta_end.
struct LrSchedule {
    double eta_start = 5e-3;
    double eta_end = 5e-4;
    std::int64_t decay_steps = 1;
    int power = 2;

    void validate() const;
};

double lr_at(const LrSchedule& sched, std::int64_t step);

ModelParams init_params(const Hyperparams& hyper, int d, bool with_bias, std::uint64_t seed,
                        double sigma_b = 1.0);

Vector forward(const ModelParams& params, const Matrix& X);

// Mean squared error (1/P) sum (f - y)^2, evaluated on the compressed design.
double train_mse(const ModelParams& params, const WeightedDesign& design);

// Posterior potential U = T * E_prior + (1/P) sum (f - y)^2 with
// E_prior = sum_i [ d/(2 sigma_w^2) |w_i|^2 + a_i^2/(2 sigma_a^2) + b_i^2/(2 sigma_b^2) ].
// With include_data = false only the prior term is kept.
double potential(const ModelParams& params, const WeightedDesign& design, bool include_data = true);
ParamGradients potential_gradient(const ModelParams& params, const WeightedDesign& design,
                                  bool include_data = true);

struct StepOptions {
    bool data_term = true;
    bool noise = true;
};

// One Euler-Maruyama step: theta <- theta - eta * grad U + sqrt(2 T eta) xi.
// `step` is only used to label a divergence error.
ModelParams sgld_step(const ModelParams& params, const WeightedDesign& design, double lr, Rng& noise,
                      StepOptions opts = {}, std::int64_t step = 0);
ModelParams sgld_step(const ModelParams& params, const Dataset& data, double lr, Rng& noise,
                      StepOptions opts = {}, std::int64_t step = 0);

struct TracePoint {
    std::int64_t step = 0;
    double train_mse = 0.0;
};

struct SgldConfig {
    Hyperparams hyper;
    std::int64_t steps = 0;
    LrSchedule schedule;
    std::int64_t log_stride = 1000;
    bool with_bias = false;
    double sigma_b = 1.0;
    bool data_term = true;
    double wall_budget_seconds = 0.0;  // 0 disables the budget
    // Keep this many parameter snapshots, spaced tail_stride steps apart,
    // ending at the final step. 0 keeps none (final iterate only).
    int tail_snapshots = 0;
    std::int64_t tail_stride = 1000;

    void validate() const;
};

struct SgldResult {
    ModelParams params;
    std::vector<TracePoint> trace;
    std::vector<ModelParams> tail;
    std::int64_t steps_run = 0;
};

// Thrown when the wall-clock budget runs out; keeps what was computed.
class SgldTimeout : public TimeoutError {
public:
    SgldTimeout(std::int64_t step, SgldResult partial)
        : TimeoutError(step, "train_sgld"), partial_(std::move(partial)) {}
    const SgldResult& partial() const noexcept { return partial_; }

private:
    SgldResult partial_;
};

// Initializes from seed and runs config.steps full-batch SGLD steps.
SgldResult train_sgld(const SgldConfig& config, const Dataset& data, std::uint64_t seed);
// Continues from given parameters; the noise stream is supplied by the caller.
SgldResult train_sgld_from(const SgldConfig& config, const Dataset& data, ModelParams start, Rng& noise,
                           std::int64_t first_step = 0);

// Throws NumericalDivergence if any entry is non-finite or exceeds the guard.
void check_finite(const ModelParams& params, std::int64_t step);

inline constexpr double kDivergenceGuard = 1e6;

}  // namespace mfard
