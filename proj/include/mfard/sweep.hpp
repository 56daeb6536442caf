#pragma once

#include "mfard/data_model.hpp"
#include "mfard/mf_solver.hpp"
#include "mfard/nngp.hpp"
#include "mfard/sgld.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mfard {

enum class ModelKind { SGLD, MF, MF_ARD, NNGP, THEORY };

const char* to_string(ModelKind m);
std::optional<ModelKind> parse_model(std::string_view name);

struct SgldSettings {
    std::int64_t steps = 200000;
    double learning_rate_start = 5e-3;
    double learning_rate = 5e-4;
    std::int64_t lr_decay_steps = 50000;
    std::int64_t log_stride = 10000;
    bool bias = false;
    double sigma_b = 1.0;
};

struct MfSettings {
    int B = 128;
    std::int64_t outer_steps = 20000;
    int K0 = 12;
    int K_min = 2;
    std::int64_t K_decay_steps = 6000;
    double learning_rate_start = 5e-3;
    double learning_rate = 5e-4;
    std::int64_t lr_decay_steps = 5000;
    std::int64_t log_stride = 1000;
};

struct ArdSettings {
    double alpha0 = 4.0;
    std::optional<double> beta0;  // alpha0 / d when absent
    double lambda = 0.5;
    double rho_min = 2.2250738585072014e-308;
    double rho_max = 1e18;
};

struct NngpSettings {
    int M = 8192;
    RidgeConvention ridge = RidgeConvention::KappaSqOverSigmaASq;
};

struct SweepConfig {
    TaskSpec task;
    bool random_support = false;  // draw S per seed (single-index presets)
    std::vector<ModelKind> models;
    std::vector<std::int64_t> P_grid;
    std::vector<double> kappa_grid;
    int seeds = 1;
    std::uint64_t master_seed = 0;
    // N, gamma, sigma_w, sigma_a; kappa comes from the grid.
    Hyperparams network;
    SgldSettings sgld;
    MfSettings mf;
    ArdSettings ard;
    NngpSettings nngp;
    std::int64_t P_eval = 10000;
    double time_budget_seconds = 0.0;  // per cell, 0 = unlimited
    std::string preset;
    std::filesystem::path output = "results.csv";
    int workers = 1;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

// Names of the built-in presets.
std::vector<std::string> preset_names();
// Throws ConfigError for an unknown name.
SweepConfig preset_config(std::string_view name);

// Parses YAML text. Errors carry line/column; unknown keys are rejected with
// a suggestion for the nearest known key. A `preset` key is expanded first
// and the remaining keys override it.
SweepConfig parse_config(std::string_view text);
SweepConfig load_config(const std::filesystem::path& path);

enum class CellStatus { Ok, Diverged, Timeout };
const char* to_string(CellStatus s);

struct CellKey {
    ModelKind model = ModelKind::SGLD;
    std::int64_t P = 0;
    double kappa = 0.0;
    int seed = 0;
};

struct SweepRecord {
    CellKey key;
    double m_S = 0.0;
    double test_mse = 0.0;   // 1/2 mean (f - y)^2 on the eval set
    double train_mse = 0.0;  // mean (f - y)^2 on the training set
    std::int64_t steps_run = 0;
    double wall_seconds = 0.0;
    CellStatus status = CellStatus::Ok;
};

// Extra per-cell outputs that do not go into the CSV.
struct CellResult {
    SweepRecord record;
    std::optional<Vector> rho;    // MF models
    std::optional<Matrix> W;      // final hidden weights (SGLD rows / MF particles)
    std::optional<Vector> a;
    std::vector<double> m_S_trace;
};

// Seeds used by a cell. The training set depends only on (P, seed) so that
// models and noise levels are compared on the same draw.
std::uint64_t train_data_seed(const SweepConfig& c, std::int64_t P, int seed);
std::uint64_t eval_data_seed(const SweepConfig& c, int seed);
std::uint64_t cell_seed(const SweepConfig& c, const CellKey& key);
TaskSpec task_for_seed(const SweepConfig& c, int seed);

std::vector<CellKey> expand_grid(const SweepConfig& c);
CellResult run_cell(const SweepConfig& c, const CellKey& key);

// ---- CSV -----------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "schema=1,model,P,kappa,seed,m_S,test_mse,train_mse,steps_run,wall_seconds,status";

std::string format_real(double v);  // %.17g, "nan"/"inf" for non-finite
std::string csv_row(const SweepRecord& r);
std::string cell_id(const CellKey& k);  // model,P,kappa,seed as written in the CSV

// Sorts rows by key and zeroes wall_seconds, the only scheduling-dependent field.
std::string canonical_csv(std::string_view csv_text);

struct SweepSummary {
    std::size_t cells = 0;    // grid size
    std::size_t skipped = 0;  // already present in the output (resume)
    std::size_t ok = 0;
    std::size_t failed = 0;
};

// Runs every pending cell with config.workers threads and appends one row per
// cell to config.output. Existing complete rows are kept and their cells skipped.
SweepSummary run_sweep(const SweepConfig& config);

}  // namespace mfard
