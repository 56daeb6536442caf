#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace mfard {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class TaskKind { Parity, SingleIndex };

// Teacher description. `support` is the parity set S or the single-index
// support; `hermite_degree` is only meaningful for SingleIndex.
struct TaskSpec {
    TaskKind kind = TaskKind::Parity;
    int d = 1;
    std::vector<int> support;
    int hermite_degree = 1;

    int k() const { return static_cast<int>(support.size()); }

    // Throws ConfigError when an invariant is violated.
    void validate() const;

    static TaskSpec parity(int d, std::vector<int> support);
    static TaskSpec single_index(int d, std::vector<int> support, int degree);
};

struct Dataset {
    Matrix X;  // [P x d]
    Vector y;  // [P]
    TaskSpec spec;

    Eigen::Index P() const { return X.rows(); }
};

// Width, scaling and prior scales of the two-layer network. The temperature
// is not stored: it is always 2 * kappa^2.
struct Hyperparams {
    int N = 1;
    double gamma = 0.5;
    double sigma_w = 1.0;
    double sigma_a = 1.0;
    double kappa = 1.0;

    double temperature() const { return 2.0 * kappa * kappa; }
    void validate() const;
};

// Product of x_j over j in S; 1 for the empty set.
double walsh_eval(std::span<const int> S, std::span<const double> x);
// Column of chi_S over the rows of X.
Vector walsh_column(std::span<const int> S, const Matrix& X);

// Probabilists' Hermite polynomial via the three-term recurrence.
double hermite_he(int p, double z);

Dataset gen_parity_dataset(const TaskSpec& spec, Eigen::Index P, std::uint64_t seed);
Dataset gen_single_index_dataset(const TaskSpec& spec, Eigen::Index P, std::uint64_t seed);
// Dispatches on spec.kind.
Dataset gen_dataset(const TaskSpec& spec, Eigen::Index P, std::uint64_t seed);

// Unit-norm teacher direction: 1/sqrt(k) on the support, 0 elsewhere.
Vector teacher_direction(const TaskSpec& spec);

// Distinct rows of a dataset with their multiplicities. Labels are a
// function of the input, so any loss that is a sum over samples can be
// evaluated exactly on the distinct rows weighted by count. On the small
// hypercubes used at desk scale this is several times fewer rows.
struct WeightedDesign {
    Matrix X;       // [U x d]
    Vector y;       // [U]
    Vector count;   // [U], multiplicities summing to P
    Eigen::Index P = 0;
};

WeightedDesign compress_rows(const Dataset& data);

}  // namespace mfard
