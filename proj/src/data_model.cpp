#include "mfard/data_model.hpp"

#include "mfard/errors.hpp"
#include "mfard/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace mfard {

void TaskSpec::validate() const {
    if (d < 1) throw ConfigError("task: d must be >= 1");
    if (support.empty()) throw ConfigError("task: support S must be nonempty (k >= 1)");
    if (k() > d) throw ConfigError("task: k = |S| exceeds d");
    std::vector<int> sorted = support;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ConfigError("task: support indices must be distinct");
    if (sorted.front() < 0 || sorted.back() >= d)
        throw ConfigError("task: support index out of range [0, d)");
    if (kind == TaskKind::SingleIndex && hermite_degree < 1)
        throw ConfigError("task: hermite_degree must be >= 1");
}

TaskSpec TaskSpec::parity(int d, std::vector<int> support) {
    TaskSpec s{TaskKind::Parity, d, std::move(support), 1};
    s.validate();
    return s;
}

TaskSpec TaskSpec::single_index(int d, std::vector<int> support, int degree) {
    TaskSpec s{TaskKind::SingleIndex, d, std::move(support), degree};
    s.validate();
    return s;
}

void Hyperparams::validate() const {
    if (N < 1) throw ConfigError("hyper: N must be >= 1");
    if (!(sigma_w > 0)) throw ConfigError("hyper: sigma_w must be > 0");
    if (!(sigma_a > 0)) throw ConfigError("hyper: sigma_a must be > 0");
    if (!(kappa > 0)) throw ConfigError("hyper: kappa must be > 0");
    if (!(gamma >= 0.5 && gamma <= 1.0)) throw ConfigError("hyper: gamma must lie in [0.5, 1]");
}

double walsh_eval(std::span<const int> S, std::span<const double> x) {
    double prod = 1.0;
    for (int j : S) {
        if (j < 0 || static_cast<std::size_t>(j) >= x.size())
            throw InputDomainError("walsh_eval: index " + std::to_string(j) + " out of range for d = " +
                                   std::to_string(x.size()));
        prod *= x[static_cast<std::size_t>(j)];
    }
    return prod;
}

Vector walsh_column(std::span<const int> S, const Matrix& X) {
    Vector c = Vector::Ones(X.rows());
    for (int j : S) {
        if (j < 0 || j >= X.cols()) throw InputDomainError("walsh_column: index out of range");
        c.array() *= X.col(j).array();
    }
    return c;
}

double hermite_he(int p, double z) {
    if (p < 0) throw InputDomainError("hermite_he: degree must be >= 0");
    if (p == 0) return 1.0;
    double prev = 1.0, cur = z;
    for (int n = 1; n < p; ++n) {
        const double next = z * cur - n * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

Vector teacher_direction(const TaskSpec& spec) {
    Vector v = Vector::Zero(spec.d);
    const double c = 1.0 / std::sqrt(static_cast<double>(spec.k()));
    for (int j : spec.support) v[j] = c;
    return v;
}

Dataset gen_parity_dataset(const TaskSpec& spec, Eigen::Index P, std::uint64_t seed) {
    if (spec.kind != TaskKind::Parity) throw ConfigError("gen_parity_dataset: task is not Parity");
    if (P <= 0) throw ConfigError("gen_parity_dataset: P must be > 0");
    spec.validate();
    Rng rng(seed);
    Dataset out{Matrix(P, spec.d), Vector(P), spec};
    // Row-major fill so the draw order does not depend on Eigen's storage.
    for (Eigen::Index mu = 0; mu < P; ++mu)
        for (int j = 0; j < spec.d; ++j) out.X(mu, j) = rng.sign();
    out.y = walsh_column(spec.support, out.X);
    return out;
}

Dataset gen_single_index_dataset(const TaskSpec& spec, Eigen::Index P, std::uint64_t seed) {
    if (spec.kind != TaskKind::SingleIndex) throw ConfigError("gen_single_index_dataset: task is not SingleIndex");
    if (P <= 0) throw ConfigError("gen_single_index_dataset: P must be > 0");
    spec.validate();
    Rng rng(seed);
    Dataset out{Matrix(P, spec.d), Vector(P), spec};
    for (Eigen::Index mu = 0; mu < P; ++mu)
        for (int j = 0; j < spec.d; ++j) out.X(mu, j) = rng.normal();
    const Vector proj = out.X * teacher_direction(spec);
    for (Eigen::Index mu = 0; mu < P; ++mu) out.y[mu] = hermite_he(spec.hermite_degree, proj[mu]);
    return out;
}

Dataset gen_dataset(const TaskSpec& spec, Eigen::Index P, std::uint64_t seed) {
    return spec.kind == TaskKind::Parity ? gen_parity_dataset(spec, P, seed)
                                         : gen_single_index_dataset(spec, P, seed);
}

WeightedDesign compress_rows(const Dataset& data) {
    const Eigen::Index P = data.P(), d = data.X.cols();
    // Ordered by first occurrence so the compressed design is deterministic.
    std::map<std::vector<double>, Eigen::Index> index;
    std::vector<Eigen::Index> first_row;
    std::vector<double> counts;
    std::vector<double> key(static_cast<std::size_t>(d));
    for (Eigen::Index mu = 0; mu < P; ++mu) {
        for (Eigen::Index j = 0; j < d; ++j) key[static_cast<std::size_t>(j)] = data.X(mu, j);
        auto [it, inserted] = index.try_emplace(key, static_cast<Eigen::Index>(first_row.size()));
        if (inserted) {
            first_row.push_back(mu);
            counts.push_back(1.0);
        } else {
            counts[static_cast<std::size_t>(it->second)] += 1.0;
        }
    }
    const auto U = static_cast<Eigen::Index>(first_row.size());
    WeightedDesign w{Matrix(U, d), Vector(U), Vector(U), P};
    for (Eigen::Index u = 0; u < U; ++u) {
        w.X.row(u) = data.X.row(first_row[static_cast<std::size_t>(u)]);
        w.y[u] = data.y[first_row[static_cast<std::size_t>(u)]];
        w.count[u] = counts[static_cast<std::size_t>(u)];
    }
    return w;
}

}  // namespace mfard
