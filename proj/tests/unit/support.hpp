#pragma once

#include "mfard/data_model.hpp"
#include "mfard/rng.hpp"

#include <cmath>
#include <functional>

namespace mfard::testing {

// All 2^d points of {-1,+1}^d, one per row.
inline Matrix hypercube(int d) {
    const Eigen::Index n = Eigen::Index{1} << d;
    Matrix X(n, d);
    for (Eigen::Index r = 0; r < n; ++r)
        for (int j = 0; j < d; ++j) X(r, j) = ((r >> j) & 1) ? -1.0 : 1.0;
    return X;
}

inline Dataset hypercube_dataset(int d, std::vector<int> S) {
    Dataset ds;
    ds.spec = TaskSpec::parity(d, std::move(S));
    ds.X = hypercube(d);
    ds.y = walsh_column(ds.spec.support, ds.X);
    return ds;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

// Central difference of f along coordinate x[i].
inline double central_diff(const std::function<double()>& f, double& x, double h) {
    const double x0 = x;
    x = x0 + h;
    const double up = f();
    x = x0 - h;
    const double down = f();
    x = x0;
    return (up - down) / (2.0 * h);
}

}  // namespace mfard::testing
