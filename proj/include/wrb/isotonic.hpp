#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "wrb/errors.hpp"
#include "wrb/quantile.hpp"

namespace wrb {

/// L2 projection onto the non-decreasing cone (uniform weights), pool
/// adjacent violators in a single left-to-right stack pass, O(n).
inline std::vector<double> project_nondecreasing(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0)
        throw usage_error("project_nondecreasing: empty input");
    // Blocks carry (mean, count); merge whenever the new block mean drops
    // below its left neighbour.
    std::vector<double> block_mean;
    std::vector<std::size_t> block_len;
    block_mean.reserve(n);
    block_len.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double m = x[i];
        std::size_t len = 1;
        while (!block_mean.empty() && block_mean.back() >= m) {
            const double bm = block_mean.back();
            const std::size_t bl = block_len.back();
            m = (m * static_cast<double>(len) + bm * static_cast<double>(bl)) /
                static_cast<double>(len + bl);
            len += bl;
            block_mean.pop_back();
            block_len.pop_back();
        }
        block_mean.push_back(m);
        block_len.push_back(len);
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t b = 0; b < block_mean.size(); ++b)
        out.insert(out.end(), block_len[b], block_mean[b]);
    return out;
}

/// L2 projection onto the non-increasing cone: reflect through negation.
inline std::vector<double> project_nonincreasing(std::span<const double> x) {
    std::vector<double> neg(x.begin(), x.end());
    for (double& v : neg) v = -v;
    std::vector<double> p = project_nondecreasing(neg);
    for (double& v : p) v = -v;
    return p;
}

/// k_lambda = isotonic projection of gamma + lambda F^{-1} (the curve traced
/// while tightening the Lagrangian of the worst-case problem).
inline std::vector<double> lambda_path_up(std::span<const double> gamma,
                                          const DiscreteQuantile& f, double lambda) {
    if (gamma.size() != f.size())
        throw usage_error("lambda_path_up: mismatched grid sizes");
    std::vector<double> ell(gamma.size());
    for (std::size_t i = 0; i < ell.size(); ++i)
        ell[i] = gamma[i] + lambda * f[i];
    return project_nondecreasing(ell);
}

/// Antitonic counterpart used by the best-case problem: projection of
/// gamma - lambda F^{-1} onto the non-increasing cone.
inline std::vector<double> lambda_path_down(std::span<const double> gamma,
                                            const DiscreteQuantile& f, double lambda) {
    if (gamma.size() != f.size())
        throw usage_error("lambda_path_down: mismatched grid sizes");
    std::vector<double> ell(gamma.size());
    for (std::size_t i = 0; i < ell.size(); ++i)
        ell[i] = gamma[i] - lambda * f[i];
    return project_nonincreasing(ell);
}

inline bool is_constant(std::span<const double> x, double tol = 0.0) {
    for (std::size_t i = 1; i < x.size(); ++i)
        if (std::abs(x[i] - x[0]) > tol) return false;
    return true;
}

} // namespace wrb
