#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "wrb/errors.hpp"

namespace wrb::stats {

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Population variance on the uniform grid.
inline double variance(std::span<const double> x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

inline double stddev(std::span<const double> x) {
    return std::sqrt(variance(x));
}

inline double covariance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw usage_error("covariance: mismatched grid sizes");
    const double mx = mean(x), my = mean(y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(x.size());
}

inline double correlation(std::span<const double> x, std::span<const double> y) {
    const double sx = stddev(x), sy = stddev(y);
    if (sx == 0.0 || sy == 0.0)
        throw domain_error("correlation: degenerate (constant) input");
    return covariance(x, y) / (sx * sy);
}

/// Grid inner product <x,y> = (1/n) sum x_i y_i.
inline double inner(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw usage_error("inner: mismatched grid sizes");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s / static_cast<double>(x.size());
}

} // namespace wrb::stats
