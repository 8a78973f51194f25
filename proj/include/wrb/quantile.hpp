#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/inverse_gaussian.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/weibull.hpp>

#include "wrb/errors.hpp"
#include "wrb/grid_stats.hpp"

namespace wrb {

struct MomentSpec {
    double mu = 0.0;
    double sigma = 1.0;

    MomentSpec() = default;
    MomentSpec(double mu_, double sigma_) : mu(mu_), sigma(sigma_) {
        if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(sigma))
            throw domain_error("MomentSpec: sigma must be strictly positive and moments finite");
    }
};

/// A non-decreasing function on (0,1) sampled at the midpoint grid
/// u_i = (i - 1/2)/n. All integrals against it are plain grid averages.
class DiscreteQuantile {
public:
    explicit DiscreteQuantile(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < 2)
            throw domain_error("DiscreteQuantile: need at least two grid points");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i]))
                throw domain_error("DiscreteQuantile: non-finite value");
            if (i > 0 && values_[i] < values_[i - 1])
                throw domain_error("DiscreteQuantile: values must be non-decreasing");
        }
        mean_ = stats::mean(values_);
        sd_ = stats::stddev(values_);
    }

    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double mean() const { return mean_; }
    double stddev() const { return sd_; }

    double grid_point(std::size_t i) const {
        return (static_cast<double>(i) + 0.5) / static_cast<double>(values_.size());
    }

    /// Quantile at u in (0,1): linear interpolation between midpoint samples,
    /// constant extrapolation outside the first/last midpoint.
    double at(double u) const {
        const auto n = static_cast<double>(values_.size());
        const double t = u * n - 0.5;
        if (t <= 0.0) return values_.front();
        if (t >= n - 1.0) return values_.back();
        const auto i = static_cast<std::size_t>(t);
        const double w = t - static_cast<double>(i);
        return values_[i] * (1.0 - w) + values_[i + 1] * w;
    }

    /// Integral of the interpolant over (a,b), 0 <= a <= b <= 1.
    double integral(double a, double b) const;

    static DiscreteQuantile from_csv(const std::string& path);

private:
    std::vector<double> values_;
    double mean_ = 0.0;
    double sd_ = 0.0;
};

inline double DiscreteQuantile::integral(double a, double b) const {
    if (!(a <= b) || a < 0.0 || b > 1.0)
        throw usage_error("DiscreteQuantile::integral: bad interval");
    // Antiderivative of the piecewise-linear interpolant evaluated by a
    // trapezoid sweep over the cells [i/n, (i+1)/n] intersected with (a,b).
    const std::size_t n = values_.size();
    const double h = 1.0 / static_cast<double>(n);
    double total = 0.0;
    const auto first = static_cast<std::size_t>(std::min(std::floor(a / h), double(n - 1)));
    const auto last = static_cast<std::size_t>(std::min(std::floor((b - 1e-18) / h), double(n - 1)));
    for (std::size_t cell = first; cell <= last; ++cell) {
        const double lo = std::max(a, static_cast<double>(cell) * h);
        const double hi = std::min(b, static_cast<double>(cell + 1) * h);
        if (hi <= lo) continue;
        total += 0.5 * (at(lo) + at(hi)) * (hi - lo);
    }
    return total;
}

inline DiscreteQuantile DiscreteQuantile::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw usage_error("cannot open quantile CSV: " + path);
    std::vector<double> vals;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        double v;
        if (ss >> v) {
            vals.push_back(v);
        } else if (first) {
            // header row tolerated
        } else {
            throw usage_error("bad row in quantile CSV: " + line);
        }
        first = false;
    }
    return DiscreteQuantile(std::move(vals));
}

// ---------------------------------------------------------------------------
// Parametric references

enum class Family {
    normal,
    pareto_clayton,
    lognormal,
    gamma,
    weibull,
    inverse_gaussian,
    inverse_gamma,
    inverse_weibull,
    log_logistic,
};

/// A built-in two/three-parameter reference model with an analytic quantile.
struct ParametricReference {
    Family family;
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;

    double quantile(double u) const;

    static ParametricReference normal(double mu, double sigma) {
        require(sigma > 0.0, "normal: sigma > 0 required");
        return {Family::normal, mu, sigma};
    }
    // Aggregate of d exponential risks with Gamma(a,b)-mixed rate; the scaled
    // aggregate S/b is a Beta distribution of the second kind. a > 2 keeps the
    // variance finite.
    static ParametricReference pareto_clayton(double a, double b, double d) {
        require(a > 2.0 && b > 0.0 && d > 0.0, "pareto-clayton: need a > 2, b > 0, d > 0");
        return {Family::pareto_clayton, a, b, d};
    }
    static ParametricReference lognormal(double mu, double sigma) {
        require(sigma > 0.0, "lognormal: sigma > 0 required");
        return {Family::lognormal, mu, sigma};
    }
    static ParametricReference gamma(double shape, double scale) {
        require(shape > 0.0 && scale > 0.0, "gamma: shape, scale > 0 required");
        return {Family::gamma, shape, scale};
    }
    static ParametricReference weibull(double lambda, double k) {
        require(lambda > 0.0 && k > 0.0, "weibull: lambda, k > 0 required");
        return {Family::weibull, lambda, k};
    }
    static ParametricReference inverse_gaussian(double mu, double lambda) {
        require(mu > 0.0 && lambda > 0.0, "inverse-gaussian: mu, lambda > 0 required");
        return {Family::inverse_gaussian, mu, lambda};
    }
    static ParametricReference inverse_gamma(double alpha, double beta) {
        require(alpha > 2.0 && beta > 0.0, "inverse-gamma: alpha > 2 required for finite variance");
        return {Family::inverse_gamma, alpha, beta};
    }
    static ParametricReference inverse_weibull(double lambda, double k) {
        require(lambda > 0.0 && k > 2.0, "inverse-weibull: k > 2 required for finite variance");
        return {Family::inverse_weibull, lambda, k};
    }
    static ParametricReference log_logistic(double alpha, double beta) {
        require(alpha > 0.0 && beta > 2.0, "log-logistic: beta > 2 required for finite variance");
        return {Family::log_logistic, alpha, beta};
    }

private:
    static void require(bool ok, const char* msg) {
        if (!ok) throw domain_error(msg);
    }
};

inline double ParametricReference::quantile(double u) const {
    namespace bm = boost::math;
    switch (family) {
        case Family::normal:
            return p1 + p2 * bm::quantile(bm::normal_distribution<>(0.0, 1.0), u);
        case Family::pareto_clayton: {
            // F_S^{-1}(u) = b q/(1-q), q the Beta(d, a) quantile.
            const double q = bm::quantile(bm::beta_distribution<>(p3, p1), u);
            if (q >= 1.0) throw numeric_error("pareto-clayton quantile overflow");
            return p2 * q / (1.0 - q);
        }
        case Family::lognormal:
            return bm::quantile(bm::lognormal_distribution<>(p1, p2), u);
        case Family::gamma:
            return bm::quantile(bm::gamma_distribution<>(p1, p2), u);
        case Family::weibull:
            return p1 * std::pow(-std::log1p(-u), 1.0 / p2);
        case Family::inverse_gaussian:
            return bm::quantile(bm::inverse_gaussian_distribution<>(p1, p2), u);
        case Family::inverse_gamma:
            return bm::quantile(bm::inverse_gamma_distribution<>(p1, p2), u);
        case Family::inverse_weibull:
            return p1 * std::pow(-std::log(u), -1.0 / p2);
        case Family::log_logistic:
            return p1 * std::pow(u / (1.0 - u), 1.0 / p2);
    }
    throw usage_error("unknown family");
}

/// Sample the analytic quantile at the midpoint grid.
inline DiscreteQuantile discretize(const ParametricReference& ref, std::size_t n) {
    if (n < 2)
        throw usage_error("discretize: n >= 2 required");
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        vals[i] = ref.quantile(u);
        if (!std::isfinite(vals[i]))
            throw numeric_error("discretize: quantile overflow at extreme u");
    }
    return DiscreteQuantile(std::move(vals));
}

// ---------------------------------------------------------------------------
// Moment and distance operations

inline MomentSpec moments(const DiscreteQuantile& q) {
    if (q.stddev() == 0.0)
        throw domain_error("moments: degenerate (constant) quantile, sigma = 0");
    return {q.mean(), q.stddev()};
}

/// Order-2 Wasserstein distance: L2 distance of quantile functions on the grid.
inline double wasserstein(const DiscreteQuantile& a, const DiscreteQuantile& b) {
    if (a.size() != b.size())
        throw usage_error("wasserstein: mismatched grid sizes");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.size()));
}

inline double correlation(const DiscreteQuantile& a, const DiscreteQuantile& b) {
    return stats::correlation(a.values(), b.values());
}

/// Smallest d_W^2 compatible with the target moments:
/// (mu_F - mu)^2 + (sigma_F - sigma)^2.
inline double feasibility_floor(const DiscreteQuantile& f, const MomentSpec& target) {
    if (f.stddev() == 0.0)
        throw domain_error("feasibility_floor: degenerate reference");
    const double dm = f.mean() - target.mu;
    const double ds = f.stddev() - target.sigma;
    return dm * dm + ds * ds;
}

/// Reference rescaled to the target moments; the singleton member of the
/// uncertainty set when epsilon sits exactly at the feasibility floor.
inline DiscreteQuantile scaled_reference(const DiscreteQuantile& f, const MomentSpec& target) {
    if (f.stddev() == 0.0)
        throw domain_error("scaled_reference: degenerate reference");
    std::vector<double> vals(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        vals[i] = target.mu + target.sigma * (f[i] - f.mean()) / f.stddev();
    return DiscreteQuantile(std::move(vals));
}

/// Quantile of -X on the same grid: -F^{-1}(1-u), reversed to non-decreasing.
inline DiscreteQuantile reflect(const DiscreteQuantile& f) {
    std::vector<double> vals(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        vals[i] = -f[f.size() - 1 - i];
    return DiscreteQuantile(std::move(vals));
}

} // namespace wrb
