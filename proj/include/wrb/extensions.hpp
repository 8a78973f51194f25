#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "wrb/bounds.hpp"
#include "wrb/distortion.hpp"
#include "wrb/errors.hpp"
#include "wrb/grid_stats.hpp"
#include "wrb/isotonic.hpp"
#include "wrb/quantile.hpp"
#include "wrb/roots.hpp"

namespace wrb {

// ---------------------------------------------------------------------------
// Moment uncertainty: worst case over a region of (mu, sigma) pairs

struct MomentRegion {
    enum class Kind { marginal, circlic, elliptical };
    Kind kind;
    double mu_lo = 0.0, mu_hi = 0.0, sigma_lo = 0.0, sigma_hi = 0.0; // marginal box
    double r = 0.0;                                                  // radius
    double c = 1.0, d = 1.0;                                         // elliptical semi-axes

    static MomentRegion marginal(double mu_lo, double mu_hi, double sigma_lo, double sigma_hi) {
        if (!(mu_lo <= mu_hi) || std::abs(mu_lo) > std::abs(mu_hi))
            throw domain_error("marginal region: need mu_lo <= mu_hi and |mu_lo| <= |mu_hi|");
        if (!(0.0 < sigma_lo && sigma_lo <= sigma_hi))
            throw domain_error("marginal region: need 0 < sigma_lo <= sigma_hi");
        MomentRegion k{Kind::marginal};
        k.mu_lo = mu_lo;
        k.mu_hi = mu_hi;
        k.sigma_lo = sigma_lo;
        k.sigma_hi = sigma_hi;
        return k;
    }
    static MomentRegion circlic(double r) {
        if (!(r > 0.0))
            throw domain_error("circlic region: r > 0 required");
        MomentRegion k{Kind::circlic};
        k.r = r;
        return k;
    }
    static MomentRegion elliptical(double c, double d, double r) {
        if (!(c > 0.0 && d > 0.0 && r > 0.0))
            throw domain_error("elliptical region: c, d, r > 0 required");
        MomentRegion k{Kind::elliptical};
        k.c = c;
        k.d = d;
        k.r = r;
        return k;
    }

    /// Sample points of K (anchored at (mu_F, sigma_F)): corners and boundary
    /// plus a coarse interior grid, used to verify the region-wide case.
    std::vector<MomentSpec> sample(double mu_f, double sigma_f) const {
        std::vector<MomentSpec> pts;
        auto push = [&](double m, double s) {
            if (s > 0.0) pts.emplace_back(m, s);
        };
        if (kind == Kind::marginal) {
            for (int i = 0; i <= 8; ++i)
                for (int j = 0; j <= 8; ++j)
                    push(mu_lo + (mu_hi - mu_lo) * i / 8.0,
                         sigma_lo + (sigma_hi - sigma_lo) * j / 8.0);
            return pts;
        }
        const double rc = (kind == Kind::circlic) ? r : r * c;
        const double rd = (kind == Kind::circlic) ? r : r * d;
        if (sigma_f - rd <= 0.0)
            throw domain_error("moment region leaves the sigma > 0 half-plane");
        for (int i = 0; i < 64; ++i) {
            const double th = 2.0 * 3.14159265358979323846 * i / 64.0;
            push(mu_f + rc * std::cos(th), sigma_f + rd * std::sin(th));
        }
        for (int i = -4; i <= 4; ++i)
            for (int j = -4; j <= 4; ++j) {
                const double m = mu_f + rc * i / 4.0, s = sigma_f + rd * j / 4.0;
                const double q = (m - mu_f) * (m - mu_f) / (rc * rc) +
                                 (s - sigma_f) * (s - sigma_f) / (rd * rd);
                if (q <= 1.0) push(m, s);
            }
        return pts;
    }
};

struct MomentRegionResult {
    BoundReport report;
    MomentSpec argmax;
};

/// sup over all balls with (mu, sigma) in K: the optimum sits at a boundary
/// point (mu_max, sigma_max) that itself depends on lambda, resolved by a
/// damped fixed point.
inline MomentRegionResult worst_with_moment_region(const WeightFunction& w,
                                                   const DiscreteQuantile& f,
                                                   const MomentRegion& region, double eps) {
    if (is_constant(w.values))
        throw domain_error("degenerate weight: gamma is constant");
    const double mu_f = f.mean();
    const double sigma_f = f.stddev();

    const detail::LambdaProbe probe = detail::probe_c0(w.values, f);
    const double c0 = probe.c0;

    // Region-wide case classification.
    bool any_one = false, any_two = false;
    for (const MomentSpec& p : region.sample(mu_f, sigma_f)) {
        const double fl = (mu_f - p.mu) * (mu_f - p.mu) + (sigma_f - p.sigma) * (sigma_f - p.sigma);
        const double star = fl + 2.0 * p.sigma * sigma_f * (1.0 - c0);
        if (eps <= fl)
            throw domain_error("infeasible: epsilon below the feasibility floor somewhere in K");
        if (eps < star)
            any_one = true;
        else
            any_two = true;
    }
    if (any_one && any_two)
        throw domain_error("moment region mixes case-1 and case-2 tolerances: unsupported");

    MomentSpec cur(mu_f, sigma_f);
    if (any_two) {
        // Case 2: value mu + sigma std(gamma_up), maximised at the boundary
        // point of K with the largest mu + s sigma.
        const std::vector<double> gup = project_nondecreasing(w.values);
        const double s = stats::stddev(gup);
        switch (region.kind) {
            case MomentRegion::Kind::marginal:
                cur = MomentSpec(region.mu_hi, region.sigma_hi);
                break;
            case MomentRegion::Kind::circlic: {
                const double den = std::sqrt(1.0 + s * s);
                cur = MomentSpec(mu_f + region.r / den, sigma_f + region.r * s / den);
                break;
            }
            case MomentRegion::Kind::elliptical: {
                const double den = std::sqrt(region.c * region.c + region.d * region.d * s * s);
                cur = MomentSpec(mu_f + region.r * region.c * region.c / den,
                                 sigma_f + region.r * region.d * region.d * s / den);
                break;
            }
        }
        MomentRegionResult res{general_worst(w, UncertaintyBall(f, cur, eps)), cur};
        return res;
    }

    // Case 1: alternate between lambda at the current (mu, sigma) and the
    // boundary formulas of the proposition until both settle.
    for (int iter = 0; iter < 500; ++iter) {
        const BoundReport rep = general_worst(w, UncertaintyBall(f, cur, eps));
        const double lam = rep.lambda;

        MomentSpec cand = cur;
        const bool mu_small = lam > 0.0 && mu_f < -1.0 / lam;
        if (region.kind == MomentRegion::Kind::marginal) {
            cand = MomentSpec(mu_small ? region.mu_lo : region.mu_hi, region.sigma_hi);
        } else {
            std::vector<double> z(f.size());
            for (std::size_t i = 0; i < f.size(); ++i)
                z[i] = w.values[i] + lam * f[i];
            const std::vector<double> k = project_nondecreasing(z);
            const double cv = stats::stddev(z) * stats::correlation(z, k) / (1.0 + lam * mu_f);
            const double sign = mu_small ? -1.0 : 1.0;
            if (region.kind == MomentRegion::Kind::circlic) {
                const double den = std::sqrt(1.0 + cv * cv);
                cand = MomentSpec(mu_f + sign * region.r / den,
                                  sigma_f + region.r * std::abs(cv) / den);
            } else {
                const double t = region.d / region.c * cv;
                const double den = std::sqrt(1.0 + t * t);
                cand = MomentSpec(mu_f + sign * region.r * region.c / den,
                                  sigma_f + region.r * region.d * region.d * std::abs(cv) /
                                                (region.c * den));
            }
        }
        const double delta = std::abs(cand.mu - cur.mu) + std::abs(cand.sigma - cur.sigma);
        cur = MomentSpec(0.5 * (cur.mu + cand.mu), 0.5 * (cur.sigma + cand.sigma));
        if (delta < 1e-8) {
            cur = cand;
            break;
        }
        if (iter == 499)
            throw numeric_error("moment-region fixed point did not converge");
    }

    return {general_worst(w, UncertaintyBall(f, cur, eps)), cur};
}

// ---------------------------------------------------------------------------
// Wasserstein ball without moment constraints

struct WassersteinOnlyResult {
    MomentSpec optimal;          // (mu*, sigma*)
    double value = 0.0;          // Choquet value of the extremal
    double displayed_value = 0.0; // mu* + sigma* std(gamma) corr(gamma, lambda F^{-1})
    DiscreteQuantile extremal;
    double lambda = 0.0;
    double achieved_dw = 0.0;
};

/// Worst case over { G : d_W(F,G) <= sqrt(eps) } for concave distortions:
/// optimal moments in closed form, then the fixed-moment engine at (mu*, sigma*).
inline WassersteinOnlyResult wasserstein_only_worst(const WeightFunction& w,
                                                    const DiscreteQuantile& f, double eps) {
    if (!w.concave)
        throw domain_error("wasserstein_only_worst requires a concave distortion");
    if (is_constant(w.values))
        throw domain_error("degenerate weight: gamma is constant");
    if (std::isnan(eps) || eps < 0.0)
        throw usage_error("epsilon must be non-negative");

    const WeightStatistics ws = weight_statistics(w, f);
    const double V = ws.variance;
    const double C = ws.covariance;

    if (eps == 0.0) {
        WassersteinOnlyResult res{MomentSpec(f.mean(), f.stddev()), choquet_value(w, f),
                                  choquet_value(w, f), f, 0.0, 0.0};
        return res;
    }

    const double root = std::sqrt(eps / (1.0 + V));
    const double mu_star = f.mean() + root;
    const double sigma_star =
        std::sqrt(f.stddev() * f.stddev() + 2.0 * C * root + eps * V / (1.0 + V));
    const MomentSpec opt(mu_star, sigma_star);

    const BoundReport rep = concave_worst(w, UncertaintyBall(f, opt, eps));
    WassersteinOnlyResult res{opt, rep.value, 0.0, *rep.extremal, rep.lambda, rep.achieved_dw};
    // The theorem displays the value with corr(gamma, lambda F^{-1}); report
    // it alongside the Choquet value of the extremal for comparison.
    res.displayed_value =
        mu_star + sigma_star * std::sqrt(V) *
                      (rep.lambda > 0.0 ? stats::correlation(w.values, f.values()) : 1.0);
    return res;
}

// ---------------------------------------------------------------------------
// Robust portfolio reduction

struct PortfolioProblem {
    std::vector<double> means;
    std::vector<std::vector<double>> covariance;
    std::vector<double> lower;
    std::vector<double> upper;
    DiscreteQuantile reference_shape; // location-scale base of the benchmark loss
    WeightFunction weight;

    std::size_t assets() const { return means.size(); }

    void validate() const {
        const std::size_t n = means.size();
        if (n == 0 || covariance.size() != n || lower.size() != n || upper.size() != n)
            throw usage_error("portfolio problem: inconsistent dimensions");
        double lo_sum = 0.0, hi_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (covariance[i].size() != n)
                throw usage_error("portfolio problem: covariance is not square");
            if (lower[i] > upper[i])
                throw domain_error("portfolio problem: lower bound exceeds upper bound");
            lo_sum += lower[i];
            hi_sum += upper[i];
            for (std::size_t j = 0; j < i; ++j)
                if (std::abs(covariance[i][j] - covariance[j][i]) >
                    1e-10 * (1.0 + std::abs(covariance[i][j])))
                    throw domain_error("portfolio problem: covariance is not symmetric");
        }
        if (lo_sum > 1.0 + 1e-12 || hi_sum < 1.0 - 1e-12)
            throw domain_error("portfolio problem: empty constraint set");
        // Positive definiteness via Cholesky.
        std::vector<std::vector<double>> L(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = covariance[i][j];
                for (std::size_t k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
                if (i == j) {
                    if (s <= 0.0)
                        throw domain_error("portfolio problem: covariance is not positive definite");
                    L[i][i] = std::sqrt(s);
                } else {
                    L[i][j] = s / L[j][j];
                }
            }
        }
    }

    double portfolio_mean(const std::vector<double>& x) const {
        return stats_dot(means, x);
    }
    double portfolio_sigma(const std::vector<double>& x) const {
        double q = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j < x.size(); ++j) q += x[i] * covariance[i][j] * x[j];
        if (q <= 0.0)
            throw numeric_error("portfolio variance is not positive");
        return std::sqrt(q);
    }

private:
    static double stats_dot(const std::vector<double>& a, const std::vector<double>& b) {
        if (a.size() != b.size())
            throw usage_error("portfolio problem: dimension mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    }
};

namespace detail {

inline void check_feasible(const PortfolioProblem& p, const std::vector<double>& x) {
    if (x.size() != p.assets())
        throw usage_error("portfolio weights: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < p.lower[i] - 1e-8 || x[i] > p.upper[i] + 1e-8)
            throw domain_error("portfolio weights violate the box constraints");
        s += x[i];
    }
    if (std::abs(s - 1.0) > 1e-8)
        throw domain_error("portfolio weights do not sum to one");
}

} // namespace detail

/// Worst-case risk of the loss -x'R for a portfolio-specific tolerance
/// eps_x (squared Wasserstein radius).
inline double portfolio_objective_eps(const PortfolioProblem& p, const std::vector<double>& x,
                                      double eps_x) {
    detail::check_feasible(p, x);
    if (std::isnan(eps_x) || eps_x < 0.0)
        throw usage_error("portfolio tolerance must be non-negative");
    const WeightStatistics ws = weight_statistics(p.weight, p.reference_shape);
    const double V = ws.variance, c0 = ws.c0;
    const double mu_x = p.portfolio_mean(x);
    const double sigma_x = p.portfolio_sigma(x);
    const double eps_eff = std::min(eps_x, 2.0 * sigma_x * sigma_x * (1.0 - c0));
    return -mu_x + (sigma_x - eps_eff / (2.0 * sigma_x)) * std::sqrt(V) * c0 +
           std::sqrt(std::max(0.0, eps_eff - eps_eff * eps_eff / (4.0 * sigma_x * sigma_x))) *
               std::sqrt(V * (1.0 - c0 * c0));
}

/// Risk-aversion coefficient kappa(A) so the objective is -mu_x + kappa sigma_x
/// under the scaling rule eps_x = 2 sigma_x^2 A.
inline double portfolio_kappa(const PortfolioProblem& p, double A) {
    if (std::isnan(A) || A < 0.0 || A > 1.0)
        throw usage_error("ambiguity coefficient A must lie in [0,1]");
    const WeightStatistics ws = weight_statistics(p.weight, p.reference_shape);
    const double V = ws.variance, c0 = ws.c0;
    if (A == 0.0) return std::sqrt(V) * c0;
    if (A >= 1.0 - c0) return std::sqrt(V);
    return std::sqrt(V) * (c0 * (1.0 - A) + std::sqrt(A * (2.0 - A)) * std::sqrt(1.0 - c0 * c0));
}

inline double portfolio_objective(const PortfolioProblem& p, const std::vector<double>& x,
                                  double A) {
    detail::check_feasible(p, x);
    return -p.portfolio_mean(x) + portfolio_kappa(p, A) * p.portfolio_sigma(x);
}

struct PortfolioSolution {
    std::vector<double> x;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int starts = 0;
    unsigned seed = 0;
};

namespace detail {

/// Euclidean projection onto { sum x = 1, lower <= x <= upper } by bisection
/// on the simplex multiplier.
inline std::vector<double> project_polyhedron(const std::vector<double>& y,
                                              const std::vector<double>& lo,
                                              const std::vector<double>& hi) {
    auto clamped_sum = [&](double nu) {
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            s += std::clamp(y[i] - nu, lo[i], hi[i]);
        return s;
    };
    double a = y[0] - hi[0], b = y[0] - lo[0];
    for (std::size_t i = 0; i < y.size(); ++i) {
        a = std::min(a, y[i] - hi[i]);
        b = std::max(b, y[i] - lo[i]);
    }
    // clamped_sum is non-increasing in nu; bracket covers [sum(hi), sum(lo)].
    const double nu = bisect([&](double v) { return clamped_sum(v) - 1.0; }, a, b, 1e-15);
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = std::clamp(y[i] - nu, lo[i], hi[i]);
    return x;
}

} // namespace detail

/// Minimise -mu_x + kappa(A) sigma_x over { sum x = 1, box } by projected
/// gradient descent with backtracking and deterministic multi-start.
inline PortfolioSolution portfolio_optimize(const PortfolioProblem& p, double A,
                                            unsigned seed = 20210901, int n_starts = 8) {
    p.validate();
    const double kappa = portfolio_kappa(p, A);
    const std::size_t n = p.assets();

    auto objective = [&](const std::vector<double>& x) {
        return -p.portfolio_mean(x) + kappa * p.portfolio_sigma(x);
    };
    auto gradient = [&](const std::vector<double>& x) {
        const double sx = p.portfolio_sigma(x);
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i) {
            double sigma_row = 0.0;
            for (std::size_t j = 0; j < n; ++j) sigma_row += p.covariance[i][j] * x[j];
            g[i] = -p.means[i] + kappa * sigma_row / sx;
        }
        return g;
    };

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    PortfolioSolution best;
    best.seed = seed;
    best.objective = std::numeric_limits<double>::infinity();

    for (int start = 0; start < n_starts; ++start) {
        std::vector<double> x(n);
        if (start == 0) {
            std::fill(x.begin(), x.end(), 1.0 / static_cast<double>(n));
        } else {
            for (double& v : x) v = unif(rng);
        }
        x = detail::project_polyhedron(x, p.lower, p.upper);

        double fx = objective(x);
        double step = 1.0;
        for (int iter = 0; iter < 5000; ++iter) {
            const std::vector<double> g = gradient(x);
            std::vector<double> y(n);
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                for (std::size_t i = 0; i < n; ++i) y[i] = x[i] - step * g[i];
                y = detail::project_polyhedron(y, p.lower, p.upper);
                const double fy = objective(y);
                double decrease = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    decrease += (x[i] - y[i]) * (x[i] - y[i]);
                if (fy <= fx - 1e-4 * decrease / std::max(step, 1e-12)) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
            double move = 0.0;
            for (std::size_t i = 0; i < n; ++i) move = std::max(move, std::abs(y[i] - x[i]));
            x.swap(y);
            fx = objective(x);
            step = std::min(step * 2.0, 1e6);
            if (move < 1e-12) break;
        }

        // KKT residual: distance to the fixed point of the projected step.
        const std::vector<double> g = gradient(x);
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = x[i] - g[i];
        z = detail::project_polyhedron(z, p.lower, p.upper);
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(z[i] - x[i]));

        if (fx < best.objective) {
            best.x = x;
            best.objective = fx;
            best.kkt_residual = res;
        }
        ++best.starts;
    }
    return best;
}

/// Data-driven ambiguity coefficient from a return history: for each seed
/// portfolio, the Wasserstein distance between the empirical loss
/// distribution and the location-scale reference, divided by twice the
/// empirical variance; A-hat is the maximum over the seeds.
inline double estimate_ambiguity(const std::vector<std::vector<double>>& returns,
                                 const std::vector<std::vector<double>>& portfolios,
                                 const DiscreteQuantile& reference_shape) {
    if (returns.empty() || portfolios.empty())
        throw usage_error("estimate_ambiguity: empty input");
    const std::size_t n_assets = returns.front().size();
    const std::size_t m = returns.size();
    if (m < 2)
        throw domain_error("estimate_ambiguity: need at least two return observations");

    double a_hat = 0.0;
    for (const std::vector<double>& x : portfolios) {
        if (x.size() != n_assets)
            throw usage_error("estimate_ambiguity: portfolio dimension mismatch");
        std::vector<double> losses(m);
        for (std::size_t t = 0; t < m; ++t) {
            if (returns[t].size() != n_assets)
                throw usage_error("estimate_ambiguity: ragged return matrix");
            double v = 0.0;
            for (std::size_t i = 0; i < n_assets; ++i) v += x[i] * returns[t][i];
            losses[t] = -v;
        }
        std::sort(losses.begin(), losses.end());
        const DiscreteQuantile empirical(losses);
        const double mu_hat = empirical.mean();
        const double sigma_hat = empirical.stddev();
        if (sigma_hat == 0.0)
            throw domain_error("estimate_ambiguity: degenerate portfolio loss sample");

        std::vector<double> ref(m);
        for (std::size_t t = 0; t < m; ++t) {
            const double u = (static_cast<double>(t) + 0.5) / static_cast<double>(m);
            const double base = reference_shape.at(u);
            ref[t] = mu_hat +
                     sigma_hat * (base - reference_shape.mean()) / reference_shape.stddev();
        }
        const double d = wasserstein(empirical, DiscreteQuantile(std::move(ref)));
        a_hat = std::max(a_hat, d / (2.0 * sigma_hat * sigma_hat));
    }
    if (a_hat > 1.0) a_hat = 1.0;
    return a_hat;
}

} // namespace wrb
