#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wrb/distortion.hpp"
#include "wrb/errors.hpp"
#include "wrb/grid_stats.hpp"
#include "wrb/isotonic.hpp"
#include "wrb/quantile.hpp"
#include "wrb/roots.hpp"

namespace wrb {

/// M_eps(mu, sigma): all distributions with the target mean and standard
/// deviation whose quantile function lies within L2 distance sqrt(epsilon)
/// of the reference. epsilon may be infinite (moment constraints only).
struct UncertaintyBall {
    DiscreteQuantile reference;
    MomentSpec target;
    double epsilon;

    UncertaintyBall(DiscreteQuantile f, MomentSpec t, double eps)
        : reference(std::move(f)), target(t), epsilon(eps) {
        if (std::isnan(eps) || eps < 0.0)
            throw usage_error("epsilon must be non-negative or inf");
        const double fl = floor();
        if (eps < fl - 1e-12 * (1.0 + fl))
            throw domain_error("infeasible: epsilon below the moment feasibility floor");
    }

    double floor() const { return feasibility_floor(reference, target); }
    bool infinite() const { return std::isinf(epsilon); }
    bool singleton() const {
        return !infinite() && epsilon <= floor() + 1e-12 * (1.0 + floor());
    }
};

enum class BoundCase { one, two, singleton };
enum class Side { worst, best };

struct BoundReport {
    double value = 0.0;
    std::optional<DiscreteQuantile> extremal;
    bool attained = false;
    double lambda = 0.0;
    BoundCase which_case = BoundCase::one;
    double achieved_dw = std::numeric_limits<double>::quiet_NaN();
    std::optional<MomentSpec> achieved_moments;
    double epsilon_star = std::numeric_limits<double>::quiet_NaN();
};

/// Breakpoints of the piecewise closed-form RVaR/VaR projections.
struct BreakpointProjection {
    double lambda = 0.0;
    double lower = 0.0; // w0 (worst) or z0 (best)
    double upper = 0.0; // w1 (worst) or z1 (best)
    double c = 0.0;
    bool lower_at_boundary = false;
    bool upper_at_boundary = false;
};

namespace detail {

inline void enforce_nondecreasing(std::vector<double>& k, double tol = 1e-7) {
    for (std::size_t i = 1; i < k.size(); ++i) {
        if (k[i] < k[i - 1]) {
            if (k[i - 1] - k[i] > tol)
                throw numeric_error("constructed projection is not monotone");
            k[i] = k[i - 1];
        }
    }
}

/// h = mu + sigma (k - mean(k)) / std(k) for a non-decreasing k.
inline DiscreteQuantile affine_quantile(std::vector<double> k, const MomentSpec& t) {
    const double a = stats::mean(k);
    const double b = stats::stddev(k);
    if (b == 0.0)
        throw numeric_error("degenerate projection: cannot normalise a constant function");
    for (double& v : k) v = t.mu + t.sigma * (v - a) / b;
    enforce_nondecreasing(k, 1e-9 * (1.0 + std::abs(t.mu) + t.sigma));
    return DiscreteQuantile(std::move(k));
}

struct LambdaProbe {
    double c0 = 0.0;
    double lambda_lo = 0.0;       // smallest lambda with a non-constant projection
    std::vector<double> k_lo;     // projection at lambda_lo
};

/// c0 = lim corr(F^{-1}, k_lambda) as lambda decreases to 0, approximated at
/// the smallest grid lambda where the projection is non-constant. For convex
/// distortions the projection of gamma alone is constant and the probe
/// doubles lambda upward until the reference breaks the tie.
inline LambdaProbe probe_c0(const std::vector<double>& gamma_run, const DiscreteQuantile& f) {
    LambdaProbe p;
    p.k_lo = project_nondecreasing(gamma_run);
    if (!is_constant(p.k_lo)) {
        p.c0 = stats::correlation(f.values(), p.k_lo);
        return p;
    }
    double lam = 1e-7;
    while (lam <= 1e12) {
        std::vector<double> k = lambda_path_up(gamma_run, f, lam);
        if (!is_constant(k)) {
            p.c0 = stats::correlation(f.values(), k);
            p.lambda_lo = lam;
            p.k_lo = std::move(k);
            return p;
        }
        lam = (lam == 1e-7) ? 1e-6 : lam * 2.0;
    }
    throw domain_error("projection stays constant for all lambda: assumption on the "
                       "weight/reference pair is violated");
}

/// Shared engine: the best case is the worst case with gamma negated, and
/// the report value is the Choquet integral of the original weight against
/// the extremal quantile.
inline BoundReport worst_core(const std::vector<double>& gamma_run,
                              const std::vector<double>& gamma_value,
                              const UncertaintyBall& ball) {
    const DiscreteQuantile& f = ball.reference;
    if (gamma_run.size() != f.size())
        throw usage_error("weight/reference grid size mismatch");
    const MomentSpec& t = ball.target;
    const double fl = ball.floor();

    BoundReport rep;
    if (ball.singleton()) {
        rep.which_case = BoundCase::singleton;
        rep.extremal = scaled_reference(f, t);
        rep.value = stats::inner(gamma_value, rep.extremal->values());
        rep.attained = true;
        rep.achieved_dw = wasserstein(f, *rep.extremal);
        rep.achieved_moments = moments(*rep.extremal);
        const LambdaProbe p = probe_c0(gamma_run, f);
        rep.epsilon_star = fl + 2.0 * t.sigma * f.stddev() * (1.0 - p.c0);
        return rep;
    }

    const LambdaProbe probe = probe_c0(gamma_run, f);
    rep.epsilon_star = fl + 2.0 * t.sigma * f.stddev() * (1.0 - probe.c0);

    const bool case_two = ball.infinite() || probe.c0 >= 1.0 - 1e-10 ||
                          ball.epsilon >= rep.epsilon_star;
    if (case_two) {
        rep.which_case = BoundCase::two;
        rep.lambda = 0.0;
        if (probe.lambda_lo == 0.0) {
            // Projected weight is non-constant: the bound is attained at
            // lambda = 0 with distance sqrt(epsilon_star) <= sqrt(epsilon).
            rep.extremal = affine_quantile(probe.k_lo, t);
            rep.value = stats::inner(gamma_value, rep.extremal->values());
            rep.attained = true;
            rep.achieved_dw = wasserstein(f, *rep.extremal);
            rep.achieved_moments = moments(*rep.extremal);
        } else {
            rep.value = t.mu;
            rep.attained = false;
        }
        return rep;
    }

    rep.which_case = BoundCase::one;
    // d_W^2(F, h_lambda) = floor + 2 sigma sigma_F (1 - corr(F, k_lambda)),
    // so matching the distance is a root find on the correlation.
    const double target_corr = 1.0 - (ball.epsilon - fl) / (2.0 * t.sigma * f.stddev());
    auto corr_at = [&](double lam) {
        std::vector<double> k = lambda_path_up(gamma_run, f, lam);
        return stats::correlation(f.values(), k);
    };
    double lo = probe.lambda_lo;
    double hi = std::max(1.0, 2.0 * lo);
    int guard = 0;
    while (corr_at(hi) < target_corr) {
        hi *= 2.0;
        if (++guard > 200)
            throw numeric_error("lambda bracket expansion failed");
    }
    const double lam = bisect([&](double l) { return corr_at(l) - target_corr; }, lo, hi, 1e-13);

    rep.lambda = lam;
    std::vector<double> k = lambda_path_up(gamma_run, f, lam);
    rep.extremal = affine_quantile(std::move(k), t);
    rep.value = stats::inner(gamma_value, rep.extremal->values());
    rep.attained = true;
    rep.achieved_dw = wasserstein(f, *rep.extremal);
    rep.achieved_moments = moments(*rep.extremal);
    return rep;
}

inline std::vector<double> negate(const std::vector<double>& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
    return out;
}

/// corr(F^{-1}, k); a constant k means lambda is below the effective
/// threshold, where the correlation sits at its infimum, so report a value
/// below any admissible target to steer the bracketing upward.
inline double safe_corr(const DiscreteQuantile& f, const std::vector<double>& k) {
    if (is_constant(k)) return -2.0;
    return stats::correlation(f.values(), k);
}

} // namespace detail

/// Worst case for any distortion weight: isotonic projection of
/// gamma + lambda F^{-1}, lambda matched to the ball radius.
inline BoundReport general_worst(const WeightFunction& w, const UncertaintyBall& ball) {
    if (is_constant(w.values))
        throw domain_error("degenerate weight: gamma is constant");
    return detail::worst_core(w.values, w.values, ball);
}

/// Best case: antitonic projection of gamma - lambda F^{-1}, realised by
/// running the worst-case engine on -gamma.
inline BoundReport general_best(const WeightFunction& w, const UncertaintyBall& ball) {
    if (is_constant(w.values))
        throw domain_error("degenerate weight: gamma is constant");
    return detail::worst_core(detail::negate(w.values), w.values, ball);
}

/// Worst case for concave distortions with lambda in closed form:
/// lambda = (K/sigma_F^2) sqrt((C^2 - V sigma_F^2)/(K^2 - sigma^2 sigma_F^2)) - C/sigma_F^2.
inline BoundReport concave_worst(const WeightFunction& w, const UncertaintyBall& ball) {
    const DiscreteQuantile& f = ball.reference;
    if (w.values.size() != f.size())
        throw usage_error("weight/reference grid size mismatch");
    if (is_constant(w.values))
        throw domain_error("degenerate weight: gamma is constant");
    for (std::size_t i = 1; i < w.values.size(); ++i)
        if (w.values[i] < w.values[i - 1] - 1e-9 * (1.0 + std::abs(w.values[i - 1])))
            throw domain_error("concave_worst requires a non-decreasing weight");

    const MomentSpec& t = ball.target;
    const double fl = ball.floor();
    const WeightStatistics ws = weight_statistics(w, f);

    BoundReport rep;
    rep.epsilon_star = fl + 2.0 * t.sigma * f.stddev() * (1.0 - ws.c0);

    if (ball.singleton()) {
        rep.which_case = BoundCase::singleton;
        rep.extremal = scaled_reference(f, t);
        rep.value = choquet_value(w, *rep.extremal);
        rep.attained = true;
        rep.achieved_dw = wasserstein(f, *rep.extremal);
        rep.achieved_moments = moments(*rep.extremal);
        return rep;
    }

    double lam = 0.0;
    if (!ball.infinite() && ws.c0 < 1.0 - 1e-10 && ball.epsilon < rep.epsilon_star) {
        rep.which_case = BoundCase::one;
        const double sf2 = f.stddev() * f.stddev();
        const double K = (f.mean() * f.mean() + sf2 + t.mu * t.mu + t.sigma * t.sigma -
                          2.0 * t.mu * f.mean() - ball.epsilon) /
                         2.0;
        const double num = ws.covariance * ws.covariance - ws.variance * sf2;
        const double den = K * K - t.sigma * t.sigma * sf2;
        if (den == 0.0)
            throw numeric_error("lambda formula degenerates: K^2 = sigma^2 sigma_F^2");
        const double ratio = num / den;
        if (ratio < 0.0)
            throw numeric_error("lambda formula degenerates: negative radicand");
        lam = (K / sf2) * std::sqrt(ratio) - ws.covariance / sf2;
        if (lam < 0.0) lam = 0.0;
    } else {
        rep.which_case = BoundCase::two;
    }

    rep.lambda = lam;
    std::vector<double> ell(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        ell[i] = w.values[i] + lam * f[i];
    rep.extremal = detail::affine_quantile(std::move(ell), t);
    rep.value = choquet_value(w, *rep.extremal);
    rep.attained = true;
    rep.achieved_dw = wasserstein(f, *rep.extremal);
    rep.achieved_moments = moments(*rep.extremal);
    return rep;
}

/// TVaR worst case without building a weight grid: value
/// mu + sigma (V + lambda (TVaR_alpha(F) - mu_F)) / sqrt(V + 2 lambda (...) + lambda^2 sigma_F^2)
/// with V = alpha/(1-alpha) and lambda from the concave closed form.
inline BoundReport tvar_worst(double alpha, const UncertaintyBall& ball) {
    if (!(0.0 < alpha && alpha < 1.0))
        throw domain_error("tvar: level in (0,1) required");
    const DiscreteQuantile& f = ball.reference;
    const MomentSpec& t = ball.target;
    const double fl = ball.floor();
    const double sf = f.stddev();

    const double V = alpha / (1.0 - alpha);
    const double tvar_f = f.integral(alpha, 1.0) / (1.0 - alpha);
    const double C = tvar_f - f.mean();
    const double c0 = C / (std::sqrt(V) * sf);

    BoundReport rep;
    rep.epsilon_star = fl + 2.0 * t.sigma * sf * (1.0 - c0);

    if (ball.singleton()) {
        rep.which_case = BoundCase::singleton;
        rep.extremal = scaled_reference(f, t);
        rep.value = rep.extremal->integral(alpha, 1.0) / (1.0 - alpha);
        rep.attained = true;
        rep.achieved_dw = wasserstein(f, *rep.extremal);
        rep.achieved_moments = moments(*rep.extremal);
        return rep;
    }

    double lam = 0.0;
    if (!ball.infinite() && c0 < 1.0 - 1e-10 && ball.epsilon < rep.epsilon_star) {
        rep.which_case = BoundCase::one;
        const double sf2 = sf * sf;
        const double K = (f.mean() * f.mean() + sf2 + t.mu * t.mu + t.sigma * t.sigma -
                          2.0 * t.mu * f.mean() - ball.epsilon) /
                         2.0;
        const double num = C * C - V * sf2;
        const double den = K * K - t.sigma * t.sigma * sf2;
        if (den == 0.0)
            throw numeric_error("lambda formula degenerates: K^2 = sigma^2 sigma_F^2");
        const double ratio = num / den;
        if (ratio < 0.0)
            throw numeric_error("lambda formula degenerates: negative radicand");
        lam = (K / sf2) * std::sqrt(ratio) - C / sf2;
        if (lam < 0.0) lam = 0.0;
    } else {
        rep.which_case = BoundCase::two;
    }

    rep.lambda = lam;
    const double b = std::sqrt(V + 2.0 * lam * C + lam * lam * sf * sf);
    rep.value = t.mu + t.sigma * (V + lam * C) / b;

    // The extremal is affine in gamma + lambda F^{-1}; gamma here is the
    // exact TVaR step weight on the grid.
    const WeightFunction w = build_weight(RiskMeasureSpec::tvar(alpha), f.size());
    std::vector<double> ell(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        ell[i] = w.values[i] + lam * f[i];
    rep.extremal = detail::affine_quantile(std::move(ell), t);
    rep.attained = true;
    rep.achieved_dw = wasserstein(f, *rep.extremal);
    rep.achieved_moments = moments(*rep.extremal);
    return rep;
}

// ---------------------------------------------------------------------------
// Closed-form breakpoint projections for RVaR and VaR

namespace detail {

/// Crossing u in [ulo, uhi] with lambda F^{-1}(u) = target; the interpolated
/// quantile is monotone so a bisection on u suffices.
inline double crossing(const DiscreteQuantile& f, double lambda, double target, double ulo,
                       double uhi) {
    if (lambda * f.at(ulo) >= target) return ulo;
    if (lambda * f.at(uhi) <= target) return uhi;
    return bisect([&](double u) { return lambda * f.at(u) - target; }, ulo, uhi, 1e-14);
}

/// Worst-case RVaR breakpoints (w0, w1, c) for a given lambda > 0; with
/// force_w0_alpha the construction degenerates to the VaR+ worst case.
inline BreakpointProjection solve_upper_breakpoints(const DiscreteQuantile& f, double alpha,
                                                    double beta, double lambda,
                                                    bool force_w0_alpha) {
    BreakpointProjection bp;
    bp.lambda = lambda;
    const double jump = force_w0_alpha ? 0.0 : 1.0 / (beta - alpha);
    const double f_end = lambda * f.values().back();
    double c = jump + lambda * f.at(alpha) + 1.0; // any starting point above the jump
    double w0 = alpha, w1 = 1.0;
    for (int iter = 0; iter < 10000; ++iter) {
        if (force_w0_alpha) {
            w0 = alpha;
        } else if (jump <= c - lambda * f.at(alpha)) {
            w0 = crossing(f, lambda, c - jump, alpha, beta);
        } else {
            w0 = alpha;
        }
        w1 = (c >= f_end) ? 1.0 : crossing(f, lambda, c, beta, 1.0);
        if (w1 - w0 < 1e-12)
            throw numeric_error("breakpoint system degenerates: empty flat segment");
        const double mass = force_w0_alpha ? 1.0 : (beta - w0) / (beta - alpha);
        const double c_new = (mass + lambda * f.integral(w0, w1)) / (w1 - w0);
        const double step = c_new - c;
        c += 0.5 * step;
        if (std::abs(step) < 1e-10 * (1.0 + std::abs(c))) {
            bp.lower = w0;
            bp.upper = w1;
            bp.c = c;
            bp.lower_at_boundary = (w0 == alpha || w0 == beta);
            bp.upper_at_boundary = (w1 == 1.0);
            return bp;
        }
    }
    throw numeric_error("breakpoint fixed point did not converge");
}

/// Best-case RVaR breakpoints (z0, z1, c); with force_z1_beta the construction
/// degenerates to the VaR best case (beta playing the role of the VaR level).
inline BreakpointProjection solve_lower_breakpoints(const DiscreteQuantile& f, double alpha,
                                                    double beta, double lambda,
                                                    bool force_z1_beta) {
    BreakpointProjection bp;
    bp.lambda = lambda;
    const double jump = force_z1_beta ? 0.0 : 1.0 / (beta - alpha);
    const double f_start = lambda * f.values().front();
    double c = lambda * f.at(alpha) - jump - 1.0;
    double z0 = 0.0, z1 = beta;
    for (int iter = 0; iter < 10000; ++iter) {
        z0 = (c <= f_start) ? 0.0 : crossing(f, lambda, c, 0.0, alpha);
        if (force_z1_beta) {
            z1 = beta;
        } else if (jump < lambda * f.at(beta) - c) {
            z1 = crossing(f, lambda, lambda * f.at(z0) + jump, alpha, beta);
        } else {
            z1 = beta;
        }
        if (z1 - z0 < 1e-12)
            throw numeric_error("breakpoint system degenerates: empty flat segment");
        const double mass = force_z1_beta ? 1.0 : (z1 - alpha) / (beta - alpha);
        const double c_new = (-mass + lambda * f.integral(z0, z1)) / (z1 - z0);
        const double step = c_new - c;
        c += 0.5 * step;
        if (std::abs(step) < 1e-10 * (1.0 + std::abs(c))) {
            bp.lower = z0;
            bp.upper = z1;
            bp.c = c;
            bp.lower_at_boundary = (z0 == 0.0);
            bp.upper_at_boundary = (z1 == beta);
            return bp;
        }
    }
    throw numeric_error("breakpoint fixed point did not converge");
}

/// Assemble the worst-case k on the grid from the (w0, w1, c) breakpoints.
inline std::vector<double> upper_k(const DiscreteQuantile& f, double alpha, double beta,
                                   const BreakpointProjection& bp, bool force_w0_alpha) {
    const double jump = force_w0_alpha ? 0.0 : 1.0 / (beta - alpha);
    std::vector<double> k(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double u = f.grid_point(i);
        if (u <= alpha)
            k[i] = bp.lambda * f[i];
        else if (u <= bp.lower)
            k[i] = jump + bp.lambda * f[i];
        else if (u <= bp.upper)
            k[i] = bp.c;
        else
            k[i] = bp.lambda * f[i];
    }
    enforce_nondecreasing(k, 2e-2 * (1.0 + std::abs(bp.c)) / std::sqrt(double(f.size())));
    return k;
}

/// Assemble the best-case k (non-increasing) from the (z0, z1, c) breakpoints.
inline std::vector<double> lower_k(const DiscreteQuantile& f, double alpha, double beta,
                                   const BreakpointProjection& bp, bool force_z1_beta) {
    const double jump = force_z1_beta ? 0.0 : 1.0 / (beta - alpha);
    const double var_level = force_z1_beta ? beta : beta; // fourth branch starts at beta
    std::vector<double> k(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double u = f.grid_point(i);
        if (u <= bp.lower)
            k[i] = -bp.lambda * f[i];
        else if (u <= bp.upper)
            k[i] = -bp.c;
        else if (u <= var_level)
            k[i] = -bp.lambda * f[i] + jump;
        else
            k[i] = -bp.lambda * f[i];
    }
    // k is non-increasing; validate via its negation.
    std::vector<double> neg = negate(k);
    enforce_nondecreasing(neg, 2e-2 * (1.0 + std::abs(bp.c)) / std::sqrt(double(f.size())));
    return negate(neg);
}

} // namespace detail

/// Worst-case RVaR via the explicit piecewise projection; the outer root find
/// matches the ball radius exactly as in the general engine.
inline std::pair<BoundReport, BreakpointProjection> rvar_worst(double alpha, double beta,
                                                               const UncertaintyBall& ball) {
    if (!(0.0 < alpha && alpha < beta && beta <= 1.0))
        throw domain_error("rvar: need 0 < alpha < beta <= 1");
    const DiscreteQuantile& f = ball.reference;
    const MomentSpec& t = ball.target;
    const WeightFunction w = build_weight(RiskMeasureSpec::rvar(alpha, beta), f.size());

    if (ball.singleton() || ball.infinite()) {
        BoundReport rep = general_worst(w, ball);
        BreakpointProjection bp{0.0, alpha, 1.0, 1.0 / (1.0 - alpha), true, true};
        return {std::move(rep), bp};
    }

    const double fl = ball.floor();
    const detail::LambdaProbe probe = detail::probe_c0(w.values, f);
    const double c0 = probe.c0;
    const double eps_star = fl + 2.0 * t.sigma * f.stddev() * (1.0 - c0);

    if (ball.epsilon >= eps_star || c0 >= 1.0 - 1e-10) {
        BoundReport rep = general_worst(w, ball);
        BreakpointProjection bp{0.0, alpha, 1.0, 1.0 / (1.0 - alpha), true, true};
        return {std::move(rep), bp};
    }

    auto k_for = [&](double lam) {
        if (beta == 1.0) {
            // TVaR: w0 = w1 = 1, the flat segment vanishes and k is
            // gamma + lambda F^{-1} itself.
            std::vector<double> k(f.size());
            for (std::size_t i = 0; i < f.size(); ++i)
                k[i] = (f.grid_point(i) > alpha ? 1.0 / (beta - alpha) : 0.0) + lam * f[i];
            BreakpointProjection bp{lam, 1.0, 1.0, k.back(), true, true};
            return std::make_pair(std::move(k), bp);
        }
        BreakpointProjection bp = detail::solve_upper_breakpoints(f, alpha, beta, lam, false);
        return std::make_pair(detail::upper_k(f, alpha, beta, bp, false), bp);
    };

    const double target_corr = 1.0 - (ball.epsilon - fl) / (2.0 * t.sigma * f.stddev());
    auto corr_at = [&](double lam) {
        return detail::safe_corr(f, k_for(lam).first);
    };
    double hi = 1.0;
    int guard = 0;
    while (corr_at(hi) < target_corr) {
        hi *= 2.0;
        if (++guard > 200)
            throw numeric_error("lambda bracket expansion failed");
    }
    const double lam = bisect([&](double l) { return corr_at(l) - target_corr; }, 0.0, hi, 1e-13);

    auto [k, bp] = k_for(lam);
    BoundReport rep;
    rep.which_case = BoundCase::one;
    rep.lambda = lam;
    rep.epsilon_star = eps_star;
    rep.extremal = detail::affine_quantile(std::move(k), t);
    rep.value = choquet_value(w, *rep.extremal);
    rep.attained = true;
    rep.achieved_dw = wasserstein(f, *rep.extremal);
    rep.achieved_moments = moments(*rep.extremal);
    return {std::move(rep), bp};
}

/// Best-case RVaR via the explicit piecewise antitonic projection.
inline std::pair<BoundReport, BreakpointProjection> rvar_best(double alpha, double beta,
                                                              const UncertaintyBall& ball) {
    if (!(0.0 < alpha && alpha < beta && beta <= 1.0))
        throw domain_error("rvar: need 0 < alpha < beta <= 1");
    const DiscreteQuantile& f = ball.reference;
    const MomentSpec& t = ball.target;
    const WeightFunction w = build_weight(RiskMeasureSpec::rvar(alpha, beta), f.size());

    if (ball.singleton() || ball.infinite()) {
        BoundReport rep = general_best(w, ball);
        BreakpointProjection bp{0.0, 0.0, beta, -1.0 / beta, true, true};
        return {std::move(rep), bp};
    }

    const double fl = ball.floor();
    const detail::LambdaProbe probe = detail::probe_c0(detail::negate(w.values), f);
    const double c0 = probe.c0;
    const double eps_star = fl + 2.0 * t.sigma * f.stddev() * (1.0 - c0);

    if (ball.epsilon >= eps_star || c0 >= 1.0 - 1e-10) {
        BoundReport rep = general_best(w, ball);
        BreakpointProjection bp{0.0, 0.0, beta, -1.0 / beta, true, true};
        return {std::move(rep), bp};
    }

    auto k_for = [&](double lam) {
        BreakpointProjection bp = detail::solve_lower_breakpoints(f, alpha, beta, lam, false);
        return std::make_pair(detail::lower_k(f, alpha, beta, bp, false), bp);
    };

    const double target_corr = 1.0 - (ball.epsilon - fl) / (2.0 * t.sigma * f.stddev());
    auto corr_at = [&](double lam) {
        // h is proportional to -k, so the relevant correlation is with -k.
        const std::vector<double> k = k_for(lam).first;
        if (is_constant(k)) return -2.0;
        return -stats::correlation(f.values(), k);
    };
    const double lo = probe.lambda_lo;
    double hi = std::max(1.0, 2.0 * lo);
    int guard = 0;
    while (corr_at(hi) < target_corr) {
        hi *= 2.0;
        if (++guard > 200)
            throw numeric_error("lambda bracket expansion failed");
    }
    const double lam = bisect([&](double l) { return corr_at(l) - target_corr; }, lo, hi, 1e-13);

    auto [k, bp] = k_for(lam);
    BoundReport rep;
    rep.which_case = BoundCase::one;
    rep.lambda = lam;
    rep.epsilon_star = eps_star;
    rep.extremal = detail::affine_quantile(detail::negate(k), t);
    rep.value = choquet_value(w, *rep.extremal);
    rep.attained = true;
    rep.achieved_dw = wasserstein(f, *rep.extremal);
    rep.achieved_moments = moments(*rep.extremal);
    return {std::move(rep), bp};
}

/// VaR_alpha bounds. The worst case is the VaR+ construction (flat segment
/// starting at alpha); its value upper-bounds VaR_alpha but no maximiser of
/// the plain VaR exists, hence attained=false on the worst report. The best
/// case flattens the quantile on an interval ending at alpha and is attained.
inline std::pair<BoundReport, BoundReport> var_bounds(double alpha, const UncertaintyBall& ball) {
    if (!(0.0 < alpha && alpha < 1.0))
        throw domain_error("var: level in (0,1) required");
    const DiscreteQuantile& f = ball.reference;
    const MomentSpec& t = ball.target;
    const double fl = ball.floor();

    BoundReport worst, best;

    if (ball.singleton()) {
        const DiscreteQuantile sref = scaled_reference(f, t);
        for (BoundReport* rep : {&worst, &best}) {
            rep->which_case = BoundCase::singleton;
            rep->value = sref.at(alpha);
            rep->extremal = sref;
            rep->attained = true;
            rep->achieved_dw = wasserstein(f, sref);
            rep->achieved_moments = moments(sref);
        }
        return {std::move(worst), std::move(best)};
    }

    // c0 = corr(F^{-1}, 1_{(alpha,1)}) for both sides.
    const double tail_mean = f.integral(alpha, 1.0) / (1.0 - alpha);
    const double c0 = (tail_mean - f.mean()) * (1.0 - alpha) /
                      (std::sqrt(alpha * (1.0 - alpha)) * f.stddev());
    const double eps_star = fl + 2.0 * t.sigma * f.stddev() * (1.0 - c0);
    worst.epsilon_star = eps_star;
    best.epsilon_star = eps_star;

    const bool case_two = ball.infinite() || ball.epsilon >= eps_star || c0 >= 1.0 - 1e-10;

    auto finish = [&](BoundReport& rep, std::vector<double> k, bool negated, double lam) {
        rep.lambda = lam;
        rep.extremal = detail::affine_quantile(
            negated ? detail::negate(k) : std::move(k), t);
        rep.achieved_dw = wasserstein(f, *rep.extremal);
        rep.achieved_moments = moments(*rep.extremal);
    };

    if (case_two) {
        worst.which_case = BoundCase::two;
        best.which_case = BoundCase::two;
        worst.value = t.mu + t.sigma * std::sqrt(alpha / (1.0 - alpha));
        best.value = t.mu - t.sigma * std::sqrt((1.0 - alpha) / alpha);
        // lambda = 0 extremals: the flat-plus-atom shapes of the moment-only bound.
        std::vector<double> kw(f.size()), kb(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double u = f.grid_point(i);
            kw[i] = (u > alpha) ? 1.0 / (1.0 - alpha) : 0.0;
            kb[i] = (u <= alpha) ? -1.0 / alpha : 0.0;
        }
        finish(worst, std::move(kw), false, 0.0);
        finish(best, std::move(kb), false, 0.0);
        worst.attained = false;
        best.attained = true;
        return {std::move(worst), std::move(best)};
    }

    worst.which_case = BoundCase::one;
    best.which_case = BoundCase::one;
    const double target_corr = 1.0 - (ball.epsilon - fl) / (2.0 * t.sigma * f.stddev());

    // Worst side: Prop.-1 construction with w0 = alpha.
    {
        auto k_for = [&](double lam) {
            BreakpointProjection bp = detail::solve_upper_breakpoints(f, alpha, alpha, lam, true);
            return std::make_pair(detail::upper_k(f, alpha, alpha, bp, true), bp);
        };
        auto corr_at = [&](double lam) {
            return detail::safe_corr(f, k_for(lam).first);
        };
        double hi = 1.0;
        int guard = 0;
        while (corr_at(hi) < target_corr) {
            hi *= 2.0;
            if (++guard > 200) throw numeric_error("lambda bracket expansion failed");
        }
        const double lam =
            bisect([&](double l) { return corr_at(l) - target_corr; }, 0.0, hi, 1e-13);
        auto [k, bp] = k_for(lam);
        const double a = stats::mean(k), b = stats::stddev(k);
        worst.value = t.mu + t.sigma * (bp.c - a) / b;
        finish(worst, std::move(k), false, lam);
        worst.attained = false; // the witness maximises VaR+, not VaR
    }

    // Best side: Prop.-2 construction with z1 = alpha (flat segment ends at alpha).
    {
        auto k_for = [&](double lam) {
            BreakpointProjection bp = detail::solve_lower_breakpoints(f, alpha, alpha, lam, true);
            return std::make_pair(detail::lower_k(f, alpha, alpha, bp, true), bp);
        };
        auto corr_at = [&](double lam) {
            const std::vector<double> k = k_for(lam).first;
            if (is_constant(k)) return -2.0;
            return -stats::correlation(f.values(), k);
        };
        double hi = 1.0;
        int guard = 0;
        while (corr_at(hi) < target_corr) {
            hi *= 2.0;
            if (++guard > 200) throw numeric_error("lambda bracket expansion failed");
        }
        const double lam =
            bisect([&](double l) { return corr_at(l) - target_corr; }, 0.0, hi, 1e-13);
        auto [k, bp] = k_for(lam);
        const double a = stats::mean(k), b = stats::stddev(k);
        best.value = t.mu + t.sigma * (a + bp.c) / b;
        finish(best, std::move(k), true, lam);
        best.attained = true;
    }

    return {std::move(worst), std::move(best)};
}

// ---------------------------------------------------------------------------
// Dispatch and frontier

inline BoundReport solve_bound(const RiskMeasureSpec& spec, const UncertaintyBall& ball,
                               Side side) {
    switch (spec.kind) {
        case MeasureKind::var:
        case MeasureKind::var_plus: {
            auto [worst, best] = var_bounds(spec.alpha, ball);
            BoundReport rep = (side == Side::worst) ? std::move(worst) : std::move(best);
            // Table-1 attainment: worst VaR+ and best VaR are attained, the
            // other two are not.
            if (rep.which_case != BoundCase::singleton) {
                if (side == Side::worst)
                    rep.attained = (spec.kind == MeasureKind::var_plus);
                else
                    rep.attained = (spec.kind == MeasureKind::var);
            }
            return rep;
        }
        case MeasureKind::rvar:
            return (side == Side::worst) ? rvar_worst(spec.alpha, spec.beta, ball).first
                                         : rvar_best(spec.alpha, spec.beta, ball).first;
        case MeasureKind::tvar:
            return (side == Side::worst)
                       ? tvar_worst(spec.alpha, ball)
                       : general_best(build_weight(spec, ball.reference.size()), ball);
        default: {
            const WeightFunction w = build_weight(spec, ball.reference.size());
            if (side == Side::worst)
                return w.concave ? concave_worst(w, ball) : general_worst(w, ball);
            return general_best(w, ball);
        }
    }
}

/// Value of the measure at the reference distribution itself.
inline double reference_value(const RiskMeasureSpec& spec, const DiscreteQuantile& f) {
    if (spec.kind == MeasureKind::var || spec.kind == MeasureKind::var_plus)
        return f.at(spec.alpha);
    return choquet_value(build_weight(spec, f.size()), f);
}

struct FrontierRow {
    double epsilon = 0.0;
    std::optional<double> best;
    std::optional<double> worst;
    std::optional<double> normalized_spread;
    std::string error;
};

/// (epsilon, best, worst, (worst-best)/H_g(F)) rows for an increasing
/// epsilon grid; infeasible radii produce row-level error markers.
inline std::vector<FrontierRow> frontier(const RiskMeasureSpec& spec, const DiscreteQuantile& f,
                                         const MomentSpec& target,
                                         const std::vector<double>& eps_grid) {
    for (std::size_t i = 1; i < eps_grid.size(); ++i)
        if (!(eps_grid[i] > eps_grid[i - 1]))
            throw usage_error("frontier: epsilon grid must be strictly increasing");
    const double ref_value = reference_value(spec, f);
    std::vector<FrontierRow> rows;
    rows.reserve(eps_grid.size());
    for (double eps : eps_grid) {
        FrontierRow row;
        row.epsilon = eps;
        try {
            UncertaintyBall ball(f, target, eps);
            row.worst = solve_bound(spec, ball, Side::worst).value;
            row.best = solve_bound(spec, ball, Side::best).value;
            if (ref_value != 0.0)
                row.normalized_spread = (*row.worst - *row.best) / ref_value;
        } catch (const domain_error& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace wrb
