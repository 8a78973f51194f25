#pragma once

#include <cmath>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "wrb/errors.hpp"
#include "wrb/quantile.hpp"
#include "wrb/roots.hpp"

namespace wrb {

struct MomentPair {
    double m1 = 0.0; // E(S)
    double m2 = 0.0; // E(S^2)
};

/// Analytic first two moments of a parametric reference.
inline MomentPair model_moments(const ParametricReference& ref) {
    namespace bm = boost::math;
    switch (ref.family) {
        case Family::normal:
            return {ref.p1, ref.p1 * ref.p1 + ref.p2 * ref.p2};
        case Family::pareto_clayton: {
            // E(S^k) = b^k B(a-k, d+k) / B(d, a).
            const double a = ref.p1, b = ref.p2, d = ref.p3;
            auto log_beta = [](double x, double y) {
                return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y);
            };
            const double lb = log_beta(d, a);
            const double m1 = b * std::exp(log_beta(a - 1.0, d + 1.0) - lb);
            const double m2 = b * b * std::exp(log_beta(a - 2.0, d + 2.0) - lb);
            return {m1, m2};
        }
        case Family::lognormal: {
            const double mu = ref.p1, s2 = ref.p2 * ref.p2;
            return {std::exp(mu + 0.5 * s2), std::exp(2.0 * mu + 2.0 * s2)};
        }
        case Family::gamma: {
            const double k = ref.p1, th = ref.p2;
            return {k * th, k * th * th + k * k * th * th};
        }
        case Family::weibull: {
            const double lam = ref.p1, k = ref.p2;
            return {lam * bm::tgamma(1.0 + 1.0 / k), lam * lam * bm::tgamma(1.0 + 2.0 / k)};
        }
        case Family::inverse_gaussian: {
            const double mu = ref.p1, lam = ref.p2;
            return {mu, mu * mu + mu * mu * mu / lam};
        }
        case Family::inverse_gamma: {
            const double al = ref.p1, be = ref.p2;
            return {be / (al - 1.0), be * be / ((al - 1.0) * (al - 2.0))};
        }
        case Family::inverse_weibull: {
            const double lam = ref.p1, k = ref.p2;
            return {lam * bm::tgamma(1.0 - 1.0 / k), lam * lam * bm::tgamma(1.0 - 2.0 / k)};
        }
        case Family::log_logistic: {
            const double al = ref.p1, th = 3.14159265358979323846 / ref.p2;
            return {al * th / std::sin(th), al * al * 2.0 * th / std::sin(2.0 * th)};
        }
    }
    throw usage_error("unknown family");
}

struct ModelFit {
    Family family;
    double p1 = 0.0;
    double p2 = 0.0;
    double achieved_m1 = 0.0;
    double achieved_m2 = 0.0;
    double residual = 0.0; // max relative error on the two matched moments
    double dw = 0.0;       // Wasserstein distance to the reference, filled by the case study

    ParametricReference reference() const;
};

inline ParametricReference ModelFit::reference() const {
    switch (family) {
        case Family::lognormal: return ParametricReference::lognormal(p1, p2);
        case Family::gamma: return ParametricReference::gamma(p1, p2);
        case Family::weibull: return ParametricReference::weibull(p1, p2);
        case Family::inverse_gaussian: return ParametricReference::inverse_gaussian(p1, p2);
        case Family::inverse_gamma: return ParametricReference::inverse_gamma(p1, p2);
        case Family::inverse_weibull: return ParametricReference::inverse_weibull(p1, p2);
        case Family::log_logistic: return ParametricReference::log_logistic(p1, p2);
        default:
            throw usage_error("ModelFit::reference: unsupported family");
    }
}

/// Match (E(S), E(S^2)) within a two-parameter family. Closed form where the
/// moment equations invert directly; otherwise a bracketed root-find on the
/// shape followed by the scale from the mean equation.
inline ModelFit fit_alternative_model(Family family, double m1, double m2) {
    namespace bm = boost::math;
    if (!(m1 > 0.0) || !(m2 > m1 * m1))
        throw domain_error("fit: need mean > 0 and second moment > mean^2");
    const double var = m2 - m1 * m1;
    const double ratio = m2 / (m1 * m1);

    ModelFit fit{family};
    switch (family) {
        case Family::lognormal: {
            const double s2 = std::log(ratio);
            fit.p1 = std::log(m1) - 0.5 * s2;
            fit.p2 = std::sqrt(s2);
            break;
        }
        case Family::gamma:
            fit.p1 = m1 * m1 / var;
            fit.p2 = var / m1;
            break;
        case Family::inverse_gaussian:
            fit.p1 = m1;
            fit.p2 = m1 * m1 * m1 / var;
            break;
        case Family::inverse_gamma: {
            const double al = (2.0 * ratio - 1.0) / (ratio - 1.0);
            if (!(al > 2.0))
                throw domain_error("inverse-gamma fit infeasible: implied alpha <= 2");
            fit.p1 = al;
            fit.p2 = m1 * (al - 1.0);
            break;
        }
        case Family::weibull: {
            auto f = [&](double k) {
                return bm::tgamma(1.0 + 2.0 / k) /
                           (bm::tgamma(1.0 + 1.0 / k) * bm::tgamma(1.0 + 1.0 / k)) -
                       ratio;
            };
            const double k = brent(f, 0.05, 500.0, 1e-13);
            fit.p1 = m1 / bm::tgamma(1.0 + 1.0 / k);
            fit.p2 = k;
            break;
        }
        case Family::inverse_weibull: {
            auto f = [&](double k) {
                return bm::tgamma(1.0 - 2.0 / k) /
                           (bm::tgamma(1.0 - 1.0 / k) * bm::tgamma(1.0 - 1.0 / k)) -
                       ratio;
            };
            double k;
            try {
                k = brent(f, 2.0 + 1e-9, 1e6, 1e-13);
            } catch (const numeric_error&) {
                throw domain_error("inverse-weibull fit infeasible: needs shape k > 2");
            }
            fit.p1 = m1 / bm::tgamma(1.0 - 1.0 / k);
            fit.p2 = k;
            break;
        }
        case Family::log_logistic: {
            // With theta = pi/beta the moment ratio reduces to tan(theta)/theta.
            const double pi = 3.14159265358979323846;
            auto f = [&](double th) { return std::tan(th) / th - ratio; };
            double th;
            try {
                th = brent(f, 1e-9, pi / 2.0 - 1e-9, 1e-15);
            } catch (const numeric_error&) {
                throw domain_error("log-logistic fit infeasible: needs beta > 2");
            }
            fit.p1 = m1 * std::sin(th) / th;
            fit.p2 = pi / th;
            break;
        }
        default:
            throw usage_error("fit_alternative_model: unsupported family");
    }

    const MomentPair got = model_moments(fit.reference());
    fit.achieved_m1 = got.m1;
    fit.achieved_m2 = got.m2;
    fit.residual = std::max(std::abs(got.m1 - m1) / m1, std::abs(got.m2 - m2) / m2);
    if (!(fit.residual < 1e-8))
        throw numeric_error("moment fit did not converge to the targets");
    return fit;
}

} // namespace wrb
