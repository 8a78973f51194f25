#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "wrb/errors.hpp"
#include "wrb/grid_stats.hpp"
#include "wrb/quantile.hpp"

namespace wrb {

enum class MeasureKind {
    var,       // left quantile at alpha
    var_plus,  // right quantile at alpha
    tvar,
    rvar,
    dual_power,
    wang,
    custom,
};

struct RiskMeasureSpec {
    MeasureKind kind;
    double alpha = 0.0; // level for var/var_plus/tvar, lower level for rvar
    double beta = 0.0;  // upper level for rvar, exponent for dual_power
    double q0 = 0.0;    // wang parameter
    std::string path;   // custom weight CSV

    static RiskMeasureSpec var(double alpha) {
        check_level(alpha, "var");
        return {MeasureKind::var, alpha};
    }
    static RiskMeasureSpec var_plus(double alpha) {
        check_level(alpha, "var+");
        return {MeasureKind::var_plus, alpha};
    }
    static RiskMeasureSpec tvar(double alpha) {
        check_level(alpha, "tvar");
        return {MeasureKind::tvar, alpha};
    }
    static RiskMeasureSpec rvar(double alpha, double beta) {
        if (!(0.0 < alpha && alpha < beta && beta <= 1.0))
            throw domain_error("rvar: need 0 < alpha < beta <= 1");
        return {MeasureKind::rvar, alpha, beta};
    }
    static RiskMeasureSpec dual_power(double beta) {
        if (!(beta > 0.0))
            throw domain_error("dual-power: beta > 0 required");
        return {MeasureKind::dual_power, 0.0, beta};
    }
    static RiskMeasureSpec wang(double q0) {
        if (!(0.0 < q0 && q0 < 1.0))
            throw domain_error("wang: q0 in (0,1) required");
        RiskMeasureSpec s{MeasureKind::wang};
        s.q0 = q0;
        return s;
    }
    static RiskMeasureSpec custom(std::string csv_path) {
        RiskMeasureSpec s{MeasureKind::custom};
        s.path = std::move(csv_path);
        return s;
    }

    /// Parse a CLI token such as "tvar:0.95", "rvar:0.9:0.95", "var:0.99",
    /// "dualpower:2.5", "wang:0.9", "custom:/path/to/weights.csv".
    static RiskMeasureSpec parse(const std::string& token);

private:
    static void check_level(double a, const char* name) {
        if (!(0.0 < a && a < 1.0))
            throw domain_error(std::string(name) + ": level in (0,1) required");
    }
};

inline RiskMeasureSpec RiskMeasureSpec::parse(const std::string& token) {
    const auto pos = token.find(':');
    const std::string name = token.substr(0, pos);
    std::vector<std::string> args;
    if (pos != std::string::npos) {
        std::istringstream rest(token.substr(pos + 1));
        std::string piece;
        while (std::getline(rest, piece, ':')) args.push_back(piece);
    }
    auto num = [&](std::size_t i) {
        try {
            return std::stod(args.at(i));
        } catch (const std::exception&) {
            throw usage_error("bad measure token: " + token);
        }
    };
    try {
        if (name == "var" && args.size() == 1) return var(num(0));
        if (name == "var+" && args.size() == 1) return var_plus(num(0));
        if (name == "tvar" && args.size() == 1) return tvar(num(0));
        if (name == "rvar" && args.size() == 2) return rvar(num(0), num(1));
        if (name == "dualpower" && args.size() == 1) return dual_power(num(0));
        if (name == "wang" && args.size() == 1) return wang(num(0));
        if (name == "custom" && args.size() == 1) return custom(args[0]);
    } catch (const domain_error&) {
        throw;
    }
    throw usage_error("unrecognized measure: " + token);
}

// ---------------------------------------------------------------------------
// Distortion weights on the grid

/// gamma(u) = left derivative of the distortion g at 1-u, sampled as exact
/// cell averages w_i = n (g(1 - i/n) - g(1 - (i+1)/n)) so the weights always
/// average to exactly g(1) - g(0) = 1 regardless of grid resolution.
struct WeightFunction {
    std::vector<double> values;
    bool concave = false; // g concave, i.e. weights non-decreasing

    double mean_square() const {
        return stats::inner(values, values);
    }
};

namespace detail {

template <typename G>
WeightFunction cell_average_weights(G&& g, std::size_t n, bool concave) {
    WeightFunction w;
    w.values.resize(n);
    const double dn = static_cast<double>(n);
    double upper = 1.0; // g(1 - i/n) at i = 0
    for (std::size_t i = 0; i < n; ++i) {
        const double lower = (i + 1 == n) ? 0.0 : g(1.0 - static_cast<double>(i + 1) / dn);
        w.values[i] = dn * (upper - lower);
        upper = lower;
    }
    w.concave = concave;
    return w;
}

} // namespace detail

inline WeightFunction load_custom_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw usage_error("cannot open weight CSV: " + path);
    WeightFunction w;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        double v;
        if (ss >> v) {
            w.values.push_back(v);
        } else if (!first) {
            throw usage_error("bad row in weight CSV: " + line);
        }
        first = false;
    }
    if (w.values.size() < 2)
        throw domain_error("custom weights: need at least two grid points");
    bool nondecreasing = true;
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        if (!std::isfinite(w.values[i]) || w.values[i] < 0.0)
            throw domain_error("custom weights: entries must be finite and non-negative");
        if (i > 0 && w.values[i] < w.values[i - 1]) nondecreasing = false;
    }
    if (std::abs(stats::mean(w.values) - 1.0) > 1e-6)
        throw domain_error("custom weights: grid mean must equal 1");
    w.concave = nondecreasing;
    return w;
}

/// Build the grid weight for a measure spec. VaR and VaR+ have no square
/// integrable weight and are handled by dedicated quantile-bound routines.
inline WeightFunction build_weight(const RiskMeasureSpec& spec, std::size_t n) {
    if (n < 2)
        throw usage_error("build_weight: n >= 2 required");
    WeightFunction w;
    switch (spec.kind) {
        case MeasureKind::var:
        case MeasureKind::var_plus:
            throw domain_error("VaR admits no weight representation; use the quantile bound routines");
        case MeasureKind::tvar: {
            const double a = spec.alpha;
            w = detail::cell_average_weights(
                [a](double x) { return std::min(x / (1.0 - a), 1.0); }, n, true);
            break;
        }
        case MeasureKind::rvar: {
            const double a = spec.alpha, b = spec.beta;
            w = detail::cell_average_weights(
                [a, b](double x) {
                    return std::clamp((x - (1.0 - b)) / (b - a), 0.0, 1.0);
                },
                n, b == 1.0);
            break;
        }
        case MeasureKind::dual_power: {
            const double b = spec.beta;
            w = detail::cell_average_weights(
                [b](double x) { return 1.0 - std::pow(1.0 - x, b); }, n, b >= 1.0);
            break;
        }
        case MeasureKind::wang: {
            const boost::math::normal_distribution<> phi(0.0, 1.0);
            const double q = boost::math::quantile(phi, spec.q0);
            w = detail::cell_average_weights(
                [&phi, q](double x) {
                    return boost::math::cdf(phi, boost::math::quantile(phi, x) + q);
                },
                n, q >= 0.0);
            break;
        }
        case MeasureKind::custom: {
            w = load_custom_weights(spec.path);
            if (w.values.size() != n)
                throw usage_error("custom weights: grid size mismatch with --grid-n");
            break;
        }
    }
    if (w.mean_square() > 1e12)
        throw numeric_error("weight is not square integrable at this resolution");
    return w;
}

/// H_g(G) = integral of gamma(u) G^{-1}(u) du as a grid average.
inline double choquet_value(const WeightFunction& w, const DiscreteQuantile& q) {
    return stats::inner(w.values, q.values());
}

struct WeightStatistics {
    double variance = 0.0;   // var(gamma(U))
    double covariance = 0.0; // cov(F^{-1}(U), gamma(U))
    double c0 = 0.0;         // corr(F^{-1}(U), gamma(U))
};

inline WeightStatistics weight_statistics(const WeightFunction& w, const DiscreteQuantile& f) {
    WeightStatistics s;
    s.variance = stats::variance(w.values);
    s.covariance = stats::covariance(f.values(), w.values);
    const double sw = std::sqrt(s.variance);
    s.c0 = (sw == 0.0 || f.stddev() == 0.0) ? 0.0 : s.covariance / (sw * f.stddev());
    return s;
}

} // namespace wrb
