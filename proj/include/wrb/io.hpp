#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "wrb/bounds.hpp"
#include "wrb/case_study.hpp"
#include "wrb/errors.hpp"
#include "wrb/quantile.hpp"

namespace wrb {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string piece;
    while (std::getline(ss, piece, sep)) out.push_back(piece);
    return out;
}

inline double parse_number(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size())
            throw usage_error("bad " + what + ": " + s);
        return v;
    } catch (const usage_error&) {
        throw;
    } catch (const std::exception&) {
        throw usage_error("bad " + what + ": " + s);
    }
}

inline double parse_epsilon(const std::string& s) {
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    return parse_number(s, "epsilon");
}

/// "normal:0:1", "pareto-clayton:10:1:100", "lognormal:2.4:0.36", ...,
/// or "file:/path/to/quantiles.csv".
inline DiscreteQuantile parse_reference(const std::string& token, std::size_t grid_n) {
    const auto parts = split(token, ':');
    if (parts.empty())
        throw usage_error("empty reference token");
    const std::string& name = parts.front();
    if (name == "file") {
        if (parts.size() != 2)
            throw usage_error("file reference: expected file:<path>");
        return DiscreteQuantile::from_csv(parts[1]);
    }
    auto num = [&](std::size_t i) { return parse_number(parts.at(i), "reference parameter"); };
    auto need = [&](std::size_t k) {
        if (parts.size() != k + 1)
            throw usage_error("reference " + name + ": wrong number of parameters");
    };
    ParametricReference ref = ParametricReference::normal(0.0, 1.0);
    if (name == "normal") {
        need(2);
        ref = ParametricReference::normal(num(1), num(2));
    } else if (name == "pareto-clayton") {
        need(3);
        ref = ParametricReference::pareto_clayton(num(1), num(2), num(3));
    } else if (name == "lognormal") {
        need(2);
        ref = ParametricReference::lognormal(num(1), num(2));
    } else if (name == "gamma") {
        need(2);
        ref = ParametricReference::gamma(num(1), num(2));
    } else if (name == "weibull") {
        need(2);
        ref = ParametricReference::weibull(num(1), num(2));
    } else if (name == "inverse-gaussian") {
        need(2);
        ref = ParametricReference::inverse_gaussian(num(1), num(2));
    } else if (name == "inverse-gamma") {
        need(2);
        ref = ParametricReference::inverse_gamma(num(1), num(2));
    } else if (name == "inverse-weibull") {
        need(2);
        ref = ParametricReference::inverse_weibull(num(1), num(2));
    } else if (name == "log-logistic") {
        need(2);
        ref = ParametricReference::log_logistic(num(1), num(2));
    } else {
        throw usage_error("unrecognized reference: " + token);
    }
    return discretize(ref, grid_n);
}

inline std::string fmt_fixed(double x, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
    return buf;
}

inline std::string fmt_full(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string frontier_csv(const std::vector<FrontierRow>& rows) {
    std::ostringstream out;
    out << "epsilon,best,worst,normalized_spread,error\n";
    for (const FrontierRow& r : rows) {
        out << fmt_full(r.epsilon) << ',';
        out << (r.best ? fmt_full(*r.best) : "") << ',';
        out << (r.worst ? fmt_full(*r.worst) : "") << ',';
        out << (r.normalized_spread ? fmt_full(*r.normalized_spread) : "") << ',';
        out << r.error << '\n';
    }
    return out.str();
}

inline const char* family_name(Family f) {
    switch (f) {
        case Family::normal: return "normal";
        case Family::pareto_clayton: return "pareto-clayton";
        case Family::lognormal: return "lognormal";
        case Family::gamma: return "gamma";
        case Family::weibull: return "weibull";
        case Family::inverse_gaussian: return "inverse-gaussian";
        case Family::inverse_gamma: return "inverse-gamma";
        case Family::inverse_weibull: return "inverse-weibull";
        case Family::log_logistic: return "log-logistic";
    }
    return "unknown";
}

/// Fitted-model table: parameters at full precision, distances at the
/// three-decimal display convention used by the bound tables.
inline std::string fits_csv(const CaseStudyReport& rep) {
    std::ostringstream out;
    out << "family,p1,p2,mean,second_moment,residual,wasserstein\n";
    for (const ModelFit& fit : rep.fits) {
        out << family_name(fit.family) << ',' << fmt_full(fit.p1) << ',' << fmt_full(fit.p2)
            << ',' << fmt_full(fit.achieved_m1) << ',' << fmt_full(fit.achieved_m2) << ','
            << fmt_full(fit.residual) << ',' << fmt_fixed(fit.dw, 3) << '\n';
    }
    return out.str();
}

inline std::string var_rows_csv(const CaseStudyReport& rep) {
    std::ostringstream out;
    out << "epsilon,alpha,best,worst\n";
    for (const VarBoundRow& r : rep.rows) {
        out << (std::isinf(r.epsilon) ? "inf" : fmt_fixed(r.epsilon, 3)) << ','
            << fmt_full(r.alpha) << ',' << fmt_fixed(r.best, 1) << ',' << fmt_fixed(r.worst, 1)
            << '\n';
    }
    return out.str();
}

} // namespace wrb
