#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "wrb/bounds.hpp"
#include "wrb/extensions.hpp"
#include "wrb/quantile.hpp"

using namespace wrb;

TEST_CASE("moment region validation") {
    REQUIRE_THROWS_AS(MomentRegion::marginal(0.5, 0.2, 0.5, 1.0), domain_error);
    REQUIRE_THROWS_AS(MomentRegion::marginal(0.0, 0.2, 0.0, 1.0), domain_error);
    REQUIRE_THROWS_AS(MomentRegion::circlic(-1.0), domain_error);
    REQUIRE_THROWS_AS(MomentRegion::elliptical(1.0, 0.0, 1.0), domain_error);
    // a circle leaving the sigma > 0 half-plane is rejected when sampled
    const DiscreteQuantile f = discretize(ParametricReference::normal(0.0, 1.0), 200);
    const WeightFunction w = build_weight(RiskMeasureSpec::tvar(0.9), 200);
    REQUIRE_THROWS_AS(worst_with_moment_region(w, f, MomentRegion::circlic(2.0), 0.3),
                      domain_error);
}

TEST_CASE("marginal moment box resolves to the published corner rule") {
    const std::size_t n = 2000;
    const DiscreteQuantile f = discretize(ParametricReference::normal(0.0, 1.0), n);
    const WeightFunction w = build_weight(RiskMeasureSpec::tvar(0.9), n);
    const MomentRegion region = MomentRegion::marginal(-0.2, 0.3, 0.8, 1.2);
    const double eps = 0.3;

    const MomentRegionResult res = worst_with_moment_region(w, f, region, eps);
    // the corner rule: largest sigma, and the mu whose sign matches mu_F + 1/lambda
    REQUIRE(res.argmax.sigma == Catch::Approx(1.2).margin(1e-10));
    REQUIRE(res.argmax.mu == Catch::Approx(0.3).margin(1e-10));
    // the report is exactly the single-ball bound at the resolved corner
    const BoundReport direct = general_worst(w, UncertaintyBall(f, res.argmax, eps));
    REQUIRE(res.report.value == Catch::Approx(direct.value).margin(1e-12));
    REQUIRE(res.report.which_case == BoundCase::one);
    // widening the box can only push the bound up
    const MomentRegionResult wider = worst_with_moment_region(
        w, f, MomentRegion::marginal(-0.2, 0.3, 0.8, 1.3), eps);
    REQUIRE(wider.report.value >= res.report.value - 1e-10);
}

TEST_CASE("circular moment region places the argmax on the boundary") {
    const std::size_t n = 2000;
    const DiscreteQuantile f = discretize(ParametricReference::normal(0.0, 1.0), n);
    const WeightFunction w = build_weight(RiskMeasureSpec::tvar(0.9), n);
    const MomentRegion region = MomentRegion::circlic(0.1);
    const double eps = 0.3;

    const MomentRegionResult res = worst_with_moment_region(w, f, region, eps);
    const double radius = std::hypot(res.argmax.mu - f.mean(), res.argmax.sigma - f.stddev());
    REQUIRE(radius == Catch::Approx(0.1).margin(1e-8));
    REQUIRE(res.argmax.sigma > f.stddev()); // more dispersion is always worse

    // the resolved point is a genuine fixed point: recomputing the boundary
    // formula from the final lambda reproduces the argmax
    const double lam = res.report.lambda;
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = w.values[i] + lam * f[i];
    const std::vector<double> k = project_nondecreasing(z);
    const double cv = stats::stddev(z) * stats::correlation(z, k) / (1.0 + lam * f.mean());
    const double den = std::sqrt(1.0 + cv * cv);
    REQUIRE(res.argmax.mu == Catch::Approx(f.mean() + 0.1 / den).margin(1e-7));
    REQUIRE(res.argmax.sigma == Catch::Approx(f.stddev() + 0.1 * std::abs(cv) / den).margin(1e-7));

    // a vanishing region collapses onto the anchor moments
    const MomentRegionResult tiny =
        worst_with_moment_region(w, f, MomentRegion::circlic(1e-5), eps);
    REQUIRE(tiny.argmax.mu == Catch::Approx(f.mean()).margin(1e-4));
    REQUIRE(tiny.argmax.sigma == Catch::Approx(f.stddev()).margin(1e-4));

    // circle and ellipse with c = d = 1 coincide
    const MomentRegionResult ell =
        worst_with_moment_region(w, f, MomentRegion::elliptical(1.0, 1.0, 0.1), eps);
    REQUIRE(ell.report.value == Catch::Approx(res.report.value).margin(1e-8));
    REQUIRE(ell.argmax.mu == Catch::Approx(res.argmax.mu).margin(1e-7));
}

TEST_CASE("elliptical moment region satisfies its boundary equation") {
    const std::size_t n = 2000;
    const DiscreteQuantile f = discretize(ParametricReference::lognormal(0.0, 0.4), n);
    const WeightFunction w = build_weight(RiskMeasureSpec::tvar(0.85), n);
    const MomentRegion region = MomentRegion::elliptical(1.0, 0.5, 0.1);
    const MomentRegionResult res = worst_with_moment_region(w, f, region, 1.0);
    const double a = (res.argmax.mu - f.mean()) / (0.1 * 1.0);
    const double b = (res.argmax.sigma - f.stddev()) / (0.1 * 0.5);
    REQUIRE(a * a + b * b == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("mixed tolerance regimes over a region are refused") {
    const std::size_t n = 1000;
    const DiscreteQuantile f = discretize(ParametricReference::normal(0.0, 1.0), n);
    const WeightFunction w = build_weight(RiskMeasureSpec::tvar(0.9), n);
    const MomentRegion region = MomentRegion::circlic(0.1);
    // eps inside the spread of epsilon-star across the region
    REQUIRE_THROWS_AS(worst_with_moment_region(w, f, region, 0.85), domain_error);
    // large eps: every point saturates, the case-2 argmax applies
    const MomentRegionResult res = worst_with_moment_region(w, f, region, 5.0);
    REQUIRE(res.report.which_case == BoundCase::two);
    const double radius = std::hypot(res.argmax.mu - f.mean(), res.argmax.sigma - f.stddev());
    REQUIRE(radius == Catch::Approx(0.1).margin(1e-10));
}

TEST_CASE("plain wasserstein ball: closed-form moments beat a grid search") {
    const std::size_t n = 2000;
    const DiscreteQuantile f = discretize(ParametricReference::lognormal(0.0, 0.5), n);
    const WeightFunction w = build_weight(RiskMeasureSpec::tvar(0.9), n);

    for (double eps : {0.1, 1.0, 10.0}) {
        const WassersteinOnlyResult res = wasserstein_only_worst(w, f, eps);
        INFO("eps=" << eps);
        REQUIRE(res.optimal.mu > f.mean());
        REQUIRE(res.optimal.sigma > f.stddev());
        REQUIRE(res.achieved_dw <= std::sqrt(eps) + 1e-6);

        double oracle = -std::numeric_limits<double>::infinity();
        const double rad = std::sqrt(eps);
        for (int i = 0; i <= 40; ++i) {
            for (int j = 0; j <= 40; ++j) {
                const double sig = f.stddev() - rad + 2.0 * rad * j / 40.0;
                if (!(sig > 1e-6)) continue;
                const MomentSpec t(f.mean() - rad + 2.0 * rad * i / 40.0, sig);
                if (feasibility_floor(f, t) >= eps) continue;
                oracle = std::max(oracle, concave_worst(w, UncertaintyBall(f, t, eps)).value);
            }
        }
        REQUIRE(res.value >= oracle - 1e-6);
        REQUIRE(res.value == Catch::Approx(oracle).margin(2e-2 * (1.0 + std::abs(oracle))));
    }

    // zero radius returns the reference value itself
    const WassersteinOnlyResult at0 = wasserstein_only_worst(w, f, 0.0);
    REQUIRE(at0.value == Catch::Approx(choquet_value(w, f)).margin(1e-12));
    // non-concave distortions are out of scope for the closed form
    const WeightFunction bad = build_weight(RiskMeasureSpec::dual_power(0.5), n);
    REQUIRE_THROWS_AS(wasserstein_only_worst(bad, f, 1.0), domain_error);
}

namespace {

PortfolioProblem make_problem(std::size_t grid_n = 2000) {
    return PortfolioProblem{{0.05, 0.08, 0.11},
                            {{0.040, 0.006, 0.004},
                             {0.006, 0.090, 0.010},
                             {0.004, 0.010, 0.160}},
                            {0.0, 0.0, 0.0},
                            {1.0, 1.0, 1.0},
                            discretize(ParametricReference::normal(0.0, 1.0), grid_n),
                            build_weight(RiskMeasureSpec::tvar(0.9), grid_n)};
}

} // namespace

TEST_CASE("portfolio problem validation") {
    PortfolioProblem p = make_problem(200);
    REQUIRE_NOTHROW(p.validate());
    p.covariance[0][1] = 1.0; // asymmetric
    REQUIRE_THROWS_AS(p.validate(), domain_error);
    p = make_problem(200);
    p.covariance = {{1.0, 0.0, 0.0}, {0.0, -1.0, 0.0}, {0.0, 0.0, 1.0}};
    REQUIRE_THROWS_AS(p.validate(), domain_error);
    p = make_problem(200);
    p.upper = {0.2, 0.2, 0.2}; // cannot sum to one
    REQUIRE_THROWS_AS(p.validate(), domain_error);
}

TEST_CASE("risk-aversion coefficient is continuous across its branches") {
    const PortfolioProblem p = make_problem();
    const WeightStatistics ws = weight_statistics(p.weight, p.reference_shape);
    const double c0 = ws.c0, V = ws.variance;

    // saturation threshold A = 1 - c0
    const double at = 1.0 - c0;
    REQUIRE(portfolio_kappa(p, at) == Catch::Approx(std::sqrt(V)).margin(1e-10));
    REQUIRE(portfolio_kappa(p, at - 1e-9) ==
            Catch::Approx(portfolio_kappa(p, at + 1e-9)).margin(1e-7));

    // A -> 0 limit recovers the no-ambiguity coefficient
    REQUIRE(portfolio_kappa(p, 0.0) == Catch::Approx(std::sqrt(V) * c0).margin(1e-12));
    REQUIRE(portfolio_kappa(p, 1e-14) ==
            Catch::Approx(portfolio_kappa(p, 0.0)).margin(1e-6));

    // monotone in the ambiguity level
    double prev = portfolio_kappa(p, 0.0);
    for (double a : {0.05, 0.1, 0.3, 0.6, 0.9, 1.0}) {
        const double k = portfolio_kappa(p, a);
        REQUIRE(k >= prev - 1e-12);
        prev = k;
    }
    REQUIRE_THROWS_AS(portfolio_kappa(p, -0.1), usage_error);
    REQUIRE_THROWS_AS(portfolio_kappa(p, 1.5), usage_error);
}

TEST_CASE("portfolio objective matches the single-ball worst case") {
    const PortfolioProblem p = make_problem(4000);
    const std::vector<double> x = {0.3, 0.5, 0.2};
    const double mu_x = p.portfolio_mean(x);
    const double sigma_x = p.portfolio_sigma(x);
    const MomentSpec t(-mu_x, sigma_x);
    const DiscreteQuantile loss_ref = scaled_reference(p.reference_shape, t);

    for (double eps : {0.001, 0.01}) {
        const BoundReport rep = concave_worst(p.weight, UncertaintyBall(loss_ref, t, eps));
        REQUIRE(portfolio_objective_eps(p, x, eps) == Catch::Approx(rep.value).margin(1e-6));
    }

    // the A parameterisation is the same objective at eps = 2 sigma^2 A
    for (double A : {0.0, 0.1, 0.5, 0.9}) {
        REQUIRE(portfolio_objective(p, x, A) ==
                Catch::Approx(portfolio_objective_eps(p, x, 2.0 * sigma_x * sigma_x * A))
                    .margin(1e-10));
    }

    // saturation: beyond the threshold the tolerance no longer matters
    REQUIRE(portfolio_objective_eps(p, x, 100.0) ==
            Catch::Approx(portfolio_objective_eps(p, x, 50.0)).margin(1e-12));

    REQUIRE_THROWS_AS(portfolio_objective_eps(p, {0.5, 0.5, 0.5}, 0.01), domain_error);
}

TEST_CASE("two-asset optimizer matches a brute-force line search") {
    const PortfolioProblem p{{0.05, 0.10},
                             {{0.04, 0.01}, {0.01, 0.09}},
                             {0.0, 0.0},
                             {1.0, 1.0},
                             discretize(ParametricReference::normal(0.0, 1.0), 1000),
                             build_weight(RiskMeasureSpec::tvar(0.9), 1000)};

    const double A = 0.2;
    const PortfolioSolution sol = portfolio_optimize(p, A);
    REQUIRE(sol.kkt_residual < 1e-6);
    REQUIRE(sol.x[0] + sol.x[1] == Catch::Approx(1.0).margin(1e-10));

    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 100000; ++i) {
        const double x1 = i / 100000.0;
        best = std::min(best, portfolio_objective(p, {x1, 1.0 - x1}, A));
    }
    REQUIRE(sol.objective == Catch::Approx(best).margin(1e-6));

    // deterministic across repeated runs with the same seed
    const PortfolioSolution again = portfolio_optimize(p, A);
    REQUIRE(again.x[0] == sol.x[0]);
    REQUIRE(again.objective == sol.objective);
}

TEST_CASE("three-asset optimizer stays feasible and stationary") {
    const PortfolioProblem p = make_problem(1000);
    for (double A : {0.0, 0.3, 1.0}) {
        const PortfolioSolution sol = portfolio_optimize(p, A);
        INFO("A=" << A);
        REQUIRE(sol.kkt_residual < 1e-6);
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            REQUIRE(sol.x[i] >= -1e-12);
            REQUIRE(sol.x[i] <= 1.0 + 1e-12);
            s += sol.x[i];
        }
        REQUIRE(s == Catch::Approx(1.0).margin(1e-10));
        // more ambiguity can only raise the optimal risk figure
        REQUIRE(portfolio_objective(p, sol.x, A) == Catch::Approx(sol.objective).margin(1e-12));
    }
}

TEST_CASE("ambiguity estimate vanishes for exactly location-scale data") {
    const std::size_t m = 500;
    const DiscreteQuantile shape = discretize(ParametricReference::normal(0.0, 1.0), m);
    std::vector<std::vector<double>> returns(m, std::vector<double>(1));
    for (std::size_t t = 0; t < m; ++t)
        returns[t][0] = -(0.2 + 0.5 * shape[t]); // losses are a rescaled copy of the shape
    const double a_hat = estimate_ambiguity(returns, {{1.0}}, shape);
    REQUIRE(a_hat == Catch::Approx(0.0).margin(1e-8));

    REQUIRE_THROWS_AS(estimate_ambiguity({}, {{1.0}}, shape), usage_error);
    REQUIRE_THROWS_AS(estimate_ambiguity(returns, {{1.0, 0.0}}, shape), usage_error);
}
