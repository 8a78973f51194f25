#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wrb/bounds.hpp"
#include "wrb/case_study.hpp"
#include "wrb/distortion.hpp"
#include "wrb/errors.hpp"
#include "wrb/extensions.hpp"
#include "wrb/io.hpp"

namespace {

using nlohmann::json;

const char* case_name(wrb::BoundCase c) {
    switch (c) {
        case wrb::BoundCase::one: return "1";
        case wrb::BoundCase::two: return "2";
        case wrb::BoundCase::singleton: return "singleton";
    }
    return "?";
}

json report_to_json(const wrb::BoundReport& rep) {
    json j;
    j["value"] = rep.value;
    j["attained"] = rep.attained;
    j["lambda"] = rep.lambda;
    j["case"] = case_name(rep.which_case);
    if (!std::isnan(rep.achieved_dw)) j["achieved_wasserstein"] = rep.achieved_dw;
    if (!std::isnan(rep.epsilon_star)) j["epsilon_star"] = rep.epsilon_star;
    if (rep.achieved_moments) {
        j["achieved_mu"] = rep.achieved_moments->mu;
        j["achieved_sigma"] = rep.achieved_moments->sigma;
    }
    return j;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out)
        throw wrb::usage_error("cannot open output file: " + out_path);
    out << text;
}

void write_extremal(const wrb::BoundReport& rep, const std::string& path) {
    if (path.empty() || !rep.extremal) return;
    std::ostringstream csv;
    csv << "u,quantile\n";
    for (std::size_t i = 0; i < rep.extremal->size(); ++i)
        csv << wrb::fmt_full(rep.extremal->grid_point(i)) << ','
            << wrb::fmt_full((*rep.extremal)[i]) << '\n';
    emit(csv.str(), path);
}

struct CommonFlags {
    std::string measure;
    std::string reference;
    double mu = 0.0;
    double sigma = 1.0;
    std::string eps = "inf";
    std::string side = "worst";
    std::size_t grid_n = 10000;
    std::string out;
    std::string format = "json";
    std::string extremal_out;
};

void add_common(CLI::App* cmd, CommonFlags& fl, bool with_eps = true) {
    cmd->add_option("--measure", fl.measure,
                    "tvar:a | rvar:a:b | var:a | var+:a | dualpower:b | wang:q0 | custom:path")
        ->required();
    cmd->add_option("--reference", fl.reference,
                    "normal:mu:sigma | pareto-clayton:a:b:d | <family:params> | file:path")
        ->required();
    cmd->add_option("--mu", fl.mu, "target mean");
    cmd->add_option("--sigma", fl.sigma, "target standard deviation");
    if (with_eps)
        cmd->add_option("--eps", fl.eps, "squared Wasserstein radius, or 'inf'");
    cmd->add_option("--grid-n", fl.grid_n, "quantile grid resolution");
    cmd->add_option("--out", fl.out, "output file (default stdout)");
    cmd->add_option("--format", fl.format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
}

int run_bound(const CommonFlags& fl) {
    const wrb::RiskMeasureSpec spec = wrb::RiskMeasureSpec::parse(fl.measure);
    const wrb::DiscreteQuantile f = wrb::parse_reference(fl.reference, fl.grid_n);
    const wrb::UncertaintyBall ball(f, wrb::MomentSpec(fl.mu, fl.sigma),
                                    wrb::parse_epsilon(fl.eps));
    json j;
    j["provenance"] = {{"measure", fl.measure}, {"reference", fl.reference},
                       {"grid_n", fl.grid_n},   {"mu", fl.mu},
                       {"sigma", fl.sigma},     {"eps", fl.eps}};
    if (fl.side == "worst" || fl.side == "both") {
        const wrb::BoundReport rep = wrb::solve_bound(spec, ball, wrb::Side::worst);
        j["worst"] = report_to_json(rep);
        if (fl.side == "worst") {
            j["value"] = rep.value;
            write_extremal(rep, fl.extremal_out);
        }
    }
    if (fl.side == "best" || fl.side == "both") {
        const wrb::BoundReport rep = wrb::solve_bound(spec, ball, wrb::Side::best);
        j["best"] = report_to_json(rep);
        if (fl.side == "best") {
            j["value"] = rep.value;
            write_extremal(rep, fl.extremal_out);
        }
    }
    emit(j.dump(2) + "\n", fl.out);
    return 0;
}

int run_frontier(const CommonFlags& fl, const std::string& eps_grid) {
    const auto parts = wrb::split(eps_grid, ':');
    if (parts.size() != 3)
        throw wrb::usage_error("--eps-grid expects start:stop:steps");
    const double start = wrb::parse_number(parts[0], "eps-grid start");
    const double stop = wrb::parse_number(parts[1], "eps-grid stop");
    const auto steps = static_cast<std::size_t>(wrb::parse_number(parts[2], "eps-grid steps"));
    if (steps < 2 || !(stop > start) || start < 0.0)
        throw wrb::usage_error("--eps-grid: need start >= 0, stop > start, steps >= 2");
    std::vector<double> grid(steps);
    for (std::size_t i = 0; i < steps; ++i)
        grid[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(steps - 1);

    const wrb::RiskMeasureSpec spec = wrb::RiskMeasureSpec::parse(fl.measure);
    const wrb::DiscreteQuantile f = wrb::parse_reference(fl.reference, fl.grid_n);
    const auto rows = wrb::frontier(spec, f, wrb::MomentSpec(fl.mu, fl.sigma), grid);
    if (fl.format == "json") {
        json arr = json::array();
        for (const wrb::FrontierRow& r : rows) {
            json row;
            row["epsilon"] = r.epsilon;
            if (r.best) row["best"] = *r.best;
            if (r.worst) row["worst"] = *r.worst;
            if (r.normalized_spread) row["normalized_spread"] = *r.normalized_spread;
            if (!r.error.empty()) row["error"] = r.error;
            arr.push_back(std::move(row));
        }
        emit(arr.dump(2) + "\n", fl.out);
    } else {
        emit(wrb::frontier_csv(rows), fl.out);
    }
    return 0;
}

int run_insurance_case(double a, double b, double d, std::size_t grid_n,
                       const std::vector<double>& alphas, const std::vector<double>& eps_list,
                       const std::string& out_prefix) {
    const wrb::CaseStudyReport rep = wrb::insurance_case_study(a, b, d, grid_n, alphas, eps_list);
    const std::string fits = wrb::fits_csv(rep);
    const std::string bounds = wrb::var_rows_csv(rep);
    if (out_prefix.empty()) {
        std::cout << fits << "\n" << bounds;
    } else {
        emit(fits, out_prefix + "-fits.csv");
        emit(bounds, out_prefix + "-var-bounds.csv");
    }
    std::ostringstream meta;
    meta << "# n=" << grid_n << " mean=" << wrb::fmt_full(rep.reference_moments.m1)
         << " sigma=" << wrb::fmt_full(rep.sigma)
         << " eps_heavy=" << wrb::fmt_fixed(rep.eps_heavy, 3)
         << " eps_all=" << wrb::fmt_fixed(rep.eps_all, 3) << "\n";
    std::cerr << meta.str();
    return 0;
}

int run_portfolio(const CommonFlags& fl, const std::string& config_path, double A_flag,
                  unsigned seed) {
    std::ifstream in(config_path);
    if (!in)
        throw wrb::usage_error("cannot open portfolio config: " + config_path);
    json cfg;
    try {
        in >> cfg;
    } catch (const std::exception& e) {
        throw wrb::usage_error(std::string("bad portfolio config JSON: ") + e.what());
    }

    wrb::PortfolioProblem prob{
        cfg.at("means").get<std::vector<double>>(),
        cfg.at("covariance").get<std::vector<std::vector<double>>>(),
        cfg.at("lower").get<std::vector<double>>(),
        cfg.at("upper").get<std::vector<double>>(),
        wrb::parse_reference(fl.reference, fl.grid_n),
        wrb::build_weight(wrb::RiskMeasureSpec::parse(fl.measure), fl.grid_n)};
    prob.validate();

    double A = A_flag;
    if (A < 0.0 && cfg.contains("A")) A = cfg.at("A").get<double>();
    if (A < 0.0 && cfg.contains("returns_csv")) {
        std::ifstream rin(cfg.at("returns_csv").get<std::string>());
        if (!rin)
            throw wrb::usage_error("cannot open returns CSV");
        std::vector<std::vector<double>> returns;
        std::string line;
        bool first = true;
        while (std::getline(rin, line)) {
            if (line.empty()) continue;
            std::vector<double> row;
            bool numeric = true;
            for (const std::string& cell : wrb::split(line, ',')) {
                try {
                    row.push_back(std::stod(cell));
                } catch (const std::exception&) {
                    numeric = false;
                    break;
                }
            }
            if (!numeric) {
                if (first) { first = false; continue; } // header row tolerated
                throw wrb::usage_error("bad row in returns CSV: " + line);
            }
            first = false;
            returns.push_back(std::move(row));
        }
        std::vector<std::vector<double>> seeds;
        if (cfg.contains("seed_portfolios"))
            seeds = cfg.at("seed_portfolios").get<std::vector<std::vector<double>>>();
        else
            seeds.push_back(std::vector<double>(prob.assets(), 1.0 / double(prob.assets())));
        A = wrb::estimate_ambiguity(returns, seeds, prob.reference_shape);
    }
    if (A < 0.0)
        throw wrb::usage_error("portfolio: provide --ambiguity, config \"A\", or \"returns_csv\"");

    const wrb::PortfolioSolution sol = wrb::portfolio_optimize(prob, A, seed);
    json j;
    j["weights"] = sol.x;
    j["objective"] = sol.objective;
    j["kkt_residual"] = sol.kkt_residual;
    j["A"] = A;
    j["provenance"] = {{"seed", sol.seed},       {"starts", sol.starts},
                       {"measure", fl.measure},  {"reference", fl.reference},
                       {"grid_n", fl.grid_n},    {"config", config_path}};
    emit(j.dump(2) + "\n", fl.out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Worst- and best-case distortion risk measures over "
                 "Wasserstein-plus-moment uncertainty sets"};
    app.require_subcommand(1);

    CommonFlags bound_fl, frontier_fl, portfolio_fl;
    std::string eps_grid;
    double a = 10.0, b = 1.0, d = 100.0;
    std::size_t case_n = 100000;
    std::vector<double> case_alphas{0.9, 0.95, 0.99};
    std::vector<double> case_eps;
    std::string case_out;
    std::string portfolio_config;
    double ambiguity = -1.0;
    unsigned seed = 20210901;

    CLI::App* bound = app.add_subcommand("bound", "one robust bound as JSON");
    add_common(bound, bound_fl);
    bound->add_option("--side", bound_fl.side, "worst | best | both")
        ->check(CLI::IsMember({"worst", "best", "both"}));
    bound->add_option("--extremal-out", bound_fl.extremal_out,
                      "write the extremal quantile function as CSV");

    CLI::App* frontier = app.add_subcommand("frontier", "bounds along an epsilon grid");
    add_common(frontier, frontier_fl, false);
    frontier_fl.format = "csv";
    frontier->add_option("--eps-grid", eps_grid, "start:stop:steps")->required();

    CLI::App* icase = app.add_subcommand("insurance-case",
                                         "aggregate-loss case study (fit + VaR bound tables)");
    icase->add_option("--a", a, "Pareto-Clayton a (> 2)");
    icase->add_option("--b", b, "Pareto-Clayton b");
    icase->add_option("--d", d, "Pareto-Clayton d");
    icase->add_option("--grid-n", case_n, "quantile grid resolution");
    icase->add_option("--alpha", case_alphas, "VaR levels");
    icase->add_option("--eps", case_eps, "extra epsilon values");
    icase->add_option("--out", case_out, "output file prefix (default stdout)");

    CLI::App* portfolio = app.add_subcommand("portfolio", "robust portfolio optimization");
    add_common(portfolio, portfolio_fl, false);
    portfolio->add_option("--config", portfolio_config, "JSON problem description")->required();
    portfolio->add_option("--ambiguity", ambiguity, "ambiguity coefficient A in [0,1]");
    portfolio->add_option("--seed", seed, "multi-start RNG seed");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) return app.exit(e); // --help
            std::cout << "{\"error\": \"" << e.what() << "\", \"kind\": \"usage\"}\n";
            return 2;
        }
        if (bound->parsed()) return run_bound(bound_fl);
        if (frontier->parsed()) return run_frontier(frontier_fl, eps_grid);
        if (icase->parsed())
            return run_insurance_case(a, b, d, case_n, case_alphas, case_eps, case_out);
        if (portfolio->parsed())
            return run_portfolio(portfolio_fl, portfolio_config, ambiguity, seed);
        return 2;
    } catch (const wrb::usage_error& e) {
        std::cout << "{\"error\": \"" << e.what() << "\", \"kind\": \"usage\"}\n";
        return 2;
    } catch (const wrb::domain_error& e) {
        std::cout << "{\"error\": \"" << e.what() << "\", \"kind\": \"domain\"}\n";
        return 3;
    } catch (const wrb::numeric_error& e) {
        std::cout << "{\"error\": \"" << e.what() << "\", \"kind\": \"numeric\"}\n";
        return 4;
    } catch (const std::exception& e) {
        std::cout << "{\"error\": \"" << e.what() << "\", \"kind\": \"numeric\"}\n";
        return 4;
    }
}
