// Command-line front end: scenario files in, JSON results and plot-ready
// CSV curves out.
//
// Subcommands:
//   envelope  sample Y, its stage-3 value function and best response to CSV
//   price     premium and expected utility with honest and inflated claims
//   solve     optimal contract within a family (deductible, retention, pwl)
//   verify    run a suite of model checks, PASS/FAIL per claim
//   compare   price a contract against its manipulation-proof envelope
//
// Exit codes: 0 success, 2 schema/usage error, 3 domain error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "arson/equilibrium.hpp"
#include "arson/serialization.hpp"
#include "arson/verify.hpp"

namespace {

std::string g12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

struct CommonOptions {
    std::string scenario_path;
    std::string out_path;
    int grid_n = 0;   // 0 = keep the scenario's value
    int quad_n = 0;
    double tol = -1.0;  // <0 = module defaults
};

arson::ScenarioFile load_scenario_file(const CommonOptions& opt) {
    arson::ScenarioFile file =
        arson::scenario_file_from_json(arson::parse_json_file(opt.scenario_path));
    if (opt.grid_n > 0) file.scenario.grid_n = opt.grid_n;
    if (opt.quad_n > 0) file.scenario.quad_n = opt.quad_n;
    arson::validate(file.scenario);
    return file;
}

void emit_json(const CommonOptions& opt, const nlohmann::json& doc) {
    const std::string text = doc.dump(2) + "\n";
    if (opt.out_path.empty()) {
        std::cout << text;
    } else {
        arson::write_file_atomic(opt.out_path, text);
    }
}

int cmd_envelope(const CommonOptions& opt) {
    const arson::ScenarioFile file = load_scenario_file(opt);
    const arson::Contract y = file.require_contract();
    std::ostringstream csv;
    arson::write_envelope_csv(csv, y, file.scenario.beta, file.scenario.grid_n);
    arson::write_file_atomic(opt.out_path, csv.str());
    std::cout << "envelope: wrote " << file.scenario.grid_n << " rows to " << opt.out_path << "\n";
    return 0;
}

int cmd_price(const CommonOptions& opt) {
    const arson::ScenarioFile file = load_scenario_file(opt);
    const arson::Contract y = file.require_contract();
    const arson::SolveResult honest = arson::evaluate_contract(file.scenario, y, false);
    const arson::SolveResult inflated = arson::evaluate_contract(file.scenario, y, true);
    std::cout << "price: honest H=" << g12(honest.premium) << " EU=" << g12(honest.expected_utility)
              << " | inflated H=" << g12(inflated.premium)
              << " EU=" << g12(inflated.expected_utility)
              << " manipulation_probability=" << g12(inflated.manipulation_probability) << "\n";
    emit_json(opt, {{"honest", arson::to_json(honest)}, {"inflated", arson::to_json(inflated)}});
    return 0;
}

int cmd_solve(const CommonOptions& opt, const std::string& family, int knots,
              const std::string& trace_path) {
    const arson::ScenarioFile file = load_scenario_file(opt);
    arson::SolverTrace trace;
    arson::SolverTrace* trace_ptr = trace_path.empty() ? nullptr : &trace;
    arson::SolveResult result;
    if (family == "deductible") {
        result = arson::solve_deductible(file.scenario, trace_ptr);
    } else if (family == "retention") {
        result = arson::solve_constant_retention(file.scenario, trace_ptr);
    } else if (family == "pwl") {
        result = arson::solve_problem_s_pwl(file.scenario, knots, trace_ptr);
    } else {
        throw arson::SchemaError("solve: unknown family \"" + family + "\"");
    }
    std::string params = "(piecewise linear)";
    if (result.family) {
        if (const auto* d = std::get_if<arson::StraightDeductible>(&*result.family)) {
            params = "d=" + g12(d->d);
        } else if (const auto* cr = std::get_if<arson::ConstantRetention>(&*result.family)) {
            params = "t=" + g12(cr->t) + " j=" + g12(cr->j);
        }
    }
    std::cout << "solve " << family << ": " << params << " H=" << g12(result.premium)
              << " EU=" << g12(result.expected_utility)
              << " evals=" << result.optimizer_evals << "\n";
    if (!trace_path.empty()) {
        std::ostringstream csv;
        arson::write_trace_csv(csv, trace);
        arson::write_file_atomic(trace_path, csv.str());
    }
    emit_json(opt, arson::to_json(result));
    return 0;
}

int cmd_verify(const CommonOptions& opt) {
    const nlohmann::json doc = arson::parse_json_file(opt.scenario_path);
    const std::vector<arson::CheckResult> results = arson::run_suite(doc);
    for (const arson::CheckResult& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  [" << r.kind << "]  " << r.detail
                  << "\n";
    }
    int failed = 0;
    for (const arson::CheckResult& r : results) failed += r.pass ? 0 : 1;
    std::cout << "verify: " << (results.size() - failed) << "/" << results.size() << " checks passed"
              << "\n";
    emit_json(opt, arson::suite_report(results));
    return failed == 0 ? 0 : 1;
}

int cmd_compare(const CommonOptions& opt) {
    const arson::ScenarioFile file = load_scenario_file(opt);
    const arson::Contract y = file.require_contract();
    const arson::DominanceReport report = arson::dominance_check(file.scenario, y);
    std::cout << "compare: original H=" << g12(report.original.premium)
              << " EU=" << g12(report.original.expected_utility)
              << " | envelope H=" << g12(report.envelope.premium)
              << " EU=" << g12(report.envelope.expected_utility) << " | strictly_dominated="
              << (report.strictly_dominated ? "true" : "false") << "\n";
    emit_json(opt, arson::to_json(report));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal insurance contracts under claim-inflation (arson-type) risk"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string family = "deductible";
    int knots = 3;
    std::string trace_path;

    auto add_common = [&](CLI::App* cmd, bool out_required) {
        cmd->add_option("--scenario", opt.scenario_path, "scenario or suite JSON file")->required();
        auto* out = cmd->add_option("--out", opt.out_path, "output file path");
        if (out_required) out->required();
        cmd->add_option("--grid-n", opt.grid_n, "override the scenario's grid resolution");
        cmd->add_option("--quad-n", opt.quad_n, "override the scenario's quadrature nodes per panel");
        cmd->add_option("--tol", opt.tol, "override a check tolerance (module default otherwise)");
    };

    CLI::App* envelope = app.add_subcommand(
        "envelope", "sample the schedule and its stage-3 value function to CSV");
    add_common(envelope, /*out_required=*/true);

    CLI::App* price = app.add_subcommand("price", "premium and expected utility for a contract");
    add_common(price, /*out_required=*/false);

    CLI::App* solve = app.add_subcommand("solve", "optimize a contract family");
    add_common(solve, /*out_required=*/false);
    solve->add_option("--family", family, "deductible | retention | pwl");
    solve->add_option("--knots", knots, "free interior knots for the pwl family");
    solve->add_option("--trace", trace_path, "write the optimizer trace CSV here");

    CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
    add_common(verify, /*out_required=*/false);

    CLI::App* compare = app.add_subcommand("compare", "contract vs its manipulation-proof envelope");
    add_common(compare, /*out_required=*/false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (envelope->parsed()) return cmd_envelope(opt);
        if (price->parsed()) return cmd_price(opt);
        if (solve->parsed()) return cmd_solve(opt, family, knots, trace_path);
        if (verify->parsed()) return cmd_verify(opt);
        if (compare->parsed()) return cmd_compare(opt);
    } catch (const arson::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
