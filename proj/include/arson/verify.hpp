#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "arson/serialization.hpp"

namespace arson {

/// Outcome of one verification check.
struct CheckResult {
    int index = 0;
    std::string name;
    std::string kind;
    bool pass = false;
    std::string detail;
};

namespace checks {

using detail::fmt_g12;

/// The participation constraint binds: the premium equals the loaded
/// expected indemnity-plus-cost (re-integrated at doubled resolution), and
/// paying any more than that premium only lowers expected utility.
inline CheckResult binding_premium(const Scenario& scn, const Contract& y) {
    CheckResult r;
    const double h = premium(y, scn.loss, scn.cost, scn.rho, nullptr, scn.quad_n);
    const double refined =
        (1.0 + scn.rho) * expected_indemnity_cost(y, scn.loss, scn.cost, nullptr, 2 * scn.quad_n);
    const double gap = std::abs(h - refined);
    const double eu_at_h = expected_utility(scn, y, h, false);
    const double eu_above = expected_utility(scn, y, h + 0.01 * scn.loss.domain_max(), false);
    r.pass = gap <= 1e-8 && eu_above < eu_at_h;
    r.detail = "H=" + fmt_g12(h) + " quadrature_gap=" + fmt_g12(gap) +
               " eu_drop_above=" + fmt_g12(eu_at_h - eu_above);
    return r;
}

/// The stage-3 value function is (1+beta)-Lipschitz, non-decreasing and
/// wedged between the schedule and the identity; the backward recursion and
/// the exact sweep both agree with the exhaustive oracle at grid
/// resolution.
inline CheckResult envelope_lipschitz(const Scenario& scn, const Contract& y) {
    CheckResult r;
    const double cap = 1.0 + scn.beta;
    const int grid_n = scn.grid_n;
    const double m = y.domain_max();
    const double step = m / (grid_n - 1);

    const SampledFunction oracle = value_function_oracle(y, scn.beta, grid_n);
    const SampledFunction backward = envelope_backward(y, scn.beta, grid_n);
    const Contract exact = envelope_exact(y, scn.beta);

    double gap_backward = 0.0, gap_exact = 0.0;
    double lipschitz_excess = -std::numeric_limits<double>::infinity();
    double running_min = std::numeric_limits<double>::infinity();
    bool monotone = true, dominates = true, below_identity = true;
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < oracle.x.size(); ++i) {
        const double x = oracle.x[i];
        const double v = exact(x);
        gap_backward = std::max(gap_backward, std::abs(backward.value[i] - oracle.value[i]));
        gap_exact = std::max(gap_exact, std::abs(v - oracle.value[i]));
        const double w = v - cap * x;
        running_min = std::min(running_min, w);
        lipschitz_excess = std::max(lipschitz_excess, w - running_min);
        if (v < prev - 1e-12) monotone = false;
        if (v < y(x) - 1e-9) dominates = false;
        if (v > x + 1e-9) below_identity = false;
        prev = v;
    }
    const double tol = cap * step;
    r.pass = gap_backward <= tol && gap_exact <= tol && lipschitz_excess <= 1e-9 && monotone &&
             dominates && below_identity;
    r.detail = "oracle_gap_backward=" + fmt_g12(gap_backward) + " oracle_gap_exact=" +
               fmt_g12(gap_exact) + " lipschitz_excess=" + fmt_g12(lipschitz_excess);
    return r;
}

/// A contract that induces claim inflation is strictly dominated by its
/// value function: same state-by-state payoff, lower premium, higher
/// expected utility. Manipulation-proof contracts are fixed points.
inline CheckResult envelope_dominance(const Scenario& scn, const Contract& y,
                                      bool expect_dominated) {
    CheckResult r;
    const DominanceReport report = dominance_check(scn, y);
    const double dh = report.original.premium - report.envelope.premium;
    const double deu = report.envelope.expected_utility - report.original.expected_utility;
    if (expect_dominated) {
        r.pass = report.strictly_dominated && report.original.manipulation_probability > 0.0;
    } else {
        const double h_scale = std::max(1.0, std::abs(report.original.premium));
        const double eu_scale = std::max(1.0, std::abs(report.original.expected_utility));
        r.pass = report.original.manipulation_probability <= 1e-12 &&
                 std::abs(dh) <= 1e-9 * h_scale && std::abs(deu) <= 1e-9 * eu_scale;
    }
    r.detail = "manipulation_probability=" + fmt_g12(report.original.manipulation_probability) +
               " premium_drop=" + fmt_g12(dh) + " eu_gain=" + fmt_g12(deu);
    return r;
}

/// Manipulation-proofness is exactly the slope rule: sup slope at most
/// 1+beta and no upward jump.
inline CheckResult proofness_slope_rule(const Scenario& scn, const Contract& y,
                                        std::optional<bool> expect_proof) {
    CheckResult r;
    const ProofnessResult pr = is_manipulation_proof(y, scn.beta, scn.grid_n);
    const SlopeInfo info = max_slope(y);
    const bool rule = info.sup_slope <= 1.0 + scn.beta + 1e-9 && !info.has_jump;
    r.pass = pr.proof == rule && (!expect_proof || pr.proof == *expect_proof);
    r.detail = std::string("proof=") + (pr.proof ? "true" : "false") +
               " sup_slope=" + fmt_g12(info.sup_slope) +
               " has_jump=" + (info.has_jump ? "true" : "false");
    if (pr.witness) {
        r.detail += " witness_x=" + fmt_g12(pr.witness->x) + " witness_z=" + fmt_g12(pr.witness->z);
    }
    return r;
}

/// With no administrative cost the optimal deductible vanishes exactly
/// when the loading does.
inline CheckResult arrow_deductible(const Scenario& scn, bool expect_zero_deductible) {
    CheckResult r;
    if (!std::holds_alternative<ZeroCost>(scn.cost)) {
        r.pass = false;
        r.detail = "scenario must use the zero cost model";
        return r;
    }
    const SolveResult res = solve_deductible(scn);
    const double m = scn.loss.domain_max();
    const double d = std::get<StraightDeductible>(*res.family).d;
    r.pass = expect_zero_deductible ? d <= 1e-4 * m : d >= m / 256.0;
    r.detail = "d_star=" + fmt_g12(d) + " premium=" + fmt_g12(res.premium) +
               " eu=" + fmt_g12(res.expected_utility);
    return r;
}

/// The optimal constant-retention contract jumps exactly when the fixed
/// cost per claim is positive; the jump strictly improves on the best
/// straight deductible.
inline CheckResult fixed_cost_jump(const Scenario& scn, bool expect_jump) {
    CheckResult r;
    const SolveResult ret = solve_constant_retention(scn);
    const auto cr = std::get<ConstantRetention>(*ret.family);
    const double m = scn.loss.domain_max();
    const double jump = cr.t - cr.j;
    if (expect_jump) {
        const SolveResult ded = solve_deductible(scn);
        const double eu_gain = ret.expected_utility - ded.expected_utility;
        r.pass = jump >= m / 128.0 && eu_gain > 1e-8;
        r.detail = "t=" + fmt_g12(cr.t) + " j=" + fmt_g12(cr.j) + " jump=" + fmt_g12(jump) +
                   " eu_gain_over_deductible=" + fmt_g12(eu_gain);
    } else {
        r.pass = jump <= 2.0 * m / 128.0;
        r.detail = "t=" + fmt_g12(cr.t) + " j=" + fmt_g12(cr.j) + " jump=" + fmt_g12(jump);
    }
    return r;
}

/// Starting at the optimal deductible, an upward jump of eps improves the
/// contract exactly when claims carry a fixed cost.
inline CheckResult jump_improves_deductible(const Scenario& scn, double eps,
                                            std::optional<double> d_star, bool expect_improved) {
    CheckResult r;
    double d = 0.0;
    if (d_star) {
        d = *d_star;
    } else {
        d = std::get<StraightDeductible>(*solve_deductible(scn).family).d;
    }
    const JumpImprovementReport report = epsilon_improvement(scn, d, eps);
    r.pass = report.improved == expect_improved;
    r.detail = "d_star=" + fmt_g12(d) + " eps=" + fmt_g12(eps) +
               " eu_gain=" + fmt_g12(report.eu_improved - report.eu_base);
    return r;
}

/// The free-knot piecewise-linear search lands on the straight-deductible
/// optimum: same expected utility, same shape, and (when requested) a
/// terminal piece at full marginal coverage.
inline CheckResult pwl_matches_deductible(const Scenario& scn, int n_knots,
                                          bool expect_terminal_slope_one) {
    CheckResult r;
    const SolveResult ded = solve_deductible(scn);
    const SolveResult pwl = solve_problem_s_pwl(scn, n_knots);
    const double m = scn.loss.domain_max();
    const double eu_gap = std::abs(pwl.expected_utility - ded.expected_utility);
    double sup_norm = 0.0;
    for (double x : uniform_grid(m, 1001)) {
        sup_norm = std::max(sup_norm, std::abs(pwl.contract(x) - ded.contract(x)));
    }
    const double terminal_slope = pwl.contract.segments().back().slope;
    r.pass = eu_gap <= 1e-6 && sup_norm <= 5e-3 * m &&
             (!expect_terminal_slope_one || std::abs(terminal_slope - 1.0) <= 1e-6);
    r.detail = "eu_gap=" + fmt_g12(eu_gap) + " sup_norm=" + fmt_g12(sup_norm) +
               " terminal_slope=" + fmt_g12(terminal_slope);
    return r;
}

/// The value function of a completely disappearing deductible is the full
/// insurance line: the steep tail is manipulated all the way up, so the
/// schedule's envelope coincides with the identity.
inline CheckResult disappearing_envelope(const Scenario& scn, double d) {
    CheckResult r;
    const double m = scn.loss.domain_max();
    const Contract y = construct(DisappearingDeductible{d}, m);
    const Contract env = envelope_exact(y, scn.beta);
    double gap = 0.0;
    for (double x : uniform_grid(m, scn.grid_n)) {
        gap = std::max(gap, std::abs(env(x) - x));
    }
    const double tol = (1.0 + scn.beta) * m / (scn.grid_n - 1);
    r.pass = gap <= tol;
    r.detail = "sup_gap_to_full_insurance=" + fmt_g12(gap) + " segments=" +
               std::to_string(env.segments().size());
    return r;
}

}  // namespace checks

namespace detail {

inline bool param_bool(const nlohmann::json& params, const char* key, bool fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    if (!it->is_boolean()) throw SchemaError(std::string("params: \"") + key + "\" must be a boolean");
    return it->get<bool>();
}

}  // namespace detail

/// Runs every check in a suite document, in file order. The document is
/// {"schema_version": 1, "checks": [...]}; each check names a kind, a
/// scenario, optionally a contract and kind-specific params. An empty
/// suite passes vacuously.
inline std::vector<CheckResult> run_suite(const nlohmann::json& doc) {
    detail::require_keys(doc, {"schema_version", "checks"}, "suite");
    if (detail::require_integer(doc, "schema_version", "suite") != 1) {
        throw SchemaError("suite: unsupported schema_version");
    }
    const nlohmann::json& checks_doc = detail::require(doc, "checks", "suite");
    if (!checks_doc.is_array()) throw SchemaError("suite: \"checks\" must be an array");

    std::vector<CheckResult> results;
    int index = 0;
    for (const nlohmann::json& c : checks_doc) {
        detail::require_keys(c, {"name", "kind", "scenario", "contract", "params"}, "check");
        CheckResult r;
        r.index = index++;
        r.name = detail::require_string(c, "name", "check");
        r.kind = detail::require_string(c, "kind", "check");
        const Scenario scn = scenario_from_json(detail::require(c, "scenario", "check"));
        const nlohmann::json params = c.value("params", nlohmann::json::object());

        auto contract_of = [&]() -> Contract {
            auto it = c.find("contract");
            if (it == c.end()) throw SchemaError("check \"" + r.name + "\": needs a contract");
            if (it->contains("type")) return construct(family_from_json(*it), scn.loss.domain_max());
            return contract_from_json(*it);
        };

        try {
            CheckResult body;
            if (r.kind == "binding_premium") {
                detail::require_keys(params, {}, "params");
                body = checks::binding_premium(scn, contract_of());
            } else if (r.kind == "envelope_lipschitz") {
                detail::require_keys(params, {}, "params");
                body = checks::envelope_lipschitz(scn, contract_of());
            } else if (r.kind == "envelope_dominance") {
                detail::require_keys(params, {"expect_dominated"}, "params");
                body = checks::envelope_dominance(scn, contract_of(),
                                                  detail::param_bool(params, "expect_dominated", true));
            } else if (r.kind == "proofness_slope_rule") {
                detail::require_keys(params, {"expect_proof"}, "params");
                std::optional<bool> expect;
                if (params.contains("expect_proof")) {
                    expect = detail::param_bool(params, "expect_proof", true);
                }
                body = checks::proofness_slope_rule(scn, contract_of(), expect);
            } else if (r.kind == "arrow_deductible") {
                detail::require_keys(params, {"expect_zero_deductible"}, "params");
                body = checks::arrow_deductible(
                    scn, detail::param_bool(params, "expect_zero_deductible", true));
            } else if (r.kind == "fixed_cost_jump") {
                detail::require_keys(params, {"expect_jump"}, "params");
                body = checks::fixed_cost_jump(scn, detail::param_bool(params, "expect_jump", true));
            } else if (r.kind == "jump_improves_deductible") {
                detail::require_keys(params, {"eps_scale", "d_star", "expect_improved"}, "params");
                const double eps =
                    detail::require_number(params, "eps_scale", "params") * scn.loss.domain_max();
                std::optional<double> d_star;
                if (params.contains("d_star")) {
                    d_star = detail::require_number(params, "d_star", "params");
                }
                body = checks::jump_improves_deductible(
                    scn, eps, d_star, detail::param_bool(params, "expect_improved", true));
            } else if (r.kind == "pwl_matches_deductible") {
                detail::require_keys(params, {"n_knots", "expect_terminal_slope_one"}, "params");
                body = checks::pwl_matches_deductible(
                    scn, detail::optional_integer(params, "n_knots", 3, "params"),
                    detail::param_bool(params, "expect_terminal_slope_one", false));
            } else if (r.kind == "disappearing_envelope") {
                detail::require_keys(params, {"d"}, "params");
                body = checks::disappearing_envelope(scn,
                                                     detail::require_number(params, "d", "params"));
            } else {
                throw SchemaError("check \"" + r.name + "\": unknown kind \"" + r.kind + "\"");
            }
            r.pass = body.pass;
            r.detail = body.detail;
        } catch (const SchemaError&) {
            throw;
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("error: ") + e.what();
        }
        results.push_back(std::move(r));
    }
    return results;
}

/// Machine-readable report for a suite run.
inline nlohmann::json suite_report(const std::vector<CheckResult>& results) {
    int passed = 0;
    nlohmann::json rows = nlohmann::json::array();
    for (const CheckResult& r : results) {
        passed += r.pass ? 1 : 0;
        rows.push_back({{"index", r.index},
                        {"name", r.name},
                        {"kind", r.kind},
                        {"pass", r.pass},
                        {"detail", r.detail}});
    }
    return {{"schema_version", 1},
            {"total", static_cast<int>(results.size())},
            {"passed", passed},
            {"failed", static_cast<int>(results.size()) - passed},
            {"all_pass", passed == static_cast<int>(results.size())},
            {"checks", rows}};
}

}  // namespace arson
