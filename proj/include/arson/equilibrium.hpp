#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "arson/contract.hpp"
#include "arson/manipulation.hpp"
#include "arson/pricing.hpp"

namespace arson {

// ---------------------------------------------------------------------------
// Preferences
// ---------------------------------------------------------------------------

/// Constant relative risk aversion: u(w) = w^(1-gamma) / (1-gamma).
struct Crra {
    double gamma = 2.0;
};

/// u(w) = ln w.
struct LogUtility {};

using UtilitySpec = std::variant<Crra, LogUtility>;

inline void validate(const UtilitySpec& spec) {
    if (const auto* c = std::get_if<Crra>(&spec)) {
        if (!(c->gamma > 0.0) || std::abs(c->gamma - 1.0) < 1e-12) {
            throw std::invalid_argument("Crra: gamma must be > 0 and != 1 (use log utility)");
        }
    }
}

/// Bernoulli utility at wealth w > 0.
inline double utility(const UtilitySpec& spec, double w) {
    struct Eval {
        double w;
        double operator()(const Crra& c) const { return std::pow(w, 1.0 - c.gamma) / (1.0 - c.gamma); }
        double operator()(const LogUtility&) const { return std::log(w); }
    };
    return std::visit(Eval{w}, spec);
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

/// Everything the design problem needs: endowment, loading, manipulation
/// cost slope, preferences, the loss law, the administrative cost, and the
/// numerical resolutions.
struct Scenario {
    double W0 = 10.0;
    double rho = 0.0;
    double beta = 0.0;
    UtilitySpec utility = Crra{2.0};
    LossModel loss{4.0, 0.5, UniformDensity{}};
    CostModel cost = ZeroCost{};
    int grid_n = kDefaultGridN;
    int quad_n = kDefaultQuadN;
};

/// Validates parameter ranges and the wealth guard: the endowment must
/// cover the worst loss plus the worst-case premium so that final wealth
/// stays strictly positive wherever utility is evaluated.
inline void validate(const Scenario& scn) {
    if (!(scn.W0 > 0.0)) throw std::invalid_argument("Scenario: W0 must be > 0");
    if (scn.rho < 0.0) throw std::invalid_argument("Scenario: rho must be >= 0");
    if (scn.beta < 0.0) throw std::invalid_argument("Scenario: beta must be >= 0");
    if (scn.grid_n < 2) throw std::invalid_argument("Scenario: grid_n must be >= 2");
    if (scn.quad_n < 16) throw std::invalid_argument("Scenario: quad_n must be >= 16");
    validate(scn.utility);
    validate(scn.cost);
    const double m = scn.loss.domain_max();
    const double worst_premium =
        (1.0 + scn.rho) * (loss_mean(scn.loss, scn.quad_n) + claim_cost_bound(scn.cost, m));
    if (!(scn.W0 > m + worst_premium)) {
        throw std::invalid_argument(
            "Scenario: W0 too small; need W0 > domain_max + worst-case premium = " +
            std::to_string(m + worst_premium) + " to keep final wealth positive");
    }
}

// ---------------------------------------------------------------------------
// Expected utility of the insured
// ---------------------------------------------------------------------------

/// E[u(W0 - H - X - z - g(z) + Y(X+z))]. With manipulation the stage-3
/// best response is used at every quadrature node; otherwise z = 0.
/// Throws std::domain_error if final wealth is non-positive at any node.
inline double expected_utility(const Scenario& scn, const Contract& y, double H,
                               bool with_manipulation) {
    const double m = y.domain_max();
    std::optional<ClaimInflation> plan;
    std::vector<double> knots = y.interior_breakpoints();
    if (with_manipulation) {
        plan = best_response_plan(y, scn.beta);
        knots.insert(knots.end(), plan->extra_knots.begin(), plan->extra_knots.end());
    }
    const double cost_of_damage = 1.0 + scn.beta;
    auto fn = [&](double x) {
        const double z = plan ? plan->z_of_x(x) : 0.0;
        const double w = scn.W0 - H - x - cost_of_damage * z + y(std::min(x + z, m));
        if (!(w > 0.0)) {
            throw std::domain_error("expected_utility: non-positive wealth " + std::to_string(w) +
                                    " at node x = " + std::to_string(x));
        }
        return utility(scn.utility, w);
    };
    return integrate(fn, scn.loss, knots, scn.quad_n);
}

// ---------------------------------------------------------------------------
// Solver output
// ---------------------------------------------------------------------------

/// Result of pricing or optimizing a contract in a scenario. family is set
/// when the contract came from a named parametric family; free-form
/// piecewise-linear solutions carry only the schedule itself.
/// manipulation_probability always reports how often the insured would
/// inflate claims under this contract, whether or not the pricing allowed
/// for it.
struct SolveResult {
    std::optional<FamilySpec> family;
    Contract contract{4.0, {Segment{0.0, 4.0, 0.0, 0.0}}};
    double premium = 0.0;
    double expected_utility = 0.0;
    double manipulation_probability = 0.0;
    double max_slope_used = 0.0;
    long optimizer_evals = 0;
};

/// One row per objective evaluation of a solver run.
struct SolverTrace {
    struct Row {
        long iteration = 0;
        std::string params;  ///< e.g. "d=0.25" or "t=1.5;j=0.5"
        double expected_utility = 0.0;
        double premium = 0.0;
    };
    std::vector<Row> rows;
};

namespace detail {

inline std::string fmt_g12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace detail

/// Prices a contract in a scenario, with or without the stage-3 best
/// response, and evaluates the insured's expected utility at that premium.
inline SolveResult evaluate_contract(const Scenario& scn, const Contract& y,
                                     bool with_manipulation,
                                     std::optional<FamilySpec> family = std::nullopt) {
    SolveResult r;
    r.family = std::move(family);
    r.contract = y;
    const ClaimInflation plan = best_response_plan(y, scn.beta);
    r.manipulation_probability = manipulation_probability(y, scn.loss, plan, scn.quad_n);
    r.premium = premium(y, scn.loss, scn.cost, scn.rho, with_manipulation ? &plan : nullptr,
                        scn.quad_n);
    r.expected_utility = expected_utility(scn, y, r.premium, with_manipulation);
    r.max_slope_used = max_slope(y).sup_slope;
    return r;
}

/// Verdict of replacing a manipulable contract by its stage-3 value
/// function, each priced through its own binding participation constraint.
struct DominanceReport {
    SolveResult original;
    SolveResult envelope;
    bool strictly_dominated = false;
};

/// Prices the contract under its own best-response manipulation and its
/// exact envelope under honest claims. The envelope gives the insured the
/// same state-by-state payoff without the wasted damage, so a manipulable
/// contract is strictly dominated: lower premium, higher expected utility.
inline DominanceReport dominance_check(const Scenario& scn, const Contract& y) {
    DominanceReport report;
    report.original = evaluate_contract(scn, y, /*with_manipulation=*/true);
    const Contract env = envelope_exact(y, scn.beta);
    report.envelope = evaluate_contract(scn, env, /*with_manipulation=*/false);
    report.strictly_dominated =
        report.original.manipulation_probability > 0.0 &&
        report.envelope.premium < report.original.premium &&
        report.envelope.expected_utility > report.original.expected_utility;
    return report;
}

// ---------------------------------------------------------------------------
// Deterministic derivative-free search helpers
// ---------------------------------------------------------------------------

namespace detail {

/// Golden-section maximization on [lo, hi] with endpoint evaluation.
/// Deterministic: the iteration count depends only on the interval and
/// tolerance. Returns the best point seen and its value.
template <class F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, double xtol, long& evals) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    evals += 2;
    while (b - a > xtol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        }
        ++evals;
    }
    double best_x = f1 >= f2 ? x1 : x2;
    double best_f = std::max(f1, f2);
    for (double x : {lo, hi}) {
        const double v = f(x);
        ++evals;
        if (v > best_f) {
            best_f = v;
            best_x = x;
        }
    }
    return {best_x, best_f};
}

/// Coarse scan plus golden refinement of the straight-deductible family.
/// Shared by solve_deductible and the diagonal track of the
/// constant-retention solver so the two agree bit-for-bit on the t = j
/// slice.
inline SolveResult deductible_scan(const Scenario& scn, int coarse_n, double xtol_scale,
                                   SolverTrace* trace) {
    const double m = scn.loss.domain_max();
    long evals = 0;
    auto eu_at = [&](double d) {
        const Contract y = construct(StraightDeductible{d}, m);
        const double h = premium(y, scn.loss, scn.cost, scn.rho, nullptr, scn.quad_n);
        const double eu = expected_utility(scn, y, h, /*with_manipulation=*/false);
        if (trace) trace->rows.push_back({static_cast<long>(trace->rows.size()),
                                          "d=" + fmt_g12(d), eu, h});
        return eu;
    };
    int best_i = 0;
    double best_eu = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < coarse_n; ++i) {
        const double d = m * i / (coarse_n - 1);
        const double eu = eu_at(d);
        ++evals;
        if (eu > best_eu) {
            best_eu = eu;
            best_i = i;
        }
    }
    const double step = m / (coarse_n - 1);
    const double lo = std::max(0.0, m * best_i / (coarse_n - 1) - step);
    const double hi = std::min(m, m * best_i / (coarse_n - 1) + step);
    auto [d_star, eu_star] = golden_max(eu_at, lo, hi, xtol_scale * m, evals);
    if (best_eu > eu_star) {
        d_star = m * best_i / (coarse_n - 1);
        eu_star = best_eu;
    }

    const Contract y = construct(StraightDeductible{d_star}, m);
    SolveResult r = evaluate_contract(scn, y, /*with_manipulation=*/false, StraightDeductible{d_star});
    r.expected_utility = eu_star;
    r.optimizer_evals = evals;
    return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Design problem solvers
// ---------------------------------------------------------------------------

/// Optimal straight deductible: maximizes expected utility over d in [0, M]
/// with the premium re-priced at every candidate (binding participation).
/// Coarse 257-point scan, then golden-section refinement to 1e-6 * M.
inline SolveResult solve_deductible(const Scenario& scn, SolverTrace* trace = nullptr) {
    validate(scn);
    return detail::deductible_scan(scn, 257, 1e-6, trace);
}

/// Optimal constant-retention contract without arson-type actions:
/// maximizes expected utility over thresholds 0 <= j <= t <= M (the
/// positive-jump constraint is the search domain). Nested 129 x 129 grid,
/// coordinate golden-section refinement, and a dedicated pass over the
/// t = j diagonal so the straight-deductible slice is never worse than
/// solve_deductible's answer.
inline SolveResult solve_constant_retention(const Scenario& scn, SolverTrace* trace = nullptr) {
    validate(scn);
    const double m = scn.loss.domain_max();
    const int n = 129;
    const double step = m / (n - 1);
    const double t_ceiling = m * (1.0 - 1e-9);
    long evals = 0;

    auto eu_at = [&](double t, double j) {
        if (t > t_ceiling && j < t) return -std::numeric_limits<double>::infinity();
        const Contract y = construct(ConstantRetention{t, j}, m);
        const double h = premium(y, scn.loss, scn.cost, scn.rho, nullptr, scn.quad_n);
        ++evals;
        const double eu = expected_utility(scn, y, h, /*with_manipulation=*/false);
        if (trace) trace->rows.push_back({static_cast<long>(trace->rows.size()),
                                          "t=" + detail::fmt_g12(t) + ";j=" + detail::fmt_g12(j),
                                          eu, h});
        return eu;
    };

    double best_t = 0.0, best_j = 0.0;
    double best_eu = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double t = m * i / (n - 1);
        for (int k = 0; k <= i; ++k) {
            const double j = m * k / (n - 1);
            if (t == m && j < m) continue;  // jump pinned at the domain end
            const double eu = eu_at(t, j);
            if (eu > best_eu) {
                best_eu = eu;
                best_t = t;
                best_j = j;
            }
        }
    }

    // Coordinate refinement around the coarse optimum.
    for (int round = 0; round < 3; ++round) {
        const double t_lo = std::max(best_j, best_t - step);
        const double t_hi = std::min(t_ceiling, best_t + step);
        if (t_hi > t_lo) {
            auto [t_new, eu_t] = detail::golden_max(
                [&](double t) { return eu_at(t, best_j); }, t_lo, t_hi, 1e-7 * m, evals);
            if (eu_t > best_eu) {
                best_eu = eu_t;
                best_t = t_new;
            }
        }
        const double j_lo = std::max(0.0, best_j - step);
        const double j_hi = std::min(best_t, best_j + step);
        if (j_hi > j_lo) {
            auto [j_new, eu_j] = detail::golden_max(
                [&](double j) { return eu_at(best_t, j); }, j_lo, j_hi, 1e-7 * m, evals);
            if (eu_j > best_eu) {
                best_eu = eu_j;
                best_j = j_new;
            }
        }
    }

    // Diagonal track: identical path to solve_deductible.
    SolveResult diagonal = detail::deductible_scan(scn, 257, 1e-6, trace);
    evals += diagonal.optimizer_evals;

    if (best_eu > diagonal.expected_utility) {
        const Contract y = construct(ConstantRetention{best_t, best_j}, m);
        SolveResult r = evaluate_contract(scn, y, /*with_manipulation=*/false,
                                          ConstantRetention{best_t, best_j});
        r.expected_utility = best_eu;
        r.optimizer_evals = evals;
        return r;
    }
    const double d = std::get<StraightDeductible>(*diagonal.family).d;
    SolveResult r = evaluate_contract(scn, diagonal.contract, /*with_manipulation=*/false,
                                      ConstantRetention{d, d});
    r.expected_utility = diagonal.expected_utility;
    r.optimizer_evals = evals;
    return r;
}

/// Report of the fixed-cost jump experiment: starting from the straight
/// deductible at d_star, replace it by the schedule that pays x - d_star +
/// eps for every x >= d_star (an upward jump of eps at the deductible).
struct JumpImprovementReport {
    double eu_base = 0.0;      ///< straight deductible at its own premium
    double eu_improved = 0.0;  ///< jump contract at its own premium
    bool improved = false;
};

/// Evaluates whether the eps-jump contract improves on the straight
/// deductible when claims cannot be inflated. With a fixed cost per claim
/// the jump pays: it removes nuisance claims while raising coverage.
/// Requires a zero or fixed-per-claim cost model and 0 < eps < d_star.
inline JumpImprovementReport epsilon_improvement(const Scenario& scn, double d_star, double eps) {
    validate(scn);
    if (!std::holds_alternative<ZeroCost>(scn.cost) &&
        !std::holds_alternative<FixedPerClaim>(scn.cost)) {
        throw std::invalid_argument("epsilon_improvement: cost model must be zero or fixed per claim");
    }
    if (!(eps > 0.0 && eps < d_star)) {
        throw std::invalid_argument("epsilon_improvement: need 0 < eps < d_star");
    }
    const double m = scn.loss.domain_max();
    if (!(d_star <= m)) throw std::invalid_argument("epsilon_improvement: d_star must be <= domain_max");

    JumpImprovementReport report;
    const Contract base = construct(StraightDeductible{d_star}, m);
    const double h_base = premium(base, scn.loss, scn.cost, scn.rho, nullptr, scn.quad_n);
    report.eu_base = expected_utility(scn, base, h_base, /*with_manipulation=*/false);

    const Contract jump = construct(ConstantRetention{d_star, d_star - eps}, m);
    const double h_jump = premium(jump, scn.loss, scn.cost, scn.rho, nullptr, scn.quad_n);
    report.eu_improved = expected_utility(scn, jump, h_jump, /*with_manipulation=*/false);

    report.improved = report.eu_improved > report.eu_base;
    return report;
}

// ---------------------------------------------------------------------------
// Free-knot piecewise-linear design problem
// ---------------------------------------------------------------------------

namespace detail {

/// Monotone PWL contract parameterized by interior knots and per-piece
/// slopes in [0, 1+beta], anchored at Y(0) = 0.
struct PwlParams {
    std::vector<double> knots;   // ascending, interior
    std::vector<double> slopes;  // knots.size() + 1 entries
};

inline Contract build_pwl(const PwlParams& p, double m) {
    std::vector<Segment> segs;
    double x0 = 0.0;
    double v = 0.0;
    for (std::size_t i = 0; i < p.slopes.size(); ++i) {
        const double x1 = i < p.knots.size() ? p.knots[i] : m;
        segs.push_back(Segment{x0, x1, v, p.slopes[i]});
        v = segs.back().left_limit();
        x0 = x1;
    }
    return Contract(m, std::move(segs));
}

inline bool pwl_feasible(const PwlParams& p, double m) {
    double x0 = 0.0, v = 0.0;
    for (std::size_t i = 0; i < p.slopes.size(); ++i) {
        const double x1 = i < p.knots.size() ? p.knots[i] : m;
        if (!(x1 > x0)) return false;
        if (p.slopes[i] < 0.0) return false;
        v += p.slopes[i] * (x1 - x0);
        if (v > x1 + 1e-12) return false;  // Y <= x checked at piece ends
        x0 = x1;
    }
    return true;
}

inline std::string pwl_params_label(const PwlParams& p) {
    std::string s;
    for (std::size_t i = 0; i < p.knots.size(); ++i) {
        s += "k" + std::to_string(i + 1) + "=" + fmt_g12(p.knots[i]) + ";";
    }
    for (std::size_t i = 0; i < p.slopes.size(); ++i) {
        if (i) s += ";";
        s += "s" + std::to_string(i) + "=" + fmt_g12(p.slopes[i]);
    }
    return s;
}

}  // namespace detail

/// Best monotone piecewise-linear contract with n_knots free breakpoints,
/// slopes within [0, 1+beta] and 0 <= Y <= x, found by deterministic
/// coordinate descent (golden-section line searches) from a fixed set of
/// starting shapes. A certified local optimum at line-search resolution,
/// not a global proof.
inline SolveResult solve_problem_s_pwl(const Scenario& scn, int n_knots = 3,
                                       SolverTrace* trace = nullptr) {
    validate(scn);
    if (n_knots < 1 || n_knots > 5) {
        throw std::invalid_argument("solve_problem_s_pwl: n_knots must lie in [1, 5]");
    }
    const double m = scn.loss.domain_max();
    const double slope_cap = 1.0 + scn.beta;
    long evals = 0;

    auto objective = [&](const detail::PwlParams& p) {
        if (!detail::pwl_feasible(p, m)) return -std::numeric_limits<double>::infinity();
        const Contract y = detail::build_pwl(p, m);
        const double h = premium(y, scn.loss, scn.cost, scn.rho, nullptr, scn.quad_n);
        ++evals;
        const double eu = expected_utility(scn, y, h, /*with_manipulation=*/false);
        if (trace) trace->rows.push_back({static_cast<long>(trace->rows.size()),
                                          detail::pwl_params_label(p), eu, h});
        return eu;
    };

    const std::size_t np = static_cast<std::size_t>(n_knots);
    auto even_knots = [&]() {
        std::vector<double> ks(np);
        for (std::size_t i = 0; i < np; ++i) ks[i] = m * (i + 1.0) / (np + 1.0);
        return ks;
    };
    auto knots_from_first = [&](double first) {
        std::vector<double> ks(np);
        ks[0] = first;
        for (std::size_t i = 1; i < np; ++i) {
            ks[i] = first + (m - first) * static_cast<double>(i) / np;
        }
        return ks;
    };

    std::vector<detail::PwlParams> starts;
    {
        detail::PwlParams p;
        p.knots = even_knots();
        p.slopes.assign(np + 1, 1.0);  // full insurance
        starts.push_back(p);
        p.slopes.assign(np + 1, 0.0);  // no insurance
        starts.push_back(p);
        p.slopes.assign(np + 1, 0.5);  // coinsurance
        starts.push_back(p);
        p.slopes.assign(np + 1, 1.0);  // upper limit
        p.slopes.back() = 0.0;
        starts.push_back(p);
        p.knots = knots_from_first(m / 4.0);  // deductible at M/4
        p.slopes.assign(np + 1, 1.0);
        p.slopes.front() = 0.0;
        starts.push_back(p);
        p.knots = knots_from_first(m / 2.0);  // deductible at M/2
        starts.push_back(p);
        p.knots = knots_from_first(m / 4.0);  // deductible then coinsurance
        p.slopes.assign(np + 1, 0.5);
        p.slopes.front() = 0.0;
        p.slopes[1] = 1.0;
        starts.push_back(p);
        p.knots = even_knots();  // flat then as steep as allowed
        p.slopes.assign(np + 1, 0.0);
        p.slopes.back() = std::min(slope_cap, 1.0);
        starts.push_back(p);
    }

    detail::PwlParams best;
    double best_eu = -std::numeric_limits<double>::infinity();
    for (const detail::PwlParams& start : starts) {
        detail::PwlParams p = start;
        double eu = objective(p);
        if (eu == -std::numeric_limits<double>::infinity()) continue;
        for (int round = 0; round < 6; ++round) {
            for (std::size_t i = 0; i < p.slopes.size(); ++i) {
                auto line = [&](double s) {
                    detail::PwlParams q = p;
                    q.slopes[i] = s;
                    return objective(q);
                };
                auto [s_new, eu_new] = detail::golden_max(line, 0.0, slope_cap, 1e-7, evals);
                if (eu_new > eu) {
                    eu = eu_new;
                    p.slopes[i] = s_new;
                }
            }
            for (std::size_t i = 0; i < p.knots.size(); ++i) {
                const double lo = (i == 0 ? 0.0 : p.knots[i - 1]) + 1e-6 * m;
                const double hi = (i + 1 < p.knots.size() ? p.knots[i + 1] : m) - 1e-6 * m;
                if (hi <= lo) continue;
                auto line = [&](double k) {
                    detail::PwlParams q = p;
                    q.knots[i] = k;
                    return objective(q);
                };
                auto [k_new, eu_new] = detail::golden_max(line, lo, hi, 1e-6 * m, evals);
                if (eu_new > eu) {
                    eu = eu_new;
                    p.knots[i] = k_new;
                }
            }
        }
        if (eu > best_eu) {
            best_eu = eu;
            best = p;
        }
    }

    const Contract y = detail::build_pwl(best, m);
    SolveResult r = evaluate_contract(scn, y, /*with_manipulation=*/false);
    r.expected_utility = best_eu;
    r.optimizer_evals = evals;
    return r;
}

}  // namespace arson
