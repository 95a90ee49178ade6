// Acceptance suite: exercises every shipped guarantee end to end and
// prints one PASS/FAIL line per criterion. Returns the number of failed
// criteria, so a zero exit means the build honours all of them.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "arson/contract.hpp"
#include "arson/equilibrium.hpp"
#include "arson/manipulation.hpp"
#include "arson/pricing.hpp"
#include "support/corpus.hpp"

using namespace arson;

namespace {

constexpr double kM = 4.0;
constexpr int kGridN = 2001;
constexpr std::uint32_t kCorpusSeed = 727201;

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %2d %s  %s\n", pass ? "PASS" : "FAIL", index, name.c_str(), detail.c_str());
    if (!pass) ++g_failures;
}

std::string g12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

struct EnvelopeStats {
    double oracle_gap = 0.0;       // exact envelope sample vs exhaustive oracle
    double lipschitz_excess = 0.0; // worst pairwise (1+beta)-Lipschitz violation
    bool monotone = true;
    bool bounded = true;           // Y <= V <= x on the grid
};

EnvelopeStats envelope_stats(const Contract& y, double beta, int grid_n) {
    EnvelopeStats stats;
    const double cap = 1.0 + beta;
    const SampledFunction oracle = value_function_oracle(y, beta, grid_n);
    const Contract env = envelope_exact(y, beta);
    double running_min = std::numeric_limits<double>::infinity();
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < oracle.x.size(); ++i) {
        const double x = oracle.x[i];
        const double v = env(x);
        stats.oracle_gap = std::max(stats.oracle_gap, std::abs(v - oracle.value[i]));
        const double w = v - cap * x;
        running_min = std::min(running_min, w);
        stats.lipschitz_excess = std::max(stats.lipschitz_excess, w - running_min);
        if (v < prev - 1e-12) stats.monotone = false;
        if (v < y(x) - 1e-9 || v > x + 1e-9) stats.bounded = false;
        prev = v;
    }
    return stats;
}

Scenario desk() { return testsupport::desk_scenario(); }

// --------------------------------------------------------------------------

void criterion_1_2_4(const std::vector<Contract>& corpus) {
    const double betas[] = {0.0, 0.25, 1.0};
    const double step = kM / (kGridN - 1);

    double worst_oracle_gap = 0.0;
    double worst_lipschitz = 0.0;
    bool all_monotone = true, all_bounded = true;
    bool rule_matches = true;
    double worst_tol = 0.0;

    for (double beta : betas) {
        const double tol = (1.0 + beta) * step;
        worst_tol = std::max(worst_tol, tol);
        for (const Contract& y : corpus) {
            const EnvelopeStats stats = envelope_stats(y, beta, kGridN);
            worst_oracle_gap = std::max(worst_oracle_gap, stats.oracle_gap / tol);
            worst_lipschitz = std::max(worst_lipschitz, stats.lipschitz_excess);
            all_monotone = all_monotone && stats.monotone;
            all_bounded = all_bounded && stats.bounded;

            const SlopeInfo info = max_slope(y);
            const bool rule = info.sup_slope <= 1.0 + beta + 1e-9 && !info.has_jump;
            if (is_manipulation_proof(y, beta, kGridN).proof != rule) rule_matches = false;
        }
    }
    report(1, "envelope-oracle-equivalence", worst_oracle_gap <= 1.0,
           "max gap = " + g12(worst_oracle_gap) + " x (1+beta)*dx over 200 contracts x 3 betas");
    report(2, "envelope-lipschitz-bound",
           worst_lipschitz <= 1e-9 && all_monotone && all_bounded,
           "pairwise excess = " + g12(worst_lipschitz) + ", monotone and Y <= V <= x everywhere");
    report(4, "proofness-slope-characterization", rule_matches,
           std::string("proofness == (slope <= 1+beta and no jump) on the corpus: ") +
               (rule_matches ? "yes" : "NO"));
}

void criterion_3(const std::vector<Contract>& corpus) {
    const Scenario scn = desk();
    const double step = kM / (kGridN - 1);
    int dominated = 0;
    bool price_ok = true, eu_ok = true, identity_ok = true;
    double min_price_gap = std::numeric_limits<double>::infinity();
    double min_eu_gap = std::numeric_limits<double>::infinity();

    for (const Contract& y : corpus) {
        const DominanceReport rep = dominance_check(scn, y);
        if (rep.original.manipulation_probability <= 0.01) continue;
        ++dominated;
        const double dh = rep.original.premium - rep.envelope.premium;
        const double deu = rep.envelope.expected_utility - rep.original.expected_utility;
        min_price_gap = std::min(min_price_gap, dh);
        min_eu_gap = std::min(min_eu_gap, deu);
        if (!(dh > 1e-6)) price_ok = false;
        if (!(deu > 1e-9)) eu_ok = false;

        const Contract env = envelope_exact(y, scn.beta);
        const ClaimInflation plan = best_response_plan(y, scn.beta);
        for (double x : uniform_grid(kM, 501)) {
            const double z = plan.z_of_x(x);
            const double indirect = y(std::min(x + z, kM)) - (1.0 + scn.beta) * z;
            if (std::abs(env(x) - indirect) > (1.0 + scn.beta) * step) {
                identity_ok = false;
                break;
            }
        }
    }
    report(3, "manipulable-contracts-strictly-dominated",
           dominated > 0 && price_ok && eu_ok && identity_ok,
           std::to_string(dominated) + " manipulable contracts; min premium gap = " +
               g12(min_price_gap) + ", min EU gap = " + g12(min_eu_gap) +
               (identity_ok ? ", payoff identity holds" : ", payoff identity BROKEN"));
}

void criterion_5() {
    Scenario scn = desk();
    const SolveResult fair = solve_deductible(scn);
    const double d_fair = std::get<StraightDeductible>(*fair.family).d;

    scn.rho = 0.1;
    const SolveResult loaded = solve_deductible(scn);
    const double d_loaded = std::get<StraightDeductible>(*loaded.family).d;

    bool beats_samples = true;
    for (int k = 0; k < 64; ++k) {
        const double d = (k + 0.5) * kM / 64.0;
        const Contract y = construct(StraightDeductible{d}, kM);
        const double h = premium(y, scn.loss, scn.cost, scn.rho, nullptr, scn.quad_n);
        if (expected_utility(scn, y, h, false) >= loaded.expected_utility) beats_samples = false;
    }

    report(5, "arrow-deductible-vs-loading",
           d_fair <= 1e-4 * kM && d_loaded >= kM / 256.0 && beats_samples,
           "d*(rho=0) = " + g12(d_fair) + ", d*(rho=0.1) = " + g12(d_loaded) +
               (beats_samples ? ", beats 64 sampled deductibles" : ", LOSES to a sampled deductible"));
}

void criterion_6() {
    const Scenario zero_cost = desk();
    const SolveResult ret0 = solve_constant_retention(zero_cost);
    const auto cr0 = std::get<ConstantRetention>(*ret0.family);

    Scenario fixed = desk();
    fixed.cost = FixedPerClaim{0.05};  // 0.05 * E[X]
    const SolveResult ret1 = solve_constant_retention(fixed);
    const auto cr1 = std::get<ConstantRetention>(*ret1.family);
    const SolveResult ded1 = solve_deductible(fixed);
    const double eu_gain = ret1.expected_utility - ded1.expected_utility;

    report(6, "fixed-cost-retention-jump",
           std::abs(cr0.t - cr0.j) <= 2.0 * kM / 128.0 && (cr1.t - cr1.j) >= kM / 128.0 &&
               eu_gain > 1e-8,
           "jump(c0=0) = " + g12(cr0.t - cr0.j) + ", jump(c0=0.05E[X]) = " + g12(cr1.t - cr1.j) +
               ", EU gain over deductible = " + g12(eu_gain));
}

void criterion_7() {
    Scenario fixed = desk();
    fixed.cost = FixedPerClaim{0.1};  // 0.1 * E[X]
    const double d_fixed = std::get<StraightDeductible>(*solve_deductible(fixed).family).d;
    const JumpImprovementReport with_cost = epsilon_improvement(fixed, d_fixed, 0.01 * kM);

    Scenario frictionless = desk();
    frictionless.rho = 0.1;  // interior deductible so eps < d_star
    const double d_free = std::get<StraightDeductible>(*solve_deductible(frictionless).family).d;
    bool none_improve = true;
    for (double eps_scale : {0.01, 0.05, 0.1}) {
        if (epsilon_improvement(frictionless, d_free, eps_scale * kM).improved) none_improve = false;
    }

    report(7, "epsilon-jump-improvement", with_cost.improved && none_improve,
           "gain(c0=0.1E[X], eps=0.01M) = " + g12(with_cost.eu_improved - with_cost.eu_base) +
               (none_improve ? ", no improvement anywhere at c0=0" : ", UNEXPECTED improvement at c0=0"));
}

void criterion_8() {
    Scenario scn = desk();
    scn.cost = FixedPerClaim{0.1};
    const SolveResult ded = solve_deductible(scn);
    const SolveResult pwl = solve_problem_s_pwl(scn, 3);
    const double eu_gap = std::abs(pwl.expected_utility - ded.expected_utility);
    double sup_norm = 0.0;
    for (double x : uniform_grid(kM, 2001)) {
        sup_norm = std::max(sup_norm, std::abs(pwl.contract(x) - ded.contract(x)));
    }
    const double terminal = pwl.contract.segments().back().slope;

    const Contract env = envelope_exact(construct(DisappearingDeductible{2.0}, kM), 0.0);
    double env_gap = 0.0;
    for (double x : uniform_grid(kM, kGridN)) env_gap = std::max(env_gap, std::abs(env(x) - x));

    report(8, "free-knot-search-reverts-to-deductible",
           eu_gap <= 1e-6 && sup_norm <= 5e-3 * kM && std::abs(terminal - 1.0) <= 1e-6 &&
               env_gap <= kM / (kGridN - 1),
           "EU gap = " + g12(eu_gap) + ", sup norm = " + g12(sup_norm) + ", terminal slope = " +
               g12(terminal) + ", disappearing-envelope gap = " + g12(env_gap));
}

void criterion_9() {
    const LossModel loss(kM, 0.5, UniformDensity{});
    const Contract full = construct(FullInsurance{}, kM);
    const Contract sd2 = construct(StraightDeductible{2.0}, kM);
    const double h_fair = premium(full, loss, ZeroCost{}, 0.0);
    const double h_loaded = premium(full, loss, ZeroCost{}, 0.1);
    const double h_fixed = premium(sd2, loss, FixedPerClaim{0.1}, 0.0);
    const bool ok = std::abs(h_fair - 1.0) <= 1e-8 && std::abs(h_loaded - 1.1) <= 1e-8 &&
                    std::abs(h_fixed - 0.275) <= 1e-8;
    report(9, "closed-form-premiums", ok,
           "H(full, rho=0) = " + g12(h_fair) + ", H(full, rho=0.1) = " + g12(h_loaded) +
               ", H(d=2, c0=0.1) = " + g12(h_fixed));
}

void criterion_10() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "arson_acceptance";
    fs::create_directories(dir);
    auto run = [&](const fs::path& report_path, const fs::path& stdout_path) {
        const std::string cmd = std::string(ARSON_CLI_PATH) + " verify --scenario " +
                                std::string(ARSON_SUITE_PATH) + " --out " + report_path.string() +
                                " > " + stdout_path.string() + " 2>&1";
        const int raw = std::system(cmd.c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const int rc1 = run(dir / "report1.json", dir / "stdout1.txt");
    const int rc2 = run(dir / "report2.json", dir / "stdout2.txt");
    const bool identical = slurp(dir / "report1.json") == slurp(dir / "report2.json") &&
                           slurp(dir / "stdout1.txt") == slurp(dir / "stdout2.txt");
    const bool nonempty = !slurp(dir / "report1.json").empty();
    report(10, "cli-verify-deterministic", rc1 == 0 && rc2 == 0 && identical && nonempty,
           "exit codes " + std::to_string(rc1) + "/" + std::to_string(rc2) +
               (identical ? ", byte-identical reports" : ", reports DIFFER"));
}

}  // namespace

int main() {
    const std::vector<Contract> corpus = testsupport::random_contracts(200, kCorpusSeed, kM, 6);

    criterion_1_2_4(corpus);
    criterion_3(corpus);
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();

    std::printf("%d of 10 criteria passed\n", 10 - g_failures);
    return g_failures;
}
