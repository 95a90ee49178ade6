#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "arson/contract.hpp"

namespace arson {

constexpr int kDefaultGridN = 2001;

/// Default tie tolerance for "indifferent" stage-3 actions.
inline double default_tie_tol(double domain_max) { return 1e-9 * domain_max; }

namespace detail {

/// Candidate extra-damage values for a loss x: z = 0, the shifted contract
/// breakpoints, and M - x. The stage-3 objective is linear between
/// consecutive candidates, so its maximum over [0, M - x] is attained here.
inline std::vector<double> kink_candidates(const Contract& y, double x) {
    const double m = y.domain_max();
    std::vector<double> zs;
    zs.push_back(0.0);
    for (double b : y.interior_breakpoints()) {
        if (b > x && b < m) zs.push_back(b - x);
    }
    if (m - x > 0.0) zs.push_back(m - x);
    return zs;
}

/// Smallest maximizer of z -> Y(x+z) - (1+beta) z over the kink candidates.
inline double exact_best_z(const Contract& y, double x, double beta, double tie_tol) {
    const double cost = 1.0 + beta;
    double best_z = 0.0;
    double best_p = y(x);
    for (double z : kink_candidates(y, x)) {
        const double p = y(x + z) - cost * z;
        if (p > best_p + tie_tol) {
            best_p = p;
            best_z = z;
        }
    }
    return best_z;
}

}  // namespace detail

/// Outcome of the insured's stage-3 problem at a given loss.
struct ManipulationOutcome {
    double z_star = 0.0;   ///< chosen extra damage (smallest maximizer)
    double payoff = 0.0;   ///< Y(x + z*) - z* - g(z*)
    std::vector<std::pair<double, double>> argmax_set;  ///< tie intervals [lo, hi]
    bool zero_is_optimal = false;
};

/// Best response of the insured after observing loss x: maximizes
/// Y(x+z) - (1+beta) z over z in [0, M-x] on a uniform grid augmented with
/// the shifted contract breakpoints. Ties within tie_tol resolve to the
/// smallest z (the insurer's favoured action: smaller claims cost less to
/// honour when Y and c are non-decreasing).
inline ManipulationOutcome best_response(const Contract& y, double x, double beta,
                                         int grid_n = kDefaultGridN, double tie_tol = -1.0) {
    const double m = y.domain_max();
    if (x < 0.0 || x > m) {
        throw std::domain_error("best_response: x outside [0, domain_max]");
    }
    if (grid_n < 2) throw std::invalid_argument("best_response: grid_n must be >= 2");
    if (tie_tol < 0.0) tie_tol = default_tie_tol(m);
    const double cost = 1.0 + beta;
    const double span = m - x;

    std::vector<double> zs;
    zs.reserve(static_cast<std::size_t>(grid_n) + y.segments().size() + 1);
    for (int i = 0; i < grid_n; ++i) zs.push_back(span * i / (grid_n - 1));
    for (double b : y.interior_breakpoints()) {
        if (b > x) zs.push_back(b - x);
    }
    std::sort(zs.begin(), zs.end());
    zs.erase(std::unique(zs.begin(), zs.end()), zs.end());

    std::vector<double> payoffs(zs.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < zs.size(); ++i) {
        payoffs[i] = y(x + zs[i]) - cost * zs[i];
        best = std::max(best, payoffs[i]);
    }

    ManipulationOutcome out;
    out.payoff = best;
    out.zero_is_optimal = payoffs[0] >= best - tie_tol;

    // Adjacent tied candidates bound an interval of maximizers: with all
    // kinks present as candidates the payoff is linear in between.
    bool in_run = false;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        const bool tie = payoffs[i] >= best - tie_tol;
        if (tie && !in_run) {
            out.argmax_set.emplace_back(zs[i], zs[i]);
            in_run = true;
        } else if (tie) {
            out.argmax_set.back().second = zs[i];
        } else {
            in_run = false;
        }
    }
    out.z_star = out.argmax_set.front().first;
    return out;
}

/// A function sampled on a uniform grid over [0, M].
struct SampledFunction {
    std::vector<double> x;
    std::vector<double> value;
};

inline std::vector<double> uniform_grid(double domain_max, int grid_n) {
    if (grid_n < 2) throw std::invalid_argument("uniform_grid: grid_n must be >= 2");
    std::vector<double> xs(static_cast<std::size_t>(grid_n));
    for (int i = 0; i < grid_n; ++i) xs[static_cast<std::size_t>(i)] = domain_max * i / (grid_n - 1);
    return xs;
}

/// Reference value function by exhaustive search: for every grid point x_i,
/// scans every grid point and contract breakpoint to the right of x_i.
/// Quadratic in grid_n; kept deliberately naive as the oracle against which
/// the analytic envelope constructions are checked.
inline SampledFunction value_function_oracle(const Contract& y, double beta,
                                             int grid_n = kDefaultGridN) {
    const double m = y.domain_max();
    const double cost = 1.0 + beta;
    SampledFunction out;
    out.x = uniform_grid(m, grid_n);
    out.value.resize(out.x.size());

    std::vector<double> y_grid(out.x.size());
    for (std::size_t i = 0; i < out.x.size(); ++i) y_grid[i] = y(out.x[i]);
    const std::vector<double> bps = y.interior_breakpoints();
    std::vector<double> y_bps(bps.size());
    for (std::size_t k = 0; k < bps.size(); ++k) y_bps[k] = y(bps[k]);

    for (std::size_t i = 0; i < out.x.size(); ++i) {
        const double xi = out.x[i];
        double best = y_grid[i];
        for (std::size_t j = i + 1; j < out.x.size(); ++j) {
            best = std::max(best, y_grid[j] - cost * (out.x[j] - xi));
        }
        for (std::size_t k = 0; k < bps.size(); ++k) {
            if (bps[k] > xi) best = std::max(best, y_bps[k] - cost * (bps[k] - xi));
        }
        out.value[i] = best;
    }
    return out;
}

/// Value function through the backward recursion
/// V(x_i) = max{ Y(x_i), V(x_{i+1}) - (1+beta) dx } with V(M) = Y(M).
/// Agrees with value_function_oracle to within (1+beta) dx.
inline SampledFunction envelope_backward(const Contract& y, double beta,
                                         int grid_n = kDefaultGridN) {
    const double m = y.domain_max();
    const double cost = 1.0 + beta;
    SampledFunction out;
    out.x = uniform_grid(m, grid_n);
    out.value.resize(out.x.size());
    const double step = m / (grid_n - 1);
    out.value.back() = y(m);
    for (std::size_t i = out.x.size() - 1; i-- > 0;) {
        out.value[i] = std::max(y(out.x[i]), out.value[i + 1] - cost * step);
    }
    return out;
}

/// Exact piecewise-linear value function of the stage-3 problem: the
/// smallest schedule above Y whose increase is capped at slope 1+beta.
/// Sweeps the segments right to left; wherever Y rises faster than the cap
/// (steep slope or upward jump) the output follows a line of slope exactly
/// 1+beta anchored on the right. The result is a valid Contract: it
/// dominates Y, stays below the identity, and has no jumps.
inline Contract envelope_exact(const Contract& y, double beta) {
    const double cap = 1.0 + beta;
    const SlopeInfo info = max_slope(y);
    if (!info.has_jump && info.sup_slope <= cap) return y;

    const double m = y.domain_max();
    const double snap = 1e-12 * std::max(1.0, m);
    const auto& segs = y.segments();

    std::vector<Segment> rev;  // built right to left
    double v_right = y(m);
    for (std::size_t k = segs.size(); k-- > 0;) {
        const Segment& s = segs[k];
        // g = Y - capline on this piece; capline(x) = v_right - cap*(x_end - x).
        const double g_end = s.left_limit() - v_right;        // <= ~0 always
        const double g_start = s.intercept - (v_right - cap * s.length());
        if (g_start <= snap) {
            // Cap line dominates across the whole piece.
            rev.push_back(Segment{s.x_start, s.x_end, v_right - cap * s.length(), cap});
            v_right = rev.back().intercept;
            continue;
        }
        // Y dominates at the left end; find where the cap line takes over.
        const double xc = s.x_start + s.length() * g_start / (g_start - g_end);
        if (xc >= s.x_end - snap) {
            rev.push_back(s);
        } else {
            rev.push_back(Segment{xc, s.x_end, s.value_at(xc), cap});
            rev.push_back(Segment{s.x_start, xc, s.intercept, s.slope});
        }
        v_right = s.intercept;
    }

    std::vector<Segment> out(rev.rbegin(), rev.rend());
    // Merge neighbours that continue the same line.
    std::vector<Segment> merged;
    for (const Segment& s : out) {
        if (!merged.empty() && merged.back().slope == s.slope &&
            std::abs(merged.back().left_limit() - s.intercept) <= snap) {
            merged.back().x_end = s.x_end;
        } else {
            merged.push_back(s);
        }
    }
    return Contract(m, std::move(merged));
}

struct ProofnessWitness {
    double x = 0.0;     ///< loss at which inflating the claim pays
    double z = 0.0;     ///< a profitable extra damage
    double gain = 0.0;  ///< payoff improvement over filing honestly
};

struct ProofnessResult {
    bool proof = false;
    std::optional<ProofnessWitness> witness;
    explicit operator bool() const { return proof; }
};

/// A contract is manipulation-proof when z = 0 is a stage-3 best response
/// at every loss. Checks every grid point (and breakpoint) against the
/// exact kink-candidate maximum; tol defaults to (1+beta) * grid step.
inline ProofnessResult is_manipulation_proof(const Contract& y, double beta,
                                             int grid_n = kDefaultGridN, double tol = -1.0) {
    const double m = y.domain_max();
    const double cost = 1.0 + beta;
    if (grid_n < 2) throw std::invalid_argument("is_manipulation_proof: grid_n must be >= 2");
    if (tol < 0.0) tol = cost * m / (grid_n - 1);

    std::vector<double> xs = uniform_grid(m, grid_n);
    for (double b : y.interior_breakpoints()) xs.push_back(b);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    ProofnessResult result;
    result.proof = true;
    for (double x : xs) {
        const double honest = y(x);
        for (double z : detail::kink_candidates(y, x)) {
            const double gain = y(x + z) - cost * z - honest;
            if (gain > tol) {
                result.proof = false;
                result.witness = ProofnessWitness{x, z, gain};
                return result;
            }
        }
    }
    return result;
}

}  // namespace arson
