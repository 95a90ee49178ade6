#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "arson/contract.hpp"
#include "arson/manipulation.hpp"
#include "arson/quadrature.hpp"

namespace arson {

constexpr int kDefaultQuadN = 32;

/// Thrown when an integrand misbehaves at a quadrature node.
class IntegrationError : public std::domain_error {
public:
    IntegrationError(const std::string& what, double x)
        : std::domain_error(what + " at x = " + std::to_string(x)), x_(x) {}
    double x() const { return x_; }

private:
    double x_;
};

// ---------------------------------------------------------------------------
// Loss distributions
// ---------------------------------------------------------------------------

struct UniformDensity {};

struct TruncatedExponential {
    double rate = 1.0;
};

struct TruncatedLognormal {
    double mu = 0.0;
    double sigma = 1.0;
};

using LossDensity = std::variant<UniformDensity, TruncatedExponential, TruncatedLognormal>;

/// Mixed loss distribution on [0, M]: an atom p0 at zero (no accident) plus
/// a continuous density on (0, M], rescaled so total mass is one.
class LossModel {
public:
    LossModel(double domain_max, double p0, LossDensity density)
        : domain_max_(domain_max), p0_(p0), density_(density) {
        if (!(domain_max_ > 0.0)) throw std::invalid_argument("LossModel: domain_max must be > 0");
        if (!(p0_ >= 0.0 && p0_ < 1.0)) throw std::invalid_argument("LossModel: p0 must lie in [0, 1)");
        if (const auto* e = std::get_if<TruncatedExponential>(&density_)) {
            if (!(e->rate > 0.0)) throw std::invalid_argument("LossModel: exponential rate must be > 0");
        }
        if (const auto* l = std::get_if<TruncatedLognormal>(&density_)) {
            if (!(l->sigma > 0.0)) throw std::invalid_argument("LossModel: lognormal sigma must be > 0");
        }
    }

    double domain_max() const { return domain_max_; }
    double atom() const { return p0_; }
    const LossDensity& density() const { return density_; }

    /// Continuous part of the law; integrates to 1 - p0 over (0, M].
    double density_at(double x) const {
        const double scale = 1.0 - p0_;
        struct Eval {
            double x, m;
            double operator()(const UniformDensity&) const { return 1.0 / m; }
            double operator()(const TruncatedExponential& e) const {
                return e.rate * std::exp(-e.rate * x) / (1.0 - std::exp(-e.rate * m));
            }
            double operator()(const TruncatedLognormal& l) const {
                const double t = (std::log(x) - l.mu) / l.sigma;
                const double pdf = std::exp(-0.5 * t * t) /
                                   (x * l.sigma * std::sqrt(2.0 * std::numbers::pi));
                const double tm = (std::log(m) - l.mu) / l.sigma;
                const double cdf_m = 0.5 * std::erfc(-tm / std::numbers::sqrt2);
                return pdf / cdf_m;
            }
        };
        return scale * std::visit(Eval{x, domain_max_}, density_);
    }

private:
    double domain_max_;
    double p0_;
    LossDensity density_;
};

// ---------------------------------------------------------------------------
// Administrative cost of honouring a claim
// ---------------------------------------------------------------------------

struct ZeroCost {};

/// c(y) = c0 for every paid claim y > 0, c(0) = 0. The insured files a
/// claim if and only if the schedule pays.
struct FixedPerClaim {
    double c0 = 0.0;
};

struct LinearCost {
    double kappa = 0.0;  ///< c(y) = kappa * y
};

struct QuadraticCost {
    double kappa = 0.0;  ///< c(y) = kappa * y^2
};

using CostModel = std::variant<ZeroCost, FixedPerClaim, LinearCost, QuadraticCost>;

inline void validate(const CostModel& cost) {
    if (const auto* f = std::get_if<FixedPerClaim>(&cost)) {
        if (!(f->c0 > 0.0)) throw std::invalid_argument("FixedPerClaim: c0 must be > 0");
    }
    if (const auto* l = std::get_if<LinearCost>(&cost)) {
        if (l->kappa < 0.0) throw std::invalid_argument("LinearCost: kappa must be >= 0");
    }
    if (const auto* q = std::get_if<QuadraticCost>(&cost)) {
        if (q->kappa < 0.0) throw std::invalid_argument("QuadraticCost: kappa must be >= 0");
    }
}

/// Administrative cost of paying indemnity y.
inline double claim_cost(const CostModel& cost, double indemnity) {
    struct Eval {
        double y;
        double operator()(const ZeroCost&) const { return 0.0; }
        double operator()(const FixedPerClaim& f) const { return y > 0.0 ? f.c0 : 0.0; }
        double operator()(const LinearCost& l) const { return l.kappa * y; }
        double operator()(const QuadraticCost& q) const { return q.kappa * y * y; }
    };
    return std::visit(Eval{indemnity}, cost);
}

/// Upper bound of c over indemnities up to M; used for wealth guards.
inline double claim_cost_bound(const CostModel& cost, double domain_max) {
    struct Eval {
        double m;
        double operator()(const ZeroCost&) const { return 0.0; }
        double operator()(const FixedPerClaim& f) const { return f.c0; }
        double operator()(const LinearCost& l) const { return l.kappa * m; }
        double operator()(const QuadraticCost& q) const { return q.kappa * m * m; }
    };
    return std::visit(Eval{domain_max}, cost);
}

// ---------------------------------------------------------------------------
// Integration against the mixed law
// ---------------------------------------------------------------------------

/// Expectation of fn(X) under the mixed law: atom contribution plus
/// composite Gauss-Legendre panels over (0, M]. Panel boundaries include
/// every supplied knot (contract kinks and jumps must be passed here so the
/// integrand stays smooth inside each panel). Deterministic for a fixed
/// quad_n.
template <class Fn>
double integrate(Fn&& fn, const LossModel& loss, const std::vector<double>& panel_knots,
                 int quad_n = kDefaultQuadN) {
    if (quad_n < 16) throw std::invalid_argument("integrate: quad_n must be >= 16");
    const double m = loss.domain_max();

    std::vector<double> knots;
    knots.reserve(panel_knots.size() + 2);
    knots.push_back(0.0);
    for (double k : panel_knots) {
        if (k > 0.0 && k < m) knots.push_back(k);
    }
    knots.push_back(m);
    std::sort(knots.begin(), knots.end());

    const double atom_value = fn(0.0);
    if (!std::isfinite(atom_value)) throw IntegrationError("integrate: non-finite integrand", 0.0);
    double total = loss.atom() * atom_value;

    const GaussLegendreRule& rule = gauss_legendre(quad_n);
    const double min_panel = 1e-12 * std::max(1.0, m);
    for (std::size_t p = 0; p + 1 < knots.size(); ++p) {
        const double a = knots[p];
        const double b = knots[p + 1];
        if (b - a <= min_panel) continue;
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        double panel = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double x = mid + half * rule.nodes[q];
            const double v = fn(x);
            if (!std::isfinite(v)) throw IntegrationError("integrate: non-finite integrand", x);
            panel += rule.weights[q] * v * loss.density_at(x);
        }
        total += half * panel;
    }
    return total;
}

/// Mean of the loss distribution.
inline double loss_mean(const LossModel& loss, int quad_n = kDefaultQuadN) {
    return integrate([](double x) { return x; }, loss, {}, quad_n);
}

// ---------------------------------------------------------------------------
// Premium under the binding participation constraint
// ---------------------------------------------------------------------------

/// Stage-3 claim-inflation plan used when pricing a manipulable contract:
/// z_of_x maps a loss to the insured's chosen extra damage, and extra_knots
/// lists the points where the plan changes regime so quadrature panels can
/// be aligned with them.
struct ClaimInflation {
    std::function<double(double)> z_of_x;
    std::vector<double> extra_knots;
};

/// Builds the exact best-response plan for a contract. Regime switches of
/// the best response happen at kinks of either the schedule or its stage-3
/// value function, so both sets are exported as panel knots.
inline ClaimInflation best_response_plan(const Contract& y, double beta, double tie_tol = -1.0) {
    if (tie_tol < 0.0) tie_tol = default_tie_tol(y.domain_max());
    ClaimInflation plan;
    plan.z_of_x = [y, beta, tie_tol](double x) { return detail::exact_best_z(y, x, beta, tie_tol); };
    plan.extra_knots = y.interior_breakpoints();
    for (double k : envelope_exact(y, beta).interior_breakpoints()) plan.extra_knots.push_back(k);
    return plan;
}

/// E[Y(X + z) + c(Y(X + z))] for z identically zero (honest claims) or the
/// supplied inflation plan.
inline double expected_indemnity_cost(const Contract& y, const LossModel& loss,
                                      const CostModel& cost,
                                      const ClaimInflation* manipulated = nullptr,
                                      int quad_n = kDefaultQuadN) {
    validate(cost);
    std::vector<double> knots = y.interior_breakpoints();
    if (manipulated) {
        knots.insert(knots.end(), manipulated->extra_knots.begin(), manipulated->extra_knots.end());
    }
    auto fn = [&](double x) {
        const double z = manipulated ? manipulated->z_of_x(x) : 0.0;
        const double paid = y(std::min(x + z, y.domain_max()));
        return paid + claim_cost(cost, paid);
    };
    return integrate(fn, loss, knots, quad_n);
}

/// Premium from the binding participation constraint:
/// H = (1 + rho) E[Y(X+z) + c(Y(X+z))].
inline double premium(const Contract& y, const LossModel& loss, const CostModel& cost,
                      double rho, const ClaimInflation* manipulated = nullptr,
                      int quad_n = kDefaultQuadN) {
    if (rho < 0.0) throw std::invalid_argument("premium: rho must be >= 0");
    return (1.0 + rho) * expected_indemnity_cost(y, loss, cost, manipulated, quad_n);
}

/// Probability that the insured inflates the claim (z > 0) under the plan.
inline double manipulation_probability(const Contract& y, const LossModel& loss,
                                       const ClaimInflation& plan, int quad_n = kDefaultQuadN) {
    const double z_eps = default_tie_tol(y.domain_max());
    std::vector<double> knots = y.interior_breakpoints();
    knots.insert(knots.end(), plan.extra_knots.begin(), plan.extra_knots.end());
    auto fn = [&](double x) { return plan.z_of_x(x) > z_eps ? 1.0 : 0.0; };
    const double p = integrate(fn, loss, knots, quad_n);
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace arson
