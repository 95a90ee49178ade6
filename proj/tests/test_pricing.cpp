#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "arson/pricing.hpp"
#include "arson/quadrature.hpp"
#include "support/corpus.hpp"

using namespace arson;

namespace {
constexpr double kM = 4.0;

LossModel half_atom_uniform() { return LossModel(kM, 0.5, UniformDensity{}); }
}  // namespace

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
    const GaussLegendreRule& rule = gauss_legendre(8);
    for (int k = 0; k <= 15; ++k) {
        double got = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            got += rule.weights[i] * std::pow(rule.nodes[i], k);
        }
        const double want = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
        CHECK(std::abs(got - want) <= 1e-14);
    }
}

TEST_CASE("total probability mass is one for every density") {
    auto one = [](double) { return 1.0; };
    for (double p0 : {0.0, 0.3, 0.5}) {
        CHECK(std::abs(integrate(one, LossModel(kM, p0, UniformDensity{}), {}) - 1.0) <= 1e-10);
        CHECK(std::abs(integrate(one, LossModel(kM, p0, TruncatedExponential{1.0}), {}) - 1.0) <=
              1e-10);
        CHECK(std::abs(integrate(one, LossModel(kM, p0, TruncatedLognormal{0.0, 0.5}), {}) - 1.0) <=
              1e-10);
    }
}

TEST_CASE("mixture moments match closed forms") {
    const LossModel loss = half_atom_uniform();
    // E[X] = p0*0 + (1-p0) * M/2 = 1.
    CHECK(std::abs(integrate([](double x) { return x; }, loss, {}) - 1.0) <= 1e-10);
    // E[(X-2)+] = (1/8) * int_2^4 (x-2) dx = 0.25.
    CHECK(std::abs(integrate([](double x) { return std::max(0.0, x - 2.0); }, loss, {2.0}) - 0.25) <=
          1e-10);
    // Truncated exponential mean: (1-p0)(1 - (1+rM)e^{-rM}) / (r (1 - e^{-rM})).
    const double r = 1.0;
    const LossModel exp_loss(kM, 0.5, TruncatedExponential{r});
    const double want =
        0.5 * (1.0 - (1.0 + r * kM) * std::exp(-r * kM)) / (r * (1.0 - std::exp(-r * kM)));
    CHECK(std::abs(loss_mean(exp_loss) - want) <= 1e-10);
}

TEST_CASE("integration reports the offending node for bad integrands") {
    const LossModel loss = half_atom_uniform();
    auto bad = [](double x) { return x > 1.0 ? std::numeric_limits<double>::infinity() : 1.0; };
    CHECK_THROWS_AS(integrate(bad, loss, {}), IntegrationError);
}

TEST_CASE("loss model validation") {
    CHECK_THROWS_AS(LossModel(kM, 1.0, UniformDensity{}), std::invalid_argument);
    CHECK_THROWS_AS(LossModel(kM, -0.1, UniformDensity{}), std::invalid_argument);
    CHECK_THROWS_AS(LossModel(0.0, 0.5, UniformDensity{}), std::invalid_argument);
    CHECK_THROWS_AS(LossModel(kM, 0.5, TruncatedExponential{0.0}), std::invalid_argument);
    CHECK_THROWS_AS(LossModel(kM, 0.5, TruncatedLognormal{0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(validate(CostModel(FixedPerClaim{0.0})), std::invalid_argument);
    CHECK_THROWS_AS(validate(CostModel(LinearCost{-0.1})), std::invalid_argument);
}

TEST_CASE("expected indemnity and premium reproduce closed forms") {
    const LossModel loss = half_atom_uniform();

    SECTION("full insurance pays the mean") {
        const Contract y = construct(FullInsurance{}, kM);
        CHECK(std::abs(expected_indemnity_cost(y, loss, ZeroCost{}) - 1.0) <= 1e-10);
        CHECK(std::abs(premium(y, loss, ZeroCost{}, 0.0) - 1.0) <= 1e-8);
        CHECK(std::abs(premium(y, loss, ZeroCost{}, 0.1) - 1.1) <= 1e-8);
    }
    SECTION("deductible with a fixed cost per claim") {
        // E[(X-2)+] + c0 P[X > 2] = 0.25 + 0.1 * 0.25 = 0.275.
        const Contract y = construct(StraightDeductible{2.0}, kM);
        CHECK(std::abs(expected_indemnity_cost(y, loss, FixedPerClaim{0.1}) - 0.275) <= 1e-8);
    }
    SECTION("manipulated constant retention costs more than its envelope") {
        const Contract cr = construct(ConstantRetention{2.0, 1.0}, kM);
        const Contract sd = construct(StraightDeductible{1.0}, kM);
        const ClaimInflation plan = best_response_plan(cr, 0.0);
        const double manipulated = expected_indemnity_cost(cr, loss, ZeroCost{}, &plan);
        const double honest_envelope = expected_indemnity_cost(sd, loss, ZeroCost{});
        // Jumping turns every claim on (1, 2) into the threshold payment 1:
        // E = int_1^2 1/8 + int_2^4 (x-1)/8 = 0.625 vs 0.5625 honest.
        CHECK(std::abs(manipulated - 0.625) <= 1e-8);
        CHECK(std::abs(honest_envelope - 0.5625) <= 1e-8);
        CHECK(manipulated > honest_envelope + 0.05);
        // The wasted damage is E[z] = int_1^2 (2-x)/8 = 0.0625.
        const double premium_gap = premium(cr, loss, ZeroCost{}, 0.0, &plan) -
                                   premium(sd, loss, ZeroCost{}, 0.0);
        CHECK(std::abs(premium_gap - 0.0625) <= 1e-8);
    }
}

TEST_CASE("pointwise-larger contracts carry weakly larger premiums") {
    for (const Contract& y : testsupport::random_contracts(60, 30901)) {
        const Contract env = envelope_exact(y, 0.25);  // dominates y pointwise
        for (const CostModel cost :
             {CostModel(ZeroCost{}), CostModel(FixedPerClaim{0.07}), CostModel(LinearCost{0.2})}) {
            const double h_low = premium(y, half_atom_uniform(), cost, 0.1);
            const double h_high = premium(env, half_atom_uniform(), cost, 0.1);
            CHECK(h_high >= h_low - 1e-12);
        }
    }
}

TEST_CASE("doubling quadrature nodes leaves family premiums unchanged") {
    const LossModel losses[] = {half_atom_uniform(), LossModel(kM, 0.3, TruncatedExponential{0.8}),
                                LossModel(kM, 0.5, TruncatedLognormal{-0.2, 0.6})};
    const FamilySpec families[] = {FullInsurance{},          StraightDeductible{1.5},
                                   Coinsurance{0.7},         Mixed{1.0, 0.5, 0.5},
                                   DisappearingDeductible{2.0}, ConstantRetention{2.0, 1.0}};
    for (const LossModel& loss : losses) {
        for (const FamilySpec& spec : families) {
            const Contract y = construct(spec, kM);
            const double h32 = premium(y, loss, FixedPerClaim{0.1}, 0.1, nullptr, 32);
            const double h64 = premium(y, loss, FixedPerClaim{0.1}, 0.1, nullptr, 64);
            CHECK(std::abs(h64 - h32) < 1e-6 * kM);
        }
    }
}

TEST_CASE("premiums scale linearly with the monetary unit") {
    const double s = 2.5;
    const LossModel base(kM, 0.5, UniformDensity{});
    const LossModel scaled(s * kM, 0.5, UniformDensity{});
    struct Case {
        FamilySpec small;
        FamilySpec big;
    };
    const Case cases[] = {
        {StraightDeductible{1.5}, StraightDeductible{s * 1.5}},
        {ConstantRetention{2.0, 1.0}, ConstantRetention{s * 2.0, s * 1.0}},
        {Mixed{1.0, 0.5, 0.5}, Mixed{s * 1.0, 0.5, s * 0.5}},
    };
    for (const Case& c : cases) {
        for (double c0 : {0.0, 0.1}) {
            const CostModel cost_small = c0 > 0.0 ? CostModel(FixedPerClaim{c0}) : CostModel(ZeroCost{});
            const CostModel cost_big =
                c0 > 0.0 ? CostModel(FixedPerClaim{s * c0}) : CostModel(ZeroCost{});
            const double h_small = premium(construct(c.small, kM), base, cost_small, 0.1);
            const double h_big = premium(construct(c.big, s * kM), scaled, cost_big, 0.1);
            CHECK(std::abs(h_big - s * h_small) <= 1e-9 * s * kM);
        }
    }
}
