#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "arson/serialization.hpp"
#include "support/corpus.hpp"

using namespace arson;

namespace {

nlohmann::json desk_scenario_json() {
    return nlohmann::json::parse(R"({
      "W0": 10.0, "rho": 0.0, "beta": 0.0,
      "utility": {"type": "crra", "gamma": 2.0},
      "loss": {"M": 4.0, "p0": 0.5, "density": {"type": "uniform"}},
      "cost": {"type": "zero"},
      "grid_n": 2001, "quad_n": 32
    })");
}

}  // namespace

TEST_CASE("family specs round-trip through tagged JSON byte-identically") {
    const FamilySpec specs[] = {FullInsurance{},          StraightDeductible{2.0},
                                Coinsurance{0.35},        Mixed{1.0, 0.5, 0.5},
                                DisappearingDeductible{2.0}, ConstantRetention{2.0, 1.0}};
    for (const FamilySpec& spec : specs) {
        const std::string text = to_json(spec).dump();
        const FamilySpec parsed = family_from_json(nlohmann::json::parse(text));
        CHECK(to_json(parsed).dump() == text);
    }
}

TEST_CASE("contracts round-trip with exact decimal text") {
    for (const Contract& y : testsupport::random_contracts(40, 120401)) {
        const std::string text = to_json(y).dump();
        const Contract parsed = contract_from_json(nlohmann::json::parse(text));
        REQUIRE(parsed.segments().size() == y.segments().size());
        for (std::size_t i = 0; i < y.segments().size(); ++i) {
            CHECK(parsed.segments()[i] == y.segments()[i]);
        }
        CHECK(to_json(parsed).dump() == text);
    }
    // Values that do not have short decimal forms survive as well.
    const Contract y = construct(DisappearingDeductible{1.0 / 3.0}, 4.0);
    const std::string text = to_json(y).dump();
    CHECK(to_json(contract_from_json(nlohmann::json::parse(text))).dump() == text);
}

TEST_CASE("scenario files parse and validate strictly") {
    nlohmann::json doc{{"schema_version", 1}, {"scenario", desk_scenario_json()}};

    SECTION("minimal solve file has no contract") {
        const ScenarioFile f = scenario_file_from_json(doc);
        CHECK_FALSE(f.contract.has_value());
        CHECK_THROWS_AS(f.require_contract(), SchemaError);
    }
    SECTION("family contract") {
        doc["contract"] = {{"type", "constant_retention"}, {"params", {{"t", 2.0}, {"j", 1.0}}}};
        const ScenarioFile f = scenario_file_from_json(doc);
        CHECK(f.require_contract()(2.0) == 1.0);
    }
    SECTION("explicit segments") {
        doc["contract"] = {{"domain_max", 4.0},
                           {"segments", nlohmann::json::array({{{"x_start", 0.0},
                                                                {"x_end", 4.0},
                                                                {"intercept", 0.0},
                                                                {"slope", 1.0}}})}};
        const ScenarioFile f = scenario_file_from_json(doc);
        CHECK(f.require_contract()(3.0) == 3.0);
    }
    SECTION("unknown keys are rejected everywhere") {
        doc["extra"] = 1;
        CHECK_THROWS_AS(scenario_file_from_json(doc), SchemaError);
        doc.erase("extra");
        doc["scenario"]["typo"] = true;
        CHECK_THROWS_AS(scenario_file_from_json(doc), SchemaError);
        doc["scenario"].erase("typo");
        doc["scenario"]["loss"]["skew"] = 2.0;
        CHECK_THROWS_AS(scenario_file_from_json(doc), SchemaError);
    }
    SECTION("missing and mistyped keys are schema errors") {
        nlohmann::json broken = doc;
        broken["scenario"].erase("W0");
        CHECK_THROWS_AS(scenario_file_from_json(broken), SchemaError);
        broken = doc;
        broken["scenario"]["rho"] = "zero";
        CHECK_THROWS_AS(scenario_file_from_json(broken), SchemaError);
        broken = doc;
        broken["schema_version"] = 2;
        CHECK_THROWS_AS(scenario_file_from_json(broken), SchemaError);
    }
    SECTION("unknown family tag") {
        doc["contract"] = {{"type", "teleporting_deductible"}, {"params", {{"d", 1.0}}}};
        CHECK_THROWS_AS(scenario_file_from_json(doc), SchemaError);
    }
    SECTION("invalid parameters surface as schema errors") {
        doc["contract"] = {{"type", "constant_retention"}, {"params", {{"t", 1.0}, {"j", 2.0}}}};
        CHECK_THROWS_AS(scenario_file_from_json(doc), SchemaError);
        doc["contract"] = {{"type", "full_insurance"}, {"params", nlohmann::json::object()}};
        doc["scenario"]["W0"] = 1.0;  // fails the wealth guard
        CHECK_THROWS_AS(scenario_file_from_json(doc), SchemaError);
    }
    SECTION("contract domain must match the loss model") {
        doc["contract"] = {{"domain_max", 3.0},
                           {"segments", nlohmann::json::array({{{"x_start", 0.0},
                                                                {"x_end", 3.0},
                                                                {"intercept", 0.0},
                                                                {"slope", 1.0}}})}};
        CHECK_THROWS_AS(scenario_file_from_json(doc), SchemaError);
    }
}

TEST_CASE("solve results serialize with family and schedule") {
    Scenario scn;
    const SolveResult r = evaluate_contract(scn, construct(StraightDeductible{1.0}, 4.0), false,
                                            StraightDeductible{1.0});
    const nlohmann::json j = to_json(r);
    CHECK(j["family"]["type"] == "straight_deductible");
    CHECK(j["premium"].get<double>() == r.premium);
    CHECK(j["contract"]["segments"].size() == 2);

    const SolveResult freeform = evaluate_contract(scn, construct(Coinsurance{0.5}, 4.0), false);
    CHECK(to_json(freeform)["family"].is_null());
}

TEST_CASE("envelope CSV carries the value function columns") {
    std::ostringstream os;
    write_envelope_csv(os, construct(ConstantRetention{2.0, 1.0}, 4.0), 0.0, 5);
    const std::string got = os.str();
    CHECK(got.find("x,Y,V,z_star,payoff\n") == 0);
    // At x = 1: honest pay 0, value max(0, x-1) = 0, jump not yet profitable.
    CHECK(got.find("\n1,0,0,0,0\n") != std::string::npos);
    // At x = 3: already past the threshold, honest filing is optimal.
    CHECK(got.find("\n3,2,2,0,2\n") != std::string::npos);
}
