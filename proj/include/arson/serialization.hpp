#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "arson/contract.hpp"
#include "arson/equilibrium.hpp"
#include "arson/manipulation.hpp"
#include "arson/pricing.hpp"

namespace arson {

/// Input documents that fail schema validation raise this; the CLI maps it
/// to exit code 2.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_keys(const nlohmann::json& obj,
                         std::initializer_list<const char*> allowed,
                         const std::string& where) {
    if (!obj.is_object()) throw SchemaError(where + ": expected an object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed) {
            if (item.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) throw SchemaError(where + ": unknown key \"" + item.key() + "\"");
    }
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                                     const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(where + ": missing key \"" + key + "\"");
    return *it;
}

inline double require_number(const nlohmann::json& obj, const char* key,
                             const std::string& where) {
    const nlohmann::json& v = require(obj, key, where);
    if (!v.is_number()) throw SchemaError(where + ": \"" + std::string(key) + "\" must be a number");
    return v.get<double>();
}

inline int require_integer(const nlohmann::json& obj, const char* key, const std::string& where) {
    const nlohmann::json& v = require(obj, key, where);
    if (!v.is_number_integer()) {
        throw SchemaError(where + ": \"" + std::string(key) + "\" must be an integer");
    }
    return v.get<int>();
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  const std::string& where) {
    const nlohmann::json& v = require(obj, key, where);
    if (!v.is_string()) throw SchemaError(where + ": \"" + std::string(key) + "\" must be a string");
    return v.get<std::string>();
}

inline int optional_integer(const nlohmann::json& obj, const char* key, int fallback,
                            const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number_integer()) {
        throw SchemaError(where + ": \"" + std::string(key) + "\" must be an integer");
    }
    return it->get<int>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Contract families
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const FamilySpec& spec) {
    struct Ser {
        nlohmann::json operator()(const FullInsurance&) const {
            return {{"type", "full_insurance"}, {"params", nlohmann::json::object()}};
        }
        nlohmann::json operator()(const StraightDeductible& s) const {
            return {{"type", "straight_deductible"}, {"params", {{"d", s.d}}}};
        }
        nlohmann::json operator()(const Coinsurance& s) const {
            return {{"type", "coinsurance"}, {"params", {{"alpha", s.alpha}}}};
        }
        nlohmann::json operator()(const Mixed& s) const {
            return {{"type", "mixed"},
                    {"params", {{"delta", s.delta}, {"alpha", s.alpha}, {"d", s.d}}}};
        }
        nlohmann::json operator()(const DisappearingDeductible& s) const {
            return {{"type", "disappearing_deductible"}, {"params", {{"d", s.d}}}};
        }
        nlohmann::json operator()(const ConstantRetention& s) const {
            return {{"type", "constant_retention"}, {"params", {{"t", s.t}, {"j", s.j}}}};
        }
    };
    return std::visit(Ser{}, spec);
}

inline FamilySpec family_from_json(const nlohmann::json& j) {
    const std::string where = "family";
    detail::require_keys(j, {"type", "params"}, where);
    const std::string type = detail::require_string(j, "type", where);
    nlohmann::json params = j.value("params", nlohmann::json::object());
    if (type == "full_insurance") {
        detail::require_keys(params, {}, where + ".params");
        return FullInsurance{};
    }
    if (type == "straight_deductible") {
        detail::require_keys(params, {"d"}, where + ".params");
        return StraightDeductible{detail::require_number(params, "d", where)};
    }
    if (type == "coinsurance") {
        detail::require_keys(params, {"alpha"}, where + ".params");
        return Coinsurance{detail::require_number(params, "alpha", where)};
    }
    if (type == "mixed") {
        detail::require_keys(params, {"delta", "alpha", "d"}, where + ".params");
        return Mixed{detail::require_number(params, "delta", where),
                     detail::require_number(params, "alpha", where),
                     detail::require_number(params, "d", where)};
    }
    if (type == "disappearing_deductible") {
        detail::require_keys(params, {"d"}, where + ".params");
        return DisappearingDeductible{detail::require_number(params, "d", where)};
    }
    if (type == "constant_retention") {
        detail::require_keys(params, {"t", "j"}, where + ".params");
        return ConstantRetention{detail::require_number(params, "t", where),
                                 detail::require_number(params, "j", where)};
    }
    throw SchemaError("family: unknown type \"" + type + "\"");
}

// ---------------------------------------------------------------------------
// Contracts
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Contract& y) {
    nlohmann::json segs = nlohmann::json::array();
    for (const Segment& s : y.segments()) {
        segs.push_back({{"x_start", s.x_start},
                        {"x_end", s.x_end},
                        {"intercept", s.intercept},
                        {"slope", s.slope}});
    }
    return {{"domain_max", y.domain_max()}, {"segments", segs}};
}

inline Contract contract_from_json(const nlohmann::json& j) {
    const std::string where = "contract";
    detail::require_keys(j, {"domain_max", "segments"}, where);
    const double m = detail::require_number(j, "domain_max", where);
    const nlohmann::json& segs = detail::require(j, "segments", where);
    if (!segs.is_array() || segs.empty()) {
        throw SchemaError(where + ": \"segments\" must be a non-empty array");
    }
    std::vector<Segment> out;
    for (const nlohmann::json& s : segs) {
        detail::require_keys(s, {"x_start", "x_end", "intercept", "slope"}, where + ".segments[]");
        out.push_back(Segment{detail::require_number(s, "x_start", where),
                              detail::require_number(s, "x_end", where),
                              detail::require_number(s, "intercept", where),
                              detail::require_number(s, "slope", where)});
    }
    try {
        return Contract(m, std::move(out));
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("contract: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Loss, cost and utility models
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const LossModel& loss) {
    struct Ser {
        nlohmann::json operator()(const UniformDensity&) const {
            return {{"type", "uniform"}};
        }
        nlohmann::json operator()(const TruncatedExponential& e) const {
            return {{"type", "trunc_exp"}, {"rate", e.rate}};
        }
        nlohmann::json operator()(const TruncatedLognormal& l) const {
            return {{"type", "trunc_lognormal"}, {"mu", l.mu}, {"sigma", l.sigma}};
        }
    };
    return {{"M", loss.domain_max()},
            {"p0", loss.atom()},
            {"density", std::visit(Ser{}, loss.density())}};
}

inline LossModel loss_from_json(const nlohmann::json& j) {
    const std::string where = "loss";
    detail::require_keys(j, {"M", "p0", "density"}, where);
    const double m = detail::require_number(j, "M", where);
    const double p0 = detail::require_number(j, "p0", where);
    const nlohmann::json& d = detail::require(j, "density", where);
    const std::string type = detail::require_string(d, "type", where + ".density");
    LossDensity density = UniformDensity{};
    if (type == "uniform") {
        detail::require_keys(d, {"type"}, where + ".density");
    } else if (type == "trunc_exp") {
        detail::require_keys(d, {"type", "rate"}, where + ".density");
        density = TruncatedExponential{detail::require_number(d, "rate", where + ".density")};
    } else if (type == "trunc_lognormal") {
        detail::require_keys(d, {"type", "mu", "sigma"}, where + ".density");
        density = TruncatedLognormal{detail::require_number(d, "mu", where + ".density"),
                                     detail::require_number(d, "sigma", where + ".density")};
    } else {
        throw SchemaError(where + ": unknown density type \"" + type + "\"");
    }
    try {
        return LossModel(m, p0, density);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("loss: ") + e.what());
    }
}

inline nlohmann::json to_json(const CostModel& cost) {
    struct Ser {
        nlohmann::json operator()(const ZeroCost&) const { return {{"type", "zero"}}; }
        nlohmann::json operator()(const FixedPerClaim& f) const {
            return {{"type", "fixed_per_claim"}, {"c0", f.c0}};
        }
        nlohmann::json operator()(const LinearCost& l) const {
            return {{"type", "linear"}, {"kappa", l.kappa}};
        }
        nlohmann::json operator()(const QuadraticCost& q) const {
            return {{"type", "quadratic"}, {"kappa", q.kappa}};
        }
    };
    return std::visit(Ser{}, cost);
}

inline CostModel cost_from_json(const nlohmann::json& j) {
    const std::string where = "cost";
    const std::string type = detail::require_string(j, "type", where);
    CostModel cost = ZeroCost{};
    if (type == "zero") {
        detail::require_keys(j, {"type"}, where);
    } else if (type == "fixed_per_claim") {
        detail::require_keys(j, {"type", "c0"}, where);
        cost = FixedPerClaim{detail::require_number(j, "c0", where)};
    } else if (type == "linear") {
        detail::require_keys(j, {"type", "kappa"}, where);
        cost = LinearCost{detail::require_number(j, "kappa", where)};
    } else if (type == "quadratic") {
        detail::require_keys(j, {"type", "kappa"}, where);
        cost = QuadraticCost{detail::require_number(j, "kappa", where)};
    } else {
        throw SchemaError(where + ": unknown type \"" + type + "\"");
    }
    try {
        validate(cost);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("cost: ") + e.what());
    }
    return cost;
}

inline nlohmann::json to_json(const UtilitySpec& u) {
    struct Ser {
        nlohmann::json operator()(const Crra& c) const {
            return {{"type", "crra"}, {"gamma", c.gamma}};
        }
        nlohmann::json operator()(const LogUtility&) const { return {{"type", "log"}}; }
    };
    return std::visit(Ser{}, u);
}

inline UtilitySpec utility_from_json(const nlohmann::json& j) {
    const std::string where = "utility";
    const std::string type = detail::require_string(j, "type", where);
    UtilitySpec u = LogUtility{};
    if (type == "crra") {
        detail::require_keys(j, {"type", "gamma"}, where);
        u = Crra{detail::require_number(j, "gamma", where)};
    } else if (type == "log") {
        detail::require_keys(j, {"type"}, where);
    } else {
        throw SchemaError(where + ": unknown type \"" + type + "\"");
    }
    try {
        validate(u);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("utility: ") + e.what());
    }
    return u;
}

// ---------------------------------------------------------------------------
// Scenario documents
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Scenario& scn) {
    return {{"W0", scn.W0},
            {"rho", scn.rho},
            {"beta", scn.beta},
            {"utility", to_json(scn.utility)},
            {"loss", to_json(scn.loss)},
            {"cost", to_json(scn.cost)},
            {"grid_n", scn.grid_n},
            {"quad_n", scn.quad_n}};
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
    const std::string where = "scenario";
    detail::require_keys(j, {"W0", "rho", "beta", "utility", "loss", "cost", "grid_n", "quad_n"},
                         where);
    Scenario scn{detail::require_number(j, "W0", where),
                 detail::require_number(j, "rho", where),
                 detail::require_number(j, "beta", where),
                 utility_from_json(detail::require(j, "utility", where)),
                 loss_from_json(detail::require(j, "loss", where)),
                 cost_from_json(detail::require(j, "cost", where)),
                 detail::optional_integer(j, "grid_n", kDefaultGridN, where),
                 detail::optional_integer(j, "quad_n", kDefaultQuadN, where)};
    try {
        validate(scn);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("scenario: ") + e.what());
    }
    return scn;
}

/// A scenario file: the scenario block plus an optional contract, given
/// either as a tagged family or as explicit segments.
struct ScenarioFile {
    int schema_version = 1;
    Scenario scenario;
    std::optional<FamilySpec> family;
    std::optional<Contract> contract;

    /// The contract to analyse; throws SchemaError when the file has none.
    Contract require_contract() const {
        if (contract) return *contract;
        if (family) return construct(*family, scenario.loss.domain_max());
        throw SchemaError("scenario file: a \"contract\" entry is required for this command");
    }
};

inline ScenarioFile scenario_file_from_json(const nlohmann::json& j) {
    const std::string where = "scenario file";
    detail::require_keys(j, {"schema_version", "scenario", "contract"}, where);
    const int version = detail::require_integer(j, "schema_version", where);
    if (version != 1) {
        throw SchemaError(where + ": unsupported schema_version " + std::to_string(version));
    }
    ScenarioFile f{version, scenario_from_json(detail::require(j, "scenario", where)),
                   std::nullopt, std::nullopt};
    auto it = j.find("contract");
    if (it != j.end()) {
        if (it->contains("type")) {
            f.family = family_from_json(*it);
            try {
                f.contract = construct(*f.family, f.scenario.loss.domain_max());
            } catch (const std::invalid_argument& e) {
                throw SchemaError(std::string("contract: ") + e.what());
            }
        } else {
            f.contract = contract_from_json(*it);
            if (f.contract->domain_max() != f.scenario.loss.domain_max()) {
                throw SchemaError("contract: domain_max must equal the loss model's M");
            }
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const SolveResult& r) {
    nlohmann::json j{{"premium", r.premium},
                     {"expected_utility", r.expected_utility},
                     {"manipulation_probability", r.manipulation_probability},
                     {"max_slope", r.max_slope_used},
                     {"optimizer_evals", r.optimizer_evals},
                     {"contract", to_json(r.contract)}};
    j["family"] = r.family ? to_json(*r.family) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json to_json(const DominanceReport& report) {
    return {{"original", to_json(report.original)},
            {"envelope", to_json(report.envelope)},
            {"strictly_dominated", report.strictly_dominated}};
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

namespace detail {

inline std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace detail

/// Samples the schedule, its stage-3 value function and the best response
/// on a uniform grid: columns x, Y, V, z_star, payoff.
inline void write_envelope_csv(std::ostream& os, const Contract& y, double beta,
                               int grid_n = kDefaultGridN) {
    const Contract env = envelope_exact(y, beta);
    os << "x,Y,V,z_star,payoff\n";
    for (double x : uniform_grid(y.domain_max(), grid_n)) {
        const ManipulationOutcome best = best_response(y, x, beta, grid_n);
        os << detail::csv_number(x) << ',' << detail::csv_number(y(x)) << ','
           << detail::csv_number(env(x)) << ',' << detail::csv_number(best.z_star) << ','
           << detail::csv_number(best.payoff) << '\n';
    }
}

/// Solver trace rows: columns iteration, params, expected_utility, premium.
inline void write_trace_csv(std::ostream& os, const SolverTrace& trace) {
    os << "iteration,params,expected_utility,premium\n";
    for (const SolverTrace::Row& row : trace.rows) {
        os << row.iteration << ',' << row.params << ',' << detail::csv_number(row.expected_utility)
           << ',' << detail::csv_number(row.premium) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

/// Parses a JSON document from disk; SchemaError on I/O or syntax trouble.
inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

/// Writes through a temporary file and renames, so failures never leave a
/// partial output behind.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace arson
