#pragma once

// JSON spec files and reports, CSV pair files.
//
// A spec file is either
//   {"family": TAG, "params": {NAME: number | expression, ...}}
// or
//   {"label": ..., "theta": FN, "phi": FN}
// with FN = {"kind": "expr", "expr": "..."} or
//           {"kind": "named", "name": ..., "params": {...}}.

#include "fgmx/copula.hpp"
#include "fgmx/dependence.hpp"
#include "fgmx/error.hpp"
#include "fgmx/measures.hpp"
#include "fgmx/subfamilies.hpp"

#include <json.hpp>

#include <cstdlib>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fgmx {

using Json = nlohmann::json;

namespace detail {

inline const Json& require_field(const Json& j, const char* key, const char* where) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string(where) + ": missing field `" + key + "`");
    return j.at(key);
}

inline double require_number(const Json& j, const std::string& key, const char* where) {
    if (!j.contains(key)) throw SchemaError(std::string(where) + ": missing parameter `" + key + "`");
    const Json& v = j.at(key);
    if (!v.is_number()) throw SchemaError(std::string(where) + ": parameter `" + key + "` must be a number");
    return v.get<double>();
}

inline Json params_or_empty(const Json& j) {
    if (!j.contains("params")) return Json::object();
    const Json& p = j.at("params");
    if (!p.is_object()) throw SchemaError("`params` must be an object");
    return p;
}

// Named theta functions.
inline Func1D named_theta(const std::string& name, const Json& params) {
    if (name == "constant") return Func1D::constant(require_number(params, "value", "theta constant"));
    if (name == "ca") return ca_generator(require_number(params, "alpha", "theta ca")).inverse_survival;
    if (name == "b11") return b11_generator(require_number(params, "sigma", "theta b11")).inverse_survival;
    if (name == "gpd")
        return gpd_generator(require_number(params, "alpha", "theta gpd"), require_number(params, "sigma", "theta gpd"))
            .inverse_survival;
    if (name == "uniform-k") return uniform_generator(require_number(params, "alpha", "theta uniform-k")).inverse_survival;
    if (name == "exponential-k") return exponential_generator().inverse_survival;
    if (name == "reciprocal") {
        const double c = require_number(params, "c", "theta reciprocal");
        return Func1D([c](double t) { return c / t; }, {}, Provenance::closed_form, format_number(c) + "/t")
            .with_derivative([c](double t) { return -c / (t * t); });
    }
    throw SchemaError("unknown named theta `" + name +
                      "` (constant, ca, b11, gpd, uniform-k, exponential-k, reciprocal)");
}

inline Func1D named_phi(const std::string& name) {
    if (name == "identity") return Func1D::identity();
    if (name == "fgm") return fgm_phi();
    throw SchemaError("unknown named phi `" + name + "` (identity, fgm)");
}

inline Func1D function_from_json(const Json& j, bool is_theta) {
    const char* where = is_theta ? "theta" : "phi";
    if (j.is_string()) return Func1D::from_expr(j.get<std::string>());
    const Json& kind = require_field(j, "kind", where);
    if (!kind.is_string()) throw SchemaError(std::string(where) + ": `kind` must be a string");
    const std::string k = kind.get<std::string>();
    if (k == "expr") {
        const Json& e = require_field(j, "expr", where);
        if (!e.is_string()) throw SchemaError(std::string(where) + ": `expr` must be a string");
        return Func1D::from_expr(e.get<std::string>());
    }
    if (k == "named") {
        const Json& n = require_field(j, "name", where);
        if (!n.is_string()) throw SchemaError(std::string(where) + ": `name` must be a string");
        return is_theta ? named_theta(n.get<std::string>(), params_or_empty(j)) : named_phi(n.get<std::string>());
    }
    throw SchemaError(std::string(where) + ": `kind` must be \"named\" or \"expr\"");
}

} // namespace detail

/// Parses JSON text; syntax errors become ParseError with the byte offset.
inline Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte, {});
    }
}

/// FamilyParams from a `{"family": ..., "params": ...}` document.
inline FamilyParams family_params_from_json(const Json& j) {
    const Json& tag = detail::require_field(j, "family", "spec");
    if (!tag.is_string()) throw SchemaError("spec: `family` must be a string");
    FamilyParams p;
    try {
        p.family = family_from_string(tag.get<std::string>());
    } catch (const DomainError&) {
        throw SchemaError("spec: unknown family `" + tag.get<std::string>() + "`");
    }
    const Json params = detail::params_or_empty(j);
    for (const auto& [key, value] : params.items()) {
        if (value.is_number())
            p.values[key] = value.get<double>();
        else if (value.is_string())
            p.exprs[key] = value.get<std::string>();
        else
            throw SchemaError("spec: parameter `" + key + "` must be a number or an expression string");
    }
    return p;
}

/// Builds and validates the spec described by a JSON document. Family
/// parameters outside their admissible range yield an invalid spec rather
/// than an error, so the report can show the failing condition.
inline CopulaSpec spec_from_json(const Json& j, const ValidateOptions& opt = {}) {
    if (!j.is_object()) throw SchemaError("spec: top level must be an object");
    if (j.contains("family")) return make_named(family_params_from_json(j), opt, DomainPolicy::validate);
    const Func1D theta = detail::function_from_json(detail::require_field(j, "theta", "spec"), true);
    const Func1D phi = detail::function_from_json(detail::require_field(j, "phi", "spec"), false);
    std::string label = "theta=" + theta.label() + ", phi=" + phi.label();
    if (j.contains("label")) {
        if (!j.at("label").is_string()) throw SchemaError("spec: `label` must be a string");
        label = j.at("label").get<std::string>();
    }
    return validated(CopulaSpec(theta, phi, label), opt);
}

inline CopulaSpec spec_from_json_text(const std::string& text, const ValidateOptions& opt = {}) {
    return spec_from_json(parse_json(text), opt);
}

// ---------------------------------------------------------------------------
// Reports

inline Json to_json(const std::optional<Point2>& p) {
    if (!p) return nullptr;
    return Json::array({p->u, p->v});
}

inline Json to_json(const ConditionCheck& c) {
    Json j = {{"pass", c.pass}, {"value", c.value}, {"where", to_json(c.where)}};
    if (!c.detail.empty()) j["detail"] = c.detail;
    return j;
}

inline Json to_json(const ValidityReport& r) {
    return {{"verdict", r.verdict ? "valid" : "invalid"},
            {"method", r.method},
            {"n_grid", r.n_grid},
            {"eps", r.eps},
            {"tol", r.tol},
            {"conditions",
             {{"a", to_json(r.cond_a)}, {"b", to_json(r.cond_b)}, {"c", to_json(r.cond_c)}, {"d", to_json(r.cond_d)}}},
            {"notes", r.notes}};
}

inline Json to_json(const MeasureSet& m) {
    return {{"rho", m.rho},
            {"lambda_upper", m.lambda_upper},
            {"lambda_lower", m.lambda_lower},
            {"beta", m.beta},
            {"diagonal_mass", m.diagonal_mass},
            {"methods",
             {{"rho", m.rho_method},
              {"lambda_upper", m.lambda_upper_method},
              {"lambda_lower", m.lambda_lower_method},
              {"beta", m.beta_method},
              {"diagonal_mass", m.diagonal_mass_method}}},
            {"warnings", m.warnings}};
}

inline Json to_json(const PropertyResult& p) {
    Json j = {{"verdict", to_string(p.verdict)}, {"witness", to_json(p.witness)}};
    if (!p.detail.empty()) j["detail"] = p.detail;
    return j;
}

inline Json to_json(const DependenceReport& r) {
    return {{"pqd", to_json(r.pqd)},
            {"ltd", to_json(r.ltd)},
            {"rti", to_json(r.rti)},
            {"lcsd", to_json(r.lcsd)},
            {"rcsi", to_json(r.rcsi)},
            {"vstar", r.vstar},
            {"phi_sign_on_support", r.phi_sign > 0 ? "+1" : r.phi_sign < 0 ? "-1" : "mixed"},
            {"grid",
             {{"n", r.grid.n}, {"n2d", r.grid.n2d}, {"tol", r.grid.tol}, {"tp2_samples", r.grid.tp2_samples},
              {"seed", r.grid.seed}}},
            {"notes", r.notes}};
}

inline Json to_json(const FitResult& f) {
    return {{"family", std::string(to_string(f.family))},
            {"parameter", f.parameter},
            {"value", f.value},
            {"rho_hat", f.rho_hat},
            {"n", f.n},
            {"rho_range", {f.rho_lo, f.rho_hi}}};
}

inline Json to_json(const GpdParams& g) { return {{"family", "gpd"}, {"alpha", g.alpha}, {"sigma", g.sigma}}; }

// ---------------------------------------------------------------------------
// CSV

/// Reads the first two columns of a comma-separated file as (x, y) pairs.
/// A first line whose leading field is not numeric is taken as a header.
inline std::vector<std::pair<double, double>> read_pairs_csv(std::istream& is) {
    std::vector<std::pair<double, double>> out;
    std::string line;
    std::size_t lineno = 0;
    auto number = [](const std::string& field, double& x) {
        const char* b = field.c_str();
        while (*b == ' ' || *b == '\t') ++b;
        char* e = nullptr;
        x = std::strtod(b, &e);
        if (e == b) return false;
        while (*e == ' ' || *e == '\t' || *e == '\r') ++e;
        return *e == '\0';
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::stringstream ss(line);
        std::string a, b;
        std::getline(ss, a, ',');
        const bool has_second = static_cast<bool>(std::getline(ss, b, ','));
        double x = 0.0, y = 0.0;
        if (!number(a, x)) {
            if (out.empty() && lineno == 1) continue;
            throw ParseError("csv line " + std::to_string(lineno) + ": not a number: `" + a + "`", 0, {"number"});
        }
        if (!has_second || !number(b, y))
            throw ParseError("csv line " + std::to_string(lineno) + ": expected two numeric columns", 0, {"number"});
        out.emplace_back(x, y);
    }
    return out;
}

} // namespace fgmx
