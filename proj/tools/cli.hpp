#pragma once

// Command surface: validate, measures, depcheck, sample, family, fit, table.
// Exit codes: 0 success or affirmative verdict, 1 negative verdict,
// 2 usage or parse error.

#include "fgmx/fgmx.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fgmx::cli {

inline constexpr int kOk = 0;
inline constexpr int kNegative = 1;
inline constexpr int kUsage = 2;

namespace detail {

inline std::string read_file(const std::string& path) {
    if (path == "-") {
        std::stringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractError("cannot open `" + path + "`");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline CopulaSpec load_spec(const std::string& path, const ValidateOptions& opt = {}) {
    return spec_from_json_text(read_file(path), opt);
}

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// name=value; numbers go to `values`, anything else to `exprs`.
inline void apply_setting(FamilyParams& p, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ContractError("--set expects name=value, got `" + kv + "`");
    const std::string name = kv.substr(0, eq), value = kv.substr(eq + 1);
    char* end = nullptr;
    const double x = std::strtod(value.c_str(), &end);
    if (end != value.c_str() && *end == '\0')
        p.values[name] = x;
    else
        p.exprs[name] = value;
}

inline std::string default_parameter(Family f) {
    switch (f) {
    case Family::fgm:
    case Family::constant_theta: return "theta";
    case Family::ca:
    case Family::gpd:
    case Family::uniform_k: return "alpha";
    case Family::b11: return "sigma";
    default: break;
    }
    throw ContractError("family `" + std::string(to_string(f)) + "` has no scalar parameter to sweep");
}

struct Range {
    double a, b;
    int steps;
};

inline Range parse_range(const std::string& s) {
    Range r{};
    char tail = 0;
    if (std::sscanf(s.c_str(), "%lf:%lf:%d%c", &r.a, &r.b, &r.steps, &tail) != 3)
        throw ContractError("--param-range expects a:b:steps, got `" + s + "`");
    if (r.steps < 1 || r.a > r.b || (r.steps == 1 && r.a != r.b) || !std::isfinite(r.a) || !std::isfinite(r.b))
        throw ContractError("--param-range `" + s + "` is empty");
    return r;
}

inline Json family_description(Family f) {
    Json j = {{"family", std::string(to_string(f))}};
    switch (f) {
    case Family::fgm:
        j["parameters"] = {{"theta", "[-1, 1]"}};
        j["theta"] = "theta";
        j["phi"] = "t*(1-t)";
        j["rho"] = "theta/3";
        break;
    case Family::constant_theta:
        j["parameters"] = {{"theta", "admissible for phi"}, {"phi", "expression with phi(0) = phi(1) = 0"}};
        j["theta"] = "theta";
        j["phi"] = "phi";
        j["lambda_upper"] = "0";
        break;
    case Family::ca:
        j["parameters"] = {{"alpha", "[0, 1]"}};
        j["survival"] = "(1+x)^(-1/alpha)";
        j["theta"] = "t^-alpha - 1";
        j["phi"] = "t";
        j["rho"] = "3*alpha/(4-alpha)";
        j["lambda_upper"] = "alpha";
        j["diagonal_mass"] = "alpha/(2-alpha)";
        break;
    case Family::b11:
        j["parameters"] = {{"sigma", "(0, 1]"}};
        j["survival"] = "(1+x/sigma)^-1";
        j["theta"] = "sigma*(1/t - 1)";
        j["phi"] = "t";
        j["rho"] = "sigma";
        j["lambda_upper"] = "sigma";
        j["diagonal_mass"] = "sigma";
        break;
    case Family::gpd:
        j["parameters"] = {{"alpha", "(0, 1]"}, {"sigma", "alpha*sigma in (0, 1]"}};
        j["survival"] = "(1+x/sigma)^(-1/alpha)";
        j["theta"] = "sigma*(t^-alpha - 1)";
        j["phi"] = "t";
        j["rho"] = "3*alpha*sigma/(4-alpha)";
        j["lambda_upper"] = "alpha*sigma";
        break;
    case Family::uniform_k:
        j["parameters"] = {{"alpha", "(0, 1]"}};
        j["survival"] = "1 - x/alpha on [0, alpha]";
        j["theta"] = "alpha*(1-t)";
        j["phi"] = "t";
        j["rho"] = "3*alpha/5";
        j["lambda_upper"] = "alpha";
        break;
    case Family::exponential_k:
        j["parameters"] = Json::object();
        j["survival"] = "exp(-x)";
        j["theta"] = "-ln(t)";
        j["phi"] = "t";
        j["rho"] = "3/4";
        j["lambda_upper"] = "1";
        break;
    case Family::durante_f:
        j["parameters"] = {{"f", "expression with f(1) = 1"}};
        j["cdf"] = "min(u,v)*f(max(u,v))";
        j["theta"] = "f(t)/t - 1";
        j["phi"] = "t";
        break;
    case Family::custom:
        j["parameters"] = {{"theta", "expression"}, {"phi", "expression"}};
        break;
    }
    return j;
}

} // namespace detail

/// Runs one command. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generator-pair copulas: validation, measures, dependence, sampling, fitting"};
    app.name("fgmx");
    app.require_subcommand(1);

    std::string spec_path;
    ValidateOptions vopt;

    auto* validate_cmd = app.add_subcommand("validate", "Check the generator conditions of a spec file");
    validate_cmd->add_option("spec", spec_path, "JSON spec file (- for stdin)")->required();
    validate_cmd->add_option("--grid", vopt.n_grid, "Grid points per axis")->capture_default_str();
    validate_cmd->add_option("--eps", vopt.eps, "Distance of the grid from the unit-square boundary")
        ->capture_default_str();

    auto* measures_cmd = app.add_subcommand("measures", "Spearman's rho, tail dependence, Blomqvist's beta, diagonal mass");
    measures_cmd->add_option("spec", spec_path, "JSON spec file")->required();

    DependenceGrid dgrid;
    auto* dep_cmd = app.add_subcommand("depcheck", "Certify PQD, LTD, RTI, LCSD and RCSI");
    dep_cmd->add_option("spec", spec_path, "JSON spec file")->required();
    dep_cmd->add_option("--grid", dgrid.n, "Points for monotonicity scans")->capture_default_str();

    std::size_t n = 1000;
    std::uint64_t seed = 0;
    std::string out_path, margin_x, margin_y;
    unsigned threads = 1;
    auto* sample_cmd = app.add_subcommand("sample", "Draw pairs by conditional inversion and write CSV");
    sample_cmd->add_option("spec", spec_path, "JSON spec file")->required();
    sample_cmd->add_option("--n", n, "Number of pairs")->capture_default_str();
    sample_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    sample_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
    sample_cmd->add_option("--margin-x", margin_x, "Quantile function of X as an expression in t");
    sample_cmd->add_option("--margin-y", margin_y, "Quantile function of Y as an expression in t");
    sample_cmd->add_option("--threads", threads, "Worker threads")->capture_default_str();

    std::vector<std::string> family_args;
    auto* family_cmd = app.add_subcommand("family", "list | show TAG | from-rho-lambda RHO LAMBDA");
    family_cmd->add_option("args", family_args, "Subcommand and its arguments")->required();

    std::string data_path, family_tag;
    std::vector<std::string> settings;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a one-parameter family by inverting Spearman's rho");
    fit_cmd->add_option("data", data_path, "CSV with two numeric columns")->required();
    fit_cmd->add_option("--family", family_tag, "fgm, constant-theta, ca, b11 or uniform-k")->required();
    fit_cmd->add_option("--set", settings, "Fixed family inputs, name=value (e.g. phi=t*(1-t)^2)");

    std::string range_text, param_name, columns_text = "rho,lambda,beta,mass";
    auto* table_cmd = app.add_subcommand("table", "Measures over a parameter sweep, as CSV");
    table_cmd->add_option("--family", family_tag, "Family tag")->required();
    table_cmd->add_option("--param-range", range_text, "a:b:steps")->required();
    table_cmd->add_option("--param", param_name, "Swept parameter (default: the family's main one)");
    table_cmd->add_option("--set", settings, "Other family inputs, name=value");
    table_cmd->add_option("--columns", columns_text, "Comma-separated: rho, lambda, beta, mass")
        ->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    const QuadratureConfig qcfg = QuadratureConfig::from_env();
    try {
        if (validate_cmd->parsed()) {
            const CopulaSpec spec = detail::load_spec(spec_path, vopt);
            Json j = to_json(*spec.report());
            j["label"] = spec.label();
            out << j.dump(2) << '\n';
            return spec.is_valid() ? kOk : kNegative;
        }

        if (measures_cmd->parsed() || dep_cmd->parsed() || sample_cmd->parsed()) {
            const CopulaSpec spec = detail::load_spec(spec_path);
            if (!spec.is_valid()) {
                Json j = {{"error", "spec is not a valid copula"}, {"label", spec.label()},
                          {"report", to_json(*spec.report())}};
                out << j.dump(2) << '\n';
                return kNegative;
            }
            if (measures_cmd->parsed()) {
                Json j = to_json(measure_set(spec, qcfg));
                j["label"] = spec.label();
                out << j.dump(2) << '\n';
                return kOk;
            }
            if (dep_cmd->parsed()) {
                const DependenceReport r = dependence_report(spec, dgrid);
                Json j = to_json(r);
                j["label"] = spec.label();
                out << j.dump(2) << '\n';
                const bool all = r.pqd.verdict == Verdict::pass && r.ltd.verdict == Verdict::pass &&
                                 r.rti.verdict == Verdict::pass && r.lcsd.verdict == Verdict::pass &&
                                 r.rcsi.verdict == Verdict::pass;
                return all ? kOk : kNegative;
            }
            if (margin_x.empty() != margin_y.empty())
                throw ContractError("--margin-x and --margin-y must be given together");
            std::optional<Expr> qx, qy;
            if (!margin_x.empty()) {
                qx = parse(margin_x);
                qy = parse(margin_y);
            }
            const SampleBatch batch = sample(spec, n, seed, threads);
            std::vector<std::pair<double, double>> margins;
            if (qx) margins = with_margins(batch, [&](double p) { return eval(*qx, p); },
                                           [&](double p) { return eval(*qy, p); });
            const auto* m = qx ? &margins : nullptr;
            if (out_path.empty()) {
                write_sample_csv(out, batch, m);
            } else {
                std::ofstream f(out_path, std::ios::binary);
                if (!f) throw ContractError("cannot write `" + out_path + "`");
                write_sample_csv(f, batch, m);
                Json j = {{"out", out_path}, {"n", batch.n}, {"seed", batch.seed},
                          {"diagonal_hits", batch.diagonal_hits}};
                out << j.dump(2) << '\n';
            }
            return kOk;
        }

        if (family_cmd->parsed()) {
            const std::string& sub = family_args.front();
            if (sub == "list" && family_args.size() == 1) {
                out << Json(family_tags()).dump(2) << '\n';
                return kOk;
            }
            if (sub == "show" && family_args.size() == 2) {
                Family f;
                try {
                    f = family_from_string(family_args[1]);
                } catch (const DomainError&) {
                    throw ContractError("unknown family `" + family_args[1] + "`");
                }
                out << detail::family_description(f).dump(2) << '\n';
                return kOk;
            }
            if (sub == "from-rho-lambda" && family_args.size() == 3) {
                double rho = 0.0, lambda = 0.0;
                char tail = 0;
                if (std::sscanf(family_args[1].c_str(), "%lf%c", &rho, &tail) != 1 ||
                    std::sscanf(family_args[2].c_str(), "%lf%c", &lambda, &tail) != 1)
                    throw ContractError("from-rho-lambda expects two numbers");
                try {
                    out << to_json(gpd_from_rho_lambda(rho, lambda)).dump(2) << '\n';
                    return kOk;
                } catch (const DomainError& e) {
                    out << Json{{"error", e.what()}, {"where", e.where()}}.dump(2) << '\n';
                    return kNegative;
                }
            }
            throw ContractError("family expects: list | show TAG | from-rho-lambda RHO LAMBDA");
        }

        if (fit_cmd->parsed()) {
            FamilyParams tmpl;
            tmpl.family = family_from_string(family_tag);
            for (const auto& s : settings) detail::apply_setting(tmpl, s);
            std::istringstream in(detail::read_file(data_path));
            const auto data = read_pairs_csv(in);
            try {
                out << to_json(fit_rho_inversion(data, tmpl)).dump(2) << '\n';
                return kOk;
            } catch (const RangeError& e) {
                out << Json{{"error", e.what()}, {"rho_range", {e.lo(), e.hi()}}}.dump(2) << '\n';
                return kNegative;
            }
        }

        if (table_cmd->parsed()) {
            FamilyParams p;
            p.family = family_from_string(family_tag);
            for (const auto& s : settings) detail::apply_setting(p, s);
            const std::string param = param_name.empty() ? detail::default_parameter(p.family) : param_name;
            const detail::Range r = detail::parse_range(range_text);
            std::vector<std::string> cols;
            {
                std::stringstream ss(columns_text);
                for (std::string c; std::getline(ss, c, ',');) {
                    if (c != "rho" && c != "lambda" && c != "beta" && c != "mass")
                        throw ContractError("unknown column `" + c + "` (rho, lambda, beta, mass)");
                    cols.push_back(c);
                }
            }
            if (cols.empty()) throw ContractError("--columns is empty");
            std::ostringstream table;
            table << param;
            for (const auto& c : cols) table << ',' << c;
            table << '\n';
            for (int i = 0; i < r.steps; ++i) {
                const double x = r.steps == 1 ? r.a : r.a + (r.b - r.a) * i / (r.steps - 1);
                p.values[param] = x;
                const CopulaSpec spec = make_named(p);
                if (!spec.is_valid())
                    throw ContractError("not a valid copula at " + param + "=" + detail::fmt(x));
                table << detail::fmt(x);
                for (const auto& c : cols) {
                    const double v = c == "rho"      ? spearman_rho(spec, qcfg)
                                     : c == "lambda" ? upper_tail_dep(spec)
                                     : c == "beta"   ? blomqvist_beta(spec)
                                                     : diagonal_mass(spec, qcfg);
                    table << ',' << detail::fmt(v);
                }
                table << '\n';
            }
            out << table.str();
            return kOk;
        }
    } catch (const ParseError& e) {
        err << "fgmx: parse error at offset " << e.offset() << ": " << e.what() << '\n';
        return kUsage;
    } catch (const SchemaError& e) {
        err << "fgmx: schema error: " << e.what() << '\n';
        return kUsage;
    } catch (const ContractError& e) {
        err << "fgmx: " << e.what() << '\n';
        return kUsage;
    } catch (const DomainError& e) {
        err << "fgmx: " << e.what() << " (" << e.where() << ")\n";
        return kUsage;
    } catch (const Error& e) {
        err << "fgmx: " << e.what() << '\n';
        return kNegative;
    }
    return kUsage;
}

} // namespace fgmx::cli
