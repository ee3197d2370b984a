#pragma once

// Named generator pairs: the K-generated subfamily theta = inverse survival
// of a lifetime distribution with phi = identity, the constant-theta
// subfamily, and rho-inversion fitting.

#include "fgmx/copula.hpp"
#include "fgmx/error.hpp"
#include "fgmx/expr.hpp"
#include "fgmx/func1d.hpp"
#include "fgmx/measures.hpp"
#include "fgmx/quadrature.hpp"
#include "fgmx/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fgmx {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A lifetime distribution K on [0, support_end) given by its survival
/// function, density and inverse survival function.
struct KGenerator {
    Func1D survival;
    Func1D density;
    Func1D inverse_survival; ///< on (0, 1]
    double support_end = kInf;
    std::string label;
};

namespace detail {

// 0, then log-spaced points up to the support end (or a far cutoff), then
// points crowding a finite support end from the left.
inline std::vector<double> k_probes(double support_end, int per_decade = 24) {
    std::vector<double> t{0.0};
    const double top = std::isfinite(support_end) ? support_end : 1e12;
    for (double e = -8.0; std::pow(10.0, e) < top; e += 1.0 / per_decade) t.push_back(std::pow(10.0, e));
    if (std::isfinite(support_end)) {
        for (int i = 1; i < 64; ++i) t.push_back(support_end * i / 64.0);
        for (int j = 2; j <= 10; ++j) t.push_back(support_end * (1.0 - std::pow(10.0, -j)));
    }
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    while (!t.empty() && t.back() >= top) t.pop_back();
    return t;
}

} // namespace detail

/// Checks the structural invariants of a lifetime generator: survival 1 at
/// zero, non-increasing, vanishing at the support end, and consistent with
/// its inverse. Admissibility is left to check_hazard.
inline KGenerator make_k_generator(Func1D survival, Func1D density, Func1D inverse_survival, double support_end,
                                   std::string label) {
    KGenerator k{std::move(survival), std::move(density), std::move(inverse_survival), support_end, std::move(label)};
    const double s0 = k.survival(0.0);
    if (std::abs(s0 - 1.0) > 1e-12)
        throw ContractError("K generator " + k.label + ": survival at 0 is " + detail::format_number(s0) + ", not 1");
    double prev = s0;
    for (double t : detail::k_probes(support_end, 8)) {
        const double s = k.survival(t);
        if (!(s <= prev + 1e-15))
            throw ContractError("K generator " + k.label + ": survival increases at t=" + detail::format_number(t));
        prev = s;
    }
    const double far = std::isfinite(support_end) ? k.survival(support_end) : k.survival(1e15);
    if (!(far <= 1e-6)) throw ContractError("K generator " + k.label + ": survival does not tend to 0");
    for (double x : {1e-6, 1e-3, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0}) {
        const double back = k.survival(k.inverse_survival(x));
        if (std::abs(back - x) > 1e-9)
            throw ContractError("K generator " + k.label + ": inverse survival round trip fails at " +
                                detail::format_number(x));
    }
    return k;
}

/// Survival (1 + x/sigma)^(-1/alpha): generalized Pareto with shape 1/alpha
/// and scale sigma. alpha = 1 is the B11 generator, sigma = 1 the CA one.
inline KGenerator gpd_generator(double alpha, double sigma) {
    if (!(alpha > 0.0) || !(sigma > 0.0)) throw DomainError("gpd generator needs alpha > 0 and sigma > 0", "gpd");
    const double a = alpha, s = sigma;
    Func1D surv([a, s](double x) { return std::pow(1.0 + x / s, -1.0 / a); }, {0.0, kInf});
    Func1D dens([a, s](double x) { return std::pow(1.0 + x / s, -1.0 / a - 1.0) / (a * s); }, {0.0, kInf});
    Func1D inv = Func1D([a, s](double u) { return s * (std::pow(u, -a) - 1.0); })
                     .with_derivative([a, s](double u) { return -a * s * std::pow(u, -a - 1.0); });
    const std::string label =
        "gpd(alpha=" + detail::format_number(alpha) + ", sigma=" + detail::format_number(sigma) + ")";
    return make_k_generator(surv.with_derivative([a, s](double x) { return -std::pow(1.0 + x / s, -1.0 / a - 1.0) / (a * s); }),
                            dens, inv.with_label(label), kInf, label);
}

inline KGenerator ca_generator(double alpha) {
    KGenerator k = gpd_generator(alpha, 1.0);
    k.label = "ca(alpha=" + detail::format_number(alpha) + ")";
    return k;
}

inline KGenerator b11_generator(double sigma) {
    KGenerator k = gpd_generator(1.0, sigma);
    k.label = "b11(sigma=" + detail::format_number(sigma) + ")";
    return k;
}

/// K uniform on [0, alpha].
inline KGenerator uniform_generator(double alpha) {
    if (!(alpha > 0.0)) throw DomainError("uniform generator needs alpha > 0", "uniform-k");
    const double a = alpha;
    Func1D surv([a](double x) { return x >= a ? 0.0 : 1.0 - x / a; }, {0.0, a});
    Func1D dens([a](double x) { return x < a ? 1.0 / a : 0.0; }, {0.0, a});
    Func1D inv = Func1D([a](double u) { return a * (1.0 - u); }).with_derivative([a](double) { return -a; });
    return make_k_generator(surv, dens, inv, a, "uniform-k(alpha=" + detail::format_number(alpha) + ")");
}

/// K standard exponential.
inline KGenerator exponential_generator() {
    Func1D surv([](double x) { return std::exp(-x); }, {0.0, kInf});
    Func1D dens([](double x) { return std::exp(-x); }, {0.0, kInf});
    Func1D inv = Func1D([](double u) { return -std::log(u); }).with_derivative([](double u) { return -1.0 / u; });
    return make_k_generator(surv, dens, inv, kInf, "exponential-k");
}

struct HazardCheck {
    bool pass = false;
    double min_margin = 0.0; ///< min of k/Kbar - 1/(1+t) over the probes
    double witness_t = 0.0;  ///< where the minimum was attained
    int probes = 0;
};

/// Admissibility of a K generator: hazard k/Kbar >= 1/(1+t) wherever
/// 0 <= K(t) < 1. Probes where Kbar underflows are skipped.
inline HazardCheck check_hazard(const KGenerator& k, double tol = 1e-9) {
    HazardCheck out;
    out.min_margin = kInf;
    for (double t : detail::k_probes(k.support_end)) {
        const double s = k.survival(t);
        if (!(s > 1e-280) || s >= 1.0 + 1e-15) {
            if (t > 0.0) continue;
        }
        const double h = k.density(t) / s;
        if (!std::isfinite(h)) continue;
        const double margin = h - 1.0 / (1.0 + t);
        ++out.probes;
        if (margin < out.min_margin) {
            out.min_margin = margin;
            out.witness_t = t;
        }
    }
    if (out.probes == 0) throw NumericError("check_hazard: no usable probe for " + k.label);
    out.pass = out.min_margin >= -tol;
    return out;
}

/// C(u,v) = uv [1 + Kbar^{-1}(max(u,v))]. Validity is decided by the hazard
/// condition, which is equivalent to the generic conditions for phi = Id.
inline CopulaSpec make_k_copula(const KGenerator& k, double tol = 1e-9) {
    Func1D theta = k.inverse_survival;
    if (!theta.has_derivative()) {
        const KGenerator kk = k;
        theta = theta.with_derivative([kk](double u) { return -1.0 / kk.density(kk.inverse_survival(u)); });
    }
    CopulaSpec spec(theta.with_label(k.label), Func1D::identity(), k.label);

    const HazardCheck h = check_hazard(k, tol);
    ValidityReport r;
    r.method = "hazard";
    r.n_grid = h.probes;
    r.eps = 0.0;
    r.tol = tol;
    r.cond_a = {true, 0.0, Point2{0.0, 0.0}, ""};
    const double t1 = theta(1.0);
    r.cond_b = {std::abs(t1) <= tol, std::abs(t1), Point2{1.0, 1.0}, ""};
    // For phi = Id, (theta phi)'(v) >= -1 at v = Kbar(t) reads t - Kbar(t)/k(t) >= -1.
    const double tw = h.witness_t;
    const double v_at = k.survival(tw);
    r.cond_c = {h.pass, tw - v_at / k.density(tw), Point2{v_at, v_at},
                h.pass ? "" : "hazard k/Kbar falls below 1/(1+t) at t=" + detail::format_number(tw)};
    r.cond_d = {true, 0.0, std::nullopt, "theta' = -1/k <= 0"};
    r.verdict = r.cond_a.pass && r.cond_b.pass && r.cond_c.pass && r.cond_d.pass;
    return spec.with_report(std::move(r));
}

/// Spearman's rho of the K-copula, 3 int_0^end Kbar^4. Infinite supports
/// are cut at T with 3 Kbar(T)^2/(1+T) below 1e-14, which bounds the tail
/// since Kbar(x) <= 1/(1+x) for admissible K.
inline double rho_k(const KGenerator& k, const QuadratureConfig& cfg = {}) {
    QuadratureConfig block_cfg = cfg;
    block_cfg.abs_tol = std::min(cfg.abs_tol, 1e-14);
    block_cfg.rel_tol = std::min(cfg.rel_tol, 1e-12);
    auto f = [&k](double t) {
        const double s = k.survival(t);
        return s * s * s * s;
    };
    if (std::isfinite(k.support_end)) return 3.0 * integrate_fn(f, 0.0, k.support_end, block_cfg).value;
    double total = 0.0, a = 0.0, width = 0.25;
    for (int block = 0; block < 400; ++block) {
        total += integrate_fn(f, a, a + width, block_cfg).value;
        a += width;
        width *= 2.0;
        const double s = k.survival(a);
        if (3.0 * s * s / (1.0 + a) < 1e-14) return 3.0 * total;
    }
    throw QuadratureError("rho_k: survival tail does not decay for " + k.label, 3.0 * total, kInf);
}

/// Upper tail dependence of the K-copula, 1/k(0), clamped to [0,1].
inline double lambda_k(const KGenerator& k) {
    const double k0 = k.density(0.0);
    if (!(k0 > 0.0)) throw DomainError("lambda_k: density vanishes at 0", k.label);
    return std::clamp(1.0 / k0, 0.0, 1.0);
}

struct GpdParams {
    double alpha = 0.0;
    double sigma = 0.0;
};

/// GPD parameters reaching a target (rho, lambda) in the triangle
/// rho <= lambda < 4 rho / 3 of the open unit square.
inline GpdParams gpd_from_rho_lambda(double rho, double lambda) {
    const std::string at = "rho=" + detail::format_number(rho) + ", lambda=" + detail::format_number(lambda);
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("violates 0 < rho < 1", at);
    if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("violates 0 < lambda < 1", at);
    if (!(rho <= lambda)) throw DomainError("violates rho <= lambda", at);
    if (!(lambda < 4.0 * rho / 3.0)) throw DomainError("violates lambda < 4 rho / 3", at);
    return {4.0 - 3.0 * lambda / rho, rho * lambda / (4.0 * rho - 3.0 * lambda)};
}

// ---------------------------------------------------------------------------
// Named families

enum class Family { fgm, constant_theta, ca, b11, gpd, uniform_k, exponential_k, durante_f, custom };

inline constexpr std::array<std::pair<Family, std::string_view>, 9> kFamilyTags = {{
    {Family::fgm, "fgm"},
    {Family::constant_theta, "constant-theta"},
    {Family::ca, "ca"},
    {Family::b11, "b11"},
    {Family::gpd, "gpd"},
    {Family::uniform_k, "uniform-k"},
    {Family::exponential_k, "exponential-k"},
    {Family::durante_f, "durante-f"},
    {Family::custom, "custom"},
}};

inline std::string_view to_string(Family f) {
    for (const auto& [fam, tag] : kFamilyTags)
        if (fam == f) return tag;
    return "?";
}

inline Family family_from_string(std::string_view tag) {
    for (const auto& [fam, t] : kFamilyTags)
        if (t == tag) return fam;
    throw DomainError("unknown family tag", std::string(tag));
}

/// The named families offered for listing; `custom` is the escape hatch.
inline std::vector<std::string> family_tags() {
    std::vector<std::string> out;
    for (const auto& [fam, tag] : kFamilyTags)
        if (fam != Family::custom) out.emplace_back(tag);
    return out;
}

/// Scalar parameters in `values`, expression parameters (in `t`) in `exprs`.
///   fgm: theta | constant-theta: theta, phi | ca: alpha | b11: sigma
///   gpd: alpha, sigma | uniform-k: alpha | exponential-k: - | durante-f: f
///   custom: theta, phi
struct FamilyParams {
    Family family = Family::fgm;
    std::map<std::string, double> values;
    std::map<std::string, std::string> exprs;

    double value(const std::string& name) const {
        auto it = values.find(name);
        if (it == values.end())
            throw DomainError("missing parameter `" + name + "`", std::string(to_string(family)));
        return it->second;
    }
    const std::string& expr(const std::string& name) const {
        auto it = exprs.find(name);
        if (it == exprs.end())
            throw DomainError("missing expression `" + name + "`", std::string(to_string(family)));
        return it->second;
    }
};

/// phi(t) = t(1-t) with its derivative and antiderivative.
inline Func1D fgm_phi() {
    return Func1D([](double t) { return t * (1.0 - t); }, {}, Provenance::closed_form, "t*(1-t)")
        .with_derivative([](double t) { return 1.0 - 2.0 * t; })
        .with_antiderivative([](double t) { return t * t * (0.5 - t / 3.0); });
}

inline CopulaSpec fgm_spec(double theta) {
    return CopulaSpec(Func1D::constant(theta), fgm_phi(), "fgm(theta=" + detail::format_number(theta) + ")");
}

/// theta(t) = 1/t with phi(t) = t(1-t): C = uv + (1-u)(1-v) min(u,v).
inline CopulaSpec reciprocal_spec() {
    Func1D theta = Func1D([](double t) { return 1.0 / t; }, {}, Provenance::closed_form, "1/t")
                       .with_derivative([](double t) { return -1.0 / (t * t); });
    return CopulaSpec(theta, fgm_phi(), "reciprocal");
}

namespace detail {

inline void require_in(double x, double lo, double hi, bool lo_open, const char* name, Family fam) {
    const bool ok = (lo_open ? x > lo : x >= lo) && x <= hi;
    if (!ok)
        throw DomainError(std::string(name) + "=" + format_number(x) + " outside " + (lo_open ? "(" : "[") +
                              format_number(lo) + ", " + format_number(hi) + "]",
                          std::string(to_string(fam)));
}

inline CopulaSpec product_spec(std::string label) {
    return CopulaSpec(Func1D::constant(0.0), Func1D::identity(), std::move(label));
}

} // namespace detail

/// `enforce` rejects parameters outside the family's domain with DomainError.
/// `validate` builds any constructible member and lets the validity report
/// say why it is not a copula.
enum class DomainPolicy { enforce, validate };

/// Builds and validates the spec for a named family. Expression-based
/// families may come back invalid, with the report explaining why.
inline CopulaSpec make_named(const FamilyParams& p, const ValidateOptions& opt = {},
                             DomainPolicy policy = DomainPolicy::enforce) {
    const bool strict = policy == DomainPolicy::enforce;
    // Lower bounds of the K families are structural (the generator needs
    // them); upper bounds are admissibility, which validation also decides.
    auto require_in = [&](double x, double lo, double hi, bool lo_open, const char* name, Family fam) {
        if (strict) detail::require_in(x, lo, hi, lo_open, name, fam);
        else if (fam != Family::fgm) detail::require_in(x, lo, kInf, lo_open, name, fam);
    };
    switch (p.family) {
    case Family::fgm: {
        const double th = p.value("theta");
        require_in(th, -1.0, 1.0, false, "theta", p.family);
        return validated(fgm_spec(th), opt);
    }
    case Family::constant_theta: {
        const double th = p.value("theta");
        const Func1D phi = Func1D::from_expr(p.expr("phi"));
        return validated(CopulaSpec(Func1D::constant(th), phi,
                                    "constant-theta(theta=" + detail::format_number(th) + ", phi=" + phi.label() + ")"),
                         opt);
    }
    case Family::ca: {
        const double a = p.value("alpha");
        require_in(a, 0.0, 1.0, false, "alpha", p.family);
        if (a == 0.0) return validated(detail::product_spec("ca(alpha=0)"), opt);
        const KGenerator k = ca_generator(a);
        return make_k_copula(k).with_label(k.label);
    }
    case Family::b11: {
        const double s = p.value("sigma");
        require_in(s, 0.0, 1.0, true, "sigma", p.family);
        const KGenerator k = b11_generator(s);
        return make_k_copula(k).with_label(k.label);
    }
    case Family::gpd: {
        const double a = p.value("alpha"), s = p.value("sigma");
        require_in(a, 0.0, 1.0, true, "alpha", p.family);
        require_in(a * s, 0.0, 1.0, true, "alpha*sigma", p.family);
        return make_k_copula(gpd_generator(a, s));
    }
    case Family::uniform_k: {
        const double a = p.value("alpha");
        require_in(a, 0.0, 1.0, true, "alpha", p.family);
        return make_k_copula(uniform_generator(a));
    }
    case Family::exponential_k: return make_k_copula(exponential_generator());
    case Family::durante_f: {
        const Expr f = parse(p.expr("f"));
        const double f1 = eval(f, 1.0);
        if (std::abs(f1 - 1.0) > 1e-12)
            throw DomainError("durante-f needs f(1) = 1, got " + detail::format_number(f1), to_string(f));
        // min(u,v) f(max(u,v)) = uv + (f(w)/w - 1) u v with w = max(u,v).
        const Expr theta_e = simplify::sub(simplify::div(f, Expr::var()), Expr::num(1.0));
        return validated(CopulaSpec(Func1D::from_expr(theta_e), Func1D::identity(), "durante-f(f=" + to_string(f) + ")"),
                         opt);
    }
    case Family::custom: {
        const Func1D theta = Func1D::from_expr(p.expr("theta"));
        const Func1D phi = Func1D::from_expr(p.expr("phi"));
        return validated(CopulaSpec(theta, phi, "custom(theta=" + theta.label() + ", phi=" + phi.label() + ")"), opt);
    }
    }
    throw ContractError("make_named: unhandled family");
}

struct ThetaRange {
    double lo = 0.0;
    double hi = 0.0;
};

/// Admissible constant theta for a given phi: theta phi'(u) phi'(v) >= -1
/// over the square, and theta = 0 unless phi(1) = 0.
inline ThetaRange constant_theta_range(const Func1D& phi, int n = 2048) {
    if (std::abs(value_near(phi, 1.0)) > 1e-12) return {0.0, 0.0};
    double dmin = kInf, dmax = -kInf;
    for (int i = 0; i <= n; ++i) {
        const double t = std::clamp(static_cast<double>(i) / n, 1e-9, 1.0 - 1e-9);
        const double d = deriv_anywhere(phi, t);
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    const double pmin = std::min({dmin * dmin, dmax * dmax, dmin * dmax});
    const double pmax = std::max({dmin * dmin, dmax * dmax, dmin * dmax});
    ThetaRange r;
    r.hi = pmin < 0.0 ? -1.0 / pmin : kInf;
    r.lo = pmax > 0.0 ? -1.0 / pmax : -kInf;
    return r;
}

// ---------------------------------------------------------------------------
// Fitting by rho inversion

struct FitResult {
    Family family = Family::fgm;
    std::string parameter;
    double value = 0.0;
    double rho_hat = 0.0;
    std::size_t n = 0;
    double rho_lo = 0.0; ///< attainable rho range of the family
    double rho_hi = 0.0;
};

namespace detail {

// rho(x) is non-decreasing in the search variable x; the family parameter
// is sign * x.
struct ScalarFamily {
    std::string parameter;
    double lo, hi;
    std::function<double(double)> rho;
    double sign = 1.0;
};

inline ScalarFamily scalar_family(const FamilyParams& tmpl) {
    auto machinery = [tmpl](const char* name) {
        return [tmpl, name = std::string(name)](double x) {
            if (x == 0.0) return 0.0; // product copula limit
            FamilyParams p = tmpl;
            p.values[name] = x;
            return spearman_rho(make_named(p));
        };
    };
    switch (tmpl.family) {
    case Family::fgm: return {"theta", -1.0, 1.0, machinery("theta")};
    case Family::ca: return {"alpha", 0.0, 1.0, machinery("alpha")};
    case Family::b11: return {"sigma", 0.0, 1.0, machinery("sigma")};
    case Family::uniform_k: return {"alpha", 0.0, 1.0, machinery("alpha")};
    case Family::constant_theta: {
        const Func1D phi = with_tabulated_antiderivative(Func1D::from_expr(tmpl.expr("phi")));
        const ThetaRange r = constant_theta_range(phi);
        if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo == r.hi)
            throw DomainError("constant-theta: phi admits no bounded nontrivial theta range", phi.label());
        // rho is linear in theta: 24 theta int phi Phi.
        const double slope =
            24.0 * integrate_fn([&](double t) { return phi(t) * phi.antiderivative(t); }, 0.0, 1.0).value;
        if (slope == 0.0) throw DomainError("constant-theta: rho does not depend on theta", phi.label());
        if (slope > 0.0) return {"theta", r.lo, r.hi, [slope](double th) { return slope * th; }, 1.0};
        return {"theta", -r.hi, -r.lo, [slope](double m) { return -slope * m; }, -1.0};
    }
    default: break;
    }
    throw DomainError("rho inversion supports fgm, constant-theta, ca, b11 and uniform-k", std::string(to_string(tmpl.family)));
}

} // namespace detail

/// Parameter of `tmpl`'s family whose Spearman's rho equals `rho`.
inline FitResult invert_rho(double rho, const FamilyParams& tmpl) {
    const detail::ScalarFamily fam = detail::scalar_family(tmpl);
    FitResult out;
    out.family = tmpl.family;
    out.parameter = fam.parameter;
    out.rho_hat = rho;
    out.rho_lo = fam.rho(fam.lo);
    out.rho_hi = fam.rho(fam.hi);
    if (!(rho >= out.rho_lo - 1e-12 && rho <= out.rho_hi + 1e-12))
        throw RangeError("rho " + detail::format_number(rho) + " outside the attainable range [" +
                             detail::format_number(out.rho_lo) + ", " + detail::format_number(out.rho_hi) + "] of " +
                             std::string(to_string(tmpl.family)),
                         out.rho_lo, out.rho_hi);
    const double x = find_root_monotone(fam.rho, fam.lo, fam.hi, std::clamp(rho, out.rho_lo, out.rho_hi), 1e-12);
    out.value = fam.sign * x;
    return out;
}

/// Method-of-moments fit: sample Spearman's rho, inverted through the
/// family's rho map. Needs at least 30 pairs.
inline FitResult fit_rho_inversion(const std::vector<std::pair<double, double>>& data, const FamilyParams& tmpl) {
    if (data.size() < 30) throw ContractError("fit: need at least 30 pairs, got " + std::to_string(data.size()));
    FitResult out = invert_rho(spearman_rank_correlation(data), tmpl);
    out.n = data.size();
    return out;
}

} // namespace fgmx
