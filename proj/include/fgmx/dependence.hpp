#pragma once

// Positive-dependence certification: PQD, LTD, RTI, LCSD, RCSI.
//
// Each property is decided twice: once through the generator
// characterization (sign of theta, sign of phi on [0, v*], monotonicity of
// the ratios phi/u, theta*phi/u or phi/(1-u), theta*phi/(1-u)), once through
// the copula-level definition on a grid or on random rectangles. Agreement
// gives pass/fail; disagreement gives `inconclusive` with a witness.

#include "fgmx/copula.hpp"
#include "fgmx/error.hpp"
#include "fgmx/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fgmx {

enum class Verdict { pass, fail, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

struct PropertyResult {
    Verdict verdict = Verdict::inconclusive;
    std::optional<Point2> witness;
    std::string detail;
};

struct DependenceGrid {
    int n = 1024;           ///< points for 1-D monotonicity scans
    int n2d = 128;          ///< points per axis for definitional 2-D scans
    double tol = 1e-9;      ///< relative tolerance on successive differences
    int tp2_samples = 2000; ///< random rectangles for total-positivity checks
    std::uint64_t seed = 0x5eed5eedULL;
};

struct DependenceReport {
    PropertyResult pqd, ltd, rti, lcsd, rcsi;
    double vstar = 0.0;
    int phi_sign = 0; ///< +1, -1, or 0 for mixed
    DependenceGrid grid;
    std::vector<std::string> notes;
};

/// Monotonicity of a sampled function.
struct Monotonicity {
    bool nonincreasing = true;
    bool nondecreasing = true;
    std::optional<double> increase_at; ///< where a rise was seen
    std::optional<double> decrease_at; ///< where a fall was seen
};

namespace detail {

inline bool rises(double a, double b, double tol) {
    return b - a > tol * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace detail

/// Scans f on n points of [lo, hi] (endpoints included) and classifies its
/// monotonicity. Cells adjacent to a turn in direction are re-scanned on a
/// 64-point sub-grid so narrow bumps are not missed.
inline Monotonicity monotonicity(const std::function<double(double)>& f, double lo, double hi, int n, double tol) {
    Monotonicity m;
    if (!(hi > lo) || n < 2) return m;
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = lo + (hi - lo) * i / (n - 1);
        ys[i] = f(xs[i]);
    }
    auto note = [&](double a, double b, double x) {
        if (detail::rises(a, b, tol)) {
            m.nonincreasing = false;
            if (!m.increase_at) m.increase_at = x;
        }
        if (detail::rises(b, a, tol)) {
            m.nondecreasing = false;
            if (!m.decrease_at) m.decrease_at = x;
        }
    };
    int last_dir = 0;
    for (int i = 0; i + 1 < n; ++i) {
        note(ys[i], ys[i + 1], xs[i]);
        const double d = ys[i + 1] - ys[i];
        const int dir = d > 0 ? 1 : d < 0 ? -1 : 0;
        if (dir != 0 && last_dir != 0 && dir != last_dir && i >= 1) {
            // turning point between xs[i-1] and xs[i+1]
            const int sub = 64;
            double prev = ys[i - 1];
            for (int k = 1; k <= 2 * sub; ++k) {
                const double x = xs[i - 1] + (xs[i + 1] - xs[i - 1]) * k / (2 * sub);
                const double y = f(x);
                note(prev, y, x);
                prev = y;
            }
        }
        if (dir != 0) last_dir = dir;
    }
    return m;
}

namespace detail {

// v*, or 0 when theta vanishes identically (product copula).
inline double vstar_or_zero(const CopulaSpec& spec) {
    try {
        return endpoint_vstar(spec);
    } catch (const ContractError&) {
        return 0.0;
    }
}

inline PropertyResult combine(bool characterization, bool definition, std::optional<Point2> witness,
                              std::string detail_char, std::string detail_def) {
    PropertyResult r;
    if (characterization == definition) {
        r.verdict = characterization ? Verdict::pass : Verdict::fail;
        r.detail = characterization ? "" : (!detail_char.empty() ? detail_char : detail_def);
    } else {
        r.verdict = Verdict::inconclusive;
        r.detail = "generator characterization says " + std::string(characterization ? "pass" : "fail") +
                   " but the definitional check says " + (definition ? "pass" : "fail");
        if (!detail_char.empty()) r.detail += "; " + detail_char;
        if (!detail_def.empty()) r.detail += "; " + detail_def;
    }
    if (r.verdict != Verdict::pass) r.witness = witness;
    return r;
}

// Midpoint grid on (0, end): end * (i + 1/2) / n.
inline std::vector<double> open_grid(double end, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = end * (i + 0.5) / n;
    return g;
}

struct SignScan {
    bool theta_nonnegative = true;
    std::optional<double> theta_negative_at;
    int phi_sign = 0; // +1 / -1 / 0 mixed (or identically zero)
    std::optional<double> phi_sign_change_at;
};

inline SignScan scan_signs(const CopulaSpec& spec, double vstar, const DependenceGrid& g) {
    SignScan s;
    for (double t : open_grid(1.0, g.n)) {
        if (spec.theta()(t) < -g.tol) {
            s.theta_nonnegative = false;
            s.theta_negative_at = t;
            break;
        }
    }
    if (s.theta_nonnegative && spec.theta()(1.0 - 1e-9) < -g.tol) {
        s.theta_nonnegative = false;
        s.theta_negative_at = 1.0 - 1e-9;
    }
    bool pos = false, neg = false;
    if (vstar > 0.0) {
        for (double t : open_grid(vstar, g.n)) {
            const double p = spec.phi()(t);
            if (p > g.tol) pos = true;
            if (p < -g.tol) neg = true;
            if (pos && neg) {
                s.phi_sign_change_at = t;
                break;
            }
        }
    }
    s.phi_sign = pos && neg ? 0 : pos ? 1 : neg ? -1 : 1;
    return s;
}

// Definitional scan: for each v, u -> h(u, v) must be non-increasing.
inline std::optional<Point2> scan_nonincreasing_in_u(const std::function<double(double, double)>& h,
                                                     const DependenceGrid& g) {
    const auto us = open_grid(1.0, g.n2d);
    for (double v : us) {
        double prev = h(us[0], v);
        for (std::size_t i = 1; i < us.size(); ++i) {
            const double cur = h(us[i], v);
            if (rises(prev, cur, g.tol)) return Point2{us[i], v};
            prev = cur;
        }
    }
    return std::nullopt;
}

inline std::optional<Point2> tp2_violation(const std::function<double(double, double)>& c, const DependenceGrid& g,
                                           std::uint64_t stream) {
    CounterRng rng(g.seed, stream);
    std::optional<Point2> worst;
    double worst_value = -1e-12;
    for (int k = 0; k < g.tp2_samples; ++k) {
        double u1 = rng.next(), u2 = rng.next(), v1 = rng.next(), v2 = rng.next();
        if (u1 > u2) std::swap(u1, u2);
        if (v1 > v2) std::swap(v1, v2);
        const double d = c(u1, v1) * c(u2, v2) - c(u1, v2) * c(u2, v1);
        if (d < worst_value) {
            worst_value = d;
            worst = Point2{u1, v1};
        }
    }
    return worst;
}

} // namespace detail

inline PropertyResult check_pqd(const CopulaSpec& spec, const DependenceGrid& g = {}) {
    require_valid(spec, "check_pqd");
    const double vstar = detail::vstar_or_zero(spec);
    const auto signs = detail::scan_signs(spec, vstar, g);
    const bool characterization = signs.theta_nonnegative && signs.phi_sign != 0;
    std::string why_char;
    std::optional<Point2> witness;
    if (!signs.theta_nonnegative) {
        why_char = "theta < 0 at t=" + detail::format_number(*signs.theta_negative_at);
        witness = Point2{*signs.theta_negative_at, *signs.theta_negative_at};
    } else if (signs.phi_sign == 0) {
        why_char = "phi changes sign on [0, v*] near t=" + detail::format_number(*signs.phi_sign_change_at);
    }

    std::optional<Point2> def_witness;
    double worst = -1e-12;
    const auto grid = detail::open_grid(1.0, g.n2d);
    for (double u : grid)
        for (double v : grid) {
            const double d = detail::cdf_unchecked(spec, u, v) - u * v;
            if (d < worst) {
                worst = d;
                def_witness = Point2{u, v};
            }
        }
    const bool definition = !def_witness;
    std::string why_def = definition ? "" : "C(u,v) < uv at " + detail::where_string(def_witness->u, def_witness->v);
    return detail::combine(characterization, definition, def_witness ? def_witness : witness, why_char, why_def);
}

namespace detail {

// Shared body of the LTD (denominator u) and RTI (denominator 1-u) checks.
inline PropertyResult check_tail_monotone(const CopulaSpec& spec, const DependenceGrid& g, bool right_tail) {
    const double vstar = vstar_or_zero(spec);
    const auto signs = scan_signs(spec, vstar, g);
    bool characterization = signs.theta_nonnegative;
    std::string why_char;
    std::optional<Point2> witness;
    if (!signs.theta_nonnegative) {
        why_char = "theta < 0 at t=" + format_number(*signs.theta_negative_at);
        witness = Point2{*signs.theta_negative_at, *signs.theta_negative_at};
    } else if (vstar > 0.0) {
        auto denom = [right_tail](double u) { return right_tail ? 1.0 - u : u; };
        const auto& theta = spec.theta();
        const auto& phi = spec.phi();
        const double lo = vstar * 0.5 / g.n;
        const double hi = vstar * (1.0 - 0.5 / g.n);
        const auto m1 = monotonicity([&](double u) { return phi(u) / denom(u); }, lo, hi, g.n, g.tol);
        const auto m2 = monotonicity([&](double u) { return theta(u) * phi(u) / denom(u); }, lo, hi, g.n, g.tol);
        const bool together = (m1.nonincreasing && m2.nonincreasing) || (m1.nondecreasing && m2.nondecreasing);
        if (!together) {
            characterization = false;
            const char* d = right_tail ? "(1-u)" : "u";
            why_char = std::string("phi/") + d + " and theta*phi/" + d + " are not monotone in the same direction on [0, v*]";
            const auto at = m1.increase_at && m1.decrease_at   ? m1.increase_at
                            : m2.increase_at && m2.decrease_at ? m2.increase_at
                            : m1.increase_at                   ? m1.increase_at
                                                               : m2.increase_at ? m2.increase_at : m1.decrease_at;
            if (at) witness = Point2{*at, *at};
        }
    }

    std::optional<Point2> def_witness;
    if (right_tail) {
        def_witness = scan_nonincreasing_in_u(
            [&](double u, double v) { return (v - cdf_unchecked(spec, u, v)) / (1.0 - u); }, g);
    } else {
        def_witness = scan_nonincreasing_in_u([&](double u, double v) { return cdf_unchecked(spec, u, v) / u; }, g);
    }
    const bool definition = !def_witness;
    std::string why_def;
    if (def_witness)
        why_def = std::string(right_tail ? "(v - C(u,v))/(1-u)" : "C(u,v)/u") + " increases in u at " +
                  where_string(def_witness->u, def_witness->v);
    return combine(characterization, definition, def_witness ? def_witness : witness, why_char, why_def);
}

// LCSD/RCSI: reuse the LTD/RTI verdict, cross-checked by TP2 sampling.
inline PropertyResult check_corner_set(const PropertyResult& base, const std::function<double(double, double)>& c,
                                       const DependenceGrid& g, std::uint64_t stream, const char* what) {
    if (base.verdict == Verdict::inconclusive) return base;
    const auto violation = tp2_violation(c, g, stream);
    const bool tp2 = !violation;
    const bool expected = base.verdict == Verdict::pass;
    PropertyResult r = base;
    if (tp2 != expected) {
        r.verdict = Verdict::inconclusive;
        r.detail = std::string("total positivity of ") + what + (tp2 ? " held on every sampled rectangle" : " failed") +
                   " but the tail-monotonicity verdict is " + to_string(base.verdict);
        r.witness = violation ? violation : base.witness;
    } else if (!tp2) {
        r.witness = violation;
        r.detail = base.detail + "; total positivity of " + what + " fails near " +
                   where_string(violation->u, violation->v);
    }
    return r;
}

} // namespace detail

inline PropertyResult check_ltd(const CopulaSpec& spec, const DependenceGrid& g = {}) {
    require_valid(spec, "check_ltd");
    return detail::check_tail_monotone(spec, g, false);
}

inline PropertyResult check_rti(const CopulaSpec& spec, const DependenceGrid& g = {}) {
    require_valid(spec, "check_rti");
    return detail::check_tail_monotone(spec, g, true);
}

/// LCSD holds exactly when LTD does; cross-checked by sampling TP2 of C.
inline PropertyResult check_lcsd(const CopulaSpec& spec, const DependenceGrid& g = {}) {
    require_valid(spec, "check_lcsd");
    return detail::check_corner_set(
        check_ltd(spec, g), [&](double u, double v) { return detail::cdf_unchecked(spec, u, v); }, g, 1, "C");
}

/// RCSI holds exactly when RTI does; cross-checked by sampling TP2 of the
/// survival copula u + v - 1 + C(1-u, 1-v).
inline PropertyResult check_rcsi(const CopulaSpec& spec, const DependenceGrid& g = {}) {
    require_valid(spec, "check_rcsi");
    return detail::check_corner_set(
        check_rti(spec, g),
        [&](double u, double v) { return u + v - 1.0 + detail::cdf_unchecked(spec, 1.0 - u, 1.0 - v); }, g, 2,
        "the survival copula");
}

inline DependenceReport dependence_report(const CopulaSpec& spec, const DependenceGrid& g = {}) {
    require_valid(spec, "dependence_report");
    DependenceReport r;
    r.grid = g;
    r.vstar = detail::vstar_or_zero(spec);
    r.phi_sign = detail::scan_signs(spec, r.vstar, g).phi_sign;
    r.pqd = check_pqd(spec, g);
    r.ltd = check_ltd(spec, g);
    r.rti = check_rti(spec, g);
    r.lcsd = detail::check_corner_set(
        r.ltd, [&](double u, double v) { return detail::cdf_unchecked(spec, u, v); }, g, 1, "C");
    r.rcsi = detail::check_corner_set(
        r.rti, [&](double u, double v) { return u + v - 1.0 + detail::cdf_unchecked(spec, 1.0 - u, 1.0 - v); }, g,
        2, "the survival copula");
    if (r.vstar == 0.0) r.notes.push_back("theta vanishes identically; v* taken as 0");
    auto implies = [&](const PropertyResult& a, const PropertyResult& b, const char* msg) {
        if (a.verdict == Verdict::pass && b.verdict == Verdict::fail) r.notes.push_back(msg);
    };
    implies(r.ltd, r.pqd, "inconsistent: LTD passes but PQD fails");
    implies(r.rti, r.pqd, "inconsistent: RTI passes but PQD fails");
    return r;
}

} // namespace fgmx
