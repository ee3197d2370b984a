#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature and monotone bisection.

#include "fgmx/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <queue>
#include <string>
#include <vector>

namespace fgmx {

enum class ImproperStrategy {
    map_to_unit, ///< substitute t = x/(1-x) and integrate over [0,1)
    cutoff,      ///< integrate [0,T] doubling T until the last block is negligible
};

struct QuadratureConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_depth = 100;
    ImproperStrategy improper = ImproperStrategy::map_to_unit;

    /// Defaults, with FGMX_QUAD_TOL (if set to a positive number) overriding
    /// both tolerances.
    static QuadratureConfig from_env() {
        QuadratureConfig cfg;
        if (const char* s = std::getenv("FGMX_QUAD_TOL")) {
            char* end = nullptr;
            const double v = std::strtod(s, &end);
            if (end != s && v > 0.0 && std::isfinite(v)) cfg.abs_tol = cfg.rel_tol = v;
        }
        return cfg;
    }
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
};

namespace detail {

// 15-point Kronrod nodes (positive half) and weights, with the embedded
// 7-point Gauss weights on the odd-indexed nodes.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double lo, hi, value, error;
    int depth;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double lo, double hi, int depth, int& evals) {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    const double fc = f(c);
    double kron = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double s = f(c - dx) + f(c + dx);
        kron += kWgk[j] * s;
        if (j % 2 == 1) gauss += kWg[j / 2] * s;
    }
    evals += 15;
    kron *= h;
    gauss *= h;
    if (!std::isfinite(kron))
        throw NumericError("non-finite integrand on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return Panel{lo, hi, kron, std::abs(kron - gauss), depth};
}

template <class F>
QuadResult integrate_finite(F& f, double lo, double hi, const QuadratureConfig& cfg) {
    QuadResult out;
    if (lo == hi) return out;
    std::priority_queue<Panel> work;
    work.push(gk15(f, lo, hi, 0, out.evaluations));
    double total = work.top().value;
    double err = work.top().error;
    std::vector<Panel> finished;
    // Panels at max depth are retired; the loop stops once the remaining
    // refinable error is within tolerance.
    const int max_panels = 20000;
    int panels = 1;
    while (!work.empty()) {
        const double tol = std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total));
        if (err <= tol) break;
        Panel p = work.top();
        work.pop();
        if (p.depth >= cfg.max_depth || panels >= max_panels) {
            finished.push_back(p);
            continue;
        }
        const double mid = 0.5 * (p.lo + p.hi);
        Panel a = gk15(f, p.lo, mid, p.depth + 1, out.evaluations);
        Panel b = gk15(f, mid, p.hi, p.depth + 1, out.evaluations);
        panels += 1;
        total += a.value + b.value - p.value;
        err += a.error + b.error - p.error;
        work.push(a);
        work.push(b);
    }
    // Re-sum to shed accumulated round-off from the incremental updates.
    total = 0.0;
    err = 0.0;
    for (const auto& p : finished) {
        total += p.value;
        err += p.error;
    }
    while (!work.empty()) {
        total += work.top().value;
        err += work.top().error;
        work.pop();
    }
    out.value = total;
    out.error = err;
    const double tol = std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total));
    if (err > tol)
        throw QuadratureError("quadrature did not converge (estimate " + std::to_string(total) + ", error " +
                                  std::to_string(err) + ")",
                              total, err);
    return out;
}

} // namespace detail

/// Integrates a callable over [lo, hi]; `hi` may be +infinity. Endpoint
/// singularities are tolerated since nodes never touch the endpoints and the
/// adaptive bisection keeps shrinking the offending panel.
template <class F>
QuadResult integrate_fn(F&& f, double lo, double hi, const QuadratureConfig& cfg = {}) {
    if (!(lo <= hi)) throw ContractError("integrate: requires lo <= hi");
    if (!(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0)) throw ContractError("integrate: tolerances must be positive");
    if (std::isfinite(hi)) return detail::integrate_finite(f, lo, hi, cfg);
    if (!std::isfinite(lo)) throw ContractError("integrate: lower limit must be finite");

    if (cfg.improper == ImproperStrategy::map_to_unit) {
        auto mapped = [&](double x) {
            const double one_minus = 1.0 - x;
            const double t = lo + x / one_minus;
            const double y = f(t);
            if (y == 0.0) return 0.0;
            return y / (one_minus * one_minus);
        };
        return detail::integrate_finite(mapped, 0.0, 1.0, cfg);
    }

    QuadResult out;
    double a = lo;
    double width = 1.0;
    for (int block = 0; block < 200; ++block) {
        QuadResult part = detail::integrate_finite(f, a, a + width, cfg);
        out.value += part.value;
        out.error += part.error;
        out.evaluations += part.evaluations;
        if (std::abs(part.value) <= 0.1 * std::max(cfg.abs_tol, cfg.rel_tol * std::abs(out.value)) && block > 2)
            return out;
        a += width;
        width *= 2.0;
    }
    throw QuadratureError("improper integral: tail did not decay", out.value, out.error);
}

/// Finds t in [lo, hi] with g(t) ~ target for a non-decreasing g, by bisection.
/// Where g jumps across the target the left edge of the jump is returned.
template <class G>
double find_root_monotone(G&& g, double lo, double hi, double target, double tol) {
    if (!(lo <= hi)) throw ContractError("find_root_monotone: requires lo <= hi");
    const double glo = g(lo);
    const double ghi = g(hi);
    if (glo > target + tol || ghi < target - tol)
        throw BracketError("find_root_monotone: target " + std::to_string(target) + " not bracketed by [" +
                           std::to_string(glo) + ", " + std::to_string(ghi) + "]");
    if (std::abs(glo - target) <= tol && glo >= target) return lo;
    // Invariant: g(lo) < target <= g(hi) (up to the initial tolerance).
    for (int it = 0; it < 2000 && hi - lo > tol; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        const double gm = g(mid);
        if (gm < target)
            lo = mid;
        else
            hi = mid;
    }
    return hi - lo <= tol ? lo + 0.5 * (hi - lo) : hi;
}

} // namespace fgmx
