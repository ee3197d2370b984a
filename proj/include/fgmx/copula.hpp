#pragma once

// Copulas of the form C(u,v) = uv + theta(max(u,v)) phi(u) phi(v).

#include "fgmx/error.hpp"
#include "fgmx/func1d.hpp"
#include "fgmx/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fgmx {

struct Point2 {
    double u = 0.0;
    double v = 0.0;
};

/// Outcome of one generator condition. `value` is the quantity compared
/// against the threshold (|phi(0)|, |phi(1) theta(1)|, a minimum or a
/// maximum) and `where` the point where it was attained.
struct ConditionCheck {
    bool pass = false;
    double value = 0.0;
    std::optional<Point2> where;
    std::string detail;
};

struct ValidityReport {
    ConditionCheck cond_a; ///< phi(0) = 0, and theta phi^2 -> 0 at the origin
    ConditionCheck cond_b; ///< phi(1) theta(1-) = 0
    ConditionCheck cond_c; ///< phi'(u) (theta phi)'(v) >= -1 for u <= v
    ConditionCheck cond_d; ///< theta' <= 0
    int n_grid = 0;
    double eps = 0.0;
    double tol = 0.0;
    std::string method = "grid";
    std::vector<std::string> notes;
    bool verdict = false;
};

struct ValidateOptions {
    int n_grid = 512;
    double eps = 1e-4;
    double tol = 1e-9;
    int refinements = 10;
};

enum class ValidationState { unchecked, valid, invalid };

/// A (theta, phi) generator pair. phi always carries an antiderivative
/// (analytic or tabulated at construction). Immutable.
class CopulaSpec {
public:
    CopulaSpec(Func1D theta, Func1D phi, std::string label = {})
        : theta_(std::move(theta)), phi_(with_tabulated_antiderivative(phi)), label_(std::move(label)) {}

    const Func1D& theta() const noexcept { return theta_; }
    const Func1D& phi() const noexcept { return phi_; }
    const std::string& label() const noexcept { return label_; }

    ValidationState state() const noexcept {
        if (!report_) return ValidationState::unchecked;
        return report_->verdict ? ValidationState::valid : ValidationState::invalid;
    }
    bool is_valid() const noexcept { return state() == ValidationState::valid; }
    const ValidityReport* report() const noexcept { return report_.get(); }

    CopulaSpec with_report(ValidityReport r) const {
        CopulaSpec out = *this;
        out.report_ = std::make_shared<const ValidityReport>(std::move(r));
        return out;
    }

    CopulaSpec with_label(std::string label) const {
        CopulaSpec out = *this;
        out.label_ = std::move(label);
        return out;
    }

private:
    Func1D theta_;
    Func1D phi_;
    std::string label_;
    std::shared_ptr<const ValidityReport> report_;
};

inline void require_valid(const CopulaSpec& spec, const char* op) {
    if (spec.state() == ValidationState::unchecked)
        throw ContractError(std::string(op) + ": spec '" + spec.label() + "' has not been validated");
    if (spec.state() == ValidationState::invalid)
        throw ContractError(std::string(op) + ": spec '" + spec.label() + "' failed validation");
}

/// theta(1), read as a left limit when theta is singular at 1.
inline double theta_at_one(const CopulaSpec& spec) { return left_limit_value(spec.theta(), 1.0); }

/// (theta phi)'(t) = theta'(t) phi(t) + theta(t) phi'(t).
inline double theta_phi_prime(const CopulaSpec& spec, double t) {
    return deriv_anywhere(spec.theta(), t) * spec.phi()(t) + spec.theta()(t) * deriv_anywhere(spec.phi(), t);
}

namespace detail {

inline std::string where_string(double u, double v) {
    return "(" + format_number(u) + ", " + format_number(v) + ")";
}

// min over u <= v of a(u) * b(v) on a lattice; returns {value, u, v}.
struct LatticeMin {
    double value = std::numeric_limits<double>::infinity();
    double u = 0.0, v = 0.0;
};

template <class A, class B>
LatticeMin triangle_min(A&& a, B&& b, double u_lo, double u_hi, double v_lo, double v_hi, int n) {
    std::vector<double> us(n), vs(n), as(n), bs(n);
    for (int i = 0; i < n; ++i) {
        us[i] = u_lo + (u_hi - u_lo) * i / (n - 1);
        vs[i] = v_lo + (v_hi - v_lo) * i / (n - 1);
        as[i] = a(us[i]);
        bs[i] = b(vs[i]);
    }
    LatticeMin best;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (us[i] > vs[j]) continue;
            const double p = as[i] * bs[j];
            if (p < best.value || std::isnan(p)) {
                best = {p, us[i], vs[j]};
                if (std::isnan(p)) return best;
            }
        }
    return best;
}

} // namespace detail

/// Checks the four generator conditions on a grid over [eps, 1-eps].
/// Evaluation failures become failed conditions with a witness.
inline ValidityReport validate(const CopulaSpec& spec, const ValidateOptions& opt = {}) {
    if (opt.n_grid < 64) throw ContractError("validate: n_grid must be >= 64");
    if (!(opt.eps > 0.0 && opt.eps < 0.5)) throw ContractError("validate: eps must lie in (0, 0.5)");

    ValidityReport r;
    r.n_grid = opt.n_grid;
    r.eps = opt.eps;
    r.tol = opt.tol;
    const Func1D& theta = spec.theta();
    const Func1D& phi = spec.phi();
    const double lo = opt.eps, hi = 1.0 - opt.eps;

    // (a) grounding, plus continuity of theta phi^2 at the origin
    try {
        const double p0 = phi(0.0);
        r.cond_a.value = std::abs(p0);
        r.cond_a.where = Point2{0.0, 0.0};
        r.cond_a.pass = std::isfinite(p0) && std::abs(p0) <= opt.tol;
        if (!r.cond_a.pass) r.cond_a.detail = "phi(0) != 0";
        if (r.cond_a.pass) {
            double prev = std::numeric_limits<double>::infinity();
            for (double t : {1e-3, 1e-6, 1e-9}) {
                const double g = std::abs(theta(t) * phi(t) * phi(t));
                if (!std::isfinite(g) || g > prev + 1e-15) {
                    r.cond_a.pass = false;
                    r.cond_a.where = Point2{t, t};
                    r.cond_a.detail = "theta*phi^2 does not decay towards the origin";
                    break;
                }
                prev = g;
            }
            if (r.cond_a.pass && prev >= 1e-6) {
                r.cond_a.pass = false;
                r.cond_a.where = Point2{1e-9, 1e-9};
                r.cond_a.detail = "theta*phi^2 does not vanish at the origin";
            }
        }
    } catch (const Error& e) {
        r.cond_a = {false, std::numeric_limits<double>::quiet_NaN(), Point2{0.0, 0.0}, e.what()};
    }

    // (b) margins
    try {
        const double prod = phi(1.0) * theta_at_one(spec);
        r.cond_b.value = std::abs(prod);
        r.cond_b.where = Point2{1.0, 1.0};
        r.cond_b.pass = std::isfinite(prod) && std::abs(prod) <= opt.tol;
        if (!r.cond_b.pass) r.cond_b.detail = "phi(1)*theta(1) != 0";
    } catch (const Error& e) {
        r.cond_b = {false, std::numeric_limits<double>::quiet_NaN(), Point2{1.0, 1.0}, e.what()};
    }

    // (c) 2-increasing on the triangle u <= v
    try {
        auto a = [&](double u) { return deriv_anywhere(phi, u); };
        auto b = [&](double v) { return theta_phi_prime(spec, v); };
        auto best = detail::triangle_min(a, b, lo, hi, lo, hi, opt.n_grid);
        double width = 2.0 * (hi - lo) / (opt.n_grid - 1);
        for (int pass = 0; pass < opt.refinements && std::isfinite(best.value); ++pass) {
            const double ul = std::max(lo, best.u - width), uh = std::min(hi, best.u + width);
            const double vl = std::max(lo, best.v - width), vh = std::min(hi, best.v + width);
            auto local = detail::triangle_min(a, b, ul, uh, vl, vh, 33);
            if (local.value < best.value || std::isnan(local.value)) best = local;
            width *= 0.25;
        }
        r.cond_c.value = best.value;
        r.cond_c.where = Point2{best.u, best.v};
        r.cond_c.pass = std::isfinite(best.value) && best.value >= -1.0 - opt.tol;
        if (!r.cond_c.pass) r.cond_c.detail = "phi'(u)(theta*phi)'(v) < -1 at " + detail::where_string(best.u, best.v);
    } catch (const DomainError& e) {
        r.cond_c = {false, std::numeric_limits<double>::quiet_NaN(), std::nullopt, e.what() + std::string(" in ") + e.where()};
    } catch (const Error& e) {
        r.cond_c = {false, std::numeric_limits<double>::quiet_NaN(), std::nullopt, e.what()};
    }

    // (d) theta non-increasing
    try {
        double best = -std::numeric_limits<double>::infinity(), arg = lo;
        auto scan = [&](double a, double b, int n) {
            for (int i = 0; i < n; ++i) {
                const double t = a + (b - a) * i / (n - 1);
                const double d = deriv_anywhere(theta, t);
                if (d > best || std::isnan(d)) {
                    best = d;
                    arg = t;
                    if (std::isnan(d)) return;
                }
            }
        };
        scan(lo, hi, opt.n_grid);
        double width = 2.0 * (hi - lo) / (opt.n_grid - 1);
        for (int pass = 0; pass < opt.refinements && !std::isnan(best); ++pass) {
            scan(std::max(lo, arg - width), std::min(hi, arg + width), 33);
            width *= 0.25;
        }
        r.cond_d.value = best;
        r.cond_d.where = Point2{arg, arg};
        r.cond_d.pass = !std::isnan(best) && best <= opt.tol;
        if (!r.cond_d.pass) r.cond_d.detail = "theta is increasing near t=" + detail::format_number(arg);
    } catch (const DomainError& e) {
        r.cond_d = {false, std::numeric_limits<double>::quiet_NaN(), std::nullopt, e.what() + std::string(" in ") + e.where()};
    } catch (const Error& e) {
        r.cond_d = {false, std::numeric_limits<double>::quiet_NaN(), std::nullopt, e.what()};
    }

    // Standing assumptions, recorded but not part of the verdict.
    try {
        int theta_zero = 0, phi_zero_run = 0, longest_phi_run = 0;
        for (int i = 0; i < opt.n_grid; ++i) {
            const double t = lo + (hi - lo) * i / (opt.n_grid - 1);
            if (std::abs(theta(t)) <= opt.tol) ++theta_zero;
            if (std::abs(phi(t)) <= opt.tol) {
                longest_phi_run = std::max(longest_phi_run, ++phi_zero_run);
            } else {
                phi_zero_run = 0;
            }
        }
        if (theta_zero == opt.n_grid) r.notes.push_back("theta vanishes on the whole grid: the copula is the product copula");
        if (longest_phi_run > 1) r.notes.push_back("phi vanishes on consecutive grid points, not only at isolated points");
    } catch (const Error&) {
    }

    r.verdict = r.cond_a.pass && r.cond_b.pass && r.cond_c.pass && r.cond_d.pass;
    return r;
}

/// Runs `validate` and attaches the report.
inline CopulaSpec validated(const CopulaSpec& spec, const ValidateOptions& opt = {}) {
    return spec.with_report(validate(spec, opt));
}

namespace detail {

inline void check_unit(double x, const char* name, const char* op) {
    if (!(x >= 0.0 && x <= 1.0))
        throw ContractError(std::string(op) + ": " + name + "=" + format_number(x) + " outside [0,1]");
}

// cdf without the validation check; callers have done it.
inline double cdf_unchecked(const CopulaSpec& spec, double u, double v) {
    if (u == 0.0 || v == 0.0) return 0.0;
    if (u == 1.0) return v;
    if (v == 1.0) return u;
    const double lo = std::min(u, v), hi = std::max(u, v);
    if (hi < 1e-12) return u * v;
    const double extra = spec.theta()(hi) * (spec.phi()(lo) * spec.phi()(hi));
    const double c = u * v + extra;
    if (!std::isfinite(c))
        throw NumericError("cdf: non-finite value at " + where_string(u, v) + " for spec '" + spec.label() + "'");
    return c;
}

} // namespace detail

/// C(u,v) = uv + theta(max(u,v)) phi(u) phi(v), with C = 0 on the lower
/// edges and the margins on the upper edges.
inline double cdf(const CopulaSpec& spec, double u, double v) {
    require_valid(spec, "cdf");
    detail::check_unit(u, "u", "cdf");
    detail::check_unit(v, "v", "cdf");
    return detail::cdf_unchecked(spec, u, v);
}

/// C-volume of [u1,u2] x [v1,v2].
inline double rectangle_mass(const CopulaSpec& spec, double u1, double u2, double v1, double v2) {
    require_valid(spec, "rectangle_mass");
    for (double x : {u1, u2, v1, v2}) detail::check_unit(x, "corner", "rectangle_mass");
    if (u1 > u2 || v1 > v2) throw ContractError("rectangle_mass: requires u1 <= u2 and v1 <= v2");
    return detail::cdf_unchecked(spec, u2, v2) - detail::cdf_unchecked(spec, u2, v1) -
           detail::cdf_unchecked(spec, u1, v2) + detail::cdf_unchecked(spec, u1, v1);
}

/// Density of the absolutely continuous part off the diagonal:
/// 1 + (theta phi)'(max) phi'(min).
inline double density_ac(const CopulaSpec& spec, double u, double v) {
    require_valid(spec, "density_ac");
    if (!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0))
        throw ContractError("density_ac: point must be interior");
    if (u == v) throw ContractError("density_ac: the diagonal carries the singular part; use diagonal_mass");
    const double lo = std::min(u, v), hi = std::max(u, v);
    const double d = 1.0 + theta_phi_prime(spec, hi) * deriv_anywhere(spec.phi(), lo);
    if (d < -1e-9)
        throw ConsistencyError("density_ac: negative density " + detail::format_number(d) + " at " +
                               detail::where_string(u, v));
    return std::max(d, 0.0);
}

/// -int_0^x theta'(t) phi(t)^2 dt, the singular mass on the diagonal below x.
/// Integrates by parts when theta' is only available numerically or the
/// direct integrand blows up at the origin.
inline double singular_mass(const CopulaSpec& spec, double x, const QuadratureConfig& cfg = {}) {
    if (x <= 0.0) return 0.0;
    const Func1D& theta = spec.theta();
    const Func1D& phi = spec.phi();
    if (theta.has_derivative()) {
        try {
            auto integrand = [&](double t) {
                const double p = phi(t);
                return -theta.analytic_derivative(t) * p * p;
            };
            return integrate_fn(integrand, 0.0, x, cfg).value;
        } catch (const NumericError&) {
        } catch (const DomainError&) {
        }
    }
    // -[theta phi^2]_0^x + int_0^x 2 theta phi phi'
    const double px = phi(x);
    const double boundary = (x >= 1.0 ? theta_at_one(spec) : theta(x)) * px * px;
    auto integrand = [&](double t) { return 2.0 * theta(t) * phi(t) * deriv_anywhere(phi, t); };
    return -boundary + integrate_fn(integrand, 0.0, x, cfg).value;
}

struct Decomposition {
    double ac = 0.0;
    double singular = 0.0;
};

/// Splits C(u,v) into its absolutely continuous and singular components.
inline Decomposition decompose(const CopulaSpec& spec, double u, double v, const QuadratureConfig& cfg = {}) {
    require_valid(spec, "decompose");
    detail::check_unit(u, "u", "decompose");
    detail::check_unit(v, "v", "decompose");
    if (u == 0.0 || v == 0.0) return {};
    const double s = singular_mass(spec, std::min(u, v), cfg);
    return {detail::cdf_unchecked(spec, u, v) - s, s};
}

/// The conditional distribution v -> P(V <= v | U = u) for a fixed u,
/// with the per-u constants precomputed.
class ConditionalSlice {
public:
    ConditionalSlice(const CopulaSpec& spec, double u) : spec_(&spec), u_(u) {
        phi_u_ = spec.phi()(u);
        phi_prime_u_ = deriv_anywhere(spec.phi(), u);
        theta_u_ = spec.theta()(u);
        theta_phi_prime_u_ = deriv_anywhere(spec.theta(), u) * phi_u_ + theta_u_ * phi_prime_u_;
        below_ = u + phi_u_ * theta_phi_prime_u_;
        above_ = u + theta_u_ * phi_u_ * phi_prime_u_;
        if (!std::isfinite(below_) || !std::isfinite(above_))
            throw NumericError("conditional_cdf: non-finite limits at u=" + detail::format_number(u));
        if (above_ - below_ < -1e-9)
            throw ConsistencyError("conditional_cdf: negative jump at u=" + detail::format_number(u));
    }

    double u() const noexcept { return u_; }
    /// F(u-|u)
    double left_limit() const noexcept { return below_; }
    /// F(u|u) = F(u-|u) + jump
    double at_u() const noexcept { return above_; }
    double jump() const noexcept { return std::max(0.0, above_ - below_); }

    double operator()(double v) const {
        if (v <= 0.0) return 0.0;
        if (v >= 1.0) return 1.0;
        if (v < u_) return v + spec_->phi()(v) * theta_phi_prime_u_;
        if (v == u_) return above_;
        return v + spec_->theta()(v) * spec_->phi()(v) * phi_prime_u_;
    }

private:
    const CopulaSpec* spec_;
    double u_;
    double phi_u_ = 0.0, phi_prime_u_ = 0.0, theta_u_ = 0.0, theta_phi_prime_u_ = 0.0;
    double below_ = 0.0, above_ = 0.0;
};

/// F(v|u) = dC/du (u,v); right-continuous with a jump of -theta'(u) phi(u)^2 at v = u.
inline double conditional_cdf(const CopulaSpec& spec, double u, double v) {
    require_valid(spec, "conditional_cdf");
    if (!(u > 0.0 && u < 1.0)) throw ContractError("conditional_cdf: u must be interior");
    detail::check_unit(v, "v", "conditional_cdf");
    const ConditionalSlice slice(spec, u);
    const double f = slice(v);
    if (f < -1e-9 || f > 1.0 + 1e-9)
        throw ConsistencyError("conditional_cdf: value " + detail::format_number(f) + " outside [0,1] at " +
                               detail::where_string(u, v));
    return std::clamp(f, 0.0, 1.0);
}

/// v* = sup{v : theta(v) != 0}, located by bisection on |theta| > tol.
inline double endpoint_vstar(const CopulaSpec& spec, double tol = 1e-12) {
    require_valid(spec, "endpoint_vstar");
    const Func1D& theta = spec.theta();
    auto nonzero = [&](double t) { return std::abs(value_near(theta, t)) > tol; };
    if (nonzero(1.0 - 1e-9)) return 1.0;
    double lo = 1e-9;
    if (!nonzero(lo)) throw ContractError("endpoint_vstar: theta vanishes identically");
    double hi = 1.0 - 1e-9;
    while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        if (nonzero(mid))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace fgmx
