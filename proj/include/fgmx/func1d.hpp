#pragma once

#include "fgmx/error.hpp"
#include "fgmx/expr.hpp"
#include "fgmx/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fgmx {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    bool contains(double t) const { return t >= lo && t <= hi; }
};

enum class Provenance { closed_form, expression, tabulated };

inline const char* to_string(Provenance p) {
    switch (p) {
    case Provenance::closed_form: return "closed-form";
    case Provenance::expression: return "expression";
    case Provenance::tabulated: return "tabulated";
    }
    return "?";
}

/// A univariate real function with optional analytic derivative and
/// antiderivative (normalized to 0 at the left end of the domain).
/// Immutable; copies share state.
class Func1D {
public:
    using Fn = std::function<double(double)>;

    Func1D(Fn value, Interval domain = {}, Provenance prov = Provenance::closed_form, std::string label = {})
        : value_(std::move(value)), domain_(domain), provenance_(prov), label_(std::move(label)) {}

    static Func1D constant(double c) {
        return Func1D([c](double) { return c; }, {}, Provenance::closed_form, format_label(c))
            .with_derivative([](double) { return 0.0; })
            .with_antiderivative([c](double t) { return c * t; });
    }

    static Func1D identity() {
        return Func1D([](double t) { return t; }, {}, Provenance::closed_form, "t")
            .with_derivative([](double) { return 1.0; })
            .with_antiderivative([](double t) { return 0.5 * t * t; });
    }

    /// Function backed by an expression in `t`; the derivative is symbolic.
    static Func1D from_expr(const Expr& e, Interval domain = {}) {
        const Expr d = differentiate(e);
        return Func1D([e](double t) { return eval(e, t); }, domain, Provenance::expression, to_string(e))
            .with_derivative([d](double t) { return eval(d, t); });
    }

    static Func1D from_expr(std::string_view src, Interval domain = {}) { return from_expr(parse(src), domain); }

    Func1D with_derivative(Fn d) const {
        Func1D out = *this;
        out.derivative_ = std::move(d);
        return out;
    }

    Func1D with_antiderivative(Fn a) const {
        Func1D out = *this;
        out.antiderivative_ = std::move(a);
        return out;
    }

    Func1D with_label(std::string label) const {
        Func1D out = *this;
        out.label_ = std::move(label);
        return out;
    }

    double operator()(double t) const { return value_(t); }

    bool has_derivative() const noexcept { return static_cast<bool>(derivative_); }
    bool has_antiderivative() const noexcept { return static_cast<bool>(antiderivative_); }

    double analytic_derivative(double t) const {
        if (!derivative_) throw ContractError("Func1D: no analytic derivative");
        return derivative_(t);
    }

    double antiderivative(double t) const {
        if (!antiderivative_) throw ContractError("Func1D: no antiderivative attached");
        return antiderivative_(t);
    }

    const Interval& domain() const noexcept { return domain_; }
    Provenance provenance() const noexcept { return provenance_; }
    const std::string& label() const noexcept { return label_; }

private:
    static std::string format_label(double c) { return detail::format_number(c); }

    Fn value_;
    Fn derivative_;
    Fn antiderivative_;
    Interval domain_;
    Provenance provenance_;
    std::string label_;
};

/// Derivative at an interior point: analytic when available, otherwise a
/// fourth-order central difference with h = max(1e-6, 1e-6 |t|).
inline double deriv(const Func1D& f, double t) {
    if (f.has_derivative()) return f.analytic_derivative(t);
    const double h = std::max(1e-6, 1e-6 * std::abs(t));
    const auto& d = f.domain();
    if (t - 2 * h < d.lo || t + 2 * h > d.hi)
        throw DomainError("numeric derivative needs an interior point; use a one-sided limit",
                          f.label() + " at t=" + detail::format_number(t));
    return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h);
}

/// Value at the right end of the domain, taken as the left limit when the
/// function is not finite there.
inline double left_limit_value(const Func1D& f, double at) {
    try {
        const double v = f(at);
        if (std::isfinite(v)) return v;
    } catch (const DomainError&) {
    }
    return f(at - 1e-9);
}

/// Value at `t`, nudged 1e-9 into the domain when `t` itself is singular.
inline double value_near(const Func1D& f, double t) {
    try {
        const double v = f(t);
        if (std::isfinite(v)) return v;
    } catch (const DomainError&) {
    }
    const auto& d = f.domain();
    return f(t <= 0.5 * (d.lo + std::min(d.hi, d.lo + 1.0)) ? t + 1e-9 : t - 1e-9);
}

/// Left-sided derivative at `at` (normally the right end of the domain).
/// Uses the analytic derivative when present; otherwise backward differences
/// at h = 1e-4, 1e-5, 1e-6 combined by two levels of Richardson extrapolation.
inline double deriv_left(const Func1D& f, double at) {
    if (f.has_derivative()) {
        try {
            const double v = f.analytic_derivative(at);
            if (std::isfinite(v)) return v;
        } catch (const DomainError&) {
        }
        return f.analytic_derivative(at - 1e-9);
    }
    const double f0 = left_limit_value(f, at);
    auto diff = [&](double h) { return (f0 - f(at - h)) / h; };
    const double d1 = diff(1e-4), d2 = diff(1e-5), d3 = diff(1e-6);
    const double r1 = (10.0 * d2 - d1) / 9.0;
    const double r2 = (10.0 * d3 - d2) / 9.0;
    const double r = (100.0 * r2 - r1) / 99.0;
    const double scale = 1.0 + std::abs(r);
    if (!std::isfinite(r) || std::abs(r2 - r1) > 1e-3 * scale || std::abs(d3 - d2) > 1e-2 * scale)
        throw NumericError("left derivative of " + f.label() + " at " + detail::format_number(at) +
                           " is not numerically stable");
    return r;
}

/// Derivative anywhere in the closed domain: central when there is room,
/// otherwise a second-order one-sided difference.
inline double deriv_anywhere(const Func1D& f, double t) {
    if (f.has_derivative()) return f.analytic_derivative(t);
    const double h = std::max(1e-6, 1e-6 * std::abs(t));
    const auto& d = f.domain();
    if (t - 2 * h >= d.lo && t + 2 * h <= d.hi) return deriv(f, t);
    if (t + 2 * h <= d.hi) return (-3 * f(t) + 4 * f(t + h) - f(t + 2 * h)) / (2 * h);
    return (3 * f(t) - 4 * f(t - h) + f(t - 2 * h)) / (2 * h);
}

inline double integrate(const Func1D& f, double lo, double hi, const QuadratureConfig& cfg = {}) {
    return integrate_fn([&f](double t) { return f(t); }, lo, hi, cfg).value;
}

namespace detail {

// Antiderivative samples on a uniform grid, interpolated by cubic Hermite
// splines whose node slopes are the integrand values themselves.
struct AntiderivativeTable {
    double lo, hi, step;
    std::vector<double> values;
    std::vector<double> slopes;

    double operator()(double t) const {
        if (t <= lo) return 0.0;
        if (t >= hi) return values.back();
        const double x = (t - lo) / step;
        std::size_t i = static_cast<std::size_t>(x);
        if (i >= values.size() - 1) i = values.size() - 2;
        const double s = x - static_cast<double>(i);
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        return h00 * values[i] + h10 * step * slopes[i] + h01 * values[i + 1] + h11 * step * slopes[i + 1];
    }
};

} // namespace detail

/// Returns `f` with an antiderivative attached. Analytic antiderivatives are
/// kept; otherwise one is tabulated eagerly on `points` nodes over the
/// (finite) domain.
inline Func1D with_tabulated_antiderivative(const Func1D& f, int points = 1025, const QuadratureConfig& cfg = {}) {
    if (f.has_antiderivative()) return f;
    const auto dom = f.domain();
    if (!std::isfinite(dom.lo) || !std::isfinite(dom.hi))
        throw ContractError("tabulated antiderivative needs a finite domain");
    auto table = std::make_shared<detail::AntiderivativeTable>();
    table->lo = dom.lo;
    table->hi = dom.hi;
    table->step = (dom.hi - dom.lo) / (points - 1);
    table->values.resize(points);
    table->slopes.resize(points);
    QuadratureConfig panel_cfg = cfg;
    panel_cfg.abs_tol = std::min(cfg.abs_tol, 1e-13);
    double acc = 0.0;
    for (int i = 0; i < points; ++i) {
        const double t = dom.lo + i * table->step;
        if (i > 0) acc += integrate(f, t - table->step, t, panel_cfg);
        table->values[i] = acc;
        table->slopes[i] = value_near(f, std::min(t, dom.hi));
    }
    return f.with_antiderivative([table](double t) { return (*table)(t); });
}

} // namespace fgmx
