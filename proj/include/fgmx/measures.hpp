#pragma once

#include "fgmx/copula.hpp"
#include "fgmx/error.hpp"
#include "fgmx/func1d.hpp"
#include "fgmx/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace fgmx {

/// Spearman's rho as 24 * int theta phi Phi.
inline double spearman_rho_product_form(const CopulaSpec& spec, const QuadratureConfig& cfg = {}) {
    require_valid(spec, "spearman_rho");
    const Func1D& theta = spec.theta();
    const Func1D& phi = spec.phi();
    auto integrand = [&](double t) {
        const double p = phi(t);
        if (p == 0.0) return 0.0;
        return theta(t) * p * phi.antiderivative(t);
    };
    return 24.0 * integrate_fn(integrand, 0.0, 1.0, cfg).value;
}

/// Spearman's rho as 12 [Phi(1)^2 theta(1) - int Phi^2 theta']. Needs theta'.
inline double spearman_rho_parts_form(const CopulaSpec& spec, const QuadratureConfig& cfg = {}) {
    require_valid(spec, "spearman_rho");
    const Func1D& theta = spec.theta();
    const Func1D& phi = spec.phi();
    const double big_phi_1 = phi.antiderivative(1.0);
    auto integrand = [&](double t) {
        const double a = phi.antiderivative(t);
        if (a == 0.0) return 0.0;
        return a * a * deriv_anywhere(theta, t);
    };
    return 12.0 * (big_phi_1 * big_phi_1 * theta_at_one(spec) - integrate_fn(integrand, 0.0, 1.0, cfg).value);
}

/// Spearman's rho as 12 * double integral of C - 3, split along the diagonal.
inline double spearman_rho_double_integral(const CopulaSpec& spec, const QuadratureConfig& cfg = {}) {
    require_valid(spec, "spearman_rho");
    QuadratureConfig inner_cfg = cfg;
    inner_cfg.abs_tol = cfg.abs_tol * 0.1;
    inner_cfg.rel_tol = cfg.rel_tol * 0.1;
    // By symmetry the integral over the square is twice the one over v <= u.
    auto outer = [&](double u) {
        auto inner = [&](double v) { return detail::cdf_unchecked(spec, u, v); };
        return integrate_fn(inner, 0.0, u, inner_cfg).value;
    };
    return 24.0 * integrate_fn(outer, 0.0, 1.0, cfg).value - 3.0;
}

struct RhoResult {
    double value = 0.0;
    std::string method;
    std::optional<double> cross_check;
};

/// Spearman's rho. The product form is primary; it is compared against the
/// integration-by-parts form when theta' is analytic, and a disagreement (or
/// a tabulated Phi that is unstable across tolerances) is settled by the
/// double integral.
inline RhoResult spearman_rho_detailed(const CopulaSpec& spec, const QuadratureConfig& cfg = {}) {
    RhoResult out;
    out.value = spearman_rho_product_form(spec, cfg);
    out.method = "quadrature";
    const double agree = 1e-6;
    bool disputed = false;
    if (spec.theta().has_derivative()) {
        try {
            out.cross_check = spearman_rho_parts_form(spec, cfg);
            disputed = std::abs(*out.cross_check - out.value) > agree;
        } catch (const Error&) {
        }
    }
    if (!disputed && spec.phi().provenance() != Provenance::closed_form) {
        QuadratureConfig loose = cfg;
        loose.abs_tol *= 100.0;
        loose.rel_tol *= 100.0;
        disputed = std::abs(spearman_rho_product_form(spec, loose) - out.value) > agree;
    }
    if (disputed) {
        const double reference = spearman_rho_double_integral(spec, cfg);
        if (std::abs(reference - out.value) > agree) {
            if (out.cross_check && std::abs(reference - *out.cross_check) <= agree) {
                std::swap(out.value, *out.cross_check);
            } else {
                out.cross_check = out.value;
                out.value = reference;
            }
            out.method = "quadrature-2d";
        }
    }
    return out;
}

inline double spearman_rho(const CopulaSpec& spec, const QuadratureConfig& cfg = {}) {
    return spearman_rho_detailed(spec, cfg).value;
}

struct TailResult {
    double value = 0.0;
    std::string method;
    std::optional<std::string> warning;
};

/// Upper tail dependence -phi(1)^2 theta'(1-).
inline TailResult upper_tail_dep_detailed(const CopulaSpec& spec) {
    require_valid(spec, "upper_tail_dep");
    TailResult out;
    const double p1 = value_near(spec.phi(), 1.0);
    if (std::abs(p1) <= 1e-12) {
        out.method = "analytic";
        return out;
    }
    out.method = spec.theta().has_derivative() ? "analytic" : "numeric";
    const double lambda = -p1 * p1 * deriv_left(spec.theta(), 1.0);
    if (!std::isfinite(lambda)) throw NumericError("upper_tail_dep: non-finite value");
    if (lambda < -1e-6 || lambda > 1.0 + 1e-6)
        throw NumericError("upper_tail_dep: value " + detail::format_number(lambda) + " outside [0,1]");
    out.value = std::clamp(lambda, 0.0, 1.0);
    if (out.value != lambda)
        out.warning = "upper tail coefficient " + detail::format_number(lambda) + " clamped to [0,1]";
    return out;
}

inline double upper_tail_dep(const CopulaSpec& spec) { return upper_tail_dep_detailed(spec).value; }

/// Lower tail dependence; identically zero for this family.
inline double lower_tail_dep(const CopulaSpec& spec) {
    require_valid(spec, "lower_tail_dep");
    return 0.0;
}

/// C(t,t)/t for t = 1e-3, 1e-4, 1e-5, 1e-6; tends to the lower tail coefficient.
inline std::vector<double> lower_tail_sequence(const CopulaSpec& spec) {
    require_valid(spec, "lower_tail_dep");
    std::vector<double> out;
    for (double t : {1e-3, 1e-4, 1e-5, 1e-6}) out.push_back(detail::cdf_unchecked(spec, t, t) / t);
    return out;
}

/// Blomqvist's medial correlation 4 C(1/2,1/2) - 1.
inline double blomqvist_beta(const CopulaSpec& spec) {
    require_valid(spec, "blomqvist_beta");
    return 4.0 * detail::cdf_unchecked(spec, 0.5, 0.5) - 1.0;
}

/// P(U = V) = -int_0^1 theta' phi^2.
inline double diagonal_mass(const CopulaSpec& spec, const QuadratureConfig& cfg = {}) {
    require_valid(spec, "diagonal_mass");
    const double m = singular_mass(spec, 1.0, cfg);
    if (m < -1e-9 || m > 1.0 + 1e-9)
        throw ConsistencyError("diagonal_mass: value " + detail::format_number(m) + " outside [0,1]");
    return std::clamp(m, 0.0, 1.0);
}

struct MeasureSet {
    double rho = 0.0;
    double lambda_upper = 0.0;
    double lambda_lower = 0.0;
    double beta = 0.0;
    double diagonal_mass = 0.0;
    std::string rho_method;
    std::string lambda_upper_method;
    std::string lambda_lower_method = "analytic";
    std::string beta_method = "analytic";
    std::string diagonal_mass_method = "quadrature";
    std::vector<std::string> warnings;
};

inline MeasureSet measure_set(const CopulaSpec& spec, const QuadratureConfig& cfg = {}) {
    require_valid(spec, "measure_set");
    MeasureSet m;
    const RhoResult rho = spearman_rho_detailed(spec, cfg);
    m.rho = rho.value;
    m.rho_method = rho.method;
    const TailResult lambda = upper_tail_dep_detailed(spec);
    m.lambda_upper = lambda.value;
    m.lambda_upper_method = lambda.method;
    if (lambda.warning) m.warnings.push_back(*lambda.warning);
    m.lambda_lower = lower_tail_dep(spec);
    m.beta = blomqvist_beta(spec);
    m.diagonal_mass = diagonal_mass(spec, cfg);
    if (m.rho < -0.75 - 1e-6 || m.rho > 1.0 + 1e-6)
        m.warnings.push_back("rho " + detail::format_number(m.rho) + " outside [-3/4, 1]");
    return m;
}

} // namespace fgmx
