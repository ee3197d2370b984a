#pragma once

// Exact simulation by conditional inversion. U is uniform; given U = u, V is
// drawn from v -> dC/du(u,v), which has a jump of -theta'(u) phi(u)^2 at
// v = u. Draws landing in the jump return V = U bit for bit.

#include "fgmx/copula.hpp"
#include "fgmx/error.hpp"
#include "fgmx/quadrature.hpp"
#include "fgmx/random.hpp"
#include "fgmx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace fgmx {

struct SampleBatch {
    std::vector<std::pair<double, double>> pairs;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::size_t diagonal_hits = 0; ///< pairs emitted through the atom, v == u exactly
};

namespace detail {

inline constexpr std::size_t kSampleBlock = 4096;
inline constexpr double kInversionTol = 1e-12;

struct Draw {
    double u, v;
    bool atom;
};

// Draw i consumes counters 2i (for U) and 2i+1 (for the inversion level W).
inline Draw draw_pair(const CopulaSpec& spec, std::uint64_t seed, std::uint64_t i) {
    const double u = to_open_unit(random_bits(seed, 0, 2 * i));
    const double w = to_open_unit(random_bits(seed, 0, 2 * i + 1));
    const ConditionalSlice slice(spec, u);
    // each side of the jump is inverted separately on its own bracket
    if (w <= slice.left_limit()) {
        auto g = [&](double v) { return v >= u ? slice.left_limit() : slice(v); };
        return {u, find_root_monotone(g, 0.0, u, w, kInversionTol), false};
    }
    if (w <= slice.at_u()) return {u, u, true};
    auto g = [&](double v) { return v <= u ? slice.at_u() : slice(v); };
    return {u, find_root_monotone(g, u, 1.0, w, kInversionTol), false};
}

} // namespace detail

/// n pairs from the copula. The i-th pair depends only on (seed, i), so the
/// result does not depend on `threads`.
inline SampleBatch sample(const CopulaSpec& spec, std::size_t n, std::uint64_t seed, unsigned threads = 1) {
    require_valid(spec, "sample");
    if (n < 1) throw ContractError("sample: n must be >= 1");
    SampleBatch batch;
    batch.seed = seed;
    batch.n = n;
    batch.pairs.resize(n);
    std::vector<unsigned char> atom(n, 0);
    const std::size_t blocks = (n + detail::kSampleBlock - 1) / detail::kSampleBlock;
    auto run_block = [&](std::size_t b) {
        const std::size_t end = std::min(n, (b + 1) * detail::kSampleBlock);
        for (std::size_t i = b * detail::kSampleBlock; i < end; ++i) {
            const detail::Draw d = detail::draw_pair(spec, seed, i);
            batch.pairs[i] = {d.u, d.v};
            atom[i] = d.atom ? 1 : 0;
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks)));
    if (threads == 1) {
        for (std::size_t b = 0; b < blocks; ++b) run_block(b);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t b = t; b < blocks; b += threads) run_block(b);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    for (unsigned char a : atom) batch.diagonal_hits += a;
    return batch;
}

using QuantileFn = std::function<double(double)>;

/// Applies quantile functions to each margin. Both must be non-decreasing;
/// this is probed at 101 points of (0,1).
inline std::vector<std::pair<double, double>> with_margins(const SampleBatch& batch, const QuantileFn& qx,
                                                           const QuantileFn& qy) {
    for (const auto* q : {&qx, &qy}) {
        double prev = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 100; ++i) {
            const double p = std::clamp(i / 100.0, 1e-6, 1.0 - 1e-6);
            const double x = (*q)(p);
            if (std::isnan(x) || x < prev)
                throw ContractError("with_margins: quantile function is not non-decreasing near p=" +
                                    detail::format_number(p));
            prev = x;
        }
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(batch.pairs.size());
    for (const auto& [u, v] : batch.pairs) out.emplace_back(qx(u), qy(v));
    return out;
}

/// sup over the m x m grid {a/m} x {b/m} of |empirical copula - C|. The
/// empirical copula counts pairs whose normalized ranks are both <= (a, b)/m.
inline double empirical_copula_distance(const SampleBatch& batch, const CopulaSpec& spec, int m = 50) {
    require_valid(spec, "empirical_copula_distance");
    const std::size_t n = batch.pairs.size();
    if (n < 1000) throw ContractError("empirical_copula_distance: need n >= 1000");
    if (m < 1) throw ContractError("empirical_copula_distance: grid must be >= 1");
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = batch.pairs[i].first;
        ys[i] = batch.pairs[i].second;
    }
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    // cell(r) = smallest a with r/n <= a/m
    auto cell = [&](double r) {
        return std::clamp(static_cast<int>(std::ceil(r * m / static_cast<double>(n) - 1e-12)), 1, m);
    };
    std::vector<double> grid((m + 1) * (m + 1), 0.0);
    auto at = [&](int a, int b) -> double& { return grid[a * (m + 1) + b]; };
    for (std::size_t i = 0; i < n; ++i) at(cell(rx[i]), cell(ry[i])) += 1.0;
    for (int a = 1; a <= m; ++a)
        for (int b = 1; b <= m; ++b) at(a, b) += at(a - 1, b) + at(a, b - 1) - at(a - 1, b - 1);
    double worst = 0.0;
    for (int a = 1; a <= m; ++a)
        for (int b = 1; b <= m; ++b) {
            const double c = detail::cdf_unchecked(spec, static_cast<double>(a) / m, static_cast<double>(b) / m);
            worst = std::max(worst, std::abs(at(a, b) / n - c));
        }
    return worst;
}

struct EmpiricalMeasures {
    double rho_hat = 0.0;
    std::vector<std::pair<double, double>> lambda_hat; ///< (t, P(U > t | V > t))
    double mass_hat = 0.0;
};

inline EmpiricalMeasures empirical_measures(const SampleBatch& batch) {
    const std::size_t n = batch.pairs.size();
    if (n < 1000) throw ContractError("empirical_measures: need n >= 1000");
    EmpiricalMeasures out;
    out.rho_hat = spearman_rank_correlation(batch.pairs);
    for (double t : {0.9, 0.95, 0.99}) {
        std::size_t above_v = 0, both = 0;
        for (const auto& [u, v] : batch.pairs) {
            if (v > t) {
                ++above_v;
                if (u > t) ++both;
            }
        }
        out.lambda_hat.emplace_back(t, above_v ? static_cast<double>(both) / above_v : 0.0);
    }
    out.mass_hat = static_cast<double>(batch.diagonal_hits) / n;
    return out;
}

/// CSV with header `u,v` (or `u,v,x,y` with margins), 17 significant digits.
inline void write_sample_csv(std::ostream& os, const SampleBatch& batch,
                             const std::vector<std::pair<double, double>>* margins = nullptr) {
    if (margins && margins->size() != batch.pairs.size())
        throw ContractError("write_sample_csv: margins size mismatch");
    os << (margins ? "u,v,x,y\n" : "u,v\n");
    char buf[128];
    for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
        const auto& [u, v] = batch.pairs[i];
        int len = margins ? std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", u, v, (*margins)[i].first,
                                          (*margins)[i].second)
                          : std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", u, v);
        os.write(buf, len);
    }
}

} // namespace fgmx
