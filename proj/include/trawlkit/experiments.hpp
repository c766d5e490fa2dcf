// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/experiments.hpp
//! Repeated-simulation experiments: ACF, GMM recovery, convergence sweeps.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "parallel.hpp"
#include "sim_cpp.hpp"
#include "sim_grid.hpp"
#include "sim_slice.hpp"
#include "stats.hpp"

namespace trawlkit
{
struct ConvergenceRow
{
    double parameter{0};  //!< grid step, truncation level or k
    double empirical{0};
    double se{0};
    double theory{0};
    double bound{0};
};

struct ConvergenceReport
{
    std::string method;
    std::uint64_t seed{0};
    std::size_t reps{0};
    std::vector<ConvergenceRow> rows;
    double empirical_slope{std::numeric_limits<double>::quiet_NaN()};
    double theory_slope{std::numeric_limits<double>::quiet_NaN()};
};

namespace detail
{
inline double slope_if_positive(std::vector<ConvergenceRow> const& rows, double ConvergenceRow::*f)
{
    std::vector<double> x, y;
    for (auto const& r : rows)
    {
        if (!(r.*f > 0))
            return std::numeric_limits<double>::quiet_NaN();
        x.push_back(r.parameter);
        y.push_back(r.*f);
    }
    return x.size() >= 2 ? loglog_slope(x, y) : std::numeric_limits<double>::quiet_NaN();
}
}  // namespace detail

/*!
 * Variance deficit of the grid method over a sweep of dt = dx = Delta.
 *
 * Empirical: Var(L') Leb(A) minus the sample variance of one grid value.
 * Theory: Var(L') times the area left out by the grid. Bound: grid_mse_bound.
 */
inline ConvergenceReport grid_convergence(TrawlFunction const& trawl, LevySeed const& seed,
                                          std::vector<double> const& deltas, double T,
                                          std::size_t reps, std::uint64_t rng_seed)
{
    auto mv = set_mean_var(seed, 1.0);
    TRAWLKIT_REQUIRE(mv.variance.is_finite(), "grid convergence needs a finite-variance seed");
    double const v = mv.variance.value(), total = trawl.total_area();
    ConvergenceReport rep{"grid", rng_seed, reps, {}};
    RngStream const root(rng_seed);
    for (std::size_t d = 0; d < deltas.size(); ++d)
    {
        double delta = deltas[d];
        auto cfg = GridConfig::from_steps(trawl, delta, 1, delta, delta, T);
        RngStream const level = root.split(d);
        std::vector<double> x(reps);
        parallel_for(reps, [&](std::size_t r) {
            RngStream rng = level.split(r);
            x[r] = simulate_grid(trawl, seed, cfg, rng)[0];
        });
        auto s = summarize(x);
        ConvergenceRow row;
        row.parameter = delta;
        row.empirical = v * total - s.var;
        row.se = s.se_var;
        row.theory = v * (total - included_area(trawl, cfg));
        row.bound = grid_mse_bound(trawl, seed, T, delta, delta);
        rep.rows.push_back(row);
    }
    rep.empirical_slope = detail::slope_if_positive(rep.rows, &ConvergenceRow::empirical);
    rep.theory_slope = detail::slope_if_positive(rep.rows, &ConvergenceRow::theory);
    return rep;
}

/*!
 * Coupled truncation error of the compound Poisson method at each eps.
 *
 * The reference path keeps jumps above 1e-3 min(eps). Theory is
 * truncation_mse(eps) over Leb(A).
 */
inline ConvergenceReport cpp_convergence(TrawlFunction const& trawl,
                                         LevyMeasureSpec const& measure,
                                         std::vector<double> const& eps, std::size_t reps,
                                         std::uint64_t rng_seed, double tau = 1)
{
    TRAWLKIT_REQUIRE(!eps.empty(), "need at least one truncation level");
    double fine = 1e-3 * *std::min_element(eps.begin(), eps.end());
    std::vector<double> levels{fine};
    levels.insert(levels.end(), eps.begin(), eps.end());
    std::vector<std::vector<double>> sq(eps.size(), std::vector<double>(reps));
    RngStream const root(rng_seed);
    parallel_for(reps, [&](std::size_t r) {
        RngStream rng = root.split(r);
        auto paths = simulate_cpp_coupled(trawl, measure, levels, 1, tau, rng);
        for (std::size_t e = 0; e < eps.size(); ++e)
        {
            double d = paths[0][0] - paths[e + 1][0];
            sq[e][r] = d * d;
        }
    });
    ConvergenceReport rep{"cpp", rng_seed, reps, {}};
    double area = trawl.total_area();
    for (std::size_t e = 0; e < eps.size(); ++e)
    {
        auto s = summarize(sq[e]);
        double t = truncation_mse(measure, eps[e], area);
        rep.rows.push_back({eps[e], s.mean, s.se_mean, t, t});
    }
    rep.empirical_slope = detail::slope_if_positive(rep.rows, &ConvergenceRow::empirical);
    rep.theory_slope = detail::slope_if_positive(rep.rows, &ConvergenceRow::theory);
    return rep;
}

/*!
 * Largest area any trawl loses in the slice method, per k.
 *
 * Without row truncation the partition covers every trawl, so this is 0.
 */
inline ConvergenceReport slice_convergence(TrawlFunction const& trawl, LevySeed const& seed,
                                           std::vector<std::size_t> const& ks, double tau,
                                           std::optional<std::size_t> n_trunc,
                                           std::uint64_t rng_seed)
{
    ConvergenceReport rep{"slice", rng_seed, 1, {}};
    RngStream const root(rng_seed);
    for (std::size_t i = 0; i < ks.size(); ++i)
    {
        RngStream rng = root.split(i);
        auto run = simulate_slice(trawl, seed, ks[i], tau, n_trunc, rng);
        double worst = 0;
        for (double a : run.dropped_area)
            worst = std::max(worst, a);
        rep.rows.push_back({double(ks[i]), worst, 0, worst, worst});
    }
    return rep;
}

struct AcfExperiment
{
    std::vector<double> mean;  //!< lags 1..max_lag
    std::vector<double> se;
    std::vector<double> theory;
};

/*!
 * Mean empirical ACF over independent slice-simulated runs.
 */
inline AcfExperiment acf_experiment(TrawlFunction const& trawl, LevySeed const& seed,
                                    double tau, std::size_t points, std::size_t runs,
                                    std::size_t max_lag, std::uint64_t rng_seed,
                                    std::optional<std::size_t> n_trunc = std::nullopt)
{
    TRAWLKIT_REQUIRE(runs >= 2, "ACF experiment needs at least two runs");
    std::vector<std::vector<double>> r(max_lag, std::vector<double>(runs));
    RngStream const root(rng_seed);
    parallel_for(runs, [&](std::size_t i) {
        RngStream rng = root.split(i);
        auto run = simulate_slice(trawl, seed, points, tau, n_trunc, rng);
        auto acf = empirical_acf(run.values, max_lag);
        if (!acf)
            throw NumericError("constant simulated series in the ACF experiment");
        for (std::size_t h = 0; h < max_lag; ++h)
            r[h][i] = (*acf)[h];
    });
    AcfExperiment out;
    for (std::size_t h = 0; h < max_lag; ++h)
    {
        auto s = summarize(r[h]);
        out.mean.push_back(s.mean);
        out.se.push_back(s.se_mean);
        out.theory.push_back(autocorrelation(trawl, double(h + 1) * tau));
    }
    return out;
}

//! Relative errors of the three Gamma/exponential-trawl parameters per repetition
struct GmmErrors
{
    std::vector<double> k, theta, lambda;

    double median_abs(std::vector<double> const& v) const
    {
        std::vector<double> a(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            a[i] = std::abs(v[i]);
        return median(a);
    }
};

/*!
 * GMM recovery from Gamma(k, theta) seeds on the trawl lambda e^{lambda t}.
 *
 * delta > 0 simulates on the grid with dt = dx = delta and T = -delta^{-1/2};
 * otherwise by slice partition.
 */
inline GmmErrors gmm_experiment(double k, double theta, double lambda, double tau,
                                std::size_t points, std::size_t reps, double delta,
                                GmmSpec const& spec, std::uint64_t rng_seed)
{
    auto trawl = TrawlFunction::exponential(lambda);
    Gamma seed{k, theta};
    std::optional<GridConfig> cfg;
    if (delta > 0)
        cfg = GridConfig::from_steps(trawl, tau, points, delta, delta, -1 / std::sqrt(delta));
    GmmErrors e;
    e.k.resize(reps);
    e.theta.resize(reps);
    e.lambda.resize(reps);
    RngStream const root(rng_seed);
    parallel_for(reps, [&](std::size_t r) {
        RngStream rng = root.split(r);
        std::vector<double> x = cfg ? simulate_grid(trawl, seed, *cfg, rng)
                                    : simulate_slice(trawl, seed, points, tau, {}, rng).values;
        auto est = gmm_estimate(x, spec);
        e.k[r] = est.k / k - 1;
        e.theta[r] = est.theta / theta - 1;
        e.lambda[r] = est.lambda / lambda - 1;
    });
    return e;
}

}  // namespace trawlkit
