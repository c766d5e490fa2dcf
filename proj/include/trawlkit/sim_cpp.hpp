// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/sim_cpp.hpp
//! Compound Poisson simulation of the jump part of a trawl process.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "levy.hpp"
#include "rng.hpp"
#include "sim_slice.hpp"
#include "trawl_geometry.hpp"

namespace trawlkit
{
//! A point of the Poisson random measure: location (t, x) and jump y
struct JumpAtom
{
    double t, x, y;
};

struct CppRun
{
    std::vector<double> values;
    std::vector<JumpAtom> atoms;
    double eps{0};
    double drift{0};   //!< int_{eps<|y|<=1} y l(dy), removed per unit area
};

namespace detail
{
/*!
 * Adds y to every trawl l >= first that contains (t, x).
 *
 * Containment is monotone in l, so the scan stops at the first miss.
 */
inline void scatter_atom(TrawlFunction const& trawl, double tau, JumpAtom const& a,
                         std::vector<double>& X)
{
    std::size_t const k = X.size();
    double first = std::ceil(a.t / tau - 1e-12);
    std::size_t l = first < 1 ? 1 : static_cast<std::size_t>(first);
    for (; l <= k; ++l)
    {
        double s = a.t - double(l) * tau;
        if (s > 0)
            continue;
        if (!(a.x < trawl(s)))
            break;
        X[l - 1] += a.y;
    }
}

//! Uniform atoms on [t0, t1] x [0, height] with jumps from the sampler
inline void uniform_atoms(JumpSampler const& jumps, double t0, double t1, double height,
                          RngStream& rng, std::vector<JumpAtom>& out)
{
    if (!(t1 > t0) || jumps.mass() == 0)
        return;
    auto n = rng.poisson(jumps.mass() * height * (t1 - t0));
    for (std::int64_t i = 0; i < n; ++i)
    {
        double t = rng.uniform(t0, t1);
        double x = rng.uniform(0, height);
        out.push_back({t, x, jumps.draw(rng)});
    }
}

//! Values from atoms: jump sums minus the compensator over Leb(A)
inline std::vector<double> trawl_values(TrawlFunction const& trawl, double tau, std::size_t k,
                                        std::vector<JumpAtom> const& atoms, double drift,
                                        double eps)
{
    std::vector<double> X(k, 0.0);
    for (auto const& a : atoms)
        if (std::abs(a.y) > eps)
            scatter_atom(trawl, tau, a, X);
    double comp = drift * trawl.total_area();
    for (double& v : X)
        v -= comp;
    return X;
}

//! Atoms of the jump part over every trawl set A_tau, ..., A_{k tau}
inline std::vector<JumpAtom> trawl_atoms(TrawlFunction const& trawl, JumpSampler const& jumps,
                                         std::size_t k, double tau, RngStream& rng,
                                         bool use_support = true)
{
    std::vector<JumpAtom> atoms;
    double const h = trawl.phi0();
    if (auto T = trawl.support_bound(); T && use_support)
    {
        uniform_atoms(jumps, *T + tau, double(k) * tau, h, rng, atoms);
        return atoms;
    }
    // A_tau by its time marginal, then the strip (tau, k tau] x [0, phi(0)]
    double const area = trawl.total_area();
    if (jumps.mass() > 0)
    {
        auto n = rng.poisson(jumps.mass() * area);
        for (std::int64_t i = 0; i < n; ++i)
        {
            double u = rng.uniform();
            double s = trawl.inverse_tail(u * area);
            double x = rng.uniform(0, trawl(s));
            atoms.push_back({tau + s, x, jumps.draw(rng)});
        }
    }
    uniform_atoms(jumps, tau, double(k) * tau, h, rng, atoms);
    return atoms;
}
}  // namespace detail

/*!
 * Jump part at tau, ..., k tau from atoms on [T + tau, k tau] x [0, phi(0)].
 *
 * The measure is restricted to |y| > eps; eps = 0 needs a finite measure.
 */
inline CppRun simulate_cpp_bounded(TrawlFunction const& trawl, LevyMeasureSpec const& measure,
                                   std::size_t k, double tau, RngStream& rng, double eps = 0)
{
    TRAWLKIT_REQUIRE(trawl.bounded(), "bounded compound Poisson simulation needs a support bound");
    TRAWLKIT_REQUIRE(k >= 1 && tau > 0, "need k >= 1 and tau > 0");
    JumpSampler jumps(measure, eps);
    CppRun run;
    run.eps = eps;
    run.drift = jumps.drift();
    run.atoms = detail::trawl_atoms(trawl, jumps, k, tau, rng);
    run.values = detail::trawl_values(trawl, tau, k, run.atoms, run.drift, eps);
    return run;
}

/*!
 * Jump part for trawls of any support.
 *
 * Atoms in A_tau have time density phi(t - tau) / Leb(A) on t < tau and
 * uniform height under phi; later atoms fill (tau, k tau] x [0, phi(0)].
 */
inline CppRun simulate_cpp_unbounded(TrawlFunction const& trawl, LevyMeasureSpec const& measure,
                                     double eps, std::size_t k, double tau, RngStream& rng)
{
    TRAWLKIT_REQUIRE(k >= 1 && tau > 0, "need k >= 1 and tau > 0");
    JumpSampler jumps(measure, eps);
    CppRun run;
    run.eps = eps;
    run.drift = jumps.drift();
    run.atoms = detail::trawl_atoms(trawl, jumps, k, tau, rng, false);
    run.values = detail::trawl_values(trawl, tau, k, run.atoms, run.drift, eps);
    return run;
}

inline CppRun simulate_cpp(TrawlFunction const& trawl, LevyMeasureSpec const& measure,
                           double eps, std::size_t k, double tau, RngStream& rng)
{
    if (trawl.bounded())
        return simulate_cpp_bounded(trawl, measure, k, tau, rng, eps);
    return simulate_cpp_unbounded(trawl, measure, eps, k, tau, rng);
}

/*!
 * One atom field, evaluated at several truncation levels.
 *
 * Atoms are drawn once at the smallest level; each coarser level keeps the
 * atoms above it, so the paths are coupled.
 */
inline std::vector<std::vector<double>>
simulate_cpp_coupled(TrawlFunction const& trawl, LevyMeasureSpec const& measure,
                     std::vector<double> const& eps, std::size_t k, double tau, RngStream& rng)
{
    TRAWLKIT_REQUIRE(!eps.empty(), "need at least one truncation level");
    double lo = *std::min_element(eps.begin(), eps.end());
    JumpSampler jumps(measure, lo);
    auto atoms = detail::trawl_atoms(trawl, jumps, k, tau, rng);
    std::vector<std::vector<double>> out;
    for (double e : eps)
        out.push_back(
            detail::trawl_values(trawl, tau, k, atoms, compensator_drift(measure, e), e));
    return out;
}

//! Leb(A) * int_{-eps}^{eps} y^2 l(dy), the L2 error of dropping small jumps
inline double truncation_mse(LevyMeasureSpec const& measure, double eps, double area)
{
    TRAWLKIT_REQUIRE(eps > 0 && area >= 0, "truncation_mse needs eps > 0 and area >= 0");
    return area * small_jump_variance(measure, eps);
}

//! Truncation level and slice-row cutoff for a full trawl simulation
struct FullSimOptions
{
    double eps{0};
    std::optional<std::size_t> n_trunc;
};

struct FullRun
{
    std::vector<double> values;
    SliceRun gaussian;
    CppRun jumps;
};

/*!
 * Gaussian part by slice partition plus jump part by compound Poisson.
 *
 * The two parts use independent child streams.
 */
inline FullRun simulate_trawl_full(TrawlFunction const& trawl, LevySeed const& seed,
                                   std::size_t k, double tau, RngStream& rng,
                                   FullSimOptions const& opt = {})
{
    validate(seed);
    auto [g, j] = levy_ito_split(seed);
    RngStream base(rng());
    RngStream rg = base.split("gaussian"), rj = base.split("jumps");
    FullRun run;
    if (!is_zero_seed(g))
        run.gaussian = simulate_slice(trawl, g, k, tau, opt.n_trunc, rg);
    else
        run.gaussian.values.assign(k, 0.0);
    if (auto const* c = std::get_if<CustomTriplet>(&j))
        run.jumps = simulate_cpp(trawl, c->measure, opt.eps, k, tau, rj);
    else
        run.jumps.values.assign(k, 0.0);
    run.values.resize(k);
    for (std::size_t l = 0; l < k; ++l)
        run.values[l] = run.gaussian.values[l] + run.jumps.values[l];
    return run;
}

}  // namespace trawlkit
