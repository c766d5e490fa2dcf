// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/sim_grid.hpp
//! Grid discretization of trawl processes.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "levy.hpp"
#include "rng.hpp"
#include "trawl_geometry.hpp"

namespace trawlkit
{
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/*!
 * Cells of the grid on [T, 0] x [0, phi(0)].
 *
 * T is floored onto the time step so every cell has area dt * dx.
 */
struct GridConfig
{
    std::size_t Nt{1};   //!< cells per tau on the time axis
    std::size_t Nx{1};   //!< cells on the height axis
    double tau{1};
    std::size_t k{1};
    double T{-1};        //!< horizon, negative

    double dt() const { return tau / double(Nt); }
    double dx(TrawlFunction const& trawl) const { return trawl.phi0() / double(Nx); }
    //! Columns per window
    std::size_t N() const
    {
        double r = -T / dt();
        double n = std::floor(r);
        if (r - n > 1e-9 * std::max(1.0, r))
            n += 1;
        return static_cast<std::size_t>(std::max(1.0, n));
    }
    double T_eff() const { return -double(N()) * dt(); }

    void validate() const
    {
        TRAWLKIT_REQUIRE(Nt >= 1 && Nx >= 1, "grid needs Nt, Nx >= 1");
        TRAWLKIT_REQUIRE(tau > 0 && k >= 1, "grid needs tau > 0 and k >= 1");
        TRAWLKIT_REQUIRE(T < 0 && std::isfinite(T), "grid horizon T must be negative");
    }

    //! Steps rounded from target sizes: Nt = round(tau / dt), Nx = round(phi(0) / dx)
    static GridConfig from_steps(TrawlFunction const& trawl, double tau, std::size_t k,
                                 double dt, double dx, double T)
    {
        TRAWLKIT_REQUIRE(dt > 0 && dx > 0, "grid steps must be positive");
        GridConfig c;
        c.tau = tau;
        c.k = k;
        c.T = T;
        c.Nt = std::max<std::size_t>(1, std::size_t(std::llround(tau / dt)));
        c.Nx = std::max<std::size_t>(1, std::size_t(std::llround(trawl.phi0() / dx)));
        c.validate();
        return c;
    }
};

//! Horizon for the grid: the support bound, else where the tail holds rel * Leb(A)
inline double default_horizon(TrawlFunction const& trawl, double rel = 1e-3)
{
    if (auto T = trawl.support_bound())
        return *T;
    return trawl.inverse_tail(rel * trawl.total_area());
}

/*!
 * Which cells sit inside the trawl: (i, j) is true iff i dx <= phi(T + (j-1) dt).
 *
 * Rows are heights, columns are times from the horizon to 0; both 0-based
 * in the returned matrix.
 */
inline BoolMatrix compute_indicator(TrawlFunction const& trawl, GridConfig const& cfg)
{
    cfg.validate();
    std::size_t const N = cfg.N();
    double const dt = cfg.dt(), dx = cfg.dx(trawl), T = cfg.T_eff();
    BoolMatrix I = BoolMatrix::Constant(cfg.Nx, N, false);
    for (std::size_t j = 0; j < N; ++j)
    {
        double h = trawl(T + double(j) * dt);
        for (std::size_t i = 0; i < cfg.Nx; ++i)
            I(i, j) = double(i + 1) * dx <= h;
    }
    return I;
}

inline double included_area(TrawlFunction const& trawl, GridConfig const& cfg)
{
    return double(compute_indicator(trawl, cfg).count()) * cfg.dt() * cfg.dx(trawl);
}

/*!
 * Values at tau, ..., k tau from a sliding window of cells.
 *
 * The window is a ring of N columns. Each step retires the Nt oldest
 * columns and draws Nt fresh ones. A column is stored as prefix sums over
 * height; the indicator is monotone in height, so a column's contribution
 * at any position is one prefix sum. Cells never inside the trawl are not
 * drawn.
 */
inline std::vector<double> simulate_grid(TrawlFunction const& trawl, LevySeed const& seed,
                                         GridConfig const& cfg, RngStream& rng)
{
    cfg.validate();
    std::size_t const N = cfg.N(), Nt = cfg.Nt, k = cfg.k;
    BoolMatrix const ind = compute_indicator(trawl, cfg);
    // included height count per window column
    std::vector<std::size_t> m(N);
    for (std::size_t j = 0; j < N; ++j)
        m[j] = std::size_t(ind.col(j).count());
    std::size_t const rows = m.back();
    std::vector<double> X(k, 0.0);
    if (rows == 0)
        return X;
    SetLawSampler cell(seed, cfg.dt() * cfg.dx(trawl));
    std::vector<double> ring(N * (rows + 1), 0.0);
    auto draw_column = [&](std::size_t slot) {
        double* p = ring.data() + slot * (rows + 1);
        p[0] = 0;
        for (std::size_t i = 1; i <= rows; ++i)
            p[i] = p[i - 1] + cell(rng);
    };
    // slot of the oldest column
    std::size_t head = 0;
    for (std::size_t j = 0; j < N; ++j)
        draw_column(j);
    for (std::size_t l = 0; l < k; ++l)
    {
        if (l > 0)
        {
            std::size_t fresh = std::min(Nt, N);
            for (std::size_t c = 0; c < fresh; ++c)
            {
                draw_column(head);
                head = (head + 1) % N;
            }
        }
        double x = 0;
        for (std::size_t j = 0; j < N; ++j)
            x += ring[((head + j) % N) * (rows + 1) + m[j]];
        X[l] = x;
    }
    return X;
}

/*!
 * MSE bound C^2 E[L']^2 + C Var(L') with C = |T| dx + phi(0) dt + int_{-inf}^T phi.
 */
inline double grid_mse_bound(TrawlFunction const& trawl, LevySeed const& seed, double T,
                             double dt, double dx)
{
    TRAWLKIT_REQUIRE(T < 0 && dt > 0 && dx > 0, "grid bound needs T < 0 and positive steps");
    auto mv = set_mean_var(seed, 1.0);
    if (!mv.variance.is_finite() || !mv.mean.is_finite())
        throw ConfigError("grid MSE bound needs a seed with finite variance");
    double C = std::abs(T) * dx + trawl.phi0() * dt + trawl.tail_integral(T);
    double m = mv.mean.value();
    return C * C * m * m + C * mv.variance.value();
}

}  // namespace trawlkit
