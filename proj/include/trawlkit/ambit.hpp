// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/ambit.hpp
//! Simple and kernel-weighted ambit fields on a regular time-space lattice.
//!
//! A_ij is the trawl set at time j tau lifted to start at height i dx:
//! {(tb, xb) : tb <= j tau, i dx < xb < i dx + phi(tb - j tau)}.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "levy.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "trawl_geometry.hpp"

namespace trawlkit
{
/*!
 * Which sets, relative to the minimal pair, contain a slice.
 *
 * Row i is the space offset, column j the time offset, both 0-based here;
 * bits are packed row-major.
 */
class IndicatorMatrix
{
  public:
    IndicatorMatrix() = default;
    IndicatorMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), bits_((rows * cols + 63) / 64, 0)
    {
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool get(std::size_t i, std::size_t j) const
    {
        std::size_t b = i * cols_ + j;
        return (bits_[b / 64] >> (b % 64)) & 1u;
    }
    void set(std::size_t i, std::size_t j)
    {
        std::size_t b = i * cols_ + j;
        bits_[b / 64] |= std::uint64_t(1) << (b % 64);
    }
    std::size_t count() const
    {
        std::size_t n = 0;
        for (auto w : bits_)
            n += std::size_t(std::popcount(w));
        return n;
    }
    std::vector<std::uint64_t> const& words() const { return bits_; }

    //! "0110..." row-major
    std::string bits() const
    {
        std::string s(rows_ * cols_, '0');
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                if (get(i, j))
                    s[i * cols_ + j] = '1';
        return s;
    }
    static IndicatorMatrix from_bits(std::string const& s, std::size_t rows, std::size_t cols)
    {
        TRAWLKIT_REQUIRE(s.size() == rows * cols, "indicator bit string has the wrong length");
        IndicatorMatrix m(rows, cols);
        for (std::size_t b = 0; b < s.size(); ++b)
        {
            TRAWLKIT_REQUIRE(s[b] == '0' || s[b] == '1', "indicator bits must be 0 or 1");
            if (s[b] == '1')
                m.set(b / cols, b % cols);
        }
        return m;
    }

    bool operator==(IndicatorMatrix const& o) const = default;
    bool operator<(IndicatorMatrix const& o) const
    {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            return std::pair(rows_, cols_) < std::pair(o.rows_, o.cols_);
        return bits_ < o.bits_;
    }

    std::size_t hash() const
    {
        std::uint64_t h = 0xcbf29ce484222325ull ^ (rows_ * 0x9E3779B97F4A7C15ull) ^ cols_;
        for (auto w : bits_)
            h = (h ^ w) * 0x100000001b3ull;
        return std::size_t(h);
    }

  private:
    std::size_t rows_{0}, cols_{0};
    std::vector<std::uint64_t> bits_;
};

struct IndicatorHash
{
    std::size_t operator()(IndicatorMatrix const& m) const { return m.hash(); }
};

/*!
 * Estimated minimal slices of the (1,1) lattice cell.
 *
 * Sample points are kept per key (up to points_per_key) in cell-relative
 * coordinates tb in [0, tau], xb in (dx, dx + phi(0)).
 */
struct MinimalSliceTable
{
    struct Entry
    {
        IndicatorMatrix key;
        double area{0};
        double se{0};
        std::uint64_t count{0};
        std::vector<std::pair<double, double>> points;
    };

    std::size_t rows{0}, cols{0};
    double tau{0}, dx{0}, phi0{0};
    std::uint64_t n{0}, accepted{0};
    std::string trawl;
    std::vector<Entry> entries;  //!< sorted by key

    double total_area() const
    {
        double s = 0;
        for (auto const& e : entries)
            s += e.area;
        return s;
    }
    //! Slices smaller than this may be missed
    double coverage_bound() const { return n ? 3.0 / double(n) * tau * phi0 : 0.0; }

    void validate() const
    {
        TRAWLKIT_REQUIRE(rows >= 1 && cols >= 1, "slice table needs a positive indicator shape");
        TRAWLKIT_REQUIRE(tau > 0 && dx > 0, "slice table needs tau > 0 and dx > 0");
        for (auto const& e : entries)
        {
            TRAWLKIT_REQUIRE(e.key.rows() == rows && e.key.cols() == cols,
                             "slice table key has the wrong shape");
            TRAWLKIT_REQUIRE(e.area >= 0 && std::isfinite(e.area),
                             "slice table areas must be finite and nonnegative");
        }
    }
};

/*!
 * Monte Carlo minimal slices with rows x cols indicators.
 *
 * Points are drawn in batches with independent streams and merged in batch
 * order, so the table does not depend on the thread count.
 */
inline MinimalSliceTable estimate_minimal_slices(TrawlFunction const& trawl, double tau,
                                                 double dx, std::uint64_t N, std::size_t rows,
                                                 std::size_t cols, RngStream& rng,
                                                 std::size_t points_per_key = 256)
{
    TRAWLKIT_REQUIRE(tau > 0 && dx > 0, "slice estimation needs tau > 0 and dx > 0");
    TRAWLKIT_REQUIRE(N >= 1 && rows >= 1 && cols >= 1, "slice estimation needs N, rows, cols >= 1");
    double const p0 = trawl.phi0();
    std::uint64_t const batch = 1 << 16;
    std::size_t const nb = std::size_t((N + batch - 1) / batch);
    RngStream const base(rng());
    struct Local
    {
        std::map<IndicatorMatrix, std::pair<std::uint64_t, std::vector<std::pair<double, double>>>>
            hits;
        std::uint64_t accepted{0};
    };
    std::vector<Local> parts(nb);
    parallel_for(nb, [&](std::size_t b) {
        RngStream r = base.split(b);
        std::uint64_t m = std::min<std::uint64_t>(batch, N - std::uint64_t(b) * batch);
        auto& L = parts[b];
        for (std::uint64_t p = 0; p < m; ++p)
        {
            double t = r.uniform(0, tau);
            double x = r.uniform(dx, dx + p0);
            double f1 = trawl(t - tau);
            if (!(x > f1 && x - dx > 0 && x - dx < f1))
                continue;
            ++L.accepted;
            IndicatorMatrix I(rows, cols);
            for (std::size_t i = 1; i <= rows; ++i)
            {
                double h = x - double(i) * dx;
                if (!(h > 0))
                    break;
                for (std::size_t j = 1; j <= cols; ++j)
                {
                    if (!(h < trawl(t - double(j) * tau)))
                        break;
                    I.set(i - 1, j - 1);
                }
            }
            auto& slot = L.hits[I];
            ++slot.first;
            if (slot.second.size() < points_per_key)
                slot.second.emplace_back(t, x);
        }
    });
    MinimalSliceTable tab;
    tab.rows = rows;
    tab.cols = cols;
    tab.tau = tau;
    tab.dx = dx;
    tab.phi0 = p0;
    tab.n = N;
    tab.trawl = trawl.name();
    std::map<IndicatorMatrix, std::pair<std::uint64_t, std::vector<std::pair<double, double>>>> all;
    for (auto& L : parts)
    {
        tab.accepted += L.accepted;
        for (auto& [k, v] : L.hits)
        {
            auto& slot = all[k];
            slot.first += v.first;
            for (auto& pt : v.second)
                if (slot.second.size() < points_per_key)
                    slot.second.push_back(pt);
        }
    }
    double const box = tau * p0;
    for (auto& [k, v] : all)
    {
        double p = double(v.first) / double(N);
        tab.entries.push_back(
            {k, box * p, box * std::sqrt(p * (1 - p) / double(N)), v.first, std::move(v.second)});
    }
    return tab;
}

/*!
 * Minimal slices of a bounded trawl with I_s x I_t indicators,
 * I_t = ceil(-T / tau) and I_s = ceil(phi(0) / dx).
 */
inline MinimalSliceTable slice_estimation(TrawlFunction const& trawl, double tau, double dx,
                                          std::uint64_t N, RngStream& rng,
                                          std::size_t points_per_key = 256)
{
    auto T = trawl.support_bound();
    TRAWLKIT_REQUIRE(T.has_value(), "slice estimation needs a bounded trawl");
    TRAWLKIT_REQUIRE(tau > 0 && dx > 0, "slice estimation needs tau > 0 and dx > 0");
    auto It = std::size_t(std::ceil(-*T / tau - 1e-12));
    auto Is = std::size_t(std::ceil(trawl.phi0() / dx - 1e-12));
    return estimate_minimal_slices(trawl, tau, dx, N, std::max<std::size_t>(Is, 1),
                                   std::max<std::size_t>(It, 1), rng, points_per_key);
}

//! Row-major ks x kt field; (i, j) is space i + 1, time j + 1
using Field = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail
{
/*!
 * Adds one L(S) draw per key for every minimal pair in rows x cols.
 *
 * Y is indexed so that pair (k, l) lands on Y.block(k, l, rows, cols).
 */
inline void scatter_minimal_slices(MinimalSliceTable const& tab, LevySeed const& seed,
                                   std::size_t pair_rows, std::size_t pair_cols, Field& Y,
                                   RngStream const& base)
{
    std::vector<SetLawSampler> draw;
    for (auto const& e : tab.entries)
        draw.emplace_back(seed, e.area);
    std::vector<Field> blocks(pair_rows);
    parallel_for(pair_rows, [&](std::size_t k) {
        RngStream r = base.split(k);
        Field B = Field::Zero(Eigen::Index(tab.rows), Eigen::Index(pair_cols + tab.cols - 1));
        for (std::size_t l = 0; l < pair_cols; ++l)
            for (std::size_t e = 0; e < tab.entries.size(); ++e)
            {
                if (tab.entries[e].area == 0)
                    continue;
                double c = draw[e](r);
                auto const& I = tab.entries[e].key;
                for (std::size_t i = 0; i < tab.rows; ++i)
                    for (std::size_t j = 0; j < tab.cols; ++j)
                        if (I.get(i, j))
                            B(Eigen::Index(i), Eigen::Index(l + j)) += c;
            }
        blocks[k] = std::move(B);
    });
    for (std::size_t k = 0; k < pair_rows; ++k)
        Y.block(Eigen::Index(k), 0, Eigen::Index(tab.rows), blocks[k].cols()) += blocks[k];
}
}  // namespace detail

/*!
 * Simple ambit field L(A_ij), 1 <= i <= ks, 1 <= j <= kt, from a slice table.
 *
 * The table is used as given; minimal pairs run over the padded lattice
 * so that boundary sets are complete.
 */
inline Field slice_partition_field(MinimalSliceTable const& tab, LevySeed const& seed,
                                   std::size_t kt, std::size_t ks, RngStream& rng)
{
    tab.validate();
    TRAWLKIT_REQUIRE(kt >= 1 && ks >= 1, "field needs kt, ks >= 1");
    std::size_t const Is = tab.rows, It = tab.cols;
    std::size_t pr = ks + Is - 1, pc = kt + It - 1;
    Field Y = Field::Zero(Eigen::Index(ks + 2 * Is - 2), Eigen::Index(kt + 2 * It - 2));
    RngStream const base(rng());
    detail::scatter_minimal_slices(tab, seed, pr, pc, Y, base);
    return Y.block(Eigen::Index(Is - 1), Eigen::Index(It - 1), Eigen::Index(ks), Eigen::Index(kt));
}

/*!
 * Time below which the rows of sets no longer overlap in space:
 * phi^{-1}(dx) + tau, or nothing when dx >= phi(0).
 */
inline std::optional<double> ambit_split_time(TrawlFunction const& trawl, double tau, double dx)
{
    TRAWLKIT_REQUIRE(tau > 0 && dx > 0, "need tau > 0 and dx > 0");
    if (dx >= trawl.phi0())
        return std::nullopt;
    return trawl.inverse_phi(dx) + tau;
}

struct UnboundedFieldPlan
{
    double split{0};        //!< multiple of tau, <= 0
    long split_cols{0};     //!< split / tau
    std::vector<double> band_area;  //!< per-row band slices, j = 1..kt
    MinimalSliceTable table;
};

/*!
 * Band areas below the split and the minimal-slice table above it.
 *
 * Below the split each row is a nested sequence A_ij supseteq A_i,j+1, so
 * its slices are differences of tail integrals. Above it the indicators
 * span kt - split / tau columns.
 */
inline UnboundedFieldPlan plan_unbounded_field(TrawlFunction const& trawl, std::size_t kt,
                                               double tau, double dx, std::uint64_t N,
                                               RngStream& rng, std::size_t points_per_key = 256)
{
    TRAWLKIT_REQUIRE(kt >= 1, "field needs kt >= 1");
    trawl.total_area();
    UnboundedFieldPlan plan;
    auto Tt = ambit_split_time(trawl, tau, dx);
    double split = Tt ? std::min(0.0, std::floor(*Tt / tau + 1e-12) * tau) : 0.0;
    plan.split = split;
    plan.split_cols = long(std::llround(split / tau));
    plan.band_area.resize(kt);
    for (std::size_t j = 1; j <= kt; ++j)
    {
        double hi = trawl.tail_integral(split - double(j) * tau);
        double lo = j < kt ? trawl.tail_integral(split - double(j + 1) * tau) : 0.0;
        plan.band_area[j - 1] = std::max(0.0, hi - lo);
    }
    auto Is = std::size_t(std::ceil(trawl.phi0() / dx - 1e-12));
    std::size_t cols = std::size_t(long(kt) - plan.split_cols);
    plan.table = estimate_minimal_slices(trawl, tau, dx, N, std::max<std::size_t>(Is, 1), cols,
                                         rng, points_per_key);
    return plan;
}

//! Simple ambit field for a trawl with finite area, bounded or not
inline Field slice_partition_field_unbounded(UnboundedFieldPlan const& plan,
                                             LevySeed const& seed, std::size_t kt,
                                             std::size_t ks, RngStream& rng)
{
    auto const& tab = plan.table;
    tab.validate();
    TRAWLKIT_REQUIRE(ks >= 1 && kt >= 1, "field needs kt, ks >= 1");
    TRAWLKIT_REQUIRE(long(tab.cols) == long(kt) - plan.split_cols,
                     "unbounded plan was built for a different kt");
    std::size_t const Is = tab.rows;
    // pair columns l = split_cols + 1 .. kt sit at offset l - split_cols - 1
    std::size_t pc = std::size_t(long(kt) - plan.split_cols);
    std::size_t pr = ks + Is - 1;
    Field Y = Field::Zero(Eigen::Index(ks + 2 * Is - 2), Eigen::Index(pc + tab.cols - 1));
    RngStream const base(rng());
    detail::scatter_minimal_slices(tab, seed, pr, pc, Y, base.split("slices"));
    Field out = Y.block(Eigen::Index(Is - 1), Eigen::Index(-plan.split_cols), Eigen::Index(ks),
                        Eigen::Index(kt));
    std::vector<std::optional<SetLawSampler>> band(kt);
    for (std::size_t j = 0; j < kt; ++j)
        if (plan.band_area[j] > 0)
            band[j].emplace(seed, plan.band_area[j]);
    RngStream const rows = base.split("bands");
    parallel_for(ks, [&](std::size_t i) {
        RngStream r = rows.split(i);
        double acc = 0;
        for (std::size_t j = kt; j-- > 0;)
        {
            if (band[j])
                acc += (*band[j])(r);
            out(Eigen::Index(i), Eigen::Index(j)) += acc;
        }
    });
    return out;
}

inline Field slice_partition_field_unbounded(TrawlFunction const& trawl, LevySeed const& seed,
                                             std::size_t kt, std::size_t ks, double tau,
                                             double dx, std::uint64_t N, RngStream& rng)
{
    auto plan = plan_unbounded_field(trawl, kt, tau, dx, N, rng, 0);
    return slice_partition_field_unbounded(plan, seed, kt, ks, rng);
}

/*!
 * Leb(A_0(0) cap A_dt(dx)).
 *
 * At time s <= min(0, dt) the overlap height is
 * min(phi(s), dx + phi(s - dt)) - max(0, dx) for dt >= 0.
 */
inline double field_overlap(TrawlFunction const& trawl, double dt, double dx)
{
    if (dt < 0)
        return field_overlap(trawl, -dt, -dx);
    auto h = [&](double s) {
        double up = trawl(s - dt) > 0 ? std::min(trawl(s), dx + trawl(s - dt)) : 0.0;
        return std::max(0.0, up - std::max(0.0, dx));
    };
    if (std::abs(dx) >= trawl.phi0())
        return 0;
    double lo = trawl.bounded() ? *trawl.support_bound() + dt
                                : trawl.inverse_tail(1e-15 * trawl.total_area());
    if (lo >= 0)
        return 0;
    // kinks where the two boundaries cross or the height reaches zero
    auto g1 = [&](double s) { return trawl(s) - dx - trawl(s - dt); };
    auto g2 = [&](double s) { return h(s) > 0 ? 1.0 : -1.0; };
    std::vector<double> cuts{lo, 0.0};
    int const n = 512;
    for (auto const& g : {std::function<double(double)>(g1), std::function<double(double)>(g2)})
    {
        double a = lo, ga = g(a);
        for (int i = 1; i <= n; ++i)
        {
            double b = lo * (1 - double(i) / n), gb = g(b);
            if ((ga > 0) != (gb > 0))
            {
                double l = a, r = b;
                for (int it = 0; it < 100 && r - l > 1e-15 * (1 + std::abs(l)); ++it)
                {
                    double m = 0.5 * (l + r);
                    ((g(m) > 0) == (ga > 0) ? l : r) = m;
                }
                cuts.push_back(0.5 * (l + r));
            }
            a = b;
            ga = gb;
        }
    }
    std::sort(cuts.begin(), cuts.end());
    double v = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] > cuts[i])
            v += integrate(h, cuts[i], cuts[i + 1], 1e-13).value;
    return v;
}

//! Cov(Y_t(x), Y_{t+dt}(x+dx)) = Var(L') Leb(A_0(0) cap A_dt(dx))
inline double field_autocovariance(TrawlFunction const& trawl, LevySeed const& seed, double dt,
                                   double dx)
{
    auto mv = set_mean_var(seed, 1.0);
    if (!mv.variance.is_finite())
        throw ConfigError("field autocovariance needs a finite-variance seed");
    return mv.variance.value() * field_overlap(trawl, dt, dx);
}

//! K_{t,x}(tb, xb) for the set at (t, x)
using AmbitKernel = std::function<double(double t, double x, double tb, double xb)>;

//! sigma^2 on a lattice of cells [t0 + a dt, t0 + (a+1) dt) x [x0 + b dx, ...)
struct VolField
{
    double t0{0}, dt{1}, x0{0}, dx{1};
    Field sigma2;  //!< rows are time cells, columns space cells

    double at(double t, double x) const
    {
        auto a = long(std::floor((t - t0) / dt));
        auto b = long(std::floor((x - x0) / dx));
        if (a < 0 || b < 0 || a >= long(sigma2.rows()) || b >= long(sigma2.cols()))
            throw ConfigError("volatility field does not cover an ambit point");
        return sigma2(a, b);
    }
};

struct AmbitRun
{
    Field values;
    Field cond_mean;  //!< non-jump part given sigma, compensator included
    Field cond_var;
};

/*!
 * Kernel-weighted ambit field over a bounded trawl from a slice table.
 *
 * Each minimal slice S carries its stored sample points as equal shares
 * of Leb(S); the Gaussian or stable part of L on S is split into
 * independent draws on these shares, so every set receives
 * sum_p K(p) sigma(p) W_p. Jumps above eps are placed as atoms and
 * weighted by K sigma at the atom.
 */
inline AmbitRun simulate_general_ambit(TrawlFunction const& trawl, MinimalSliceTable const& tab,
                                       AmbitKernel const& K, VolField const* vol,
                                       LevySeed const& seed, std::size_t kt, std::size_t ks,
                                       double eps, RngStream& rng)
{
    tab.validate();
    TRAWLKIT_REQUIRE(trawl.bounded(), "general ambit fields need a bounded trawl");
    TRAWLKIT_REQUIRE(kt >= 1 && ks >= 1, "field needs kt, ks >= 1");
    double const tau = tab.tau, dx = tab.dx;
    std::size_t const Is = tab.rows, It = tab.cols;
    for (auto const& e : tab.entries)
        TRAWLKIT_REQUIRE(e.area == 0 || !e.points.empty(),
                         "slice table has no sample points; estimate it with points kept");

    bool const stable = std::holds_alternative<Stable>(seed) || std::holds_alternative<Cauchy>(seed);
    LevySeed diffuse = seed;
    std::optional<JumpSampler> jumps;
    double sig2 = 0;
    if (!stable)
    {
        auto [g, j] = levy_ito_split(seed);
        auto const& gs = std::get<Gaussian>(g);
        sig2 = gs.sigma2;
        double drift = 0;
        if (auto const* c = std::get_if<CustomTriplet>(&j))
        {
            drift = compensator_drift(c->measure, eps);
            JumpSampler js(c->measure, eps);
            if (js.mass() > 0)
                jumps.emplace(std::move(js));
        }
        diffuse = Gaussian{gs.mu - drift, gs.sigma2};
    }
    double mu = stable ? 0.0 : std::get<Gaussian>(diffuse).mu;

    // output sets (i, j) for 1 <= i <= ks, 1 <= j <= kt; pairs k, l over the padded range
    long const k0 = 2 - long(Is), l0 = 2 - long(It);
    std::size_t pr = ks + Is - 1, pc = kt + It - 1;
    AmbitRun run;
    run.values = Field::Zero(Eigen::Index(ks), Eigen::Index(kt));
    run.cond_mean = run.values;
    run.cond_var = run.values;

    std::vector<std::vector<SetLawSampler>> share;
    for (auto const& e : tab.entries)
    {
        share.emplace_back();
        if (e.area > 0)
            share.back().emplace_back(diffuse, e.area / double(e.points.size()));
    }
    auto sigma = [&](double t, double x) { return vol ? std::sqrt(vol->at(t, x)) : 1.0; };
    double const box = tau * tab.phi0;

    struct RowOut
    {
        Field v, m, s;
    };
    std::vector<RowOut> rows(pr);
    RngStream const base(rng());
    parallel_for(pr, [&](std::size_t kk) {
        RngStream r = base.split(kk);
        long k = k0 + long(kk);
        RowOut o{Field::Zero(Eigen::Index(ks), Eigen::Index(kt)),
                 Field::Zero(Eigen::Index(ks), Eigen::Index(kt)),
                 Field::Zero(Eigen::Index(ks), Eigen::Index(kt))};
        auto target = [&](std::size_t i, std::size_t j, long l, auto&& f) {
            long gi = k + long(i), gj = l + long(j);
            if (gi >= 1 && gi <= long(ks) && gj >= 1 && gj <= long(kt))
                f(std::size_t(gi - 1), std::size_t(gj - 1), double(gj) * tau, double(gi) * dx);
        };
        for (std::size_t ll = 0; ll < pc; ++ll)
        {
            long l = l0 + long(ll);
            double toff = double(l - 1) * tau, xoff = double(k - 1) * dx;
            for (std::size_t e = 0; e < tab.entries.size(); ++e)
            {
                auto const& E = tab.entries[e];
                if (E.area == 0)
                    continue;
                double w = E.area / double(E.points.size());
                for (auto const& [pt, px] : E.points)
                {
                    double tb = pt + toff, xb = px + xoff;
                    double s = sigma(tb, xb);
                    double W = share[e][0](r);
                    for (std::size_t i = 0; i < Is; ++i)
                        for (std::size_t j = 0; j < It; ++j)
                            if (E.key.get(i, j))
                                target(i, j, l, [&](std::size_t a, std::size_t b, double t, double x) {
                                    double ks_ = K(t, x, tb, xb) * s;
                                    o.v(a, b) += ks_ * W;
                                    o.m(a, b) += mu * w * ks_;
                                    o.s(a, b) += sig2 * w * ks_ * ks_;
                                });
                }
            }
            if (jumps)
            {
                auto n = r.poisson(jumps->mass() * box);
                for (std::uint64_t a = 0; a < n; ++a)
                {
                    double t = r.uniform(0, tau), x = r.uniform(dx, dx + tab.phi0);
                    double y = jumps->draw(r);
                    double f1 = trawl(t - tau);
                    if (!(x > f1 && x - dx < f1))
                        continue;
                    double tb = t + toff, xb = x + xoff;
                    double s = sigma(tb, xb);
                    for (std::size_t i = 1; i <= Is; ++i)
                    {
                        double h = x - double(i) * dx;
                        if (!(h > 0))
                            break;
                        for (std::size_t j = 1; j <= It; ++j)
                        {
                            if (!(h < trawl(t - double(j) * tau)))
                                break;
                            target(i - 1, j - 1, l,
                                   [&](std::size_t p, std::size_t q, double tt, double xx) {
                                       o.v(p, q) += y * K(tt, xx, tb, xb) * s;
                                   });
                        }
                    }
                }
            }
        }
        rows[kk] = std::move(o);
    });
    for (auto const& o : rows)
    {
        run.values += o.v;
        run.cond_mean += o.m;
        run.cond_var += o.s;
    }
    return run;
}

//! Kernel g(tb - t, xb - x)
inline AmbitKernel shift_kernel(std::function<double(double, double)> g)
{
    return [g = std::move(g)](double t, double x, double tb, double xb) {
        return g(tb - t, xb - x);
    };
}

// -------- persistence

namespace detail
{
inline std::string shortest(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
}  // namespace detail

//! Human-readable table: '#' metadata lines, then indicator_bits,area,stderr
inline void write_table_csv(MinimalSliceTable const& t, std::ostream& os)
{
    os << "# rows=" << t.rows << ",cols=" << t.cols << ",tau=" << detail::shortest(t.tau)
       << ",dx=" << detail::shortest(t.dx) << ",phi0=" << detail::shortest(t.phi0)
       << ",n=" << t.n << ",accepted=" << t.accepted << "\n";
    os << "# trawl=" << t.trawl << "\n";
    os << "indicator_bits,area,stderr\n";
    for (auto const& e : t.entries)
        os << e.key.bits() << "," << detail::shortest(e.area) << "," << detail::shortest(e.se)
           << "\n";
}

inline MinimalSliceTable read_table_csv(std::istream& is)
{
    MinimalSliceTable t;
    std::string line;
    bool header = false;
    while (std::getline(is, line))
    {
        if (line.empty())
            continue;
        if (line.rfind("# trawl=", 0) == 0)
        {
            t.trawl = line.substr(8);
            continue;
        }
        if (line[0] == '#')
        {
            std::stringstream ss(line.substr(1));
            std::string kv;
            while (std::getline(ss, kv, ','))
            {
                auto p = kv.find('=');
                if (p == std::string::npos)
                    continue;
                std::string k = kv.substr(0, p), v = kv.substr(p + 1);
                k.erase(0, k.find_first_not_of(' '));
                if (k == "rows")
                    t.rows = std::stoul(v);
                else if (k == "cols")
                    t.cols = std::stoul(v);
                else if (k == "tau")
                    t.tau = std::stod(v);
                else if (k == "dx")
                    t.dx = std::stod(v);
                else if (k == "phi0")
                    t.phi0 = std::stod(v);
                else if (k == "n")
                    t.n = std::stoull(v);
                else if (k == "accepted")
                    t.accepted = std::stoull(v);
            }
            continue;
        }
        if (!header)
        {
            TRAWLKIT_REQUIRE(line == "indicator_bits,area,stderr", "slice table CSV header missing");
            header = true;
            continue;
        }
        std::stringstream ss(line);
        std::string bits, area, se;
        std::getline(ss, bits, ',');
        std::getline(ss, area, ',');
        std::getline(ss, se, ',');
        MinimalSliceTable::Entry e;
        e.key = IndicatorMatrix::from_bits(bits, t.rows, t.cols);
        e.area = std::stod(area);
        e.se = std::stod(se);
        t.entries.push_back(std::move(e));
    }
    TRAWLKIT_REQUIRE(header, "slice table CSV header missing");
    t.validate();
    return t;
}

namespace detail
{
constexpr char table_magic[8] = {'T', 'K', 'S', 'L', 'I', 'C', 'E', '\0'};
constexpr std::uint32_t table_version = 1;

template<class T>
void put(std::ostream& os, T v)
{
    os.write(reinterpret_cast<char const*>(&v), sizeof v);
}
template<class T>
T get(std::istream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is)
        throw ConfigError("truncated slice table file");
    return v;
}
}  // namespace detail

//! Versioned little-endian binary table, sample points included
inline void write_table_binary(MinimalSliceTable const& t, std::ostream& os)
{
    using namespace detail;
    os.write(table_magic, sizeof table_magic);
    put<std::uint32_t>(os, table_version);
    put<std::uint64_t>(os, t.rows);
    put<std::uint64_t>(os, t.cols);
    put<double>(os, t.tau);
    put<double>(os, t.dx);
    put<double>(os, t.phi0);
    put<std::uint64_t>(os, t.n);
    put<std::uint64_t>(os, t.accepted);
    put<std::uint64_t>(os, t.trawl.size());
    os.write(t.trawl.data(), std::streamsize(t.trawl.size()));
    put<std::uint64_t>(os, t.entries.size());
    for (auto const& e : t.entries)
    {
        for (auto w : e.key.words())
            put<std::uint64_t>(os, w);
        put<double>(os, e.area);
        put<double>(os, e.se);
        put<std::uint64_t>(os, e.count);
        put<std::uint64_t>(os, e.points.size());
        for (auto const& [a, b] : e.points)
        {
            put<double>(os, a);
            put<double>(os, b);
        }
    }
}

inline MinimalSliceTable read_table_binary(std::istream& is)
{
    using namespace detail;
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, table_magic, sizeof magic) != 0)
        throw ConfigError("not a slice table file");
    auto version = get<std::uint32_t>(is);
    if (version != table_version)
        throw ConfigError("unsupported slice table version " + std::to_string(version));
    MinimalSliceTable t;
    t.rows = get<std::uint64_t>(is);
    t.cols = get<std::uint64_t>(is);
    t.tau = get<double>(is);
    t.dx = get<double>(is);
    t.phi0 = get<double>(is);
    t.n = get<std::uint64_t>(is);
    t.accepted = get<std::uint64_t>(is);
    auto len = get<std::uint64_t>(is);
    TRAWLKIT_REQUIRE(len < (1u << 20), "corrupt slice table trawl name");
    t.trawl.resize(len);
    is.read(t.trawl.data(), std::streamsize(len));
    auto n = get<std::uint64_t>(is);
    TRAWLKIT_REQUIRE(t.rows * t.cols < (std::uint64_t(1) << 32), "corrupt slice table shape");
    std::size_t words = (t.rows * t.cols + 63) / 64;
    for (std::uint64_t k = 0; k < n; ++k)
    {
        MinimalSliceTable::Entry e;
        std::string bits(t.rows * t.cols, '0');
        for (std::size_t w = 0; w < words; ++w)
        {
            auto v = get<std::uint64_t>(is);
            for (std::size_t b = 0; b < 64 && w * 64 + b < bits.size(); ++b)
                if ((v >> b) & 1u)
                    bits[w * 64 + b] = '1';
        }
        e.key = IndicatorMatrix::from_bits(bits, t.rows, t.cols);
        e.area = get<double>(is);
        e.se = get<double>(is);
        e.count = get<std::uint64_t>(is);
        auto np = get<std::uint64_t>(is);
        for (std::uint64_t p = 0; p < np; ++p)
        {
            double a = get<double>(is);
            double b = get<double>(is);
            e.points.emplace_back(a, b);
        }
        t.entries.push_back(std::move(e));
    }
    t.validate();
    return t;
}

inline void save_table(MinimalSliceTable const& t, std::string const& path)
{
    bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
    std::ofstream os(path, csv ? std::ios::out : std::ios::binary);
    if (!os)
        throw ConfigError("cannot write slice table to " + path);
    if (csv)
        write_table_csv(t, os);
    else
        write_table_binary(t, os);
}

inline MinimalSliceTable load_table(std::string const& path)
{
    bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
    std::ifstream is(path, csv ? std::ios::in : std::ios::binary);
    if (!is)
        throw ConfigError("cannot read slice table " + path);
    return csv ? read_table_csv(is) : read_table_binary(is);
}

}  // namespace trawlkit
