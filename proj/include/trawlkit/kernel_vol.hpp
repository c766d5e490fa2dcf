// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/kernel_vol.hpp
//! Kernel-weighted and volatility-modulated trawl processes.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <Eigen/Dense>

#include "errors.hpp"
#include "levy.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "sim_cpp.hpp"
#include "sim_grid.hpp"
#include "sim_slice.hpp"
#include "trawl_geometry.hpp"

namespace trawlkit
{
//---------------------------------------------------------------------------//
// Kernels

struct ConstantKernel
{
    double value{1};
};

//! K(tbar, xbar), the same for every trawl
struct SpaceTimeKernel
{
    std::function<double(double, double)> K;
    bool x_free{false};
};

//! coef e^{lambda u} cos(omega u), or sin(omega u) when sine is set
struct ExpTrig
{
    double coef{1};
    double lambda{0};
    double omega{0};
    bool sine{false};

    double operator()(double u) const
    {
        double e = coef * std::exp(lambda * u);
        if (omega == 0)
            return sine ? 0.0 : e;
        return e * (sine ? std::sin(omega * u) : std::cos(omega * u));
    }
};

/*!
 * K_t(tbar, xbar) = g(tbar - t).
 *
 * Built from exponential/trigonometric parts it factorizes; an opaque g does
 * not.
 */
struct TimeShiftedKernel
{
    std::vector<ExpTrig> parts;
    std::function<double(double)> g;

    double operator()(double u) const
    {
        if (g)
            return g(u);
        double s = 0;
        for (auto const& p : parts)
            s += p(u);
        return s;
    }

    static TimeShiftedKernel exponential(double lambda, double coef = 1)
    {
        return {{{coef, lambda, 0, false}}, {}};
    }
    static TimeShiftedKernel cosine(double omega, double coef = 1)
    {
        return {{{coef, 0, omega, false}}, {}};
    }
    static TimeShiftedKernel sine(double omega, double coef = 1)
    {
        return {{{coef, 0, omega, true}}, {}};
    }
    static TimeShiftedKernel function(std::function<double(double)> g) { return {{}, std::move(g)}; }
};

struct SeparableTerm
{
    std::function<double(double)> f;               //!< of t
    std::function<double(double, double)> h;       //!< of (tbar, xbar)
    bool x_free{true};
};

//! K_t = sum_j f_j(t) h_j(tbar, xbar)
struct SeparableKernel
{
    std::vector<SeparableTerm> terms;
};

/*!
 * g(u) ~ e^{lambda u} (a_0 + sum_n a_n cos(n pi u / tau)), used as g(tbar - t).
 */
struct FourierKernel
{
    double lambda{0};
    double tau{1};
    std::vector<double> a;
    double l2_error{0};          //!< || g - approximation ||_2 on [0, tau]
    double projection_error{0};  //!< same, weighted by e^{-lambda u}

    double operator()(double u) const
    {
        double s = 0;
        for (std::size_t n = 0; n < a.size(); ++n)
            s += a[n] * std::cos(double(n) * std::numbers::pi * u / tau);
        return std::exp(lambda * u) * s;
    }
};

using Kernel = std::variant<ConstantKernel, SpaceTimeKernel, TimeShiftedKernel, SeparableKernel,
                            FourierKernel>;

//! K_t(tbar, xbar)
inline double kernel_value(Kernel const& K, double t, double tb, double xb)
{
    return std::visit(
        [&](auto const& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ConstantKernel>)
                return k.value;
            else if constexpr (std::is_same_v<T, SpaceTimeKernel>)
                return k.K(tb, xb);
            else if constexpr (std::is_same_v<T, SeparableKernel>)
            {
                double s = 0;
                for (auto const& term : k.terms)
                    s += term.f(t) * term.h(tb, xb);
                return s;
            }
            else
                return k(tb - t);
        },
        K);
}

inline bool kernel_x_free(Kernel const& K)
{
    if (auto const* s = std::get_if<SpaceTimeKernel>(&K))
        return s->x_free;
    if (auto const* s = std::get_if<SeparableKernel>(&K))
        return std::all_of(s->terms.begin(), s->terms.end(),
                           [](SeparableTerm const& t) { return t.x_free; });
    return true;
}

namespace detail
{
inline void exptrig_terms(ExpTrig const& p, double center, std::vector<SeparableTerm>& out)
{
    double const c = p.coef, l = p.lambda, w = p.omega;
    auto ef = [l, center](double t) { return std::exp(-l * (t - center)); };
    auto eh = [l, center](double tb) { return std::exp(l * (tb - center)); };
    if (w == 0)
    {
        if (!p.sine)
            out.push_back({ef, [c, eh](double tb, double) { return c * eh(tb); }, true});
        return;
    }
    // cos(w(tb - t)) = cos wtb cos wt + sin wtb sin wt
    // sin(w(tb - t)) = sin wtb cos wt - cos wtb sin wt
    double s2 = p.sine ? -1 : 1;
    out.push_back({[ef, w](double t) { return ef(t) * std::cos(w * t); },
                   [c, eh, w, p](double tb, double) {
                       return c * eh(tb) * (p.sine ? std::sin(w * tb) : std::cos(w * tb));
                   },
                   true});
    out.push_back({[ef, w](double t) { return ef(t) * std::sin(w * t); },
                   [c, eh, w, p, s2](double tb, double) {
                       return s2 * c * eh(tb) * (p.sine ? std::cos(w * tb) : std::sin(w * tb));
                   },
                   true});
}
}  // namespace detail

/*!
 * Rewrites K_t as sum_j f_j(t) h_j(tbar, xbar).
 *
 * Exponential factors are taken relative to center to keep them in range.
 * Throws ConfigError for a time-shifted kernel given only as a function.
 */
inline SeparableKernel reduce_separable(Kernel const& K, double center = 0)
{
    SeparableKernel out;
    std::visit(
        [&](auto const& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ConstantKernel>)
            {
                double v = k.value;
                out.terms.push_back({[](double) { return 1.0; },
                                     [v](double, double) { return v; }, true});
            }
            else if constexpr (std::is_same_v<T, SpaceTimeKernel>)
                out.terms.push_back({[](double) { return 1.0; }, k.K, k.x_free});
            else if constexpr (std::is_same_v<T, SeparableKernel>)
                out = k;
            else if constexpr (std::is_same_v<T, TimeShiftedKernel>)
            {
                if (k.g)
                    throw ConfigError("time-shifted kernel given as a function does not "
                                      "factorize; approximate it with fourier_coefficients");
                for (auto const& p : k.parts)
                    detail::exptrig_terms(p, center, out.terms);
            }
            else
            {
                for (std::size_t n = 0; n < k.a.size(); ++n)
                    if (k.a[n] != 0)
                        detail::exptrig_terms(
                            {k.a[n], k.lambda, double(n) * std::numbers::pi / k.tau, false},
                            center, out.terms);
            }
        },
        K);
    if (out.terms.empty())
        out.terms.push_back(
            {[](double) { return 1.0; }, [](double, double) { return 0.0; }, true});
    return out;
}

/*!
 * Cosine coefficients of e^{-lambda u} g(u) on [0, tau].
 */
inline FourierKernel fourier_coefficients(std::function<double(double)> const& g, double tau,
                                          double lambda, std::size_t N)
{
    TRAWLKIT_REQUIRE(tau > 0, "Fourier band needs tau > 0");
    FourierKernel F;
    F.lambda = lambda;
    F.tau = tau;
    F.a.resize(N + 1);
    auto h = [&](double u) { return std::exp(-lambda * u) * g(u); };
    using std::numbers::pi;
    for (std::size_t n = 0; n <= N; ++n)
    {
        auto r = integrate([&](double u) { return h(u) * std::cos(double(n) * pi * u / tau); },
                           0.0, tau, 1e-13);
        if (!std::isfinite(r.value))
            throw NumericError("kernel is not square integrable on the Fourier band");
        F.a[n] = (n == 0 ? 1.0 : 2.0) * r.value / tau;
    }
    F.l2_error = std::sqrt(
        integrate([&](double u) { double d = g(u) - F(u); return d * d; }, 0.0, tau, 1e-13)
            .value);
    F.projection_error = std::sqrt(integrate(
                                       [&](double u) {
                                           double d = std::exp(-lambda * u) * (g(u) - F(u));
                                           return d * d;
                                       },
                                       0.0, tau, 1e-13)
                                       .value);
    return F;
}

//---------------------------------------------------------------------------//
// Volatility

/*!
 * sigma^2 on an equidistant grid.
 *
 * Value i holds on [start + (i - 1/2) step, start + (i + 1/2) step).
 */
struct VolatilityPath
{
    enum class Source
    {
        user,
        simulated
    };

    double start{0};
    double step{1};
    std::vector<double> sigma2;
    Source source{Source::user};

    std::size_t size() const { return sigma2.size(); }
    double lo() const { return start - 0.5 * step; }
    double hi() const { return start + (double(size()) - 0.5) * step; }
    double time(std::size_t i) const { return start + double(i) * step; }
    std::size_t cell(double t) const
    {
        double r = std::floor((t - lo()) / step);
        if (r < 0)
            return 0;
        return std::min(size() - 1, std::size_t(r));
    }
    double sigma2_at(double t) const { return sigma2[cell(t)]; }

    void validate() const
    {
        TRAWLKIT_REQUIRE(step > 0 && !sigma2.empty(), "volatility grid needs a step and values");
        for (double v : sigma2)
            TRAWLKIT_REQUIRE(std::isfinite(v) && v >= 0, "volatility values must be >= 0");
    }

    static VolatilityPath constant(double s2, double start, double end, double step)
    {
        TRAWLKIT_REQUIRE(end >= start && step > 0, "bad constant volatility grid");
        std::size_t n = std::size_t(std::floor((end - start) / step + 1e-9)) + 1;
        return {start, step, std::vector<double>(n, s2), Source::user};
    }
};

//! Grid shape of a volatility path, fixed while its values change
struct VolGrid
{
    double start{0};
    double step{1};
    std::size_t n{1};

    static VolGrid of(VolatilityPath const& v) { return {v.start, v.step, v.size()}; }
    VolatilityPath with(std::vector<double> s2) const
    {
        return {start, step, std::move(s2), VolatilityPath::Source::user};
    }
};

//---------------------------------------------------------------------------//
// Slice integrals

//! A region {t0 < tbar < t1, lower(tbar) < xbar < upper(tbar)}
struct SliceGeometry
{
    double t0{0}, t1{0};
    std::function<double(double)> lower, upper;
    std::vector<double> breaks;  //!< kinks of lower/upper inside (t0, t1)

    static SliceGeometry rectangle(double t0, double t1, double x0, double x1)
    {
        return {t0, t1, [x0](double) { return x0; }, [x1](double) { return x1; }, {}};
    }
};

struct KernelIntegrals
{
    double first{0};   //!< int K sigma
    double second{0};  //!< int K^2 sigma^2
};

struct StableIntegrals
{
    double abs_alpha{0};     //!< int |K sigma|^alpha
    double signed_alpha{0};  //!< int |K sigma|^alpha sign(K sigma)
    double first{0};         //!< int K sigma
    double xlogx{0};         //!< int K sigma log|K sigma|
};

namespace detail
{
struct Gauss8
{
    std::array<double, 8> x, w;
};

inline Gauss8 const& gauss8()
{
    static Gauss8 const r = [] {
        auto const& a = boost::math::quadrature::gauss<double, 8>::abscissa();
        auto const& w = boost::math::quadrature::gauss<double, 8>::weights();
        Gauss8 g;
        for (std::size_t i = 0; i < 4; ++i)
        {
            g.x[2 * i] = a[i];
            g.x[2 * i + 1] = -a[i];
            g.w[2 * i] = g.w[2 * i + 1] = w[i];
        }
        return g;
    }();
    return r;
}

/*!
 * Adds the integral of ch over a band to acc.
 *
 * ch(tbar, xbar, weight, acc) adds weight times its channels; x-free
 * integrands get one call per time node with the band width folded in.
 */
template<class Lo, class Up, class Ch>
void band_integral(double p, double q, Lo const& lo, Up const& up, bool x_free, Ch const& ch,
                   double* acc)
{
    if (!(q > p))
        return;
    auto const& g = gauss8();
    double hm = 0.5 * (q - p), cm = 0.5 * (q + p);
    for (std::size_t i = 0; i < 8; ++i)
    {
        double tb = cm + hm * g.x[i];
        double a = lo(tb), b = up(tb);
        if (!(b > a))
            continue;
        double wt = hm * g.w[i];
        if (x_free)
        {
            ch(tb, 0.5 * (a + b), wt * (b - a), acc);
            continue;
        }
        double hx = 0.5 * (b - a), cx = 0.5 * (a + b);
        for (std::size_t j = 0; j < 8; ++j)
            ch(tb, cx + hx * g.x[j], wt * hx * g.w[j], acc);
    }
}

//! band_integral with bisection until halves agree with the whole
template<class Lo, class Up, class Ch>
void adaptive_band(double p, double q, Lo const& lo, Up const& up, bool x_free, Ch const& ch,
                   std::size_t C, double* acc, int depth = 0)
{
    std::vector<double> whole(C, 0.0), halves(C, 0.0);
    double m = 0.5 * (p + q);
    band_integral(p, q, lo, up, x_free, ch, whole.data());
    band_integral(p, m, lo, up, x_free, ch, halves.data());
    band_integral(m, q, lo, up, x_free, ch, halves.data());
    bool ok = depth >= 24;
    if (!ok)
    {
        ok = true;
        for (std::size_t c = 0; c < C; ++c)
            ok = ok && std::abs(whole[c] - halves[c]) <= 1e-12 * (q - p) + 1e-11 * std::abs(halves[c]);
    }
    if (ok)
    {
        for (std::size_t c = 0; c < C; ++c)
            acc[c] += halves[c];
        return;
    }
    adaptive_band(p, m, lo, up, x_free, ch, C, acc, depth + 1);
    adaptive_band(m, q, lo, up, x_free, ch, C, acc, depth + 1);
}

//! Sorted cut points of [p, q] at the breaks inside it
inline std::vector<double> pieces(double p, double q, std::vector<double> const& breaks)
{
    std::vector<double> pts{p};
    for (double b : breaks)
        if (b > p && b < q)
            pts.push_back(b);
    pts.push_back(q);
    std::sort(pts.begin(), pts.end());
    return pts;
}

/*!
 * Integrates ch over a geometry, cell by cell of the volatility grid.
 *
 * Returns one block of C values per overlapped cell, starting at cell0.
 */
template<class Ch>
std::vector<double> cell_integrals(SliceGeometry const& s, VolGrid const* grid, std::size_t C,
                                   bool x_free, Ch const& ch, std::size_t* cell0)
{
    std::vector<double> w;
    auto run = [&](double p, double q, double* acc) {
        auto pts = pieces(p, q, s.breaks);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            band_integral(pts[i], pts[i + 1], s.lower, s.upper, x_free, ch, acc);
    };
    if (!grid)
    {
        *cell0 = 0;
        w.assign(C, 0.0);
        auto pts = pieces(s.t0, s.t1, s.breaks);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            adaptive_band(pts[i], pts[i + 1], s.lower, s.upper, x_free, ch, C, w.data());
        return w;
    }
    VolatilityPath shape{grid->start, grid->step, std::vector<double>(grid->n), {}};
    std::size_t c0 = shape.cell(s.t0), c1 = shape.cell(s.t1);
    *cell0 = c0;
    w.assign((c1 - c0 + 1) * C, 0.0);
    for (std::size_t c = c0; c <= c1; ++c)
    {
        double a = shape.lo() + double(c) * grid->step, b = a + grid->step;
        if (c == 0)
            a = std::min(a, s.t0);
        if (c + 1 == grid->n)
            b = std::max(b, s.t1);
        run(std::max(a, s.t0), std::min(b, s.t1), w.data() + (c - c0) * C);
    }
    return w;
}

inline void check_vol_covers(VolatilityPath const* vol, double t0, double t1)
{
    if (vol)
    {
        vol->validate();
        TRAWLKIT_REQUIRE(t0 >= vol->lo() - 1e-12 && t1 <= vol->hi() + 1e-12,
                         "volatility grid does not cover the slice");
    }
}
}  // namespace detail

/*!
 * (int_S K_t sigma, int_S K_t^2 sigma^2) over a slice.
 *
 * Gauss-Legendre in time on each volatility cell, with sigma constant per
 * cell; exact band width in x for x-free kernels.
 */
inline KernelIntegrals slice_kernel_integrals(Kernel const& K, VolatilityPath const* vol,
                                              SliceGeometry const& s, double t = 0)
{
    detail::check_vol_covers(vol, s.t0, s.t1);
    auto ch = [&](double tb, double xb, double w, double* acc) {
        double k = kernel_value(K, t, tb, xb);
        acc[0] += w * k;
        acc[1] += w * k * k;
    };
    std::optional<VolGrid> grid;
    if (vol)
        grid = VolGrid::of(*vol);
    std::size_t c0 = 0;
    auto w = detail::cell_integrals(s, grid ? &*grid : nullptr, 2, kernel_x_free(K), ch, &c0);
    KernelIntegrals r;
    for (std::size_t c = 0; c * 2 < w.size(); ++c)
    {
        double s2 = vol ? vol->sigma2[c0 + c] : 1.0;
        r.first += w[2 * c] * std::sqrt(s2);
        r.second += w[2 * c + 1] * s2;
    }
    if (!std::isfinite(r.first) || !std::isfinite(r.second))
        throw NumericError("non-finite kernel integral over a slice");
    return r;
}

namespace detail
{
//! Channels h, |h|^a, |h|^a sign h, h log|h|
inline void stable_channels(double h, double alpha, double w, double* acc)
{
    double ah = std::abs(h), p = std::pow(ah, alpha);
    acc[0] += w * h;
    acc[1] += w * p;
    acc[2] += w * (h < 0 ? -p : p);
    acc[3] += w * (h == 0 ? 0.0 : h * std::log(ah));
}

//! Folds per-cell stable channels with sigma constant on each cell
inline StableIntegrals fold_stable(double const* w, std::size_t ncells, std::size_t cell0,
                                   VolatilityPath const* vol, double alpha)
{
    StableIntegrals I;
    for (std::size_t c = 0; c < ncells; ++c)
    {
        double const* x = w + 4 * c;
        double sg = vol ? std::sqrt(vol->sigma2[cell0 + c]) : 1.0;
        if (sg == 0)
            continue;
        double sa = std::pow(sg, alpha);
        I.first += x[0] * sg;
        I.abs_alpha += x[1] * sa;
        I.signed_alpha += x[2] * sa;
        I.xlogx += sg * (x[3] + x[0] * std::log(sg));
    }
    return I;
}
}  // namespace detail

inline StableIntegrals stable_slice_integrals(Kernel const& K, VolatilityPath const* vol,
                                              SliceGeometry const& s, double alpha, double t = 0)
{
    detail::check_vol_covers(vol, s.t0, s.t1);
    auto ch = [&](double tb, double xb, double w, double* acc) {
        detail::stable_channels(kernel_value(K, t, tb, xb), alpha, w, acc);
    };
    std::optional<VolGrid> grid;
    if (vol)
        grid = VolGrid::of(*vol);
    std::size_t c0 = 0;
    auto w = detail::cell_integrals(s, grid ? &*grid : nullptr, 4, kernel_x_free(K), ch, &c0);
    return detail::fold_stable(w.data(), w.size() / 4, c0, vol, alpha);
}

/*!
 * Law of int_S K sigma dL given sigma, for a stable seed.
 *
 * alpha != 1: c~ = c (int|Ks|^a)^{1/a}, beta~ = beta int|Ks|^a sign / int|Ks|^a,
 * mu~ = mu int Ks. alpha = 1 adds -(2/pi) beta c int Ks log|Ks| to the location.
 */
inline Stable stable_conditional_params(Stable const& seed, StableIntegrals const& I)
{
    validate(LevySeed{seed});
    if (!std::isfinite(I.abs_alpha) || !std::isfinite(I.signed_alpha) || !std::isfinite(I.first))
        throw NumericError("divergent kernel integral for the stable conditional law");
    Stable r;
    r.alpha = seed.alpha;
    r.beta = I.abs_alpha > 0 ? seed.beta * I.signed_alpha / I.abs_alpha : 0.0;
    r.beta = std::clamp(r.beta, -1.0, 1.0);
    if (seed.alpha == 1)
    {
        r.c = seed.c * I.abs_alpha;
        r.mu = seed.mu * I.first - 2 / std::numbers::pi * seed.beta * seed.c * I.xlogx;
    }
    else
    {
        r.c = seed.c * std::pow(I.abs_alpha, 1 / seed.alpha);
        r.mu = seed.mu * I.first;
    }
    return r;
}

inline Stable stable_conditional_params(Kernel const& K, VolatilityPath const* vol,
                                        SliceGeometry const& s, Stable const& seed, double t = 0)
{
    return stable_conditional_params(seed, stable_slice_integrals(K, vol, s, seed.alpha, t));
}

//---------------------------------------------------------------------------//
// Slice tables over the trawl partition

/*!
 * Slices of A_tau, ..., A_{k tau} with per-cell integrals of kernel channels.
 *
 * Column c covers ((c-1) tau, c tau]; there the trawls c..k nest, and the
 * band between phi(tbar - (m+1) tau) and phi(tbar - m tau) lies in exactly
 * the trawls max(c,1)..m. Left of t_lo, unbounded trawls get one lumped
 * slice per m; with a volatility grid that region is dropped instead.
 */
struct KwTable
{
    struct Slice
    {
        std::size_t lo, hi;  //!< 1-based trawl range
        std::size_t cell0, ncells, offset;
    };

    double tau{1};
    std::size_t k{0};
    std::size_t channels{0};
    double t_lo{0};
    std::vector<Slice> slices;
    std::vector<double> w;
    std::vector<double> dropped_area;  //!< per trawl
};

namespace detail
{
template<class Ch>
KwTable build_kw_table(TrawlFunction const& trawl, std::size_t k, double tau,
                       VolGrid const* grid, std::size_t C, bool x_free, Ch const& ch)
{
    TRAWLKIT_REQUIRE(k >= 1 && tau > 0, "need k >= 1 and tau > 0");
    KwTable tab;
    tab.tau = tau;
    tab.k = k;
    tab.channels = C;
    auto T = trawl.support_bound();
    bool tail = false;
    if (grid)
    {
        VolatilityPath shape{grid->start, grid->step, std::vector<double>(grid->n), {}};
        TRAWLKIT_REQUIRE(shape.hi() >= double(k) * tau - 1e-12,
                         "volatility grid ends before the last trawl time");
        tab.t_lo = shape.lo();
        if (T)
            tab.t_lo = std::max(tab.t_lo, tau + *T);
    }
    else if (T)
        tab.t_lo = tau + *T;
    else
    {
        double h = default_horizon(trawl, 1e-3);
        double cols = std::min(double(k), std::ceil(-h / tau));
        tab.t_lo = tau * (1 - cols);
        tail = true;
    }
    tab.dropped_area.assign(k, 0.0);
    if (grid && !(T && tab.t_lo <= tau + *T))
        for (std::size_t l = 1; l <= k; ++l)
            tab.dropped_area[l - 1] = trawl.tail_integral(tab.t_lo - double(l) * tau);

    long const c_min = long(std::floor(tab.t_lo / tau + 1e-12)) + 1;
    for (long c = c_min; c <= long(k); ++c)
    {
        double a = std::max(double(c - 1) * tau, tab.t_lo), b = double(c) * tau;
        if (!(b > a))
            continue;
        std::size_t lo = c < 1 ? 1 : std::size_t(c);
        for (std::size_t m = lo; m <= k; ++m)
        {
            double mt = double(m) * tau;
            if (!(trawl(b - mt) > 0))
                break;
            SliceGeometry s{a, b, {}, [&trawl, mt](double t) { return trawl(t - mt); }, {}};
            if (m < k)
                s.lower = [&trawl, mt, tau](double t) { return trawl(t - mt - tau); };
            else
                s.lower = [](double) { return 0.0; };
            if (T)
                s.breaks = {mt + *T, mt + tau + *T};
            std::size_t c0 = 0;
            auto w = cell_integrals(s, grid, C, x_free, ch, &c0);
            tab.slices.push_back({lo, m, c0, w.size() / C, tab.w.size()});
            tab.w.insert(tab.w.end(), w.begin(), w.end());
        }
    }
    if (tail)
    {
        std::vector<double> tmp(C);
        for (std::size_t m = 1; m <= k; ++m)
        {
            double mt = double(m) * tau;
            auto up = [&trawl, mt](double t) { return trawl(t - mt); };
            auto low = [&trawl, mt, tau, m, k](double t) {
                return m < k ? trawl(t - mt - tau) : 0.0;
            };
            std::vector<double> w(C);
            for (std::size_t j = 0; j < C; ++j)
            {
                auto r = integrate_lower_tail(
                    [&](double tb) {
                        std::fill(tmp.begin(), tmp.end(), 0.0);
                        double a = low(tb), b = up(tb);
                        if (!(b > a))
                            return 0.0;
                        if (x_free)
                            ch(tb, 0.5 * (a + b), b - a, tmp.data());
                        else
                        {
                            auto const& g = gauss8();
                            double hx = 0.5 * (b - a), cx = 0.5 * (a + b);
                            for (std::size_t i = 0; i < 8; ++i)
                                ch(tb, cx + hx * g.x[i], hx * g.w[i], tmp.data());
                        }
                        return tmp[j];
                    },
                    tab.t_lo, 1e-12);
                if (!std::isfinite(r.value))
                    throw NumericError("non-finite kernel integral over the trawl tail");
                w[j] = r.value;
            }
            tab.slices.push_back({1, m, 0, 1, tab.w.size()});
            tab.w.insert(tab.w.end(), w.begin(), w.end());
        }
    }
    return tab;
}

//! Difference array over trawls 1..k: add v to lo..hi
inline void range_add(std::vector<double>& d, std::size_t lo, std::size_t hi, double v)
{
    d[lo - 1] += v;
    d[hi] -= v;
}

inline std::vector<double> prefix(std::vector<double> const& d, std::size_t k)
{
    std::vector<double> s(k);
    double acc = 0;
    for (std::size_t l = 0; l < k; ++l)
        s[l] = acc += d[l];
    return s;
}

//! Atom contribution y K_l(t, x) sigma(t) to every trawl l containing it
template<class W>
void scatter_weighted(TrawlFunction const& trawl, double tau, std::size_t k, JumpAtom const& a,
                      W const& weight, std::vector<double>& X)
{
    double first = std::ceil(a.t / tau - 1e-12);
    std::size_t l = first < 1 ? 1 : static_cast<std::size_t>(first);
    for (; l <= k; ++l)
    {
        double s = a.t - double(l) * tau;
        if (s > 0)
            continue;
        if (!(a.x < trawl(s)))
            break;
        X[l - 1] += a.y * weight(l);
    }
}
}  // namespace detail

//! Values with the conditional moments given sigma
struct KwRun
{
    std::vector<double> values;
    std::vector<double> cond_mean;    //!< E[X_l | sigma]
    std::vector<double> cond_var;     //!< Var(X_l | sigma); empty for stable seeds
    std::vector<double> dropped_area;
    std::vector<JumpAtom> atoms;
};

/*!
 * Slice-partition and compound Poisson simulation of
 * X_l = int_{A_l} K_l sigma dL at l tau, l = 1..k.
 *
 * Tables depend only on the trawl, kernel and volatility grid, so one
 * simulator serves many volatility paths. Stable seeds need a kernel with a
 * single separable term. Other seeds split into a Gaussian part, drawn per
 * slice, and a jump part drawn from atoms with |y| > eps.
 */
class KwSimulator
{
  public:
    KwSimulator(TrawlFunction trawl, Kernel kernel, LevySeed seed, std::size_t k, double tau,
                double eps = 0, std::optional<VolGrid> grid = std::nullopt)
        : trawl_(std::move(trawl)), kernel_(std::move(kernel)), k_(k), tau_(tau), eps_(eps),
          grid_(grid)
    {
        validate(seed);
        TRAWLKIT_REQUIRE(k >= 1 && tau > 0, "need k >= 1 and tau > 0");
        TRAWLKIT_REQUIRE(eps >= 0, "truncation level must be nonnegative");
        sep_ = reduce_separable(kernel_, 0.5 * double(k) * tau);
        bool const xf = kernel_x_free(kernel_);
        VolGrid const* g = grid_ ? &*grid_ : nullptr;
        std::size_t const J = sep_.terms.size();
        if (auto const* c = std::get_if<Cauchy>(&seed))
            stable_ = Stable{1, 0, c->gamma, 0};
        else if (auto const* s = std::get_if<Stable>(&seed))
            stable_ = *s;
        if (stable_)
        {
            if (J != 1)
                throw ConfigError("stable seeds need a kernel with one separable term");
            double al = stable_->alpha;
            auto const& h = sep_.terms[0].h;
            table_ = detail::build_kw_table(trawl_, k, tau, g, 4, xf,
                                            [&](double tb, double xb, double w, double* acc) {
                                                detail::stable_channels(h(tb, xb), al, w, acc);
                                            });
            return;
        }
        auto [gs, js] = levy_ito_split(seed);
        gauss_ = std::get<Gaussian>(gs);
        if (auto const* c = std::get_if<CustomTriplet>(&js))
        {
            jumps_.emplace(c->measure, eps);
            measure_ = c->measure;
            if (jumps_->mass() == 0 && jumps_->drift() == 0)
                jumps_.reset();
        }
        auto ch = [&](double tb, double xb, double w, double* acc) {
            double hv[16];
            for (std::size_t j = 0; j < J; ++j)
                hv[j] = sep_.terms[j].h(tb, xb);
            std::size_t p = J;
            for (std::size_t j = 0; j < J; ++j)
            {
                acc[j] += w * hv[j];
                for (std::size_t i = 0; i <= j; ++i)
                    acc[p++] += w * hv[i] * hv[j];
            }
        };
        TRAWLKIT_REQUIRE(J <= 16, "kernel has too many separable terms");
        table_ = detail::build_kw_table(trawl_, k, tau, g, J + J * (J + 1) / 2, xf, ch);
    }

    std::size_t k() const { return k_; }
    double tau() const { return tau_; }
    KwTable const& table() const { return table_; }
    SeparableKernel const& separable() const { return sep_; }

    KwRun operator()(VolatilityPath const* vol, RngStream& rng) const
    {
        if (grid_)
        {
            TRAWLKIT_REQUIRE(vol, "simulator was built for a volatility grid");
            auto vg = VolGrid::of(*vol);
            TRAWLKIT_REQUIRE(vg.n == grid_->n && vg.start == grid_->start &&
                                 vg.step == grid_->step,
                             "volatility path does not match the simulator grid");
            vol->validate();
        }
        else
            TRAWLKIT_REQUIRE(!vol, "simulator was built without a volatility grid");
        RngStream const base(rng());
        RngStream rs = base.split("slices"), rj = base.split("jumps");
        KwRun run = stable_ ? run_stable(vol, rs) : run_gaussian(vol, rs);
        run.dropped_area = table_.dropped_area;
        if (jumps_)
            add_jumps(vol, rj, run);
        return run;
    }

  private:
    std::vector<double> sigmas(VolatilityPath const* vol) const
    {
        if (!vol)
            return {1.0};
        std::vector<double> s(vol->size());
        for (std::size_t i = 0; i < s.size(); ++i)
            s[i] = std::sqrt(vol->sigma2[i]);
        return s;
    }

    KwRun run_gaussian(VolatilityPath const* vol, RngStream& rng) const
    {
        std::size_t const J = sep_.terms.size(), C = table_.channels, k = k_;
        std::size_t const npair = J * (J + 1) / 2;
        auto sg = sigmas(vol);
        double const mu = gauss_.mu, s2 = gauss_.sigma2;
        std::vector<std::vector<double>> dz(J, std::vector<double>(k + 1, 0.0));
        std::vector<std::vector<double>> dm = dz;
        std::vector<std::vector<double>> dp(npair, std::vector<double>(k + 1, 0.0));
        std::vector<double> M(J), P(npair);
        Eigen::MatrixXd cov(J, J);
        Eigen::VectorXd z(J);
        for (auto const& s : table_.slices)
        {
            std::fill(M.begin(), M.end(), 0.0);
            std::fill(P.begin(), P.end(), 0.0);
            for (std::size_t c = 0; c < s.ncells; ++c)
            {
                double const* w = table_.w.data() + s.offset + c * C;
                double sig = vol ? sg[s.cell0 + c] : 1.0;
                std::size_t p = 0;
                for (std::size_t j = 0; j < J; ++j)
                {
                    M[j] += w[j] * sig;
                    for (std::size_t i = 0; i <= j; ++i, ++p)
                        P[p] += w[J + p] * sig * sig;
                }
            }
            if (J == 1)
            {
                double v = s2 * P[0];
                z(0) = mu * M[0] + (v > 0 ? std::sqrt(v) * rng.normal() : 0.0);
            }
            else
            {
                std::size_t p = 0;
                for (std::size_t j = 0; j < J; ++j)
                    for (std::size_t i = 0; i <= j; ++i, ++p)
                        cov(i, j) = cov(j, i) = s2 * P[p];
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
                Eigen::VectorXd n(J);
                for (std::size_t j = 0; j < J; ++j)
                    n(j) = std::sqrt(std::max(es.eigenvalues()(j), 0.0)) * rng.normal();
                z = es.eigenvectors() * n;
                for (std::size_t j = 0; j < J; ++j)
                    z(j) += mu * M[j];
            }
            for (std::size_t j = 0; j < J; ++j)
            {
                detail::range_add(dz[j], s.lo, s.hi, z(j));
                detail::range_add(dm[j], s.lo, s.hi, M[j]);
            }
            for (std::size_t p = 0; p < npair; ++p)
                detail::range_add(dp[p], s.lo, s.hi, P[p]);
        }
        KwRun run;
        run.values.assign(k, 0.0);
        run.cond_mean.assign(k, 0.0);
        run.cond_var.assign(k, 0.0);
        std::vector<std::vector<double>> Z(J), Mm(J), Pp(npair);
        for (std::size_t j = 0; j < J; ++j)
        {
            Z[j] = detail::prefix(dz[j], k);
            Mm[j] = detail::prefix(dm[j], k);
        }
        for (std::size_t p = 0; p < npair; ++p)
            Pp[p] = detail::prefix(dp[p], k);
        for (std::size_t l = 0; l < k; ++l)
        {
            double t = double(l + 1) * tau_;
            std::vector<double> f(J);
            for (std::size_t j = 0; j < J; ++j)
                f[j] = sep_.terms[j].f(t);
            std::size_t p = 0;
            for (std::size_t j = 0; j < J; ++j)
            {
                run.values[l] += f[j] * Z[j][l];
                run.cond_mean[l] += mu * f[j] * Mm[j][l];
                for (std::size_t i = 0; i <= j; ++i, ++p)
                    run.cond_var[l] += (i == j ? 1.0 : 2.0) * s2 * f[i] * f[j] * Pp[p][l];
            }
        }
        for (double v : run.values)
            if (!std::isfinite(v))
                throw NumericError("non-finite kernel-weighted value; kernel factors overflow");
        return run;
    }

    KwRun run_stable(VolatilityPath const* vol, RngStream& rng) const
    {
        std::size_t const k = k_;
        std::vector<double> dz(k + 1, 0.0), dm(k + 1, 0.0);
        for (auto const& s : table_.slices)
        {
            auto I = detail::fold_stable(table_.w.data() + s.offset, s.ncells, s.cell0, vol,
                                         stable_->alpha);
            if (I.abs_alpha == 0 && I.first == 0)
                continue;
            Stable p = stable_conditional_params(*stable_, I);
            detail::range_add(dz, s.lo, s.hi, detail::sample_stable(p, rng));
            detail::range_add(dm, s.lo, s.hi, p.mu);
        }
        KwRun run;
        auto Z = detail::prefix(dz, k), M = detail::prefix(dm, k);
        run.values.resize(k);
        run.cond_mean.resize(k);
        for (std::size_t l = 0; l < k; ++l)
        {
            double f = sep_.terms[0].f(double(l + 1) * tau_);
            run.values[l] = f * Z[l];
            run.cond_mean[l] = f * M[l];
        }
        return run;
    }

    void add_jumps(VolatilityPath const* vol, RngStream& rng, KwRun& run) const
    {
        run.atoms = detail::trawl_atoms(trawl_, *jumps_, k_, tau_, rng);
        auto X = jump_values(run.atoms, vol, eps_);
        for (std::size_t l = 0; l < k_; ++l)
            run.values[l] += X[l];
    }

  public:
    /*!
     * Jump part from given atoms, keeping |y| > eps and removing
     * int_{eps<|y|<=1} y l(dy) times int_{A_l} K_l sigma.
     */
    std::vector<double> jump_values(std::vector<JumpAtom> const& atoms,
                                    VolatilityPath const* vol, double eps) const
    {
        std::vector<double> X(k_, 0.0);
        if (!measure_)
            return X;
        for (auto const& a : atoms)
        {
            if (!(std::abs(a.y) > eps) || (grid_ && a.t < table_.t_lo))
                continue;
            double sg = vol ? std::sqrt(vol->sigma2_at(a.t)) : 1.0;
            detail::scatter_weighted(
                trawl_, tau_, k_, a,
                [&](std::size_t l) {
                    return sg * kernel_value(kernel_, double(l) * tau_, a.t, a.x);
                },
                X);
        }
        double drift = compensator_drift(*measure_, eps);
        if (drift != 0)
        {
            auto first = first_moments(vol);
            for (std::size_t l = 0; l < k_; ++l)
                X[l] -= drift * first[l];
        }
        return X;
    }

  private:
    //! int_{A_l} K_l sigma for each trawl
    std::vector<double> first_moments(VolatilityPath const* vol) const
    {
        std::size_t const J = sep_.terms.size(), C = table_.channels;
        auto sg = sigmas(vol);
        std::vector<std::vector<double>> dm(J, std::vector<double>(k_ + 1, 0.0));
        for (auto const& s : table_.slices)
            for (std::size_t j = 0; j < J; ++j)
            {
                double m = 0;
                for (std::size_t c = 0; c < s.ncells; ++c)
                    m += table_.w[s.offset + c * C + j] * (vol ? sg[s.cell0 + c] : 1.0);
                detail::range_add(dm[j], s.lo, s.hi, m);
            }
        std::vector<double> out(k_, 0.0);
        for (std::size_t j = 0; j < J; ++j)
        {
            auto S = detail::prefix(dm[j], k_);
            for (std::size_t l = 0; l < k_; ++l)
                out[l] += sep_.terms[j].f(double(l + 1) * tau_) * S[l];
        }
        return out;
    }

    TrawlFunction trawl_;
    Kernel kernel_;
    std::size_t k_;
    double tau_;
    double eps_;
    std::optional<VolGrid> grid_;
    SeparableKernel sep_;
    KwTable table_;
    std::optional<Stable> stable_;
    Gaussian gauss_{0, 0};
    std::optional<JumpSampler> jumps_;
    std::optional<LevyMeasureSpec> measure_;
};

inline KwRun simulate_kw(TrawlFunction const& trawl, Kernel const& K, VolatilityPath const* vol,
                         LevySeed const& seed, double eps, std::size_t k, double tau,
                         RngStream& rng)
{
    std::optional<VolGrid> g;
    if (vol)
        g = VolGrid::of(*vol);
    return KwSimulator(trawl, K, seed, k, tau, eps, g)(vol, rng);
}

//! Slice partition with N(mu int K sigma, sigma2 int K^2 sigma^2) per slice
inline KwRun simulate_kw_gaussian(TrawlFunction const& trawl, Kernel const& K,
                                  VolatilityPath const* vol, Gaussian const& seed, std::size_t k,
                                  double tau, RngStream& rng)
{
    return simulate_kw(trawl, K, vol, seed, 0, k, tau, rng);
}

//! Sum of y K_l(t, x) sigma(t) over atoms with |y| > eps, minus the compensator
inline KwRun simulate_kw_jump(TrawlFunction const& trawl, Kernel const& K,
                              VolatilityPath const* vol, LevyMeasureSpec const& measure,
                              double eps, std::size_t k, double tau, RngStream& rng)
{
    return simulate_kw(trawl, K, vol, CustomTriplet{0, 0, measure}, eps, k, tau, rng);
}

inline KwRun simulate_kw_stable(TrawlFunction const& trawl, Kernel const& K,
                                VolatilityPath const* vol, Stable const& seed, std::size_t k,
                                double tau, RngStream& rng)
{
    return simulate_kw(trawl, K, vol, seed, 0, k, tau, rng);
}

//---------------------------------------------------------------------------//
// Volatility modulation

//! sigma^2 as a trawl process sampled on a fine grid
struct VolTrawlSpec
{
    TrawlFunction trawl;
    LevySeed seed;
    double step{0.05};
    double start{-10};
};

/*!
 * Start of the volatility grid for trawls at tau, 2 tau, ...
 *
 * The earlier of start and tau plus the horizon holding all but 1e-3 of
 * Leb(A).
 */
inline double vol_grid_start(TrawlFunction const& trawl, double tau, double start)
{
    return std::min(start, tau + default_horizon(trawl, 1e-3));
}

//! Stationary sigma^2 on start, start + step, ... up to end, by slice partition
inline VolatilityPath simulate_vol_trawl(TrawlFunction const& trawl, LevySeed const& seed,
                                         double start, double end, double step, RngStream& rng)
{
    TRAWLKIT_REQUIRE(step > 0 && end >= start, "bad volatility grid");
    std::size_t n = std::size_t(std::floor((end - start) / step + 1e-9)) + 1;
    auto run = simulate_slice(trawl, seed, n, step, std::nullopt, rng);
    VolatilityPath v{start, step, std::move(run.values), VolatilityPath::Source::simulated};
    for (double& x : v.sigma2)
    {
        if (x < 0 && x > -1e-12)
            x = 0;
        if (!(x >= 0))
            throw NumericError("volatility trawl produced a negative sigma^2");
    }
    return v;
}

struct VmRun
{
    KwRun x;
    VolatilityPath vol;
};

/*!
 * sigma^2 first, then X given sigma.
 *
 * Built once per configuration; each call draws a fresh volatility path
 * unless a fixed one was supplied.
 */
class VmSimulator
{
  public:
    VmSimulator(TrawlFunction trawl, Kernel kernel, std::variant<VolatilityPath, VolTrawlSpec> vol,
                LevySeed seed, std::size_t k, double tau, double eps = 0)
        : vol_(std::move(vol)), k_(k), tau_(tau)
    {
        VolGrid grid;
        if (auto const* p = std::get_if<VolatilityPath>(&vol_))
            grid = VolGrid::of(*p);
        else
        {
            auto const& s = std::get<VolTrawlSpec>(vol_);
            grid.start = vol_grid_start(trawl, tau, s.start);
            grid.step = s.step;
            grid.n = std::size_t(std::floor((double(k) * tau - grid.start) / s.step + 1e-9)) + 1;
            while (grid.start + (double(grid.n) - 0.5) * grid.step < double(k) * tau)
                ++grid.n;
        }
        grid_ = grid;
        sim_.emplace(std::move(trawl), std::move(kernel), std::move(seed), k, tau, eps, grid);
    }

    VolGrid const& grid() const { return grid_; }
    KwSimulator const& kw() const { return *sim_; }

    VmRun operator()(RngStream& rng) const
    {
        RngStream const base(rng());
        RngStream rv = base.split("volatility"), rx = base.split("x");
        VmRun out;
        if (auto const* p = std::get_if<VolatilityPath>(&vol_))
            out.vol = *p;
        else
        {
            auto const& s = std::get<VolTrawlSpec>(vol_);
            double end = grid_.start + double(grid_.n - 1) * grid_.step;
            out.vol = simulate_vol_trawl(s.trawl, s.seed, grid_.start, end, grid_.step, rv);
            out.vol.sigma2.resize(grid_.n);
        }
        out.x = (*sim_)(&out.vol, rx);
        return out;
    }

  private:
    std::variant<VolatilityPath, VolTrawlSpec> vol_;
    std::size_t k_;
    double tau_;
    VolGrid grid_;
    std::optional<KwSimulator> sim_;
};

inline VmRun simulate_vm_trawl(TrawlFunction const& trawl, Kernel const& K,
                               std::variant<VolatilityPath, VolTrawlSpec> const& vol,
                               LevySeed const& seed, std::size_t k, double tau, RngStream& rng,
                               double eps = 0)
{
    return VmSimulator(trawl, K, vol, seed, k, tau, eps)(rng);
}

}  // namespace trawlkit
