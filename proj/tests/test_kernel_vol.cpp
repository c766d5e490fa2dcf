// SPDX-License-Identifier: Apache-2.0
//! \file tests/test_kernel_vol.cpp
#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "trawlkit/kernel_vol.hpp"
#include "trawlkit/stats.hpp"

using namespace trawlkit;
using std::numbers::pi;

namespace
{
DensityMeasure fig5_measure()
{
    DensityMeasure d;
    d.density = [](double y) { return y > 0 ? 2 / y * std::exp(-3 * y) : 0.0; };
    d.finite_variation = true;
    return d;
}

std::vector<double> column(std::vector<std::vector<double>> const& runs, std::size_t l)
{
    std::vector<double> c(runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r)
        c[r] = runs[r][l];
    return c;
}

//! mean of a*b minus product of means, with a delta-method standard error
std::pair<double, double> covariance(std::vector<double> const& a, std::vector<double> const& b)
{
    auto sa = summarize(a), sb = summarize(b);
    std::vector<double> p(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        p[i] = (a[i] - sa.mean) * (b[i] - sb.mean);
    auto s = summarize(p);
    return {s.mean, s.se_mean};
}

//! int over a rectangle of f(t) by adaptive quadrature
std::complex<double> integrate_c(std::function<std::complex<double>(double)> const& f, double a,
                                 double b)
{
    double re = integrate([&](double t) { return f(t).real(); }, a, b, 1e-13).value;
    double im = integrate([&](double t) { return f(t).imag(); }, a, b, 1e-13).value;
    return {re, im};
}
}  // namespace

TEST(SliceKernelIntegrals, ConstantKernel)
{
    auto s = SliceGeometry::rectangle(0, 2, 0, 0.5);
    auto r = slice_kernel_integrals(ConstantKernel{1}, nullptr, s);
    EXPECT_NEAR(r.first, 1, 1e-14);
    EXPECT_NEAR(r.second, 1, 1e-14);
}

TEST(SliceKernelIntegrals, LinearKernel)
{
    Kernel K = SpaceTimeKernel{[](double t, double) { return 1 + 0.1 * t; }, true};
    auto r = slice_kernel_integrals(K, nullptr, SliceGeometry::rectangle(0, 1, 0, 1));
    EXPECT_NEAR(r.first, 1.05, 1e-14);
    EXPECT_NEAR(r.second, 1 + 0.1 + 0.01 / 3, 1e-14);
}

TEST(SliceKernelIntegrals, SineKernelAndVolatility)
{
    Kernel K = SpaceTimeKernel{[](double t, double) { return std::sin(t); }, true};
    auto s = SliceGeometry::rectangle(0, 2, 0, 0.5);
    auto r = slice_kernel_integrals(K, nullptr, s);
    EXPECT_NEAR(r.first, 0.5 * (1 - std::cos(2.0)), 1e-13);
    auto vol = VolatilityPath::constant(4, -1, 3, 0.1);
    auto rv = slice_kernel_integrals(K, &vol, s);
    EXPECT_NEAR(rv.first, 2 * r.first, 1e-13);
    EXPECT_NEAR(rv.second, 4 * r.second, 1e-13);
    auto short_vol = VolatilityPath::constant(4, 0.5, 3, 0.1);
    EXPECT_THROW(slice_kernel_integrals(K, &short_vol, s), ConfigError);
}

TEST(SliceKernelIntegrals, HeightDependentKernelOnCurvedBand)
{
    Kernel K = SpaceTimeKernel{[](double, double x) { return x; }, false};
    SliceGeometry s{-1, 0, [](double) { return 0.0; }, [](double t) { return std::exp(t); }, {}};
    auto r = slice_kernel_integrals(K, nullptr, s);
    // int e^{2t}/2 dt and int e^{3t}/3 dt over [-1, 0]
    EXPECT_NEAR(r.first, (1 - std::exp(-2.0)) / 4, 1e-12);
    EXPECT_NEAR(r.second, (1 - std::exp(-3.0)) / 9, 1e-12);
}

TEST(SliceKernelIntegrals, PiecewiseVolatilityMidpointCells)
{
    VolatilityPath v{0, 1, {1, 4, 9}, VolatilityPath::Source::user};
    // cells [-0.5,0.5), [0.5,1.5), [1.5,2.5)
    auto r = slice_kernel_integrals(ConstantKernel{1}, &v, SliceGeometry::rectangle(0, 2, 0, 1));
    EXPECT_NEAR(r.first, 0.5 * 1 + 1 * 2 + 0.5 * 3, 1e-14);
    EXPECT_NEAR(r.second, 0.5 * 1 + 1 * 4 + 0.5 * 9, 1e-14);
}

TEST(ReduceSeparable, Exponential)
{
    auto sep = reduce_separable(TimeShiftedKernel::exponential(0.7));
    ASSERT_EQ(sep.terms.size(), 1u);
    EXPECT_NEAR(sep.terms[0].f(2.0), std::exp(-1.4), 1e-15);
    EXPECT_NEAR(sep.terms[0].h(1.0, 0.3), std::exp(0.7), 1e-15);
}

TEST(ReduceSeparable, TrigonometricAndCombinations)
{
    TimeShiftedKernel mix;
    mix.parts = {{1, 0, 1, false}, {0.5, -0.2, 3, true}, {2, 0.1, 0, false}};
    Kernel kernels[] = {TimeShiftedKernel::cosine(1), TimeShiftedKernel::sine(2), mix};
    for (auto const& K : kernels)
    {
        auto sep = reduce_separable(K, 3.0);
        for (double t : {0.5, 2.0, 7.0})
            for (double tb : {-1.0, 0.3, 4.0})
            {
                double s = 0;
                for (auto const& term : sep.terms)
                    s += term.f(t) * term.h(tb, 0);
                EXPECT_NEAR(s, kernel_value(K, t, tb, 0), 1e-12);
            }
    }
    EXPECT_EQ(reduce_separable(TimeShiftedKernel::cosine(1)).terms.size(), 2u);
    auto c = reduce_separable(ConstantKernel{2.5});
    ASSERT_EQ(c.terms.size(), 1u);
    EXPECT_EQ(c.terms[0].f(9) * c.terms[0].h(1, 1), 2.5);
    EXPECT_THROW(reduce_separable(TimeShiftedKernel::function([](double u) { return u * u; })),
                 ConfigError);
}

TEST(FourierCoefficients, Constant)
{
    auto F = fourier_coefficients([](double) { return 1.7; }, 2.0, 0, 4);
    EXPECT_NEAR(F.a[0], 1.7, 1e-13);
    for (std::size_t n = 1; n <= 4; ++n)
        EXPECT_NEAR(F.a[n], 0, 1e-13);
    EXPECT_LT(F.l2_error, 1e-10);
}

TEST(FourierCoefficients, SingleMode)
{
    double tau = 0.8, lam = 0.6;
    auto F = fourier_coefficients(
        [=](double u) { return std::exp(lam * u) * std::cos(pi * u / tau); }, tau, lam, 3);
    EXPECT_NEAR(F.a[0], 0, 1e-12);
    EXPECT_NEAR(F.a[1], 1, 1e-12);
    EXPECT_NEAR(F.a[2], 0, 1e-12);
    EXPECT_NEAR(F.a[3], 0, 1e-12);
}

TEST(FourierCoefficients, LinearRamp)
{
    auto F = fourier_coefficients([](double u) { return u; }, 1.0, 0, 8);
    EXPECT_NEAR(F.a[0], 0.5, 1e-13);
    for (std::size_t n = 1; n <= 8; ++n)
        EXPECT_NEAR(F.a[n], 2 * (std::cos(n * pi) - 1) / (n * n * pi * pi), 1e-12);
    EXPECT_LT(F.l2_error, 1e-2);
    double prev = 1e300;
    for (std::size_t N = 0; N <= 10; ++N)
    {
        double e = fourier_coefficients([](double u) { return u; }, 1.0, 0, N).l2_error;
        EXPECT_LE(e, prev + 1e-12);
        prev = e;
    }
    double pw = 1e300;
    for (std::size_t N = 0; N <= 6; ++N)
    {
        double e = fourier_coefficients([](double u) { return u * u; }, 1.0, 0.4, N)
                       .projection_error;
        EXPECT_LE(e, pw + 1e-12);
        pw = e;
    }
}

TEST(StableConditional, ConstantKernelIsAreaScaling)
{
    auto s = SliceGeometry::rectangle(0, 1.5, 0, 0.4);
    double area = 0.6;
    for (Stable seed : {Stable{1.5, 0.3, 2, 0.7}, Stable{1, 0.4, 1.2, -0.3}, Stable{0.6, -1, 1, 0}})
    {
        auto r = stable_conditional_params(ConstantKernel{1}, nullptr, s, seed);
        EXPECT_EQ(r.alpha, seed.alpha);
        EXPECT_NEAR(r.beta, seed.beta, 1e-14);
        EXPECT_NEAR(r.c, seed.c * std::pow(area, 1 / seed.alpha), 1e-13);
        EXPECT_NEAR(r.mu, seed.mu * area, 1e-13);
        auto m = stable_conditional_params(ConstantKernel{-1}, nullptr, s, seed);
        EXPECT_NEAR(m.beta, -seed.beta, 1e-14);
        EXPECT_NEAR(m.c, r.c, 1e-13);
    }
}

TEST(StableConditional, CumulantOfTheSliceIntegral)
{
    // int_S C(theta K, L') over S = [0, 2] x [0, 1] against the cumulant of the returned law
    Kernel K = SpaceTimeKernel{[](double t, double) { return std::cos(1.3 * t) + 0.2; }, true};
    auto s = SliceGeometry::rectangle(0, 2, 0, 1);
    for (Stable seed : {Stable{1.5, 0.6, 1.1, 0.4}, Stable{1, 0.7, 0.8, 0.2}, Stable{0.7, -0.4, 1, 1}})
    {
        auto p = stable_conditional_params(K, nullptr, s, seed);
        for (double th : {-2.0, -0.5, 0.3, 1.0, 3.0})
        {
            auto direct = integrate_c(
                [&](double t) {
                    return seed_cumulant(seed, th * kernel_value(K, 0, t, 0));
                },
                0, 2);
            auto via = seed_cumulant(p, th);
            EXPECT_NEAR(direct.real(), via.real(), 1e-8) << seed.alpha << " " << th;
            EXPECT_NEAR(direct.imag(), via.imag(), 1e-8) << seed.alpha << " " << th;
        }
    }
}

TEST(StableConditional, AlphaTwoMatchesGaussianIntegrals)
{
    Kernel K = SpaceTimeKernel{[](double t, double) { return 1 + 0.1 * t; }, true};
    auto vol = VolatilityPath::constant(1, 0, 10, 0.05);
    for (std::size_t i = 0; i < vol.size(); ++i)
        vol.sigma2[i] = 1 + 0.5 * std::sin(double(i));
    auto s = SliceGeometry::rectangle(1, 4, 0, 0.5);
    Stable seed{2, 0, 0.9, 1.3};
    auto p = stable_conditional_params(K, &vol, s, seed);
    auto g = slice_kernel_integrals(K, &vol, s);
    // Stable(2, c) is N(mu, 2 c^2)
    EXPECT_NEAR(p.c * p.c, seed.c * seed.c * g.second, 1e-10);
    EXPECT_NEAR(p.mu, seed.mu * g.first, 1e-10);
}

TEST(KwGaussian, ReducesToSliceBounded)
{
    auto tri = TrawlFunction::triangle(-2);
    double tau = 0.5;
    std::size_t k = 6;
    KwSimulator sim(tri, ConstantKernel{1}, Gaussian{1, 2}, k, tau);
    RngStream rng(1);
    std::vector<std::vector<double>> runs(10000);
    for (auto& r : runs)
    {
        auto x = sim(nullptr, rng);
        for (std::size_t l = 0; l < k; ++l)
        {
            EXPECT_NEAR(x.cond_mean[l], tri.total_area(), 1e-12);
            EXPECT_NEAR(x.cond_var[l], 2 * tri.total_area(), 1e-12);
        }
        r = x.values;
    }
    auto s = summarize(column(runs, 4));
    EXPECT_NEAR(s.mean, 1, 4 * s.se_mean);
    EXPECT_NEAR(s.var, 2, 4 * s.se_var);
    auto [c, se] = covariance(column(runs, 3), column(runs, 4));
    double overlap = tri.total_area() * autocorrelation(tri, tau);
    EXPECT_NEAR(c, 2 * overlap, 4 * se);
}

TEST(KwGaussian, LinearTrendOnExponentialTrawl)
{
    auto f = TrawlFunction::exponential(1);
    Kernel K = SpaceTimeKernel{[](double t, double) { return 1 + 0.1 * t; }, true};
    RngStream rng(2);
    auto x = simulate_kw_gaussian(f, K, nullptr, Gaussian{2, 4}, 40, 0.5, rng);
    for (std::size_t l = 1; l <= 40; ++l)
    {
        // E[tbar] over A_t is t - 1
        double t = 0.5 * double(l);
        EXPECT_NEAR(x.cond_mean[l - 1], 2 * (1 + 0.1 * (t - 1)), 1e-9);
        // int (1 + 0.1 tbar)^2 with E[s^2] = 2 for s ~ -Exp(1)
        double m2 = 1 + 0.2 * (t - 1) + 0.01 * (t * t - 2 * t + 2);
        EXPECT_NEAR(x.cond_var[l - 1], 4 * m2, 1e-9);
    }
}

TEST(KwGaussian, GeneralizedOrnsteinUhlenbeck)
{
    auto f = TrawlFunction::exponential(1);
    double lam = 0.5, tau = 0.4;
    std::size_t k = 8;
    KwSimulator sim(f, TimeShiftedKernel::exponential(lam), Gaussian{0, 1}, k, tau);
    RngStream rng(3);
    std::vector<std::vector<double>> runs(10000);
    for (auto& r : runs)
    {
        auto x = sim(nullptr, rng);
        for (double v : x.cond_var)
            EXPECT_NEAR(v, 1 / (2 * lam + 1), 1e-9);
        r = x.values;
    }
    auto s = summarize(column(runs, 7));
    EXPECT_NEAR(s.var, 1 / (2 * lam + 1), 4 * s.se_var);
    auto [c, se] = covariance(column(runs, 5), column(runs, 7));
    EXPECT_NEAR(c, std::exp(-2 * tau * (1 + lam)) / (2 * lam + 1), 4 * se);
}

TEST(KwGaussian, CosineKernelNegativeCorrelation)
{
    // int_{-inf}^0 cos(s) cos(s - h) e^{s - h} ds
    auto f = TrawlFunction::exponential(1);
    double tau = 1.5;
    KwSimulator sim(f, TimeShiftedKernel::cosine(1), Gaussian{0, 1}, 3, tau);
    RngStream rng(4);
    std::vector<std::vector<double>> runs(10000);
    for (auto& r : runs)
        r = sim(nullptr, rng).values;
    double h = tau;
    double expect = integrate_lower_tail(
                        [h](double s) { return std::cos(s) * std::cos(s - h) * std::exp(s - h); },
                        0.0)
                        .value;
    ASSERT_LT(expect, 0);
    auto [c, se] = covariance(column(runs, 1), column(runs, 2));
    EXPECT_NEAR(c, expect, 4 * se);
}

TEST(KwGaussian, FourierKernelConditionalVariance)
{
    auto f = TrawlFunction::exponential(1);
    auto F = fourier_coefficients([](double u) { return 1 + u * u; }, 2.0, -0.3, 3);
    KwSimulator sim(f, F, Gaussian{0.5, 1.5}, 5, 0.5);
    double var = 1.5 * integrate_lower_tail(
                           [&](double s) { return F(s) * F(s) * std::exp(s); }, 0.0)
                           .value;
    double mean = 0.5 * integrate_lower_tail([&](double s) { return F(s) * std::exp(s); }, 0.0)
                            .value;
    RngStream rng(5);
    std::vector<double> x(10000);
    for (auto& v : x)
    {
        auto r = sim(nullptr, rng);
        EXPECT_NEAR(r.cond_var[4], var, 1e-8 * var);
        EXPECT_NEAR(r.cond_mean[4], mean, 1e-8 * std::abs(mean));
        v = r.values[4];
    }
    auto s = summarize(x);
    EXPECT_NEAR(s.mean, mean, 4 * s.se_mean);
    EXPECT_NEAR(s.var, var, 4 * s.se_var);
}

TEST(KwJump, ConstantKernelEqualsCompoundPoisson)
{
    auto tri = TrawlFunction::triangle(-2);
    auto f = TrawlFunction::exponential(1);
    std::pair<TrawlFunction, LevyMeasureSpec> cases[] = {
        {tri, AtomicMeasure{{{1.0, 3.0}, {-0.4, 1.0}}}}, {f, fig5_measure()}};
    for (auto const& [trawl, m] : cases)
    {
        RngStream a(11);
        auto kw = simulate_kw_jump(trawl, ConstantKernel{1}, nullptr, m, 0.05, 7, 0.5, a);
        RngStream b(11);
        RngStream base(b());
        RngStream rj = base.split("jumps");
        auto cpp = simulate_cpp(trawl, m, 0.05, 7, 0.5, rj);
        ASSERT_EQ(kw.atoms.size(), cpp.atoms.size());
        for (std::size_t l = 0; l < 7; ++l)
            EXPECT_NEAR(kw.values[l], cpp.values[l], 1e-9);
    }
}

TEST(KwJump, AtomWeightedByKernel)
{
    auto rect = TrawlFunction::rectangle(-1);
    std::vector<double> X(6, 0.0);
    detail::scatter_weighted(rect, 0.5, 6, {1.6, 0.4, 2.0}, [](std::size_t) { return 3.0; }, X);
    EXPECT_EQ(X, (std::vector<double>{0, 0, 0, 6, 6, 0}));
}

TEST(KwJump, PoissonFloorKernelIsInteger)
{
    auto tri = TrawlFunction::triangle(-2);
    Kernel K = SpaceTimeKernel{
        [](double t, double x) { return std::floor(2 * (1 + x) * (t - std::floor(t))); }, false};
    RngStream rng(12);
    auto x = simulate_kw(tri, K, nullptr, Poisson{5}, 0, 240, 0.5, rng);
    double total = 0;
    for (double v : x.values)
    {
        EXPECT_NEAR(v, std::round(v), 1e-8);
        total += v;
    }
    EXPECT_GT(total, 0);
}

TEST(KwJump, CoupledTruncationError)
{
    auto tri = TrawlFunction::triangle(-2);
    Kernel K = SpaceTimeKernel{[](double t, double) { return 1 + 0.1 * t; }, true};
    LevyMeasureSpec m = fig5_measure();
    double fine = 1e-4, coarse = 0.02;
    KwSimulator sim(tri, K, CustomTriplet{0, 0, m}, 4, 0.5, fine);
    auto K2 = slice_kernel_integrals(
        SpaceTimeKernel{[](double t, double) { return (1 + 0.1 * t) * (1 + 0.1 * t); }, true},
        nullptr, {0, 2, [](double) { return 0.0; }, [](double t) { return 1 - (t - 2) / -2; }, {}});
    double band = small_jump_variance(m, coarse) - small_jump_variance(m, fine);
    RngStream rng(13);
    std::vector<double> d2(10000);
    for (auto& v : d2)
    {
        auto r = sim(nullptr, rng);
        auto c = sim.jump_values(r.atoms, nullptr, coarse);
        double d = r.values[3] - c[3];
        v = d * d;
    }
    auto s = summarize(d2);
    // trawl 4 is A at t = 2: int K^2 over it, times the dropped band of jumps
    EXPECT_NEAR(s.mean, K2.first * band, 4 * s.se_mean);
}

TEST(KwStable, CauchyMarginal)
{
    auto tri = TrawlFunction::triangle(-2);
    KwSimulator sim(tri, ConstantKernel{1}, Cauchy{1.5}, 4, 0.5);
    RngStream rng(14);
    std::vector<double> x(5000);
    for (auto& v : x)
        v = sim(nullptr, rng).values[2];
    auto law = reference_law(Cauchy{1.5}, tri.total_area());
    EXPECT_GT(distribution_tests(x, law).pvalue, 1e-3);
}

TEST(KwStable, SkewedWithKernelMatchesConditionalLaw)
{
    // a single trawl is one slice per column; its law is the aggregate of the slice laws
    auto rect = TrawlFunction::rectangle(-1);
    Kernel K = SpaceTimeKernel{[](double t, double) { return 0.5 + 0.1 * t; }, true};
    Stable seed{1.5, 0.5, 1, 0.2};
    KwSimulator sim(rect, K, seed, 1, 1.0);
    auto p = stable_conditional_params(K, nullptr, SliceGeometry::rectangle(0, 1, 0, 1), seed);
    RngStream rng(15);
    std::vector<double> x(5000);
    for (auto& v : x)
        v = sim(nullptr, rng).values[0];
    auto law = reference_law(p, 1);
    EXPECT_GT(distribution_tests(x, law).pvalue, 1e-3);
}

TEST(KwStable, RefusesMultiTermKernel)
{
    EXPECT_THROW(KwSimulator(TrawlFunction::exponential(1), TimeShiftedKernel::cosine(1),
                             Cauchy{1}, 3, 0.5),
                 ConfigError);
}

TEST(Volatility, ConstantPathScalesVariance)
{
    auto f = TrawlFunction::exponential(1);
    double tau = 0.5;
    std::size_t k = 5;
    double start = vol_grid_start(f, tau, -10);
    auto vol = VolatilityPath::constant(4, start, k * tau, 0.05);
    KwSimulator sim(f, ConstantKernel{1}, Gaussian{1, 1}, k, tau, 0, VolGrid::of(vol));
    RngStream rng(16);
    std::vector<double> x(10000);
    for (auto& v : x)
    {
        auto r = sim(&vol, rng);
        double kept = 1 - r.dropped_area[4];
        EXPECT_NEAR(r.cond_var[4], 4 * kept, 1e-9);
        EXPECT_NEAR(r.cond_mean[4], 2 * kept, 1e-9);
        EXPECT_LT(r.dropped_area[0], 1.001e-3);
        v = r.values[4];
    }
    auto s = summarize(x);
    EXPECT_NEAR(s.var, 4, 4 * s.se_var + 0.01);
}

TEST(Volatility, TrawlPathTotalVariance)
{
    auto A = TrawlFunction::exponential(0.25);
    VolTrawlSpec spec{TrawlFunction::long_memory(0.5, 1.5), InverseGaussian{2, 1}, 0.1, -10};
    VmSimulator vm(A, ConstantKernel{1}, spec, Gaussian{1, 1}, 40, 0.5);
    RngStream rng(17);
    std::size_t const R = 1000;
    std::vector<double> x(R), m(R), v(R);
    for (std::size_t r = 0; r < R; ++r)
    {
        auto run = vm(rng);
        ASSERT_EQ(run.vol.source, VolatilityPath::Source::simulated);
        x[r] = run.x.values[39];
        m[r] = run.x.cond_mean[39];
        v[r] = run.x.cond_var[39];
    }
    auto sx = summarize(x), sm = summarize(m), sv = summarize(v);
    double oracle = sv.mean + sm.var;
    double se = std::hypot(sx.se_var, std::hypot(sv.se_mean, sm.se_var));
    EXPECT_NEAR(sx.var, oracle, 4 * se);
    EXPECT_NEAR(sx.mean, sm.mean, 4 * std::hypot(sx.se_mean, sm.se_mean));
}

TEST(Volatility, SpikeRaisesLocalVariance)
{
    auto A = TrawlFunction::exponential(1);
    double tau = 0.5;
    std::size_t k = 100;
    auto vol = VolatilityPath::constant(1, vol_grid_start(A, tau, 0), k * tau, 0.05);
    for (std::size_t i = 0; i < vol.size(); ++i)
        if (vol.time(i) > 20 && vol.time(i) < 25)
            vol.sigma2[i] = 25;
    VmSimulator vm(A, ConstantKernel{1}, vol, Gaussian{0, 1}, k, tau);
    RngStream rng(18);
    std::vector<double> env(k, 0.0), cv;
    for (int r = 0; r < 100; ++r)
    {
        auto run = vm(rng);
        EXPECT_EQ(run.vol.source, VolatilityPath::Source::user);
        for (std::size_t l = 0; l < k; ++l)
            env[l] += std::abs(run.x.values[l]) / 100;
        cv = run.x.cond_var;
    }
    double me = 0, mc = 0;
    for (std::size_t l = 0; l < k; ++l)
    {
        me += env[l] / k;
        mc += cv[l] / k;
    }
    double sxy = 0;
    for (std::size_t l = 0; l < k; ++l)
        sxy += (env[l] - me) * (cv[l] - mc);
    EXPECT_GT(sxy, 0);
    EXPECT_GT(env[45], 2 * env[10]);
}

TEST(Volatility, GridStartRule)
{
    auto A = TrawlFunction::exponential(0.25);
    double s = vol_grid_start(A, 0.5, -10);
    EXPECT_NEAR(A.tail_integral(s - 0.5), 1e-3, 1e-12);
    EXPECT_EQ(vol_grid_start(TrawlFunction::triangle(-2), 0.5, -10), -10);
    EXPECT_EQ(vol_grid_start(TrawlFunction::triangle(-2), 0.5, 0), -1.5);
}
