// SPDX-License-Identifier: Apache-2.0
//! \file tests/test_trawl_geometry.cpp
#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "trawlkit/trawl_geometry.hpp"

using namespace trawlkit;

namespace
{
//! e^t given pointwise only, so every integral goes through quadrature
TrawlFunction pointwise_exp()
{
    return TrawlFunction([](double t) { return std::exp(t); });
}
TrawlFunction pointwise_long_memory()
{
    return TrawlFunction([](double t) { return 0.5 * std::pow(1 - t, -1.5); });
}
}  // namespace

TEST(TotalArea, Examples)
{
    EXPECT_NEAR(TrawlFunction::exponential(1).total_area(), 1, 1e-12);
    EXPECT_NEAR(TrawlFunction::long_memory(0.5, 1.5).total_area(), 1, 1e-12);
    EXPECT_NEAR(TrawlFunction::rectangle(-1).total_area(), 1, 1e-12);
}

TEST(TotalArea, QuadratureMatchesClosedForm)
{
    EXPECT_NEAR(pointwise_exp().total_area(), 1, 1e-9);
    EXPECT_NEAR(pointwise_long_memory().total_area(), 1, 1e-9);
    auto tri = TrawlFunction([](double t) { return 1 + t / 2; }, -2.0);
    EXPECT_NEAR(tri.total_area(), 1, 1e-9);
}

TEST(TotalArea, DivergentTailRejected)
{
    TrawlFunction slow([](double t) { return 1 / (1 - t); });
    EXPECT_THROW(slow.total_area(), ConfigError);
}

TEST(TrawlFunction, RejectsBadInput)
{
    EXPECT_THROW(TrawlFunction([](double) { return 0.0; }), ConfigError);
    EXPECT_THROW(TrawlFunction::tabulated({-1, 0}, {1, 0.5}), ConfigError);
    EXPECT_THROW(TrawlFunction::exponential(-1), ConfigError);
}

TEST(Autocorrelation, Examples)
{
    EXPECT_NEAR(autocorrelation(TrawlFunction::exponential(1), 1), std::exp(-1.0), 1e-14);
    EXPECT_NEAR(autocorrelation(TrawlFunction::long_memory(0.5, 1.5), 3), 0.5, 1e-14);
    EXPECT_EQ(autocorrelation(TrawlFunction::triangle(-2), 0), 1);
    EXPECT_THROW(autocorrelation(TrawlFunction::exponential(1), -1), ConfigError);
}

TEST(Autocorrelation, QuadratureMatchesClosedForm)
{
    for (double h : {0.1, 0.5, 2.0, 7.0})
    {
        EXPECT_NEAR(autocorrelation(pointwise_exp(), h), std::exp(-h), 1e-8 * std::exp(-h));
        double lm = std::pow(1 + h, -0.5);
        EXPECT_NEAR(autocorrelation(pointwise_long_memory(), h), lm, 1e-8 * lm);
    }
}

TEST(Autocorrelation, Properties)
{
    for (auto const& f : {TrawlFunction::exponential(2), TrawlFunction::long_memory(1, 2.5),
                          TrawlFunction::triangle(-3), TrawlFunction::rectangle(-1.5)})
    {
        double prev = 1;
        for (double h = 0; h < 6; h += 0.05)
        {
            double r = autocorrelation(f, h);
            EXPECT_LE(r, prev + 1e-15);
            EXPECT_GE(r, 0);
            prev = r;
        }
        if (auto T = f.support_bound())
        {
            EXPECT_EQ(autocorrelation(f, -*T), 0);
            EXPECT_EQ(autocorrelation(f, -*T + 1), 0);
        }
    }
}

TEST(SliceAreasBounded, TriangleExample)
{
    auto p = slice_areas_bounded(TrawlFunction::triangle(-2), 1, 5);
    ASSERT_EQ(p.I, 2u);
    EXPECT_NEAR(p.area(1, 1), 0.75, 1e-15);
    EXPECT_NEAR(p.area(2, 1), 0.25, 1e-15);
    EXPECT_NEAR(p.area(1, 2), 0.5, 1e-15);
    EXPECT_NEAR(p.area(2, 2), 0.25, 1e-15);
}

TEST(SliceAreasBounded, DisjointTrawls)
{
    auto p = slice_areas_bounded(TrawlFunction::rectangle(-1), 1.5, 4);
    ASSERT_EQ(p.I, 1u);
    EXPECT_NEAR(p.area(1, 1), 1, 1e-15);
}

TEST(SliceAreasBounded, RectangleExample)
{
    auto p = slice_areas_bounded(TrawlFunction::rectangle(-1), 0.5, 4);
    ASSERT_EQ(p.I, 2u);
    EXPECT_NEAR(p.area(1, 1), 0.5, 1e-15);
    EXPECT_NEAR(p.area(2, 1), 0.5, 1e-15);
    EXPECT_NEAR(p.area(1, 2), 0, 1e-15);
    EXPECT_NEAR(p.area(2, 2), 0.5, 1e-15);
}

TEST(SliceAreasBounded, NeedsSupport)
{
    EXPECT_THROW(slice_areas_bounded(TrawlFunction::exponential(1), 1, 3), ConfigError);
}

TEST(SliceAreasBounded, EveryTrawlConserved)
{
    for (double tau : {0.07, 0.3, 0.5, 0.9, 1.0, 2.5})
        for (auto const& f : {TrawlFunction::triangle(-2), TrawlFunction::rectangle(-1.3),
                              TrawlFunction::tabulated({-3, -1, 0}, {0, 0.25, 0.5})})
        {
            std::size_t k = 12;
            auto p = slice_areas_bounded(f, tau, k);
            for (std::size_t l = p.I; l <= k; ++l)
                EXPECT_NEAR(p.trawl_area(l), f.total_area(), 1e-9 * f.total_area())
                    << f.name() << " tau=" << tau << " l=" << l;
            for (std::size_t i = 1; i <= p.I; ++i)
                for (std::size_t j = 1; j <= k; ++j)
                    EXPECT_GE(p.area(i, j), 0);
        }
}

TEST(SliceAreasUnbounded, ExponentialExample)
{
    auto p = slice_areas_unbounded(TrawlFunction::exponential(1), std::log(2.0), 2);
    EXPECT_NEAR(p.a[0], 0.5, 1e-15);
    EXPECT_NEAR(p.a[1], 0.5, 1e-15);
    EXPECT_NEAR(p.area(1, 1), 0.5, 1e-15);
    EXPECT_NEAR(p.area(1, 2), 0.5, 1e-15);
    EXPECT_NEAR(p.area(2, 1), 0.5, 1e-15);
    EXPECT_EQ(p.area(2, 2), 0);
}

TEST(SliceAreasUnbounded, SingleTrawl)
{
    auto p = slice_areas_unbounded(TrawlFunction::long_memory(0.5, 1.5), 0.3, 1);
    EXPECT_NEAR(p.area(1, 1), 1, 1e-15);
}

TEST(SliceAreasUnbounded, StaircaseCount)
{
    std::size_t k = 9;
    auto p = slice_areas_unbounded(TrawlFunction::exponential(0.4), 0.5, k);
    std::size_t n = 0;
    for (std::size_t i = 1; i <= k; ++i)
        for (std::size_t j = 1; j <= k; ++j)
            n += p.area(i, j) > 0;
    EXPECT_EQ(n, k * (k + 1) / 2);
}

TEST(SliceAreasUnbounded, RowSumsReconstructArea)
{
    for (auto const& f : {TrawlFunction::exponential(1), TrawlFunction::long_memory(0.5, 1.5),
                          pointwise_exp(), pointwise_long_memory()})
    {
        std::size_t k = 15;
        auto p = slice_areas_unbounded(f, 0.4, k);
        EXPECT_NEAR(p.trawl_area(k), f.total_area(), 1e-9) << f.name();
        // truncation at n = k is the full plan
        EXPECT_EQ(p.trawl_area(k, k), p.trawl_area(k));
    }
}

TEST(SliceAreasUnbounded, BandsAgreeWithClosedForm)
{
    auto closed = slice_areas_unbounded(TrawlFunction::long_memory(0.5, 1.5), 0.25, 20);
    auto quad = slice_areas_unbounded(pointwise_long_memory(), 0.25, 20);
    for (std::size_t i = 0; i < 20; ++i)
        EXPECT_NEAR(quad.a[i], closed.a[i], 1e-8 * closed.a[i]);
}

TEST(ContainsPoint, Examples)
{
    auto rect = TrawlFunction::rectangle(-1);
    EXPECT_TRUE(contains_point(rect, 0, -0.5, 0.5));
    EXPECT_FALSE(contains_point(rect, 0, 0.5, 0.5));
    TrawlFunction steep([](double t) { return std::exp(2.75 * t); });
    EXPECT_FALSE(contains_point(steep, 0, -1, 0.1));
    EXPECT_TRUE(contains_point(steep, 0, -1, 0.05));
}

TEST(InverseTail, RoundTrip)
{
    for (auto const& f : {TrawlFunction::exponential(1.5), TrawlFunction::long_memory(0.5, 1.5),
                          pointwise_exp(), TrawlFunction::triangle(-2)})
        for (double m : {1e-6, 0.01, 0.3, 0.9})
        {
            double t = f.inverse_tail(m * f.total_area());
            EXPECT_NEAR(f.tail_integral(t), m * f.total_area(), 1e-9 * f.total_area())
                << f.name();
        }
}

TEST(Tabulated, FromCsv)
{
    std::string path = ::testing::TempDir() + "trawl_table.csv";
    {
        std::ofstream out(path);
        out << "t,phi\n-2,0\n-1,0.5\n0,1\n";
    }
    auto f = TrawlFunction::from_csv(path);
    EXPECT_NEAR(f.total_area(), 0.25 + 0.75, 1e-15);
    EXPECT_NEAR(f(-0.5), 0.75, 1e-15);
    EXPECT_NEAR(f.integral(-1.5, -0.5), 0.1875 + 0.3125, 1e-15);
    {
        std::ofstream out(path);
        out << "t,phi\n-2,1\n-1,0.5\n0,1\n";
    }
    EXPECT_THROW(TrawlFunction::from_csv(path), ConfigError);
}
