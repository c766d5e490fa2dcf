// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/stats.hpp
//! Sample statistics, goodness-of-fit tests and moment-matching estimators.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include <boost/math/distributions/cauchy.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/inverse_gaussian.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "errors.hpp"
#include "levy.hpp"
#include "numeric_inversion.hpp"

namespace trawlkit
{
struct Summary
{
    std::size_t n{0};
    double mean{0};
    double var{0};      //!< unbiased
    double se_mean{0};
    double se_var{0};   //!< from the fourth central moment
};

inline Summary summarize(std::vector<double> const& x)
{
    Summary s;
    s.n = x.size();
    if (s.n < 2)
        throw ConfigError("summary needs at least two values");
    double m = 0;
    for (double v : x)
        m += v;
    m /= s.n;
    double m2 = 0, m4 = 0;
    for (double v : x)
    {
        double d = (v - m) * (v - m);
        m2 += d;
        m4 += d * d;
    }
    s.mean = m;
    s.var = m2 / (s.n - 1);
    m2 /= s.n;
    m4 /= s.n;
    s.se_mean = std::sqrt(s.var / s.n);
    s.se_var = std::sqrt(std::max(m4 - m2 * m2, 0.0) / s.n);
    return s;
}

//! Biased sample autocorrelations r(1..max_lag); nullopt for a constant series
inline std::optional<std::vector<double>> empirical_acf(std::vector<double> const& x,
                                                        std::size_t max_lag)
{
    std::size_t n = x.size();
    TRAWLKIT_REQUIRE(n > max_lag + 1, "series too short for the requested lags");
    double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double c0 = 0;
    for (double v : x)
        c0 += (v - m) * (v - m);
    if (!(c0 > 0))
        return std::nullopt;
    std::vector<double> r(max_lag);
    for (std::size_t h = 1; h <= max_lag; ++h)
    {
        double c = 0;
        for (std::size_t t = 0; t + h < n; ++t)
            c += (x[t] - m) * (x[t + h] - m);
        r[h - 1] = c / c0;
    }
    return r;
}

//---------------------------------------------------------------------------//
// Goodness of fit

//! Kolmogorov-Smirnov distance between samples and a continuous CDF
inline double ks_statistic(std::vector<double> x, std::function<double(double)> const& cdf)
{
    TRAWLKIT_REQUIRE(!x.empty(), "KS test needs samples");
    std::sort(x.begin(), x.end());
    double n = x.size(), D = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        double F = cdf(x[i]);
        D = std::max({D, (i + 1) / n - F, F - i / n});
    }
    return D;
}

//! Asymptotic p-value with the Stephens small-sample correction
inline double ks_pvalue(double D, std::size_t n)
{
    double sn = std::sqrt(double(n));
    double lam = (sn + 0.12 + 0.11 / sn) * D;
    if (lam < 0.2)
        return 1;
    double p = 0;
    for (int k = 1; k <= 100; ++k)
    {
        double term = std::exp(-2.0 * k * k * lam * lam);
        p += (k % 2 ? 2 : -2) * term;
        if (term < 1e-16)
            break;
    }
    return std::clamp(p, 0.0, 1.0);
}

struct ChiSquareResult
{
    double statistic{0};
    std::size_t dof{0};
    double pvalue{1};
};

/*!
 * Pearson test of integer-valued samples against a pmf.
 *
 * Outcomes are pooled from both ends until each bin expects at least 5.
 */
inline ChiSquareResult chi_square_discrete(std::vector<double> const& x,
                                           std::function<double(long)> const& pmf)
{
    TRAWLKIT_REQUIRE(!x.empty(), "chi-square test needs samples");
    std::map<long, double> counts;
    long lo = std::numeric_limits<long>::max(), hi = std::numeric_limits<long>::min();
    for (double v : x)
    {
        long k = std::lround(v);
        TRAWLKIT_REQUIRE(std::abs(v - k) < 1e-9, "chi-square test needs integer samples");
        counts[k] += 1;
        lo = std::min(lo, k);
        hi = std::max(hi, k);
    }
    double n = x.size();
    std::vector<double> expct, obs;
    double left = 0;
    for (long k = lo - 1, c = 0; c < 100000; --k, ++c)
    {
        double p = pmf(k);
        left += p;
        if (p < 1e-18 && c > 50)
            break;
    }
    double inside = 0;
    for (long k = lo; k <= hi; ++k)
    {
        double p = pmf(k);
        inside += p;
        expct.push_back(n * p);
        obs.push_back(counts.count(k) ? counts[k] : 0.0);
    }
    expct.front() += n * left;
    expct.back() += n * std::max(0.0, 1 - left - inside);
    std::vector<double> eo, ee;
    double co = 0, ce = 0;
    for (std::size_t i = 0; i < expct.size(); ++i)
    {
        co += obs[i];
        ce += expct[i];
        if (ce >= 5)
        {
            eo.push_back(co);
            ee.push_back(ce);
            co = ce = 0;
        }
    }
    if (ee.empty())
    {
        eo.push_back(co);
        ee.push_back(ce);
    }
    else
    {
        eo.back() += co;
        ee.back() += ce;
    }
    obs = eo;
    expct = ee;
    ChiSquareResult r;
    for (std::size_t i = 0; i < obs.size(); ++i)
        r.statistic += (obs[i] - expct[i]) * (obs[i] - expct[i]) / expct[i];
    r.dof = obs.size() > 1 ? obs.size() - 1 : 1;
    r.pvalue = boost::math::cdf(
        boost::math::complement(boost::math::chi_squared(double(r.dof)), r.statistic));
    return r;
}

//! A law to test samples against
struct ReferenceLaw
{
    std::function<double(double)> cdf;
    std::function<double(long)> pmf;   //!< set for integer-valued laws
    std::optional<std::array<double, 4>> raw_moments;
};

inline ReferenceLaw reference_law(LevySeed const& seed, double area)
{
    namespace bm = boost::math;
    LevySeed s = scale_seed(seed, area);
    ReferenceLaw r;
    auto moments_from = [](double m, double v, double skew, double exkurt) {
        double sd = std::sqrt(v);
        double m3c = skew * v * sd, m4c = (exkurt + 3) * v * v;
        std::array<double, 4> raw;
        raw[0] = m;
        raw[1] = v + m * m;
        raw[2] = m3c + 3 * m * v + m * m * m;
        raw[3] = m4c + 4 * m * m3c + 6 * m * m * v + m * m * m * m;
        return raw;
    };
    std::visit(
        [&](auto const& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Gaussian>)
            {
                double sd = std::sqrt(p.sigma2);
                r.cdf = [p, sd](double x) {
                    return sd > 0 ? bm::cdf(bm::normal(p.mu, sd), x) : double(x >= p.mu);
                };
                r.raw_moments = moments_from(p.mu, p.sigma2, 0, 0);
            }
            else if constexpr (std::is_same_v<T, Gamma>)
            {
                r.cdf = [p](double x) {
                    return x <= 0 ? 0.0 : bm::cdf(bm::gamma_distribution<>(p.shape, p.scale), x);
                };
                r.raw_moments = moments_from(p.shape * p.scale, p.shape * p.scale * p.scale,
                                             2 / std::sqrt(p.shape), 6 / p.shape);
            }
            else if constexpr (std::is_same_v<T, Cauchy>)
                r.cdf = [p](double x) { return bm::cdf(bm::cauchy(0, p.gamma), x); };
            else if constexpr (std::is_same_v<T, Poisson>)
            {
                r.pmf = [p](long k) {
                    return k < 0 ? 0.0 : bm::pdf(bm::poisson(p.nu), double(k));
                };
                r.cdf = [p](double x) {
                    return x < 0 ? 0.0 : bm::cdf(bm::poisson(p.nu), std::floor(x));
                };
                r.raw_moments = moments_from(p.nu, p.nu, 1 / std::sqrt(p.nu), 1 / p.nu);
            }
            else if constexpr (std::is_same_v<T, Skellam>)
            {
                r.pmf = [p](long k) {
                    double z = 2 * std::sqrt(p.mu1 * p.mu2);
                    return std::exp(-(p.mu1 + p.mu2) + 0.5 * k * std::log(p.mu1 / p.mu2)) *
                           bm::cyl_bessel_i(double(std::labs(k)), z);
                };
                double m = p.mu1 - p.mu2, v = p.mu1 + p.mu2;
                r.raw_moments = moments_from(m, v, m / (v * std::sqrt(v)), 1 / v);
            }
            else if constexpr (std::is_same_v<T, InverseGaussian>)
            {
                double mean = p.delta / p.gamma, shape = p.delta * p.delta;
                r.cdf = [mean, shape](double x) {
                    return x <= 0 ? 0.0 : bm::cdf(bm::inverse_gaussian(mean, shape), x);
                };
                double v = mean * mean * mean / shape;
                r.raw_moments = moments_from(mean, v, 3 * std::sqrt(mean / shape),
                                             15 * mean / shape);
            }
            else
            {
                LevySeed copy = p;
                auto mv = set_mean_var(copy, 1);
                std::optional<double> mean;
                if (mv.mean.is_finite())
                    mean = mv.mean.value();
                double scale = 1;
                if constexpr (std::is_same_v<T, Stable>)
                    scale = p.c;
                auto spec = std::make_shared<TransformSpec>(TransformSpec::from_cf(
                    [copy](double t) { return std::exp(seed_cumulant(copy, t)); }, mean, scale));
                if (spec->atoms.empty())
                {
                    auto tab = std::make_shared<TabulatedQuantile>(*spec, 1e-7, 14, 1e-4);
                    r.cdf = [tab](double x) { return tab->cdf(x); };
                }
                else
                    r.cdf = [spec](double x) { return eval_cdf_pdf(*spec, x).cdf; };
            }
        },
        s);
    return r;
}

struct DistributionTest
{
    double ks{0};
    double pvalue{1};
    std::array<std::optional<double>, 4> z;  //!< raw-moment z-scores
};

inline DistributionTest distribution_tests(std::vector<double> const& x, ReferenceLaw const& law)
{
    DistributionTest t;
    if (law.pmf)
    {
        auto c = chi_square_discrete(x, law.pmf);
        t.ks = c.statistic;
        t.pvalue = c.pvalue;
    }
    else
    {
        t.ks = ks_statistic(x, law.cdf);
        t.pvalue = ks_pvalue(t.ks, x.size());
    }
    if (law.raw_moments)
    {
        for (int r = 0; r < 4; ++r)
        {
            std::vector<double> p(x.size());
            for (std::size_t i = 0; i < x.size(); ++i)
                p[i] = std::pow(x[i], r + 1);
            auto s = summarize(p);
            if (s.se_mean > 0)
                t.z[r] = (s.mean - (*law.raw_moments)[r]) / s.se_mean;
        }
    }
    return t;
}

//---------------------------------------------------------------------------//
// Moment matching for the Gamma-seed exponential trawl

struct GmmSpec
{
    std::vector<std::size_t> lags{1, 3, 5};
    double tau{1};
};

struct GmmEstimate
{
    double k{0};
    double theta{0};
    double lambda{0};
};

//! Estimates from already computed statistics
inline GmmEstimate gmm_from_statistics(double mean, double var, std::vector<double> const& acf,
                                       GmmSpec const& spec)
{
    if (!(mean > 0) || !(var > 0))
        throw NumericError("moment estimates are not positive; Gamma fit refused");
    GmmEstimate e;
    e.theta = var / mean;
    e.k = mean * mean / var;
    double num = 0, den = 0;
    for (std::size_t h : spec.lags)
    {
        TRAWLKIT_REQUIRE(h >= 1 && h <= acf.size(), "GMM lag outside the computed ACF");
        double r = acf[h - 1];
        if (!(r > 0))
            continue;
        double x = h * spec.tau;
        num += -x * std::log(r);
        den += x * x;
    }
    if (!(den > 0))
        throw NumericError("no positive autocorrelations at the GMM lags");
    e.lambda = num / den;
    return e;
}

inline GmmEstimate gmm_estimate(std::vector<double> const& x, GmmSpec const& spec)
{
    TRAWLKIT_REQUIRE(!spec.lags.empty(), "GMM needs at least one lag");
    std::size_t max_lag = *std::max_element(spec.lags.begin(), spec.lags.end());
    auto s = summarize(x);
    double var_b = s.var * (s.n - 1) / s.n;
    auto acf = empirical_acf(x, max_lag);
    if (!acf)
        throw NumericError("constant series; GMM refused");
    return gmm_from_statistics(s.mean, var_b, *acf, spec);
}

//! Least-squares slope of log y against log x
inline double loglog_slope(std::vector<double> const& x, std::vector<double> const& y)
{
    TRAWLKIT_REQUIRE(x.size() == y.size() && x.size() >= 2, "slope fit needs two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

inline double median(std::vector<double> v)
{
    TRAWLKIT_REQUIRE(!v.empty(), "median of nothing");
    std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + m, v.end());
    double hi = v[m];
    if (v.size() % 2)
        return hi;
    double lo = *std::max_element(v.begin(), v.begin() + m);
    return 0.5 * (lo + hi);
}

}  // namespace trawlkit
