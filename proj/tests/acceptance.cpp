// SPDX-License-Identifier: Apache-2.0
//! \file tests/acceptance.cpp
//! Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
//! Arguments select criteria by number; none runs all. Exit status is 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <boost/math/distributions/gamma.hpp>

#include "trawlkit/trawlkit.hpp"

using namespace trawlkit;

namespace
{
struct Verdict
{
    bool pass{false};
    std::string detail;
};

std::string fmt(double v, int prec = 4)
{
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

struct ThreadsEnv
{
    explicit ThreadsEnv(char const* n)
    {
        if (char const* old = std::getenv("TRAWLKIT_THREADS"))
            saved = old;
        setenv("TRAWLKIT_THREADS", n, 1);
    }
    ~ThreadsEnv()
    {
        if (saved.empty())
            unsetenv("TRAWLKIT_THREADS");
        else
            setenv("TRAWLKIT_THREADS", saved.c_str(), 1);
    }
    std::string saved;
};

//---------------------------------------------------------------------------//

Verdict c1_exactness()
{
    auto A = TrawlFunction::exponential(1);
    std::vector<std::pair<std::string, LevySeed>> seeds{{"gaussian(0,1)", Gaussian{0, 1}},
                                                        {"gamma(2,3)", Gamma{2, 3}},
                                                        {"poisson(5)", Poisson{5}},
                                                        {"cauchy(1)", Cauchy{1}}};
    Verdict v{true, ""};
    RngStream const root(101);
    for (std::size_t s = 0; s < seeds.size(); ++s)
    {
        std::vector<double> x(10000);
        RngStream const level = root.split(s);
        parallel_for(x.size(), [&](std::size_t r) {
            RngStream rng = level.split(r);
            x[r] = simulate_slice(A, seeds[s].second, 4, 0.5, {}, rng).values.back();
        });
        auto t = distribution_tests(x, reference_law(seeds[s].second, A.total_area()));
        bool ok = t.pvalue > 1e-3;
        v.pass = v.pass && ok;
        v.detail += seeds[s].first + " p=" + fmt(t.pvalue, 3) + (ok ? "" : " (reject)") + "; ";
    }
    return v;
}

Verdict c2_acf()
{
    Verdict v{true, ""};
    auto e = acf_experiment(TrawlFunction::exponential(1), Gaussian{0, 1}, 0.5, 1000, 500, 5, 202);
    double worst = 0;
    for (std::size_t h = 0; h < 5; ++h)
        worst = std::max(worst, std::abs(e.mean[h] - std::exp(-0.5 * double(h + 1))));
    v.pass = worst < 0.02;
    v.detail = "exponential max|mean-e^{-h tau}|=" + fmt(worst, 3) + " (< 0.02)";
    auto lm = TrawlFunction::long_memory(0.5, 1.5);
    auto f = acf_experiment(lm, Gaussian{0, 1}, 0.5, 5000, 500, 5, 203);
    double worst_lm = 0;
    for (std::size_t h = 0; h < 5; ++h)
        worst_lm = std::max(worst_lm, std::abs(f.mean[h] - f.theory[h]));
    v.pass = v.pass && worst_lm < 0.04;
    v.detail += "; long_memory(0.5,1.5) 500 runs x 5000 max dev=" + fmt(worst_lm, 3) + " (< 0.04)";
    return v;
}

Verdict c3_grid_ratio()
{
    auto trawl = TrawlFunction::long_memory(0.5, 1.5);
    Verdict v{true, ""};
    RngStream const root(303);
    std::size_t const R = 10000;
    double const total = trawl.total_area();
    int level = 0;
    for (double d : {0.1, 0.05, 0.025})
    {
        auto cfg = GridConfig::from_steps(trawl, d, 1, d, d, -1 / std::sqrt(d));
        RngStream const lv = root.split(std::uint64_t(level++));
        std::vector<double> x(R);
        parallel_for(R, [&](std::size_t r) {
            RngStream rng = lv.split(r);
            x[r] = simulate_grid(trawl, Gaussian{0, 1}, cfg, rng)[0];
        });
        auto s = summarize(x);
        double ratio = s.var / total, se = s.se_var / total;
        double theory = included_area(trawl, cfg) / total;
        bool ok = std::abs(ratio - theory) <= 4 * se;
        v.pass = v.pass && ok;
        v.detail += "D=" + fmt(d) + " ratio=" + fmt(ratio) + " theory=" + fmt(theory) +
                    " z=" + fmt((ratio - theory) / se, 2) + "; ";
    }
    return v;
}

Verdict c4_grid_rate()
{
    auto tri = TrawlFunction::triangle(-1);
    std::vector<double> ds{0.1, 0.05, 0.025, 0.0125}, def;
    for (double d : ds)
        def.push_back(tri.total_area() -
                      included_area(tri, GridConfig::from_steps(tri, d, 1, d, d, -1)));
    double slope = loglog_slope(ds, def);
    auto rep = grid_convergence(tri, Gaussian{0, 1}, ds, -1, 2000, 404);
    Verdict v;
    v.pass = slope >= 1.9 && slope <= 2.1;
    v.detail = "area-deficit slope=" + fmt(slope) + ", variance-deficit slope=" +
               fmt(rep.empirical_slope, 3) + " (required [1.9, 2.1])";
    return v;
}

Verdict c5_cpp_mse()
{
    DensityMeasure m;
    m.density = [](double y) { return y > 0 ? 2 / y * std::exp(-3 * y) : 0.0; };
    m.finite_variation = true;
    auto rep = cpp_convergence(TrawlFunction::exponential(1), m, {0.02, 0.01, 0.005}, 10000, 505);
    Verdict v{true, ""};
    for (auto const& r : rep.rows)
    {
        double ratio = r.empirical / r.theory;
        bool ok = ratio >= 0.8 && ratio <= 1.2;
        v.pass = v.pass && ok;
        v.detail += "eps=" + fmt(r.parameter) + " ratio=" + fmt(ratio, 3) + "; ";
    }
    return v;
}

Verdict c6_fast_convolution()
{
    RngStream rng(606);
    auto uniform_int = [&](std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    };
    int identical = 0, counts = 0;
    std::string example;
    for (int n = 0; n < 100; ++n)
    {
        std::size_t I = 1 + uniform_int(12);
        std::size_t k = I + uniform_int(40);
        Matrix Y(I, k);
        for (Eigen::Index i = 0; i < Y.rows(); ++i)
            for (Eigen::Index j = 0; j < Y.cols(); ++j)
                Y(i, j) = double(uniform_int(2001)) - 1000;
        ConvolutionCount c;
        auto fast = fast_convolution(Y, &c);
        auto naive = naive_convolution(pad_slices(Y), slice_filter(I));
        identical += fast == naive;
        double stated = 2.0 * double(I * k) - double(I * I) / 2 - double(I) / 2;
        bool match = double(c.total()) == stated;
        counts += match;
        if (!match && example.empty())
            example = "I=" + std::to_string(I) + ",k=" + std::to_string(k) + ": counted " +
                      std::to_string(c.total()) + ", stated " + fmt(stated, 10);
    }
    Verdict v;
    v.pass = identical == 100 && counts == 100;
    v.detail = "bit-identical " + std::to_string(identical) + "/100; addition count matches " +
               std::to_string(counts) + "/100" + (example.empty() ? "" : " (" + example + ")");
    return v;
}

Verdict c7_ambit()
{
    auto rect = TrawlFunction::rectangle(-1);
    RngStream rng(707);
    auto tab = slice_estimation(rect, 0.5, 0.5, 1000000, rng);
    bool slices_ok = tab.entries.size() == 4;
    std::string keys;
    for (auto const& e : tab.entries)
    {
        slices_ok = slices_ok && std::abs(e.area - 0.25) <= 3 * e.se;
        keys += e.key.bits() + ":" + fmt(e.area) + " ";
    }

    Gamma seed{2, 3};
    std::size_t const R = 40, n = 100;
    struct Lag
    {
        double dt, dx;
        long ct, rs;
    };
    std::vector<Lag> lags{{0, 0, 0, 0}, {0.5, 0, 1, 0}, {0, 0.5, 0, 1}, {0.5, 0.5, 1, 1}};
    std::vector<std::vector<double>> cov(lags.size(), std::vector<double>(R));
    std::vector<std::vector<double>> qmean(4, std::vector<double>(R)), qvar(4, std::vector<double>(R));
    for (std::size_t r = 0; r < R; ++r)
    {
        Field f = slice_partition_field(tab, seed, n, n, rng);
        double m = f.mean();
        for (std::size_t g = 0; g < lags.size(); ++g)
        {
            double s = 0;
            long cnt = 0;
            for (long i = 0; i + lags[g].rs < long(n); ++i)
                for (long j = 0; j + lags[g].ct < long(n); ++j, ++cnt)
                    s += (f(i, j) - m) * (f(i + lags[g].rs, j + lags[g].ct) - m);
            cov[g][r] = s / double(cnt);
        }
        for (int q = 0; q < 4; ++q)
        {
            auto b = f.block((q / 2) * 50, (q % 2) * 50, 50, 50);
            qmean[q][r] = b.mean();
            qvar[q][r] = (b.array() - b.mean()).square().sum() / (50.0 * 50 - 1);
        }
    }
    bool cov_ok = true;
    std::string cdet;
    for (std::size_t g = 0; g < lags.size(); ++g)
    {
        auto s = summarize(cov[g]);
        double th = field_autocovariance(rect, seed, lags[g].dt, lags[g].dx);
        bool ok = std::abs(s.mean - th) <= 4 * s.se_mean;
        cov_ok = cov_ok && ok;
        cdet += "(" + fmt(lags[g].dt) + "," + fmt(lags[g].dx) + ") " + fmt(s.mean) + " vs " +
                fmt(th) + "; ";
    }
    bool stat_ok = true;
    for (int q = 1; q < 4; ++q)
    {
        std::vector<double> dm(R), dv(R);
        for (std::size_t r = 0; r < R; ++r)
        {
            dm[r] = qmean[q][r] - qmean[0][r];
            dv[r] = qvar[q][r] - qvar[0][r];
        }
        auto sm = summarize(dm), sv = summarize(dv);
        stat_ok = stat_ok && std::abs(sm.mean) <= 4 * sm.se_mean && std::abs(sv.mean) <= 4 * sv.se_mean;
    }
    Verdict v;
    v.pass = slices_ok && cov_ok && stat_ok;
    v.detail = "minimal slices " + std::to_string(tab.entries.size()) + " (required 4) [" + keys +
               "]; stationarity " + (stat_ok ? "ok" : "FAILED") + "; covariances " +
               (cov_ok ? "ok " : "FAILED ") + cdet;
    return v;
}

Verdict c8_gmm()
{
    GmmSpec spec;
    spec.tau = 0.15;
    std::vector<double> deltas{0.1, 0.075, 0.05, 0.025};
    std::vector<std::array<double, 3>> med;
    for (std::size_t d = 0; d <= deltas.size(); ++d)
    {
        double delta = d < deltas.size() ? deltas[d] : 0;
        auto e = gmm_experiment(2, 3, 1, 0.15, 1000, 1000, delta, spec, 808 + d);
        med.push_back({e.median_abs(e.k), e.median_abs(e.theta), e.median_abs(e.lambda)});
    }
    bool mono = true, dom = true;
    std::string det;
    char const* names[3] = {"k", "theta", "lambda"};
    for (int p = 0; p < 3; ++p)
    {
        det += std::string(names[p]) + ":";
        for (std::size_t d = 0; d < med.size(); ++d)
            det += " " + fmt(med[d][p], 3);
        det += "; ";
        for (std::size_t d = 1; d < deltas.size(); ++d)
            mono = mono && med[d][p] < med[d - 1][p];
        dom = dom && med.back()[p] <= med[deltas.size() - 1][p];
    }
    Verdict v;
    v.pass = mono && dom;
    v.detail = "medians over D=0.1,0.075,0.05,0.025,slice: " + det +
               (mono ? "monotone" : "NOT monotone") + ", " + (dom ? "slice dominates" : "slice does NOT dominate");
    return v;
}

Verdict c9_stable()
{
    auto s = SliceGeometry::rectangle(0, 1.5, 0, 0.4);
    double area = 0.6, worst = 0;
    for (Stable seed : {Stable{1.5, 0.3, 2, 0.7}, Stable{1, 0.4, 1.2, -0.3}, Stable{0.6, -1, 1, 0}})
    {
        auto r = stable_conditional_params(ConstantKernel{1}, nullptr, s, seed);
        auto m = stable_conditional_params(ConstantKernel{-1}, nullptr, s, seed);
        worst = std::max({worst, std::abs(r.alpha - seed.alpha), std::abs(r.beta - seed.beta),
                          std::abs(r.c - seed.c * std::pow(area, 1 / seed.alpha)),
                          std::abs(r.mu - seed.mu * area), std::abs(m.beta + seed.beta),
                          std::abs(m.c - r.c)});
    }
    Kernel K = SpaceTimeKernel{[](double t, double) { return 1 + 0.1 * t; }, true};
    auto vol = VolatilityPath::constant(1, 0, 10, 0.05);
    for (std::size_t i = 0; i < vol.size(); ++i)
        vol.sigma2[i] = 1 + 0.5 * std::sin(double(i));
    auto g = SliceGeometry::rectangle(1, 4, 0, 0.5);
    Stable seed{2, 0, 0.9, 1.3};
    auto p = stable_conditional_params(K, &vol, g, seed);
    auto gi = slice_kernel_integrals(K, &vol, g);
    double d2 = std::max(std::abs(p.c * p.c - seed.c * seed.c * gi.second),
                         std::abs(p.mu - seed.mu * gi.first));
    Verdict v;
    v.pass = worst <= 1e-12 && d2 <= 1e-10;
    v.detail = "constant-kernel identity max dev=" + fmt(worst, 3) +
               "; alpha=2 vs Gaussian integrals max dev=" + fmt(d2, 3);
    return v;
}

Verdict c10_vm()
{
    auto A = TrawlFunction::exponential(0.25);
    VolTrawlSpec spec{TrawlFunction::long_memory(0.5, 1.5), InverseGaussian{2, 1}, 0.05, -10};
    std::size_t const k = 250, R = 1000;
    VmSimulator vm(A, ConstantKernel{1}, spec, Gaussian{1, 1}, k, 0.5);
    std::vector<double> x(R), m(R), var(R);
    RngStream const root(1010);
    parallel_for(R, [&](std::size_t r) {
        RngStream rng = root.split(r);
        auto run = vm(rng);
        x[r] = run.x.values[k - 1];
        m[r] = run.x.cond_mean[k - 1];
        var[r] = run.x.cond_var[k - 1];
    });
    auto sx = summarize(x), sm = summarize(m), sv = summarize(var);
    double oracle = sv.mean + sm.var;
    double se = std::hypot(sx.se_var, std::hypot(sv.se_mean, sm.se_var));
    Verdict v;
    v.pass = std::abs(sx.var - oracle) <= 4 * se;
    v.detail = "Var X=" + fmt(sx.var) + " oracle E[var|s]+Var(mean|s)=" + fmt(oracle) +
               " z=" + fmt((sx.var - oracle) / se, 2);
    return v;
}

Verdict c11_inversion()
{
    auto expo = TransformSpec::from_laplace(
        [](std::complex<double> s) { return 1.0 / (1.0 + s); }, 0, 1.0, 1.0);
    double worst_u = 0, worst_x = 0;
    for (double u = 0.01; u < 0.995; u += 0.01)
    {
        double x = inverse_cdf_sample(expo, u);
        worst_u = std::max(worst_u, std::abs(-std::expm1(-x) - u));
        worst_x = std::max(worst_x, std::abs(x + std::log1p(-u)));
    }
    double const a = 1.37, th = 2;
    auto gam = TransformSpec::from_laplace(
        [a, th](std::complex<double> s) { return std::pow(1.0 + th * s, -a); }, 0, a * th,
        std::sqrt(a) * th);
    RngStream rng(1111);
    std::vector<double> x(10000);
    for (auto& v : x)
        v = inverse_cdf_sample(gam, rng.uniform());
    boost::math::gamma_distribution<> g(a, th);
    double D = ks_statistic(x, [&](double v) { return boost::math::cdf(g, v); });
    double p = ks_pvalue(D, x.size());
    Verdict v;
    v.pass = worst_u <= 1e-8 && p > 1e-3;
    v.detail = "exponential round trip |F(q(u))-u|<=" + fmt(worst_u, 3) + " (|x err|<=" +
               fmt(worst_x, 3) + "); Gamma(1.37,2) KS p=" + fmt(p, 3);
    return v;
}

std::string run_all_configs()
{
    std::string s;
    auto expo = TrawlFunction::exponential(1);
    {
        RngStream rng(42);
        s += time_series_csv(0.5, simulate_slice(expo, Gaussian{0, 1}, 300, 0.5, {}, rng).values);
    }
    {
        RngStream rng(43);
        auto tri = TrawlFunction::triangle(-2);
        s += time_series_csv(0.5, simulate_grid(tri, Gamma{2, 3},
                                                GridConfig::from_steps(tri, 0.5, 50, 0.1, 0.1, -2),
                                                rng));
    }
    {
        RngStream rng(44);
        auto run = simulate_trawl_full(expo, Gamma{2, 1}, 50, 0.5, rng, FullSimOptions{0.01, {}});
        s += time_series_csv(0.5, run.values);
    }
    {
        RngStream rng(45);
        VolTrawlSpec spec{TrawlFunction::long_memory(0.5, 1.5), InverseGaussian{2, 1}, 0.1, -10};
        auto run = simulate_vm_trawl(TrawlFunction::exponential(0.25),
                                     TimeShiftedKernel::exponential(1), spec, Gaussian{1, 1}, 40,
                                     0.5, rng);
        s += time_series_csv(0.5, run.x.values, &run.vol.sigma2);
    }
    {
        RngStream rng(46);
        auto tab = slice_estimation(TrawlFunction::triangle(-1), 0.2, 0.2, 300000, rng);
        std::ostringstream os;
        write_table_csv(tab, os);
        s += os.str();
        auto f = slice_partition_field(tab, Gamma{2, 3}, 20, 20, rng);
        for (Eigen::Index i = 0; i < f.size(); ++i)
            s += format_double(f.data()[i]) + "\n";
    }
    {
        auto e = acf_experiment(expo, Gamma{2, 3}, 0.5, 200, 20, 3, 47);
        for (double m : e.mean)
            s += format_double(m) + "\n";
    }
    return s;
}

Verdict c12_determinism()
{
    std::string a, b, c;
    {
        ThreadsEnv t("1");
        a = run_all_configs();
        b = run_all_configs();
    }
    {
        ThreadsEnv t("4");
        c = run_all_configs();
    }
    Verdict v;
    v.pass = a == b && a == c;
    v.detail = std::string("rerun ") + (a == b ? "identical" : "DIFFERS") + ", 1 vs 4 threads " +
               (a == c ? "identical" : "DIFFERS") + " (" + std::to_string(a.size()) + " bytes)";
    return v;
}

}  // namespace

int main(int argc, char** argv)
{
    std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"slice partition exactness", c1_exactness},
        {"ACF reproduction", c2_acf},
        {"grid variance ratio", c3_grid_ratio},
        {"grid convergence rate", c4_grid_rate},
        {"CPP truncation MSE", c5_cpp_mse},
        {"fast convolution", c6_fast_convolution},
        {"ambit slice estimation and field", c7_ambit},
        {"GMM recovery", c8_gmm},
        {"stable conditional parameters", c9_stable},
        {"volatility modulation", c10_vm},
        {"inversion sampler", c11_inversion},
        {"determinism", c12_determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        int n = int(i + 1);
        if (!only.empty() && !only.count(n))
            continue;
        auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try
        {
            v = criteria[i].second();
        }
        catch (std::exception const& e)
        {
            v = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !v.pass;
        std::cout << "criterion " << n << " " << (v.pass ? "PASS" : "FAIL") << " ["
                  << criteria[i].first << ", " << fmt(secs, 3) << " s]: " << v.detail << std::endl;
    }
    return failed ? 1 : 0;
}
