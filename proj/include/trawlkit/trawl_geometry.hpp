// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/trawl_geometry.hpp
//! Trawl functions, areas, autocorrelation and slice plans.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "errors.hpp"
#include "quadrature.hpp"

namespace trawlkit
{
/*!
 * Nondecreasing phi on (-inf, 0] bounding the trawl set from above.
 *
 * The antiderivative, when given, is normalised so that Phi(-inf) = 0.
 */
class TrawlFunction
{
  public:
    using Fn = std::function<double(double)>;

    TrawlFunction(Fn phi, std::optional<double> support = {}, Fn antiderivative = {},
                  std::string name = "custom")
        : phi_(std::move(phi))
        , support_(support)
        , Phi_(std::move(antiderivative))
        , name_(std::move(name))
        , cache_(std::make_shared<Cache>())
    {
        TRAWLKIT_REQUIRE(phi_, "trawl function is empty");
        if (support_)
            TRAWLKIT_REQUIRE(*support_ < 0, "trawl support bound must be negative");
        double p0 = phi_(0);
        TRAWLKIT_REQUIRE(std::isfinite(p0) && p0 > 0, "trawl function needs 0 < phi(0) < inf");
    }

    static TrawlFunction exponential(double lambda)
    {
        TRAWLKIT_REQUIRE(lambda > 0, "exponential trawl needs lambda > 0");
        TrawlFunction f([lambda](double t) { return lambda * std::exp(lambda * t); }, {},
                        [lambda](double t) { return std::exp(lambda * t); },
                        "exponential(lambda=" + num(lambda) + ")");
        f.inv_tail_ = [lambda](double m) { return std::log(m) / lambda; };
        f.inv_phi_ = [lambda](double x) { return std::log(x / lambda) / lambda; };
        return f;
    }
    static TrawlFunction long_memory(double c, double H)
    {
        TRAWLKIT_REQUIRE(c > 0 && H > 1, "long_memory trawl needs c > 0 and H > 1");
        TrawlFunction f([c, H](double t) { return c * std::pow(1 - t, -H); }, {},
                        [c, H](double t) { return c / (H - 1) * std::pow(1 - t, 1 - H); },
                        "long_memory(c=" + num(c) + ",H=" + num(H) + ")");
        f.inv_tail_ = [c, H](double m) { return 1 - std::pow(m * (H - 1) / c, 1 / (1 - H)); };
        f.inv_phi_ = [c, H](double x) { return 1 - std::pow(x / c, -1 / H); };
        return f;
    }
    //! phi(t) = 1 - t/T on [T, 0]
    static TrawlFunction triangle(double T)
    {
        TRAWLKIT_REQUIRE(T < 0, "triangle trawl needs T < 0");
        TrawlFunction f([T](double t) { return t < T ? 0.0 : 1 - t / T; }, T,
                        [T](double t) {
                            if (t <= T)
                                return 0.0;
                            return t - t * t / (2 * T) - T / 2;
                        },
                        "triangle(T=" + num(T) + ")");
        f.inv_phi_ = [T](double x) { return T * (1 - x); };
        return f;
    }
    //! phi = 1 on [T, 0]
    static TrawlFunction rectangle(double T)
    {
        TRAWLKIT_REQUIRE(T < 0, "rectangle trawl needs T < 0");
        TrawlFunction f([T](double t) { return t < T ? 0.0 : 1.0; }, T,
                        [T](double t) { return t <= T ? 0.0 : t - T; },
                        "rectangle(T=" + num(T) + ")");
        f.inv_phi_ = [T](double) { return T; };
        return f;
    }
    //! Piecewise-linear phi through (t_i, phi_i); zero before the first knot
    static TrawlFunction tabulated(std::vector<double> t, std::vector<double> v,
                                   std::string name = "tabulated")
    {
        TRAWLKIT_REQUIRE(t.size() == v.size() && t.size() >= 2,
                         "tabulated trawl needs at least two (t, phi) pairs");
        for (std::size_t i = 0; i < t.size(); ++i)
        {
            TRAWLKIT_REQUIRE(std::isfinite(t[i]) && std::isfinite(v[i]) && v[i] >= 0,
                             "tabulated trawl values must be finite and nonnegative");
            if (i > 0)
            {
                TRAWLKIT_REQUIRE(t[i] > t[i - 1], "tabulated times must increase");
                TRAWLKIT_REQUIRE(v[i] >= v[i - 1],
                                 "tabulated trawl must be nondecreasing in time");
            }
        }
        TRAWLKIT_REQUIRE(t.back() == 0, "tabulated trawl must end at t = 0");
        TRAWLKIT_REQUIRE(t.front() < 0, "tabulated trawl must start before 0");
        std::vector<double> cum(t.size(), 0);
        for (std::size_t i = 1; i < t.size(); ++i)
            cum[i] = cum[i - 1] + 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
        auto phi = [t, v](double s) {
            if (s < t.front() || s > 0)
                return 0.0;
            auto it = std::upper_bound(t.begin(), t.end(), s);
            if (it == t.end())
                return v.back();
            std::size_t i = it - t.begin();
            double w = (s - t[i - 1]) / (t[i] - t[i - 1]);
            return v[i - 1] + w * (v[i] - v[i - 1]);
        };
        auto Phi = [t, v, cum](double s) {
            if (s <= t.front())
                return 0.0;
            s = std::min(s, 0.0);
            auto it = std::upper_bound(t.begin(), t.end(), s);
            std::size_t i = std::min<std::size_t>(it - t.begin(), t.size() - 1);
            double h = s - t[i - 1];
            double slope = (v[i] - v[i - 1]) / (t[i] - t[i - 1]);
            return cum[i - 1] + v[i - 1] * h + 0.5 * slope * h * h;
        };
        return TrawlFunction(phi, t.front(), Phi, std::move(name));
    }
    //! Two-column CSV: time,phi (header lines starting with a letter or '#' skipped)
    static TrawlFunction from_csv(std::string const& path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open trawl table '" + path + "'");
        std::vector<double> t, v;
        std::string line;
        while (std::getline(in, line))
        {
            if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0])))
                continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ss(line);
            double a, b;
            if (!(ss >> a >> b))
                throw ConfigError("malformed line in trawl table: " + line);
            t.push_back(a);
            v.push_back(b);
        }
        return tabulated(std::move(t), std::move(v), "csv(" + path + ")");
    }

    //! phi(t); zero for t > 0 and before the support bound
    double operator()(double t) const
    {
        if (t > 0 || (support_ && t < *support_))
            return 0;
        return phi_(t);
    }
    double phi0() const { return phi_(0); }
    std::optional<double> support_bound() const { return support_; }
    bool bounded() const { return support_.has_value(); }
    bool has_antiderivative() const { return static_cast<bool>(Phi_); }
    std::string const& name() const { return name_; }

    //! int_{-inf}^{b} phi
    double tail_integral(double b) const
    {
        b = std::min(b, 0.0);
        if (Phi_)
            return Phi_(b);
        if (support_)
            return b <= *support_ ? 0.0 : integrate(phi_, *support_, b, 1e-13).value;
        check_decay();
        return integrate_lower_tail(phi_, b, 1e-13).value;
    }

    //! int_a^b phi over a <= b <= 0
    double integral(double a, double b) const
    {
        TRAWLKIT_REQUIRE(a <= b, "band integral needs a <= b");
        b = std::min(b, 0.0);
        a = std::min(a, b);
        if (std::isinf(a))
            return tail_integral(b);
        if (Phi_)
            return Phi_(b) - Phi_(a);
        if (support_)
        {
            a = std::max(a, *support_);
            if (a >= b)
                return 0;
        }
        return integrate(phi_, a, b, 1e-13).value;
    }

    //! Leb(A)
    double total_area() const
    {
        std::call_once(cache_->once, [this] {
            double v = tail_integral(0);
            if (!(std::isfinite(v) && v > 0))
                throw ConfigError("trawl set has no finite positive area");
            cache_->area = v;
        });
        return cache_->area;
    }

    //! t with int_{-inf}^t phi = m, for 0 < m <= total_area
    double inverse_tail(double m) const
    {
        double A = total_area();
        TRAWLKIT_REQUIRE(m > 0 && m <= A * (1 + 1e-12), "inverse_tail mass out of range");
        if (inv_tail_)
            return std::min(inv_tail_(m), 0.0);
        double hi = 0;
        double lo = support_ ? *support_ : -1.0;
        while (!support_ && tail_integral(lo) > m)
            lo *= 2;
        auto f = [&](double t) { return tail_integral(t) - m; };
        std::uintmax_t iters = 200;
        auto r = boost::math::tools::toms748_solve(
            f, lo, hi, f(lo), f(hi), boost::math::tools::eps_tolerance<double>(40), iters);
        return 0.5 * (r.first + r.second);
    }

    //! The time at which phi reaches height x, 0 < x < phi(0)
    double inverse_phi(double x) const
    {
        TRAWLKIT_REQUIRE(x > 0 && x < phi0(), "inverse_phi height out of range");
        if (inv_phi_)
            return inv_phi_(x);
        double hi = 0;
        double lo = support_ ? *support_ : -1.0;
        while ((*this)(lo) > x)
            lo *= 2;
        for (int i = 0; i < 200 && hi - lo > 1e-13 * (1 + std::abs(lo)); ++i)
        {
            double mid = 0.5 * (lo + hi);
            ((*this)(mid) > x ? hi : lo) = mid;
        }
        return 0.5 * (lo + hi);
    }

  private:
    struct Cache
    {
        std::once_flag once;
        double area{0};
    };

    Fn phi_;
    std::optional<double> support_;
    Fn Phi_;
    std::string name_;
    std::shared_ptr<Cache> cache_;
    Fn inv_tail_, inv_phi_;

    static std::string num(double x)
    {
        std::ostringstream os;
        os.precision(17);
        os << x;
        return os.str();
    }

    void check_decay() const
    {
        double near = 1e6 * phi_(-1e6);
        double far = 1e12 * phi_(-1e12);
        if (far > 0 && far >= 0.5 * near)
            throw ConfigError("trawl function tail does not decay fast enough to integrate");
    }
};

//! rho(h) = Leb(A cap A_h) / Leb(A) = int_{-inf}^{-h} phi / int_{-inf}^0 phi
inline double autocorrelation(TrawlFunction const& trawl, double h)
{
    TRAWLKIT_REQUIRE(h >= 0, "autocorrelation lag must be nonnegative");
    if (h == 0)
        return 1;
    if (auto T = trawl.support_bound(); T && h >= -*T)
        return 0;
    return trawl.tail_integral(-h) / trawl.total_area();
}

//! Is (s, x) in the trawl set A_t?
inline bool contains_point(TrawlFunction const& trawl, double t, double s, double x)
{
    return s <= t && x > 0 && x < trawl(s - t);
}

/*!
 * Slice areas for equidistant trawls at tau, 2 tau, ..., k tau.
 *
 * Slice (i, j) belongs to exactly the trawls j, ..., j + i - 1 (1-based).
 */
struct SlicePlan
{
    enum class Mode
    {
        bounded,
        unbounded
    };

    Mode mode{Mode::bounded};
    double tau{0};
    std::size_t k{0};
    std::size_t I{0};          //!< rows of the slice matrix
    std::vector<double> s1;    //!< bounded: first column areas s_{i1}
    std::vector<double> s2;    //!< bounded: areas s_{i2} of later columns
    std::vector<double> a;     //!< unbounded: a_1..a_k
    double total_area{0};
    std::optional<std::size_t> n_trunc;

    std::size_t rows() const { return I; }
    std::size_t cols() const { return k; }
    //! Number of nonzero-pattern columns in row i (1-based)
    std::size_t row_length(std::size_t i) const
    {
        return mode == Mode::bounded ? k : k - i + 1;
    }

    //! Area of slice (i, j), 1-based; zero outside the pattern
    double area(std::size_t i, std::size_t j) const
    {
        if (i < 1 || i > I || j < 1 || j > row_length(i))
            return 0;
        if (mode == Mode::bounded)
            return j == 1 ? s1[i - 1] : s2[i - 1];
        if (i == k)
            return a[k - 1];
        if (j == 1 || j == k - i + 1)
            return a[i - 1];
        double v = a[i - 1] - a[i];
        return v < 1e-14 * total_area ? 0.0 : v;
    }

    //! Sum of areas of slices containing trawl l (1-based)
    double trawl_area(std::size_t l, std::size_t max_row = 0) const
    {
        std::size_t top = max_row ? std::min(max_row, I) : I;
        double s = 0;
        for (std::size_t i = 1; i <= top; ++i)
        {
            std::size_t jlo = l >= i ? l - i + 1 : 1;
            for (std::size_t j = jlo; j <= l; ++j)
                s += area(i, j);
        }
        return s;
    }
};

namespace detail
{
inline void guard_small(std::vector<double>& v, double total)
{
    for (auto& x : v)
        if (x < 1e-14 * total)
            x = 0;
}
}  // namespace detail

inline SlicePlan slice_areas_bounded(TrawlFunction const& trawl, double tau, std::size_t k)
{
    TRAWLKIT_REQUIRE(tau > 0, "trawl spacing tau must be positive");
    TRAWLKIT_REQUIRE(k >= 1, "need at least one trawl");
    auto T = trawl.support_bound();
    if (!T)
        throw ConfigError("bounded slice plan needs a trawl with a support bound");
    SlicePlan p;
    p.mode = SlicePlan::Mode::bounded;
    p.tau = tau;
    p.k = k;
    p.I = static_cast<std::size_t>(std::ceil(-*T / tau - 1e-12));
    p.I = std::max<std::size_t>(p.I, 1);
    p.total_area = trawl.total_area();
    p.s1.resize(p.I);
    p.s2.resize(p.I);
    for (std::size_t i = 1; i <= p.I; ++i)
        p.s1[i - 1] = trawl.integral(-double(i) * tau, -double(i - 1) * tau);
    for (std::size_t i = 1; i <= p.I; ++i)
        p.s2[i - 1] = p.s1[i - 1] - (i < p.I ? p.s1[i] : 0.0);
    detail::guard_small(p.s1, p.total_area);
    detail::guard_small(p.s2, p.total_area);
    double sum = 0;
    for (double s : p.s1)
        sum += s;
    if (std::abs(sum - p.total_area) > 1e-9 * p.total_area)
        throw NumericError("bounded slice areas do not reconstruct the trawl area");
    return p;
}

inline SlicePlan slice_areas_unbounded(TrawlFunction const& trawl, double tau, std::size_t k)
{
    TRAWLKIT_REQUIRE(tau > 0, "trawl spacing tau must be positive");
    TRAWLKIT_REQUIRE(k >= 1, "need at least one trawl");
    SlicePlan p;
    p.mode = SlicePlan::Mode::unbounded;
    p.tau = tau;
    p.k = k;
    p.I = k;
    p.total_area = trawl.total_area();
    p.a.resize(k);
    // tail values F_i = int_{-inf}^{-i tau} phi, then bands as differences
    std::vector<double> tail(k + 1);
    tail[0] = p.total_area;
    for (std::size_t i = 1; i <= k; ++i)
        tail[i] = trawl.tail_integral(-double(i) * tau);
    for (std::size_t i = 1; i < k; ++i)
        p.a[i - 1] = trawl.has_antiderivative()
                         ? tail[i - 1] - tail[i]
                         : trawl.integral(-double(i) * tau, -double(i - 1) * tau);
    p.a[k - 1] = tail[k - 1];
    detail::guard_small(p.a, p.total_area);
    return p;
}

}  // namespace trawlkit
