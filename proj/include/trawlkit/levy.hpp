// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/levy.hpp
//! Lévy seeds, cumulants, set-law samplers and the Lévy-Itô split.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "errors.hpp"
#include "numeric_inversion.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace trawlkit
{
using cplx = std::complex<double>;

//---------------------------------------------------------------------------//
//! A real that may be infinite or undefined, never NaN.
class ExtendedReal
{
  public:
    enum class Kind
    {
        finite,
        infinite,
        undefined
    };

    static ExtendedReal finite(double v) { return {Kind::finite, v}; }
    static ExtendedReal infinite() { return {Kind::infinite, 0}; }
    static ExtendedReal undefined() { return {Kind::undefined, 0}; }

    Kind kind() const { return kind_; }
    bool is_finite() const { return kind_ == Kind::finite; }
    double value() const
    {
        if (!is_finite())
            throw ConfigError(kind_ == Kind::infinite ? "moment is infinite"
                                                      : "moment is undefined");
        return v_;
    }
    ExtendedReal scaled(double a) const { return is_finite() ? finite(a * v_) : *this; }

  private:
    ExtendedReal(Kind k, double v) : kind_(k), v_(v) {}
    Kind kind_;
    double v_;
};

struct MeanVar
{
    ExtendedReal mean;
    ExtendedReal variance;
};

//---------------------------------------------------------------------------//
// Lévy measures

//! Finitely many atoms: jump sizes and their intensities
struct AtomicMeasure
{
    std::vector<Atom> atoms;
};

/*!
 * Density l'(y) on the real line minus the origin.
 *
 * Tails on each side of zero must be monotone in |y|. Named families attach
 * closed-form exponents so set laws avoid quadrature.
 */
struct DensityMeasure
{
    std::function<double(double)> density;
    bool positive{true};
    bool negative{false};
    //! int_{|y|<=1} |y| l(dy) < inf
    bool finite_variation{false};
    //! l(R) < inf
    bool finite_mass{false};
    std::vector<double> inflections;
    //! int (e^{i th y} - 1 - i th y 1{|y|<=1}) l(dy)
    std::function<cplx(double)> char_exponent;
    //! int (e^{-s y} - 1) l(dy) for one-sided finite-variation measures
    std::function<cplx(cplx)> laplace_exponent;
};

using LevyMeasureSpec = std::variant<AtomicMeasure, DensityMeasure>;

//---------------------------------------------------------------------------//
// Seeds

struct Poisson
{
    double nu;
};
struct Skellam
{
    double mu1, mu2;
};
struct Gaussian
{
    double mu, sigma2;
};
struct Cauchy
{
    double gamma;
};
struct Gamma
{
    double shape, scale;
};
struct InverseGaussian
{
    double delta, gamma;
};
struct Stable
{
    double alpha, beta, c, mu;
};
struct CustomTriplet
{
    double xi{0};
    double a{0};
    LevyMeasureSpec measure{AtomicMeasure{}};
};

using LevySeed = std::variant<Poisson, Skellam, Gaussian, Cauchy, Gamma, InverseGaussian,
                              Stable, CustomTriplet>;

namespace detail
{
constexpr double euler_gamma = 0.57721566490153286061;

inline double sgn(double x) { return (x > 0) - (x < 0); }

//! int_lo^hi g over a positive range; log-spaced below 1, mapped tail above
template<class G>
double positive_integral(G&& g, double lo, double hi, double tol = 1e-11)
{
    if (!(hi > lo))
        return 0;
    double total = 0;
    double const mid = std::clamp(1.0, lo, hi);
    if (lo < mid)
    {
        if (lo == 0)
        {
            static thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
            auto h = [&](double y) { return g(y); };
            total += ts.integrate(h, 0.0, mid, tol);
        }
        else
        {
            auto h = [&](double u) {
                double y = std::exp(u);
                return g(y) * y;
            };
            total += integrate(h, std::log(lo), std::log(mid), tol).value;
        }
    }
    if (hi > mid)
    {
        if (std::isinf(hi))
            total += integrate_upper_tail(g, mid, tol).value;
        else
            total += integrate(g, mid, hi, tol).value;
    }
    return total;
}

//! Integral of g(y) l(y) over {lo < |y| < hi} with sign-separated densities
template<class G>
double measure_integral(DensityMeasure const& m, G&& g, double lo, double hi)
{
    double total = 0;
    // points where the density overflows carry no representable mass
    auto term = [&](double y) {
        double gv = g(y);
        if (gv == 0)
            return 0.0;
        double l = m.density(y);
        return std::isfinite(l) && l != 0 ? gv * l : 0.0;
    };
    if (m.positive)
        total += positive_integral([&](double y) { return term(y); }, lo, hi);
    if (m.negative)
        total += positive_integral([&](double y) { return term(-y); }, lo, hi);
    return total;
}

//! int_1^inf (cos, sin)(th y) l(+-y) dy for th > 0, oscillatory tail quadrature
inline std::pair<double, double> fourier_tail(std::function<double(double)> const& l,
                                              double th)
{
    static thread_local boost::math::quadrature::ooura_fourier_cos<double> oc;
    static thread_local boost::math::quadrature::ooura_fourier_sin<double> os;
    auto f = [&](double u) {
        double v = l(u + 1);
        return std::isfinite(v) ? v : 0.0;
    };
    double C = oc.integrate(f, th).first;
    double S = os.integrate(f, th).first;
    double c = std::cos(th), s = std::sin(th);
    return {c * C - s * S, s * C + c * S};
}

inline void validate(Stable const& s)
{
    TRAWLKIT_REQUIRE(s.alpha > 0 && s.alpha <= 2, "stable alpha must lie in (0,2]");
    TRAWLKIT_REQUIRE(s.beta >= -1 && s.beta <= 1, "stable beta must lie in [-1,1]");
    TRAWLKIT_REQUIRE(s.c > 0, "stable scale must be positive");
}
}  // namespace detail

//---------------------------------------------------------------------------//
// Measure operations

//! Mass of l outside [-eps, eps]
inline double truncated_mass(LevyMeasureSpec const& m, double eps)
{
    if (auto const* a = std::get_if<AtomicMeasure>(&m))
    {
        double c = 0;
        for (auto const& at : a->atoms)
            if (std::abs(at.value) > eps)
                c += at.mass;
        return c;
    }
    auto const& d = std::get<DensityMeasure>(m);
    if (eps == 0 && !d.finite_mass)
        return std::numeric_limits<double>::infinity();
    return detail::measure_integral(d, [](double) { return 1.0; }, eps,
                                    std::numeric_limits<double>::infinity());
}

//! int_{eps<|y|<=1} y l(dy)
inline double compensator_drift(LevyMeasureSpec const& m, double eps = 0)
{
    if (auto const* a = std::get_if<AtomicMeasure>(&m))
    {
        double c = 0;
        for (auto const& at : a->atoms)
            if (std::abs(at.value) > eps && std::abs(at.value) <= 1)
                c += at.value * at.mass;
        return c;
    }
    auto const& d = std::get<DensityMeasure>(m);
    if (eps >= 1)
        return 0;
    return detail::measure_integral(d, [](double y) { return y; }, eps, 1.0);
}

//! int_{-eps}^{eps} y^2 l(dy)
inline double small_jump_variance(LevyMeasureSpec const& m, double eps)
{
    if (auto const* a = std::get_if<AtomicMeasure>(&m))
    {
        double c = 0;
        for (auto const& at : a->atoms)
            if (std::abs(at.value) <= eps)
                c += at.value * at.value * at.mass;
        return c;
    }
    return detail::measure_integral(std::get<DensityMeasure>(m),
                                    [](double y) { return y * y; }, 0.0, eps);
}

//! int (e^{i th y} - 1 - i th y 1{|y|<=1}) l(dy)
inline cplx measure_char_exponent(LevyMeasureSpec const& m, double theta)
{
    if (auto const* a = std::get_if<AtomicMeasure>(&m))
    {
        cplx c = 0;
        for (auto const& at : a->atoms)
        {
            double y = at.value;
            c += at.mass * (std::exp(cplx(0, theta * y)) - 1.0 -
                            cplx(0, std::abs(y) <= 1 ? theta * y : 0.0));
        }
        return c;
    }
    auto const& d = std::get<DensityMeasure>(m);
    if (d.char_exponent)
        return d.char_exponent(theta);
    if (theta == 0)
        return 0;
    double const th = std::abs(theta);
    // |y| <= 1: e^{i th y} - 1 - i th y without cancellation
    auto re = [th](double y) {
        double h = th * y;
        double s = std::sin(0.5 * h);
        return -2 * s * s;
    };
    auto im = [th](double y) {
        double h = th * y;
        return std::abs(h) < 1e-3 ? -h * h * h / 6 * (1 - h * h / 20) : std::sin(h) - h;
    };
    double r = detail::measure_integral(d, re, 1e-300, 1.0);
    double i = detail::measure_integral(d, im, 1e-300, 1.0);
    double big = truncated_mass(d, 1.0);
    r -= big;
    if (d.positive)
    {
        auto [c, s] = detail::fourier_tail(d.density, th);
        r += c;
        i += s;
    }
    if (d.negative)
    {
        auto [c, s] = detail::fourier_tail([&](double y) { return d.density(-y); }, th);
        r += c;
        i -= s;
    }
    return {r, theta > 0 ? i : -i};
}

/*!
 * Draws from the normalised restriction of l to |y| > eps.
 *
 * Atoms are drawn by mass; densities use envelope rejection on each side,
 * cut where the remaining tail mass falls below 1e-14 of the side mass.
 */
class JumpSampler
{
  public:
    JumpSampler(LevyMeasureSpec measure, double eps) : measure_(std::move(measure)), eps_(eps)
    {
        TRAWLKIT_REQUIRE(eps >= 0, "truncation level must be nonnegative");
        drift_ = compensator_drift(measure_, eps);
        if (auto const* a = std::get_if<AtomicMeasure>(&measure_))
        {
            for (auto const& at : a->atoms)
            {
                TRAWLKIT_REQUIRE(at.mass >= 0, "atom masses must be nonnegative");
                if (std::abs(at.value) > eps && at.mass > 0)
                {
                    values_.push_back(at.value);
                    mass_ += at.mass;
                    cum_.push_back(mass_);
                }
            }
            return;
        }
        auto const& d = std::get<DensityMeasure>(measure_);
        if (eps == 0 && !d.finite_mass)
            throw ConfigError("infinite Lévy measure needs a positive truncation level");
        double lo = std::max(eps, 1e-300);
        if (d.positive)
            pos_ = make_side(d, lo, +1, pos_mass_);
        if (d.negative)
            neg_ = make_side(d, lo, -1, neg_mass_);
        mass_ = pos_mass_ + neg_mass_;
    }

    double mass() const { return mass_; }
    //! int_{eps<|y|<=1} y l(dy)
    double drift() const { return drift_; }
    double eps() const { return eps_; }
    LevyMeasureSpec const& measure() const { return measure_; }

    double draw(RngStream& rng) const
    {
        TRAWLKIT_REQUIRE(mass_ > 0, "cannot sample from a zero measure");
        if (!values_.empty())
        {
            double u = rng.uniform() * mass_;
            auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
            return values_[std::min<std::size_t>(it - cum_.begin(), values_.size() - 1)];
        }
        bool positive = neg_mass_ == 0 || (pos_mass_ > 0 && rng.uniform() * mass_ < pos_mass_);
        return positive ? pos_->draw(rng) : -neg_->draw(rng);
    }

    double acceptance_rate() const
    {
        double s = 0, w = 0;
        for (auto const* p : {pos_.get(), neg_.get()})
            if (p)
            {
                s += p->acceptance_rate();
                w += 1;
            }
        return w ? s / w : 1;
    }

  private:
    LevyMeasureSpec measure_;
    double eps_;
    double mass_{0}, drift_{0}, pos_mass_{0}, neg_mass_{0};
    std::vector<double> values_, cum_;
    std::shared_ptr<EnvelopeSampler> pos_, neg_;

    static std::shared_ptr<EnvelopeSampler>
    make_side(DensityMeasure const& d, double lo, int sign, double& mass)
    {
        auto f = [&d, sign](double y) { return d.density(sign * y); };
        double const inf = std::numeric_limits<double>::infinity();
        mass = detail::positive_integral(f, lo, inf);
        if (!(mass > 0))
        {
            mass = 0;
            return nullptr;
        }
        if (!std::isfinite(mass))
            throw ConfigError("Lévy measure has infinite mass above the truncation level");
        double hi = std::max(1.0, 2 * lo);
        for (int j = 0; j < 400; ++j, hi *= 2)
            if (detail::positive_integral(f, hi, inf) <= 1e-14 * mass)
                break;
        auto density = d.density;
        auto logf = [density, sign](double y) { return std::log(density(sign * y)); };
        int nodes = std::max(24, static_cast<int>(8 * std::log10(hi / lo)));
        std::vector<double> infl;
        for (double z : d.inflections)
            if (z * sign > 0)
                infl.push_back(std::abs(z));
        return std::make_shared<EnvelopeSampler>(logf, lo, hi, infl, nodes);
    }
};

inline std::vector<double>
sample_levy_measure(LevyMeasureSpec const& m, double eps, std::size_t n, RngStream& rng)
{
    std::vector<double> out;
    if (n == 0)
        return out;
    JumpSampler s(m, eps);
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(s.draw(rng));
    return out;
}

//---------------------------------------------------------------------------//
// Seed validation and triplets

inline void validate(LevySeed const& seed)
{
    std::visit(
        [](auto const& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Poisson>)
                TRAWLKIT_REQUIRE(s.nu > 0, "poisson intensity must be positive");
            else if constexpr (std::is_same_v<T, Skellam>)
                TRAWLKIT_REQUIRE(s.mu1 > 0 && s.mu2 > 0, "skellam intensities must be positive");
            else if constexpr (std::is_same_v<T, Gaussian>)
                TRAWLKIT_REQUIRE(s.sigma2 >= 0 && std::isfinite(s.mu),
                                 "gaussian variance must be nonnegative");
            else if constexpr (std::is_same_v<T, Cauchy>)
                TRAWLKIT_REQUIRE(s.gamma > 0, "cauchy scale must be positive");
            else if constexpr (std::is_same_v<T, Gamma>)
                TRAWLKIT_REQUIRE(s.shape > 0 && s.scale > 0, "gamma parameters must be positive");
            else if constexpr (std::is_same_v<T, InverseGaussian>)
                TRAWLKIT_REQUIRE(s.delta > 0 && s.gamma > 0,
                                 "inverse gaussian parameters must be positive");
            else if constexpr (std::is_same_v<T, Stable>)
                detail::validate(s);
            else
            {
                TRAWLKIT_REQUIRE(s.a >= 0, "gaussian coefficient must be nonnegative");
                if (auto const* d = std::get_if<DensityMeasure>(&s.measure))
                {
                    TRAWLKIT_REQUIRE(d->density, "density measure needs a density");
                    double m;
                    try
                    {
                        m = detail::measure_integral(
                            *d, [](double y) { return std::min(1.0, y * y); }, 0.0,
                            std::numeric_limits<double>::infinity());
                    }
                    catch (std::exception const&)
                    {
                        m = std::numeric_limits<double>::infinity();
                    }
                    // per-decade mass must shrink towards 0 and towards infinity
                    auto decade = [&](double y0) {
                        return detail::measure_integral(
                            *d, [](double y) { return std::min(1.0, y * y); }, y0, 10 * y0);
                    };
                    auto shrinking = [](double near, double far) {
                        return near == 0 || far < 0.9 * near;
                    };
                    if (!std::isfinite(m) || !shrinking(decade(1e-60), decade(1e-90)) ||
                        !shrinking(decade(1e60), decade(1e90)))
                        throw ConfigError("Lévy measure fails int min(1,y^2) l(dy) < inf");
                }
            }
        },
        seed);
}

//! The drift, Gaussian coefficient and Lévy measure of a seed
inline CustomTriplet levy_triplet(LevySeed const& seed)
{
    using std::numbers::pi;
    return std::visit(
        [](auto const& s) -> CustomTriplet {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Poisson>)
                return {s.nu, 0, AtomicMeasure{{{1.0, s.nu}}}};
            else if constexpr (std::is_same_v<T, Skellam>)
                return {s.mu1 - s.mu2, 0, AtomicMeasure{{{1.0, s.mu1}, {-1.0, s.mu2}}}};
            else if constexpr (std::is_same_v<T, Gaussian>)
                return {s.mu, s.sigma2, AtomicMeasure{}};
            else if constexpr (std::is_same_v<T, Gamma>)
            {
                double k = s.shape, th = s.scale;
                DensityMeasure d;
                d.density = [k, th](double y) { return y > 0 ? k / y * std::exp(-y / th) : 0.0; };
                d.finite_variation = true;
                d.laplace_exponent = [k, th](cplx z) { return -k * std::log(1.0 + th * z); };
                double xi = k * th * (-std::expm1(-1 / th));
                d.char_exponent = [k, th, xi](double t) {
                    return -k * std::log(cplx(1, -th * t)) - cplx(0, t * xi);
                };
                return {xi, 0, d};
            }
            else if constexpr (std::is_same_v<T, InverseGaussian>)
            {
                double de = s.delta, ga = s.gamma;
                double a = ga * ga / 2;
                DensityMeasure d;
                d.density = [de, a](double y) {
                    return y > 0 ? de / std::sqrt(2 * pi) * std::pow(y, -1.5) * std::exp(-a * y)
                                 : 0.0;
                };
                d.finite_variation = true;
                double xi = de / std::sqrt(2 * pi) * std::sqrt(pi / a) *
                            boost::math::erf(std::sqrt(a));
                d.laplace_exponent = [de, ga](cplx z) {
                    return de * (ga - std::sqrt(ga * ga + 2.0 * z));
                };
                d.char_exponent = [de, ga, xi](double t) {
                    return de * (ga - std::sqrt(cplx(ga * ga, -2 * t))) - cplx(0, t * xi);
                };
                return {xi, 0, d};
            }
            else if constexpr (std::is_same_v<T, Cauchy>)
            {
                double g = s.gamma;
                DensityMeasure d;
                d.density = [g](double y) { return g / (pi * y * y); };
                d.negative = true;
                d.char_exponent = [g](double t) { return cplx(-g * std::abs(t), 0); };
                return {0, 0, d};
            }
            else if constexpr (std::is_same_v<T, Stable>)
            {
                detail::validate(s);
                double al = s.alpha;
                if (al == 2)
                    return {s.mu, 2 * s.c * s.c, AtomicMeasure{}};
                double Ca = al == 1 ? 2 / pi
                                    : al * (1 - al) / (std::tgamma(2 - al) * std::cos(pi * al / 2));
                double sa = std::pow(s.c, al);
                double cp = Ca * (1 + s.beta) / 2 * sa;
                double cm = Ca * (1 - s.beta) / 2 * sa;
                DensityMeasure d;
                d.density = [cp, cm, al](double y) {
                    return (y > 0 ? cp : cm) * std::pow(std::abs(y), -1 - al);
                };
                d.positive = cp > 0;
                d.negative = cm > 0;
                d.finite_variation = al < 1;
                double xi = al == 1 ? s.mu - 2 * s.beta * s.c / pi * (1 - detail::euler_gamma)
                                    : s.mu + (cp - cm) / (1 - al);
                Stable z = s;
                d.char_exponent = [z, xi](double t) {
                    if (t == 0)
                        return cplx(0, 0);
                    double ct = std::pow(std::abs(z.c * t), z.alpha);
                    double Phi = z.alpha == 1 ? -2 / pi * std::log(std::abs(t))
                                              : std::tan(pi * z.alpha / 2);
                    return cplx(-ct, ct * z.beta * detail::sgn(t) * Phi - t * (xi - z.mu));
                };
                return {xi, 0, d};
            }
            else
                return s;
        },
        seed);
}

//---------------------------------------------------------------------------//
// Cumulants

inline cplx seed_cumulant(LevySeed const& seed, double theta)
{
    using std::numbers::pi;
    TRAWLKIT_REQUIRE(std::isfinite(theta), "cumulant argument must be finite");
    return std::visit(
        [theta](auto const& s) -> cplx {
            using T = std::decay_t<decltype(s)>;
            cplx const i(0, 1);
            if constexpr (std::is_same_v<T, Poisson>)
                return s.nu * (std::exp(i * theta) - 1.0);
            else if constexpr (std::is_same_v<T, Skellam>)
                return s.mu1 * (std::exp(i * theta) - 1.0) + s.mu2 * (std::exp(-i * theta) - 1.0);
            else if constexpr (std::is_same_v<T, Gaussian>)
                return {-0.5 * theta * theta * s.sigma2, theta * s.mu};
            else if constexpr (std::is_same_v<T, Cauchy>)
                return {-s.gamma * std::abs(theta), 0};
            else if constexpr (std::is_same_v<T, Gamma>)
                return -s.shape * std::log(cplx(1, -theta * s.scale));
            else if constexpr (std::is_same_v<T, InverseGaussian>)
                return s.delta * (s.gamma - std::sqrt(cplx(s.gamma * s.gamma, -2 * theta)));
            else if constexpr (std::is_same_v<T, Stable>)
            {
                if (theta == 0)
                    return 0;
                double ct = std::pow(std::abs(s.c * theta), s.alpha);
                double Phi = s.alpha == 1 ? -2 / pi * std::log(std::abs(theta))
                                          : std::tan(pi * s.alpha / 2);
                return cplx(-ct, theta * s.mu + ct * s.beta * detail::sgn(theta) * Phi);
            }
            else
                return cplx(-0.5 * s.a * theta * theta, theta * s.xi) +
                       measure_char_exponent(s.measure, theta);
        },
        seed);
}

inline cplx set_law_cumulant(LevySeed const& seed, double area, double theta)
{
    TRAWLKIT_REQUIRE(area > 0, "set area must be positive");
    return area * seed_cumulant(seed, theta);
}

//! The seed whose unit-area law is L(A) with Leb(A) = area
inline LevySeed scale_seed(LevySeed const& seed, double area)
{
    TRAWLKIT_REQUIRE(area > 0, "set area must be positive");
    return std::visit(
        [area](auto const& s) -> LevySeed {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Poisson>)
                return Poisson{s.nu * area};
            else if constexpr (std::is_same_v<T, Skellam>)
                return Skellam{s.mu1 * area, s.mu2 * area};
            else if constexpr (std::is_same_v<T, Gaussian>)
                return Gaussian{s.mu * area, s.sigma2 * area};
            else if constexpr (std::is_same_v<T, Cauchy>)
                return Cauchy{s.gamma * area};
            else if constexpr (std::is_same_v<T, Gamma>)
                return Gamma{s.shape * area, s.scale};
            else if constexpr (std::is_same_v<T, InverseGaussian>)
                return InverseGaussian{s.delta * area, s.gamma};
            else if constexpr (std::is_same_v<T, Stable>)
                return Stable{s.alpha, s.beta, s.c * std::pow(area, 1 / s.alpha), s.mu * area};
            else
            {
                CustomTriplet c = s;
                c.xi *= area;
                c.a *= area;
                if (auto* a = std::get_if<AtomicMeasure>(&c.measure))
                    for (auto& at : a->atoms)
                        at.mass *= area;
                else
                {
                    auto& d = std::get<DensityMeasure>(c.measure);
                    auto f = d.density;
                    d.density = [f, area](double y) { return area * f(y); };
                    if (d.char_exponent)
                    {
                        auto g = d.char_exponent;
                        d.char_exponent = [g, area](double t) { return area * g(t); };
                    }
                    if (d.laplace_exponent)
                    {
                        auto g = d.laplace_exponent;
                        d.laplace_exponent = [g, area](cplx z) { return area * g(z); };
                    }
                }
                return c;
            }
        },
        seed);
}

inline MeanVar set_mean_var(LevySeed const& seed, double area)
{
    TRAWLKIT_REQUIRE(area > 0, "set area must be positive");
    using ER = ExtendedReal;
    MeanVar unit = std::visit(
        [](auto const& s) -> MeanVar {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Poisson>)
                return {ER::finite(s.nu), ER::finite(s.nu)};
            else if constexpr (std::is_same_v<T, Skellam>)
                return {ER::finite(s.mu1 - s.mu2), ER::finite(s.mu1 + s.mu2)};
            else if constexpr (std::is_same_v<T, Gaussian>)
                return {ER::finite(s.mu), ER::finite(s.sigma2)};
            else if constexpr (std::is_same_v<T, Cauchy>)
                return {ER::undefined(), ER::undefined()};
            else if constexpr (std::is_same_v<T, Gamma>)
                return {ER::finite(s.shape * s.scale), ER::finite(s.shape * s.scale * s.scale)};
            else if constexpr (std::is_same_v<T, InverseGaussian>)
                return {ER::finite(s.delta / s.gamma),
                        ER::finite(s.delta / (s.gamma * s.gamma * s.gamma))};
            else if constexpr (std::is_same_v<T, Stable>)
            {
                if (s.alpha == 2)
                    return {ER::finite(s.mu), ER::finite(2 * s.c * s.c)};
                if (s.alpha > 1)
                    return {ER::finite(s.mu), ER::infinite()};
                return {ER::undefined(), ER::infinite()};
            }
            else
            {
                double const inf = std::numeric_limits<double>::infinity();
                double big_mean = 0, second = 0;
                if (auto const* a = std::get_if<AtomicMeasure>(&s.measure))
                {
                    for (auto const& at : a->atoms)
                    {
                        if (std::abs(at.value) > 1)
                            big_mean += at.value * at.mass;
                        second += at.value * at.value * at.mass;
                    }
                }
                else
                {
                    auto const& d = std::get<DensityMeasure>(s.measure);
                    double abs_big = detail::measure_integral(
                        d, [](double y) { return std::abs(y); }, 1.0, inf);
                    if (!std::isfinite(abs_big))
                        return {ER::undefined(), ER::infinite()};
                    big_mean = detail::measure_integral(d, [](double y) { return y; }, 1.0, inf);
                    second = detail::measure_integral(d, [](double y) { return y * y; }, 0.0,
                                                      inf);
                }
                ER var = std::isfinite(second) ? ER::finite(s.a + second) : ER::infinite();
                return {ER::finite(s.xi + big_mean), var};
            }
        },
        seed);
    return {unit.mean.scaled(area), unit.variance.scaled(area)};
}

//---------------------------------------------------------------------------//
// Sampling

namespace detail
{
inline double sample_stable(Stable const& s, RngStream& rng)
{
    using std::numbers::pi;
    double V = pi * (rng.uniform() - 0.5);
    double W = rng.exponential();
    double const al = s.alpha, be = s.beta;
    if (al == 1)
    {
        double h = pi / 2 + be * V;
        double X = 2 / pi * (h * std::tan(V) - be * std::log(pi / 2 * W * std::cos(V) / h));
        return s.c * X + 2 / pi * be * s.c * std::log(s.c) + s.mu;
    }
    double t = be * std::tan(pi * al / 2);
    double B = std::atan(t) / al;
    double S = std::pow(1 + t * t, 1 / (2 * al));
    double X = S * std::sin(al * (V + B)) / std::pow(std::cos(V), 1 / al) *
               std::pow(std::cos(V - al * (V + B)) / W, (1 - al) / al);
    return s.c * X + s.mu;
}

inline double sample_ig(double mean, double shape, RngStream& rng)
{
    double nu = rng.normal();
    double r = mean * nu * nu / (2 * shape);
    double x = mean / (1 + r + std::sqrt(r * (2 + r)));
    return rng.uniform() * (mean + x) <= mean ? x : mean * mean / x;
}

/*!
 * Gauss-Legendre rule for a density measure on log-spaced panels.
 *
 * Jumps below delta enter through their second and first moments; the
 * rule stops where the remaining tail mass is negligible.
 */
struct MeasureRule
{
    std::vector<double> y, w;
    double m1{0}, m2{0};  //!< int_{|y|<delta} y l and y^2 l
    double tail{0};       //!< mass beyond the last panel

    MeasureRule(DensityMeasure const& d, double delta)
    {
        using GL = boost::math::quadrature::gauss<double, 8>;
        double const inf = std::numeric_limits<double>::infinity();
        for (int sign : {1, -1})
        {
            if ((sign > 0 && !d.positive) || (sign < 0 && !d.negative))
                continue;
            auto f = [&](double v) {
                double l = d.density(sign * v);
                return std::isfinite(l) ? l : 0.0;
            };
            m1 += sign * positive_integral([&](double v) { return v * f(v); }, 0.0, delta);
            m2 += positive_integral([&](double v) { return v * v * f(v); }, 0.0, delta);
            double ref = positive_integral([&](double v) { return std::min(1.0, v * v) * f(v); },
                                           delta, inf);
            double hi = 1;
            for (int j = 0; j < 100 && positive_integral(f, hi, inf) > 1e-13 * ref; ++j)
                hi *= 2;
            tail += positive_integral(f, hi, inf);
            double const ratio = 1.04;
            int panels = static_cast<int>(std::ceil(std::log(hi / delta) / std::log(ratio)));
            double q = std::pow(hi / delta, 1.0 / panels);
            double x0 = delta;
            for (int p = 0; p < panels; ++p)
            {
                double x1 = p + 1 == panels ? hi : x0 * q;
                double c = 0.5 * (x0 + x1), h = 0.5 * (x1 - x0);
                for (std::size_t k = 0; k < GL::abscissa().size(); ++k)
                    for (double sg : {-1.0, 1.0})
                    {
                        if (k == 0 && sg < 0 && GL::abscissa()[0] == 0)
                            continue;
                        double v = c + sg * h * GL::abscissa()[k];
                        y.push_back(sign * v);
                        w.push_back(h * GL::weights()[k] * f(v));
                    }
                x0 = x1;
            }
        }
    }

    //! int (e^{-z y} - 1) l(dy), one-sided measures
    cplx laplace_exponent(cplx z) const
    {
        cplx acc = -z * m1 + 0.5 * z * z * m2 - tail;
        for (std::size_t j = 0; j < y.size(); ++j)
        {
            // e^{-z y} - 1 without cancellation
            double a = -z.real() * y[j], b = -z.imag() * y[j];
            double sb = std::sin(0.5 * b);
            acc += w[j] * cplx(std::expm1(a) * std::cos(b) - 2 * sb * sb,
                               std::exp(a) * std::sin(b));
        }
        return acc;
    }

    //! int (e^{i th y} - 1 - i th y 1{|y|<=1}) l(dy)
    cplx char_exponent(double th) const
    {
        cplx acc = -0.5 * th * th * m2 - tail;
        for (std::size_t j = 0; j < y.size(); ++j)
        {
            double h = th * y[j];
            double s = std::sin(0.5 * h);
            double im = std::abs(y[j]) <= 1 ? std::sin(h) - h : std::sin(h);
            acc += w[j] * cplx(-2 * s * s, im);
        }
        return acc;
    }
};

//! Law of the jump part for infinite-activity custom measures
inline TransformSpec custom_transform(CustomTriplet const& c)
{
    auto const& d = std::get<DensityMeasure>(c.measure);
    double const inf = std::numeric_limits<double>::infinity();
    double scale = std::sqrt(
        c.a + measure_integral(d, [](double y) { return std::min(y * y, 1.0); }, 0.0, inf));
    scale = std::max(scale, 1e-8);
    std::optional<double> mean;
    auto mv = set_mean_var(LevySeed{c}, 1);
    if (mv.mean.is_finite())
        mean = mv.mean.value();
    if (mv.variance.is_finite())
        scale = std::sqrt(mv.variance.value());
    if (c.a == 0 && d.finite_variation && !d.negative)
    {
        double shift = c.xi - compensator_drift(c.measure, 0);
        std::function<cplx(cplx)> L;
        if (d.laplace_exponent)
        {
            auto g = d.laplace_exponent;
            L = [g](cplx z) { return std::exp(g(z)); };
        }
        else
        {
            auto rule = std::make_shared<MeasureRule>(d, 1e-6 * scale);
            L = [rule](cplx z) { return std::exp(rule->laplace_exponent(z)); };
        }
        return TransformSpec::from_laplace(L, shift, mean, scale);
    }
    std::function<cplx(double)> cf;
    if (d.char_exponent)
    {
        auto g = d.char_exponent;
        double xi = c.xi, a = c.a;
        cf = [g, xi, a](double t) { return std::exp(cplx(-0.5 * a * t * t, t * xi) + g(t)); };
    }
    else
    {
        auto rule = std::make_shared<MeasureRule>(d, 1e-6 * scale);
        double xi = c.xi, a = c.a;
        cf = [rule, xi, a](double t) {
            return std::exp(cplx(-0.5 * a * t * t, t * xi) + rule->char_exponent(t));
        };
    }
    return TransformSpec::from_cf(cf, mean, scale);
}
}  // namespace detail

/*!
 * Samples L(A) for Leb(A) = area.
 *
 * Custom seeds with finite jump activity use an exact compound Poisson draw;
 * otherwise the set law is inverted numerically.
 */
class SetLawSampler
{
  public:
    SetLawSampler(LevySeed const& seed, double area) : seed_(scale_seed(seed, area))
    {
        if (auto const* c = std::get_if<CustomTriplet>(&seed_))
        {
            bool finite = std::holds_alternative<AtomicMeasure>(c->measure) ||
                          std::get<DensityMeasure>(c->measure).finite_mass;
            if (finite)
            {
                jumps_ = std::make_shared<JumpSampler>(c->measure, 0.0);
                finite_ = true;
            }
            else
                quantile_ = std::make_shared<TabulatedQuantile>(detail::custom_transform(*c));
        }
    }

    double operator()(RngStream& rng) const
    {
        return std::visit(
            [&](auto const& s) -> double {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Poisson>)
                    return double(rng.poisson(s.nu));
                else if constexpr (std::is_same_v<T, Skellam>)
                    return double(rng.poisson(s.mu1)) - double(rng.poisson(s.mu2));
                else if constexpr (std::is_same_v<T, Gaussian>)
                    return s.sigma2 > 0 ? rng.normal(s.mu, std::sqrt(s.sigma2)) : s.mu;
                else if constexpr (std::is_same_v<T, Cauchy>)
                    return s.gamma * std::tan(std::numbers::pi * (rng.uniform() - 0.5));
                else if constexpr (std::is_same_v<T, Gamma>)
                    return rng.gamma(s.shape, s.scale);
                else if constexpr (std::is_same_v<T, InverseGaussian>)
                    return detail::sample_ig(s.delta / s.gamma, s.delta * s.delta, rng);
                else if constexpr (std::is_same_v<T, Stable>)
                    return detail::sample_stable(s, rng);
                else
                {
                    if (!finite_)
                        return (*quantile_)(rng.uniform());
                    double x = s.xi - compensator_drift(s.measure, 0);
                    if (s.a > 0)
                        x += std::sqrt(s.a) * rng.normal();
                    if (jumps_->mass() > 0)
                    {
                        auto n = rng.poisson(jumps_->mass());
                        for (std::int64_t i = 0; i < n; ++i)
                            x += jumps_->draw(rng);
                    }
                    return x;
                }
            },
            seed_);
    }

    LevySeed const& scaled_seed() const { return seed_; }

  private:
    LevySeed seed_;
    bool finite_{false};
    std::shared_ptr<JumpSampler> jumps_;
    std::shared_ptr<TabulatedQuantile> quantile_;
};

inline std::vector<double>
sample_set_law(LevySeed const& seed, double area, std::size_t n, RngStream& rng)
{
    std::vector<double> out;
    if (n == 0)
        return out;
    validate(seed);
    SetLawSampler s(seed, area);
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(s(rng));
    return out;
}

//! One draw of L(A); area zero gives exactly zero
inline double sample_set_law(LevySeed const& seed, double area, RngStream& rng)
{
    if (area == 0)
        return 0;
    return SetLawSampler(seed, area)(rng);
}

/*!
 * Splits a seed into its Gaussian part (xi, a, 0) and jump part (0, 0, l).
 */
inline std::pair<LevySeed, LevySeed> levy_ito_split(LevySeed const& seed)
{
    if (auto const* g = std::get_if<Gaussian>(&seed))
        return {*g, Gaussian{0, 0}};
    CustomTriplet t = levy_triplet(seed);
    return {Gaussian{t.xi, t.a}, CustomTriplet{0, 0, t.measure}};
}

//! Zero law test, for shortcuts
inline bool is_zero_seed(LevySeed const& seed)
{
    if (auto const* g = std::get_if<Gaussian>(&seed))
        return g->mu == 0 && g->sigma2 == 0;
    return false;
}

}  // namespace trawlkit
