// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/numeric_inversion.hpp
//! Sampling a law known only through a transform, and envelope rejection.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace trawlkit
{
struct Atom
{
    double value;
    double mass;
};

/*!
 * A law given through its transform.
 *
 * The transform describes the continuous component, normalised to total mass
 * one. Point masses are listed separately in \c atoms; the continuous part
 * carries weight one minus their sum.
 */
struct TransformSpec
{
    enum class Kind
    {
        fourier,  //!< characteristic function E[exp(i theta X)]
        laplace   //!< E[exp(-s Y)] of Y = X - shift >= 0
    };
    using cplx = std::complex<double>;

    Kind kind{Kind::fourier};
    std::function<cplx(double)> cf;
    std::function<cplx(cplx)> laplace;
    double shift{0};
    std::vector<Atom> atoms;
    std::optional<double> mean;
    double scale{1};  //!< rough spread, used for brackets and truncation

    static TransformSpec from_cf(std::function<cplx(double)> f,
                                 std::optional<double> mean = {}, double scale = 1)
    {
        TransformSpec s;
        s.kind = Kind::fourier;
        s.cf = std::move(f);
        s.mean = mean;
        s.scale = scale;
        return s;
    }
    static TransformSpec from_laplace(std::function<cplx(cplx)> l, double shift = 0,
                                      std::optional<double> mean = {}, double scale = 1)
    {
        TransformSpec s;
        s.kind = Kind::laplace;
        s.laplace = std::move(l);
        s.shift = shift;
        s.mean = mean;
        s.scale = scale;
        return s;
    }
};

struct CdfPdf
{
    double cdf{0};
    double pdf{0};
    double error{0};
};

//! Euler-accelerated Bromwich trapezium settings
struct LaplaceSettings
{
    double A{23};
    int n{38};
    int m{11};
};

namespace detail
{
//! Inverse Laplace transform at t > 0, with error from the n+1 rerun
template<class G>
inline std::pair<double, double>
euler_inversion(G&& g, double t, LaplaceSettings const& set)
{
    using cplx = std::complex<double>;
    double const A = set.A;
    int const total = set.n + set.m + 1;
    double const pre = std::exp(A / 2) / t;
    std::vector<double> terms(total + 1);
    terms[0] = 0.5 * std::real(g(cplx(A / (2 * t), 0)));
    for (int k = 1; k <= total; ++k)
    {
        double re = std::real(g(cplx(A / (2 * t), k * std::numbers::pi / t)));
        terms[k] = (k % 2 ? -re : re);
    }
    std::vector<double> partial(total + 1);
    double acc = 0;
    for (int k = 0; k <= total; ++k)
    {
        acc += terms[k];
        partial[k] = pre * acc;
    }
    auto euler = [&](int n) {
        double sum = 0;
        double binom = 1;
        for (int j = 0; j <= set.m; ++j)
        {
            sum += binom * partial[n + j];
            binom *= double(set.m - j) / (j + 1);
        }
        return sum * std::ldexp(1.0, -set.m);
    };
    double e0 = euler(set.n);
    double e1 = euler(set.n + 1);
    return {e0, std::abs(e1 - e0)};
}

inline double cf_cutoff(std::function<std::complex<double>(double)> const& cf,
                        double scale)
{
    double theta = 1 / scale;
    for (int i = 0; i < 80; ++i)
    {
        if (std::abs(cf(theta)) < 1e-10 * theta && std::abs(cf(1.5 * theta)) < 1e-10 * theta)
            return theta;
        theta *= 1.5;
    }
    throw NumericError("characteristic function does not decay; cannot truncate "
                       "the inversion integral");
}
}  // namespace detail

//! CDF and density of the continuous component at x
inline CdfPdf eval_continuous(TransformSpec const& spec, double x,
                              LaplaceSettings const& set = {})
{
    using cplx = std::complex<double>;
    if (spec.kind == TransformSpec::Kind::laplace)
    {
        TRAWLKIT_REQUIRE(spec.laplace, "Laplace transform missing");
        double t = x - spec.shift;
        if (t <= 0)
            return {};
        auto [F, eF] = detail::euler_inversion(
            [&](cplx s) { return spec.laplace(s) / s; }, t, set);
        auto [f, ef] = detail::euler_inversion(spec.laplace, t, set);
        F = std::clamp(F, 0.0, 1.0);
        return {F, std::max(f, 0.0), eF};
    }
    TRAWLKIT_REQUIRE(spec.cf, "characteristic function missing");
    // midpoint rule on the Gil-Pelaez integrals; the step sets the window
    // [x - 2 pi / h, x + 2 pi / h] outside which mass aliases back
    double const c = spec.mean.value_or(0);
    double const y = x - c;
    double const Theta = detail::cf_cutoff(spec.cf, spec.scale);
    double const budget = 2e5;
    double K = std::clamp(budget * 2 * std::numbers::pi / (Theta * spec.scale), 60.0, 1e5);
    double h = 2 * std::numbers::pi / (std::abs(y) + K * spec.scale);
    auto n = static_cast<std::size_t>(std::ceil(Theta / h));
    double Ipart = 0, Rpart = 0;
    for (std::size_t j = 0; j < n; ++j)
    {
        double th = (j + 0.5) * h;
        cplx v = spec.cf(th) * std::exp(cplx(0, -th * x));
        Ipart += v.imag() / (j + 0.5);
        Rpart += v.real();
    }
    double F = 0.5 - Ipart / std::numbers::pi;
    double f = Rpart * h / std::numbers::pi;
    double err = std::abs(spec.cf(Theta)) / std::numbers::pi;
    return {std::clamp(F, 0.0, 1.0), std::max(f, 0.0), err};
}

//! CDF and density (of the continuous part) of the full mixed law
inline CdfPdf eval_cdf_pdf(TransformSpec const& spec, double x,
                           LaplaceSettings const& set = {})
{
    double wa = 0, below = 0;
    for (auto const& a : spec.atoms)
    {
        wa += a.mass;
        if (a.value <= x)
            below += a.mass;
    }
    double wc = 1 - wa;
    CdfPdf r{below, 0, 0};
    if (wc > 0)
    {
        auto c = eval_continuous(spec, x, set);
        r.cdf += wc * c.cdf;
        r.pdf = wc * c.pdf;
        r.error = wc * c.error;
    }
    return r;
}

/*!
 * Safeguarded Newton solve of F(x) = u for the continuous component.
 *
 * Converges when |F(x) - u| <= tol; throws NumericError otherwise.
 */
inline double inverse_cdf_sample(TransformSpec const& spec, double u, double tol = 1e-9,
                                 int max_iter = 200)
{
    TRAWLKIT_REQUIRE(u > 0 && u < 1, "inverse_cdf_sample needs u in (0,1)");
    bool const positive = spec.kind == TransformSpec::Kind::laplace;
    auto F = [&](double x) { return eval_continuous(spec, x); };
    double centre = spec.mean.value_or(positive ? spec.shift + spec.scale : 0);
    double s = spec.scale;

    // coarse 17-point scan for a bracket
    double lo = positive ? spec.shift : -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int j = -8; j <= 8; ++j)
    {
        double d = s * std::ldexp(1.0, j);
        for (double x : {centre - d, centre + d})
        {
            if (positive && x <= spec.shift)
                continue;
            double Fx = F(x).cdf;
            if (Fx < u)
                lo = std::max(lo, x);
            else
                hi = std::min(hi, x);
        }
    }
    for (int g = 0; !std::isfinite(hi) && g < 200; ++g)
    {
        double x = std::max(centre, lo) + s * std::ldexp(1.0, 9 + g);
        if (F(x).cdf >= u)
            hi = x;
        else
            lo = x;
    }
    for (int g = 0; !std::isfinite(lo) && g < 200; ++g)
    {
        double x = std::min(centre, hi) - s * std::ldexp(1.0, 9 + g);
        if (F(x).cdf < u)
            lo = x;
        else
            hi = x;
    }
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw NumericError("could not bracket the quantile");

    double x = (spec.mean && *spec.mean > lo && *spec.mean < hi) ? *spec.mean
                                                                 : 0.5 * (lo + hi);
    double resid = 0;
    for (int it = 0; it < max_iter; ++it)
    {
        auto v = F(x);
        resid = v.cdf - u;
        if (std::abs(resid) <= tol)
            return x;
        if (resid < 0)
            lo = x;
        else
            hi = x;
        double next = v.pdf > 0 ? x - resid / v.pdf : lo - 1;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
        {
            if (std::abs(resid) <= 1e-6)
                return x;
            break;
        }
        x = next;
    }
    std::ostringstream os;
    os << "quantile inversion did not converge: u=" << u << " residual=" << resid;
    throw NumericError(os.str());
}

/*!
 * Quantile function of the continuous component from a cubic Hermite table.
 *
 * Nodes are bisected until the interpolant matches the evaluated CDF to
 * tol at every midpoint. Levels outside the tabulated range fall back to
 * inverse_cdf_sample.
 */
class TabulatedQuantile
{
  public:
    explicit TabulatedQuantile(TransformSpec spec, double tol = 1e-10, int max_depth = 14,
                               double tail = 1e-9)
        : spec_(std::move(spec))
    {
        bool const positive = spec_.kind == TransformSpec::Kind::laplace;
        double a = positive ? spec_.shift : inverse_cdf_sample(spec_, tail);
        double b = inverse_cdf_sample(spec_, 1 - tail);
        if (!(b > a))
            throw NumericError("degenerate quantile range");
        int const start = 32;
        std::vector<Node> nodes;
        for (int i = 0; i <= start; ++i)
            nodes.push_back(eval(a + (b - a) * i / start));
        x_.push_back(nodes[0].x);
        F_.push_back(nodes[0].F);
        f_.push_back(nodes[0].f);
        for (int i = 0; i < start; ++i)
        {
            std::vector<Node> seg;
            split(nodes[i], nodes[i + 1], tol, max_depth, seg);
            seg.push_back(nodes[i + 1]);
            for (auto const& n : seg)
            {
                x_.push_back(n.x);
                F_.push_back(std::max(n.F, F_.back()));
                f_.push_back(n.f);
            }
        }
    }

    double operator()(double u) const
    {
        TRAWLKIT_REQUIRE(u > 0 && u < 1, "quantile level must lie in (0,1)");
        if (u <= F_.front() || u >= F_.back())
            return inverse_cdf_sample(spec_, u);
        std::size_t j = std::upper_bound(F_.begin(), F_.end(), u) - F_.begin();
        std::size_t i = j - 1;
        double lo = x_[i], hi = x_[j];
        double x = lo + (hi - lo) * (u - F_[i]) / std::max(F_[j] - F_[i], 1e-300);
        for (int it = 0; it < 100; ++it)
        {
            auto [H, dH] = hermite(i, x);
            double r = H - u;
            if (std::abs(r) <= 1e-14)
                break;
            (r < 0 ? lo : hi) = x;
            double next = dH > 0 ? x - r / dH : 0.5 * (lo + hi);
            if (!(next > lo && next < hi))
                next = 0.5 * (lo + hi);
            if (hi - lo <= 1e-15 * std::max(1.0, std::abs(x)))
                break;
            x = next;
        }
        return x;
    }

    //! Interpolated CDF of the continuous component; direct inversion off the table
    double cdf(double x) const
    {
        if (!(x > x_.front() && x < x_.back()))
            return eval(x).F;
        std::size_t i = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin() - 1;
        return std::clamp(hermite(i, x).first, 0.0, 1.0);
    }

    std::size_t size() const { return x_.size(); }

  private:
    struct Node
    {
        double x, F, f;
    };
    TransformSpec spec_;
    std::vector<double> x_, F_, f_;

    Node eval(double x) const
    {
        auto v = eval_continuous(spec_, x);
        return {x, v.cdf, v.pdf};
    }
    static double hermite_value(Node const& a, Node const& b, double x)
    {
        double h = b.x - a.x, t = (x - a.x) / h;
        double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * a.F + (t3 - 2 * t2 + t) * h * a.f +
               (-2 * t3 + 3 * t2) * b.F + (t3 - t2) * h * b.f;
    }
    std::pair<double, double> hermite(std::size_t i, double x) const
    {
        double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
        double t2 = t * t, t3 = t2 * t;
        double H = (2 * t3 - 3 * t2 + 1) * F_[i] + (t3 - 2 * t2 + t) * h * f_[i] +
                   (-2 * t3 + 3 * t2) * F_[i + 1] + (t3 - t2) * h * f_[i + 1];
        double dH = ((6 * t2 - 6 * t) * F_[i] + (3 * t2 - 4 * t + 1) * h * f_[i] +
                     (-6 * t2 + 6 * t) * F_[i + 1] + (3 * t2 - 2 * t) * h * f_[i + 1]) /
                    h;
        return {H, dH};
    }
    //! Interior nodes between a and b, in order
    void split(Node const& a, Node const& b, double tol, int depth, std::vector<Node>& out)
    {
        Node m = eval(0.5 * (a.x + b.x));
        if (depth > 0 && std::abs(hermite_value(a, b, m.x) - m.F) > tol)
        {
            split(a, m, tol, depth - 1, out);
            out.push_back(m);
            split(m, b, tol, depth - 1, out);
            return;
        }
        out.push_back(m);
    }
};

//! One draw from the mixed law: atoms by mass, continuous part by inversion
inline double mixed_sample(TransformSpec const& spec, RngStream& rng)
{
    double u = rng.uniform();
    double acc = 0;
    for (auto const& a : spec.atoms)
    {
        acc += a.mass;
        if (u < acc)
            return a.value;
    }
    return inverse_cdf_sample(spec, rng.uniform());
}

/*!
 * Rejection sampler with a piecewise-exponential envelope.
 *
 * The log density is split at its inflection points; concave pieces get
 * tangents and convex pieces get chords.
 */
class EnvelopeSampler
{
  public:
    EnvelopeSampler(std::function<double(double)> log_density, double lo, double hi,
                    std::vector<double> inflections = {}, int nodes_per_piece = 24)
        : logf_(std::move(log_density)), lo_(lo), hi_(hi)
    {
        TRAWLKIT_REQUIRE(lo < hi && std::isfinite(lo) && std::isfinite(hi),
                         "envelope domain must be a finite interval");
        if (inflections.empty())
            inflections = detect_inflections();
        std::vector<double> cuts{lo};
        for (double z : inflections)
            if (z > lo && z < hi)
                cuts.push_back(z);
        cuts.push_back(hi);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t p = 0; p + 1 < cuts.size(); ++p)
            build_piece(cuts[p], cuts[p + 1], nodes_per_piece);
        finalize();
    }

    double draw(RngStream& rng) const
    {
        for (int tries = 0; tries < 1000000; ++tries)
        {
            proposed_.fetch_add(1, std::memory_order_relaxed);
            double u = rng.uniform();
            auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
            std::size_t k = std::min<std::size_t>(it - cum_.begin(), segs_.size() - 1);
            auto const& s = segs_[k];
            double L = s.x1 - s.x0;
            double v = rng.uniform();
            double y;
            if (std::abs(s.slope * L) < 1e-12)
                y = v * L;
            else if (s.slope > 0)
                y = L + std::log(v + (1 - v) * std::exp(-s.slope * L)) / s.slope;
            else
                y = std::log1p(v * std::expm1(s.slope * L)) / s.slope;
            double x = std::clamp(s.x0 + y, s.x0, s.x1);
            double env = s.c + s.slope * (x - s.x0);
            if (std::log(rng.uniform()) <= logf_(x) - env)
            {
                accepted_.fetch_add(1, std::memory_order_relaxed);
                return x;
            }
        }
        throw NumericError("envelope rejection failed to accept");
    }

    //! Empirical acceptance over all draws so far
    double acceptance_rate() const
    {
        auto p = proposed_.load();
        return p ? double(accepted_.load()) / p : 0;
    }
    //! log of the envelope mass
    double log_envelope_mass() const { return log_total_; }
    double lower() const { return lo_; }
    double upper() const { return hi_; }

  private:
    struct Segment
    {
        double x0, x1, c, slope, log_mass;
    };

    std::function<double(double)> logf_;
    double lo_, hi_;
    std::vector<Segment> segs_;
    std::vector<double> cum_;
    double log_total_{0};
    mutable std::atomic<std::uint64_t> proposed_{0}, accepted_{0};

    bool geometric(double a, double b) const
    {
        return (a > 0 && b / a > 50) || (b < 0 && a / b > 50);
    }
    std::vector<double> nodes(double a, double b, int n) const
    {
        std::vector<double> x(n + 1);
        bool geo = geometric(a, b);
        for (int i = 0; i <= n; ++i)
        {
            double f = double(i) / n;
            x[i] = geo ? (a > 0 ? a * std::pow(b / a, f) : b * std::pow(a / b, 1 - f))
                       : a + (b - a) * f;
        }
        x.front() = a;
        x.back() = b;
        return x;
    }
    std::vector<double> detect_inflections() const
    {
        auto x = nodes(lo_, hi_, 256);
        std::vector<double> f(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            f[i] = logf_(x[i]);
        std::vector<double> out;
        int last = 0;
        for (std::size_t i = 1; i + 1 < x.size(); ++i)
        {
            double d1 = (f[i] - f[i - 1]) / (x[i] - x[i - 1]);
            double d2 = (f[i + 1] - f[i]) / (x[i + 1] - x[i]);
            double curv = d2 - d1;
            double scale = 1e-9 * (std::abs(d1) + std::abs(d2)) + 1e-300;
            int sgn = curv > scale ? 1 : (curv < -scale ? -1 : 0);
            if (sgn != 0 && last != 0 && sgn != last)
                out.push_back(x[i]);
            if (sgn != 0)
                last = sgn;
        }
        return out;
    }
    void build_piece(double a, double b, int n)
    {
        auto q = nodes(a, b, n);
        std::vector<double> fq(q.size());
        for (std::size_t i = 0; i < q.size(); ++i)
            fq[i] = logf_(q[i]);
        // curvature from the middle of the piece
        double m = geometric(a, b) ? std::sqrt(a * b) * (a > 0 ? 1 : -1) : 0.5 * (a + b);
        double h = 1e-3 * (b - a);
        if (geometric(a, b))
            h = 1e-3 * std::abs(m);
        double curv = logf_(m + h) - 2 * logf_(m) + logf_(m - h);
        bool concave = curv < 0;
        for (std::size_t i = 0; i + 1 < q.size(); ++i)
        {
            Segment s{q[i], q[i + 1], 0, 0, 0};
            if (concave)
            {
                double mid = 0.5 * (q[i] + q[i + 1]);
                double dh = 1e-5 * (q[i + 1] - q[i]);
                double slope = (logf_(mid + dh) - logf_(mid - dh)) / (2 * dh);
                s.slope = slope;
                s.c = logf_(mid) + slope * (q[i] - mid);
            }
            else
            {
                s.slope = (fq[i + 1] - fq[i]) / (q[i + 1] - q[i]);
                s.c = fq[i];
            }
            // guard against a misplaced inflection: lift by the worst violation
            double worst = 0;
            for (int j = 0; j <= 16; ++j)
            {
                double x = s.x0 + (s.x1 - s.x0) * j / 16.0;
                double gap = logf_(x) - (s.c + s.slope * (x - s.x0));
                if (std::isfinite(gap))
                    worst = std::max(worst, gap);
            }
            if (worst > 0)
                s.c += 1.05 * worst + 1e-12;
            segs_.push_back(s);
        }
    }
    void finalize()
    {
        double mx = -std::numeric_limits<double>::infinity();
        for (auto& s : segs_)
        {
            double L = s.x1 - s.x0;
            double sl = s.slope * L;
            if (std::abs(sl) < 1e-12)
                s.log_mass = s.c + std::log(L);
            else if (sl > 0)
                s.log_mass = s.c + sl + std::log(-std::expm1(-sl)) - std::log(s.slope);
            else
                s.log_mass = s.c + std::log(-std::expm1(sl)) - std::log(-s.slope);
            mx = std::max(mx, s.log_mass);
        }
        double tot = 0;
        for (auto const& s : segs_)
            tot += std::exp(s.log_mass - mx);
        log_total_ = mx + std::log(tot);
        double acc = 0;
        cum_.clear();
        for (auto const& s : segs_)
        {
            acc += std::exp(s.log_mass - mx) / tot;
            cum_.push_back(acc);
        }
        cum_.back() = 1;
    }
};

struct EnvelopeDraws
{
    std::vector<double> samples;
    double acceptance_rate{0};
};

inline EnvelopeDraws envelope_rejection_sample(std::function<double(double)> log_density,
                                               double lo, double hi, std::size_t n,
                                               RngStream& rng)
{
    EnvelopeSampler s(std::move(log_density), lo, hi);
    EnvelopeDraws out;
    out.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.samples.push_back(s.draw(rng));
    out.acceptance_rate = s.acceptance_rate();
    return out;
}

}  // namespace trawlkit
