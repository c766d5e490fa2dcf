// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/config.hpp
//! Text specs such as "gamma(shape=2, scale=3)" or "trawl(exponential(1), gamma(2, 1))".
#pragma once

#include <cctype>
#include <charconv>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "kernel_vol.hpp"
#include "levy.hpp"
#include "trawl_geometry.hpp"

namespace trawlkit
{
//! name(arg, key=arg, ...); an argument is a number, a bare word or a nested call
struct CallSpec
{
    struct Arg
    {
        std::string key;   //!< empty for positional
        std::string text;  //!< source text of the value
        std::shared_ptr<CallSpec> call;
    };

    std::string name;
    std::vector<Arg> args;
    bool has_parens{false};
};

namespace detail
{
class SpecParser
{
  public:
    explicit SpecParser(std::string_view s) : s_(s) {}

    CallSpec parse_all()
    {
        CallSpec c = call();
        skip();
        if (p_ != s_.size())
            fail("trailing characters");
        return c;
    }

  private:
    std::string_view s_;
    std::size_t p_{0};

    [[noreturn]] void fail(std::string const& what) const
    {
        throw ConfigError("cannot parse spec '" + std::string(s_) + "': " + what + " at offset " +
                          std::to_string(p_));
    }
    void skip()
    {
        while (p_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[p_])))
            ++p_;
    }
    bool word_char(char c) const
    {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' ||
               c == '+' || c == '/';
    }
    std::string word()
    {
        skip();
        if (p_ < s_.size() && (s_[p_] == '"' || s_[p_] == '\''))
        {
            char q = s_[p_++];
            auto e = s_.find(q, p_);
            if (e == std::string_view::npos)
                fail("unterminated quote");
            std::string w(s_.substr(p_, e - p_));
            p_ = e + 1;
            return w;
        }
        std::size_t b = p_;
        while (p_ < s_.size() && word_char(s_[p_]))
            ++p_;
        if (b == p_)
            fail("expected a name or value");
        return std::string(s_.substr(b, p_ - b));
    }
    CallSpec call()
    {
        CallSpec c;
        c.name = word();
        skip();
        if (p_ < s_.size() && s_[p_] == '(')
        {
            c.has_parens = true;
            ++p_;
            skip();
            if (p_ < s_.size() && s_[p_] == ')')
            {
                ++p_;
                return c;
            }
            for (;;)
            {
                CallSpec::Arg a;
                std::size_t b = p_;
                auto v = std::make_shared<CallSpec>(call());
                skip();
                if (p_ < s_.size() && s_[p_] == '=')
                {
                    if (v->has_parens)
                        fail("a call cannot be a key");
                    a.key = v->name;
                    ++p_;
                    skip();
                    b = p_;
                    v = std::make_shared<CallSpec>(call());
                }
                skip();
                a.text = std::string(s_.substr(b, p_ - b));
                while (!a.text.empty() && std::isspace(static_cast<unsigned char>(a.text.back())))
                    a.text.pop_back();
                if (v->has_parens)
                    a.call = v;
                else
                    a.text = v->name;
                c.args.push_back(std::move(a));
                if (p_ < s_.size() && s_[p_] == ',')
                {
                    ++p_;
                    continue;
                }
                if (p_ < s_.size() && s_[p_] == ')')
                {
                    ++p_;
                    break;
                }
                fail("expected ',' or ')'");
            }
        }
        return c;
    }
};
}  // namespace detail

inline CallSpec parse_call(std::string_view s) { return detail::SpecParser(s).parse_all(); }

inline double parse_number(std::string const& s)
{
    double v = 0;
    char const* b = s.data();
    char const* e = b + s.size();
    if (!s.empty() && *b == '+')
        ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || ptr != e || !std::isfinite(v))
        throw ConfigError("not a finite number: '" + s + "'");
    return v;
}

/*!
 * Binds positional and named arguments of a call to a fixed parameter list.
 *
 * Every argument must be consumed; unknown or duplicate names are errors.
 */
class BoundArgs
{
  public:
    BoundArgs(CallSpec const& c, std::vector<std::string> params) : name_(c.name)
    {
        std::size_t pos = 0;
        bool named_seen = false;
        for (auto const& a : c.args)
        {
            std::string key = a.key;
            if (key.empty())
            {
                if (named_seen)
                    throw ConfigError(name_ + ": positional argument after a named one");
                if (pos >= params.size())
                    throw ConfigError(name_ + ": too many arguments");
                key = params[pos++];
            }
            else
            {
                named_seen = true;
                if (std::find(params.begin(), params.end(), key) == params.end())
                    throw ConfigError(name_ + ": unknown parameter '" + key + "'");
            }
            if (!vals_.emplace(key, &a).second)
                throw ConfigError(name_ + ": parameter '" + key + "' given twice");
        }
    }

    bool has(std::string const& k) const { return vals_.count(k) > 0; }

    CallSpec::Arg const& arg(std::string const& k) const
    {
        auto it = vals_.find(k);
        if (it == vals_.end())
            throw ConfigError(name_ + ": missing parameter '" + k + "'");
        return *it->second;
    }

    double num(std::string const& k) const
    {
        auto const& a = arg(k);
        if (a.call)
            throw ConfigError(name_ + ": parameter '" + k + "' must be a number");
        return parse_number(a.text);
    }
    double num(std::string const& k, double def) const { return has(k) ? num(k) : def; }
    std::string text(std::string const& k) const { return arg(k).text; }

  private:
    std::string name_;
    std::map<std::string, CallSpec::Arg const*> vals_;
};

namespace detail
{
inline std::string lower(std::string s)
{
    for (char& c : s)
        c = char(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline CallSpec const& call_of(CallSpec::Arg const& a, CallSpec& holder)
{
    if (a.call)
        return *a.call;
    holder = parse_call(a.text);
    return holder;
}
}  // namespace detail

//---------------------------------------------------------------------------//
// Seeds

inline LevySeed parse_seed(CallSpec const& c)
{
    std::string n = detail::lower(c.name);
    LevySeed s;
    if (n == "gaussian" || n == "normal")
    {
        BoundArgs b(c, {"mu", "sigma2"});
        s = Gaussian{b.num("mu", 0), b.num("sigma2", 1)};
    }
    else if (n == "poisson")
    {
        BoundArgs b(c, {"nu"});
        s = Poisson{b.num("nu")};
    }
    else if (n == "skellam")
    {
        BoundArgs b(c, {"mu1", "mu2"});
        s = Skellam{b.num("mu1"), b.num("mu2")};
    }
    else if (n == "cauchy")
    {
        BoundArgs b(c, {"gamma"});
        s = Cauchy{b.num("gamma", 1)};
    }
    else if (n == "gamma")
    {
        BoundArgs b(c, {"shape", "scale"});
        s = Gamma{b.num("shape"), b.num("scale", 1)};
    }
    else if (n == "ig" || n == "inverse_gaussian")
    {
        BoundArgs b(c, {"delta", "gamma"});
        s = InverseGaussian{b.num("delta"), b.num("gamma")};
    }
    else if (n == "stable")
    {
        BoundArgs b(c, {"alpha", "beta", "c", "mu"});
        s = Stable{b.num("alpha"), b.num("beta", 0), b.num("c", 1), b.num("mu", 0)};
    }
    else
        throw ConfigError("unknown seed distribution '" + c.name + "'");
    validate(s);
    return s;
}

inline LevySeed parse_seed(std::string_view s) { return parse_seed(parse_call(s)); }

//---------------------------------------------------------------------------//
// Trawls

inline TrawlFunction parse_trawl(CallSpec const& c)
{
    std::string n = detail::lower(c.name);
    if (n == "exponential" || n == "exp")
    {
        BoundArgs b(c, {"lambda"});
        return TrawlFunction::exponential(b.num("lambda", 1));
    }
    if (n == "long_memory")
    {
        BoundArgs b(c, {"c", "H"});
        return TrawlFunction::long_memory(b.num("c"), b.num("H"));
    }
    if (n == "triangle")
    {
        BoundArgs b(c, {"T"});
        return TrawlFunction::triangle(b.num("T"));
    }
    if (n == "rectangle")
    {
        BoundArgs b(c, {"T"});
        return TrawlFunction::rectangle(b.num("T"));
    }
    if (n == "csv")
    {
        BoundArgs b(c, {"path"});
        return TrawlFunction::from_csv(b.text("path"));
    }
    throw ConfigError("unknown trawl '" + c.name + "'");
}

inline TrawlFunction parse_trawl(std::string_view s) { return parse_trawl(parse_call(s)); }

//---------------------------------------------------------------------------//
// Kernels

/*!
 * const(v), exp_ou(lambda), cos(omega), sin(omega), linear(a, b) = a + b tbar.
 */
inline Kernel parse_kernel(CallSpec const& c)
{
    std::string n = detail::lower(c.name);
    if (n == "const" || n == "constant")
    {
        BoundArgs b(c, {"value"});
        return ConstantKernel{b.num("value", 1)};
    }
    if (n == "exp_ou")
    {
        BoundArgs b(c, {"lambda", "coef"});
        return TimeShiftedKernel::exponential(b.num("lambda"), b.num("coef", 1));
    }
    if (n == "cos")
    {
        BoundArgs b(c, {"omega", "coef"});
        return TimeShiftedKernel::cosine(b.num("omega", 1), b.num("coef", 1));
    }
    if (n == "sin")
    {
        BoundArgs b(c, {"omega", "coef"});
        return TimeShiftedKernel::sine(b.num("omega", 1), b.num("coef", 1));
    }
    if (n == "linear")
    {
        BoundArgs b(c, {"a", "b"});
        double a = b.num("a", 1), s = b.num("b");
        return SpaceTimeKernel{[a, s](double t, double) { return a + s * t; }, true};
    }
    throw ConfigError("unknown kernel '" + c.name + "'");
}

inline Kernel parse_kernel(std::string_view s) { return parse_kernel(parse_call(s)); }

//---------------------------------------------------------------------------//
// Volatility

//! constant(s2) or trawl(<trawl>, <seed>, step=, start=)
struct VolSpec
{
    std::optional<double> constant;
    std::optional<VolTrawlSpec> trawl;
};

inline VolSpec parse_vol(CallSpec const& c)
{
    std::string n = detail::lower(c.name);
    VolSpec v;
    if (n == "constant" || n == "const")
    {
        BoundArgs b(c, {"sigma2"});
        v.constant = b.num("sigma2", 1);
        TRAWLKIT_REQUIRE(*v.constant >= 0, "constant volatility must be >= 0");
    }
    else if (n == "trawl")
    {
        BoundArgs b(c, {"trawl", "seed", "step", "start"});
        CallSpec h1, h2;
        VolTrawlSpec s{parse_trawl(detail::call_of(b.arg("trawl"), h1)),
                       parse_seed(detail::call_of(b.arg("seed"), h2)), b.num("step", 0.05),
                       b.num("start", -10)};
        TRAWLKIT_REQUIRE(s.step > 0, "volatility step must be positive");
        v.trawl = std::move(s);
    }
    else
        throw ConfigError("unknown volatility '" + c.name + "'");
    return v;
}

inline VolSpec parse_vol(std::string_view s) { return parse_vol(parse_call(s)); }

}  // namespace trawlkit
