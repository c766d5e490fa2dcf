// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/rng.hpp
//! Splittable, seedable random streams.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

namespace trawlkit
{
namespace detail
{
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s)
    {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}
}  // namespace detail

/*!
 * A 64-bit Mersenne twister keyed by a seed.
 *
 * Child streams depend only on the parent key and the label, never on how
 * many numbers the parent has produced.
 */
class RngStream
{
  public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed = 0)
        : key_(detail::splitmix64(seed)), engine_(key_)
    {
    }

    RngStream split(std::string_view label) const
    {
        return RngStream(key_ ^ detail::fnv1a(label), tag{});
    }
    RngStream split(std::uint64_t index) const
    {
        return RngStream(detail::splitmix64(key_ + 0x632BE59BD9B4E019ull * (index + 1)),
                         tag{});
    }

    std::uint64_t key() const { return key_; }

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    //! Uniform on the open interval (0, 1)
    double uniform()
    {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal_(engine_); }

    double exponential(double rate = 1)
    {
        return boost::random::exponential_distribution<double>(rate)(engine_);
    }

    //! Gamma with shape k and scale theta; zero shape gives zero.
    double gamma(double shape, double scale)
    {
        if (shape <= 0)
            return 0;
        return boost::random::gamma_distribution<double>(shape, scale)(engine_);
    }

    std::int64_t poisson(double mean)
    {
        if (!(mean > 0))
            return 0;
        if (mean > 1e15)
            return static_cast<std::int64_t>(std::llround(normal(mean, std::sqrt(mean))));
        return boost::random::poisson_distribution<std::int64_t, double>(mean)(engine_);
    }

  private:
    struct tag {};
    RngStream(std::uint64_t key, tag) : key_(detail::splitmix64(key)), engine_(key_) {}

    std::uint64_t key_;
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;
};

}  // namespace trawlkit
