// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/errors.hpp
#pragma once

#include <stdexcept>
#include <string>

namespace trawlkit
{
//! Bad user input: malformed spec, inconsistent parameters, unsupported law.
class ConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

//! A numerical procedure did not reach its tolerance.
class NumericError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

#define TRAWLKIT_REQUIRE(cond, msg)                   \
    do                                                \
    {                                                 \
        if (!(cond))                                  \
            throw ::trawlkit::ConfigError(msg);       \
    } while (0)

}  // namespace trawlkit
