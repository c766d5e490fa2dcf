// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/io.hpp
//! CSV output with shortest round-trip numbers.
#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace trawlkit
{
//! Shortest decimal that parses back to the same double
inline std::string format_double(double v)
{
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{})
        throw NumericError("cannot format a number");
    return std::string(buf, p);
}

//! time,value[,sigma2] rows at l tau, l = 1..k
inline std::string time_series_csv(double tau, std::vector<double> const& values,
                                   std::vector<double> const* sigma2 = nullptr)
{
    std::string s = sigma2 ? "time,value,sigma2\n" : "time,value\n";
    for (std::size_t l = 0; l < values.size(); ++l)
    {
        s += format_double(double(l + 1) * tau);
        s += ',';
        s += format_double(values[l]);
        if (sigma2)
        {
            s += ',';
            s += format_double((*sigma2)[l]);
        }
        s += '\n';
    }
    return s;
}

//! Comma-separated header then rows
inline std::string table_csv(std::vector<std::string> const& header,
                             std::vector<std::vector<double>> const& rows)
{
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i)
        s += (i ? "," : "") + header[i];
    s += '\n';
    for (auto const& r : rows)
    {
        for (std::size_t i = 0; i < r.size(); ++i)
        {
            if (i)
                s += ',';
            s += format_double(r[i]);
        }
        s += '\n';
    }
    return s;
}

/*!
 * Writes through a temporary sibling and renames, so a failed run leaves no
 * partial file.
 */
inline void write_file_atomic(std::string const& path, std::string const& content)
{
    std::filesystem::path p(path);
    std::filesystem::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw ConfigError("cannot open '" + tmp.string() + "' for writing");
        os << content;
        if (!os.flush())
            throw ConfigError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, p, ec);
    if (ec)
    {
        std::filesystem::remove(tmp, ec);
        throw ConfigError("cannot move output into '" + path + "'");
    }
}

inline std::string read_file(std::string const& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace trawlkit
