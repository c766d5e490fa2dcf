// SPDX-License-Identifier: Apache-2.0
//! \file tests/test_cli.cpp
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "trawlkit/config.hpp"
#include "trawlkit/io.hpp"

using namespace trawlkit;
namespace fs = std::filesystem;

namespace
{
struct Tmp
{
    fs::path dir;
    Tmp()
    {
        dir = fs::temp_directory_path() /
              ("trawlkit_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
               "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Tmp() { fs::remove_all(dir); }
    std::string operator/(std::string const& f) const { return (dir / f).string(); }
};

int run(std::string const& args, std::string const& env = "")
{
    std::string cmd = env + " \"" TRAWLKIT_CLI_PATH "\" " + args + " 2>/dev/null";
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::vector<std::string> lines(std::string const& path)
{
    std::istringstream is(read_file(path));
    std::vector<std::string> out;
    std::string l;
    while (std::getline(is, l))
        out.push_back(l);
    return out;
}

std::string const slice_args =
    "simulate --method slice --trawl \"exponential(1)\" --seed-dist \"gaussian(0,1)\" "
    "--k 1000 --tau 0.5 --rng 42";
}  // namespace

TEST(SpecParser, PositionalAndNamed)
{
    auto g = std::get<Gamma>(parse_seed("gamma(shape=2, scale=3)"));
    EXPECT_EQ(g.shape, 2);
    EXPECT_EQ(g.scale, 3);
    auto g2 = std::get<Gamma>(parse_seed(" gamma( 2 ,scale = 3 ) "));
    EXPECT_EQ(g2.scale, 3);
    auto n = std::get<Gaussian>(parse_seed("gaussian(0,1)"));
    EXPECT_EQ(n.sigma2, 1);
    EXPECT_EQ(std::get<Poisson>(parse_seed("poisson(5)")).nu, 5);
    auto st = std::get<Stable>(parse_seed("stable(1.5, beta=-0.5)"));
    EXPECT_EQ(st.beta, -0.5);
    EXPECT_EQ(st.c, 1);
    EXPECT_EQ(std::get<InverseGaussian>(parse_seed("ig(2,1)")).gamma, 1);
}

TEST(SpecParser, Errors)
{
    EXPECT_THROW(parse_seed("gamm(2,3)"), ConfigError);
    EXPECT_THROW(parse_seed("gamma(2,3"), ConfigError);
    EXPECT_THROW(parse_seed("gamma(2,3,4)"), ConfigError);
    EXPECT_THROW(parse_seed("gamma(shape=2, shape=3)"), ConfigError);
    EXPECT_THROW(parse_seed("gamma(shape=2, 3)"), ConfigError);
    EXPECT_THROW(parse_seed("gamma(k=2)"), ConfigError);
    EXPECT_THROW(parse_seed("gamma(two)"), ConfigError);
    EXPECT_THROW(parse_seed("gamma(-1, 1)"), ConfigError);
    EXPECT_THROW(parse_seed("poisson()"), ConfigError);
}

TEST(SpecParser, TrawlsKernelsVol)
{
    EXPECT_DOUBLE_EQ(parse_trawl("exponential(2)").phi0(), 2);
    EXPECT_TRUE(parse_trawl("triangle(T=-2)").bounded());
    EXPECT_FALSE(parse_trawl("long_memory(0.5, 1.5)").bounded());
    EXPECT_THROW(parse_trawl("square(1)"), ConfigError);

    auto K = parse_kernel("exp_ou(lambda=1)");
    EXPECT_NEAR(kernel_value(K, 2, 1, 0.3), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(kernel_value(parse_kernel("linear(1, 0.1)"), 0, 2, 0), 1.2, 1e-15);
    EXPECT_DOUBLE_EQ(kernel_value(parse_kernel("const(3)"), 0, 2, 0), 3);

    auto v = parse_vol("trawl(long_memory(0.5, 1.5), ig(2, 1), step=0.1)");
    ASSERT_TRUE(v.trawl);
    EXPECT_EQ(v.trawl->step, 0.1);
    EXPECT_EQ(v.trawl->start, -10);
    EXPECT_EQ(*parse_vol("constant(2)").constant, 2);
    EXPECT_THROW(parse_vol("trawl(exponential(1))"), ConfigError);
}

TEST(Format, ShortestRoundTrip)
{
    for (double x : {0.1, 1.0 / 3, 1e-300, -2.5e17, 5e-324})
        EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
    EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Cli, SliceRunsAreByteIdentical)
{
    Tmp t;
    ASSERT_EQ(run(slice_args + " --out " + t / "a.csv"), 0);
    ASSERT_EQ(run(slice_args + " --out " + t / "b.csv"), 0);
    ASSERT_EQ(run(slice_args + " --out " + t / "c.csv", "TRAWLKIT_THREADS=3"), 0);
    auto a = read_file(t / "a.csv");
    EXPECT_EQ(a, read_file(t / "b.csv"));
    EXPECT_EQ(a, read_file(t / "c.csv"));
    auto l = lines(t / "a.csv");
    ASSERT_EQ(l.size(), 1001u);
    EXPECT_EQ(l[0], "time,value");
    EXPECT_EQ(l[1].substr(0, 4), "0.5,");
    EXPECT_TRUE(fs::exists(t / "a.csv.manifest.json"));
}

TEST(Cli, ManifestRerunReproduces)
{
    Tmp t;
    ASSERT_EQ(run(slice_args + " --out " + t / "a.csv"), 0);
    ASSERT_EQ(run("rerun " + t / "a.csv.manifest.json" + " --out " + t / "r.csv"), 0);
    EXPECT_EQ(read_file(t / "a.csv"), read_file(t / "r.csv"));
}

TEST(Cli, ConfigFileMatchesFlags)
{
    Tmp t;
    std::ofstream(t / "run.toml") << "# slice run\nmethod = \"slice\"\ntrawl = \"exponential(1)\"\n"
                                     "seed_dist = \"gaussian(0,1)\"\nk = 1000\ntau = 0.5\nrng = 42\n";
    ASSERT_EQ(run(slice_args + " --out " + t / "a.csv"), 0);
    ASSERT_EQ(run("simulate --config " + t / "run.toml" + " --out " + t / "b.csv"), 0);
    EXPECT_EQ(read_file(t / "a.csv"), read_file(t / "b.csv"));
}

TEST(Cli, InvalidSeedIsConfigErrorWithoutOutput)
{
    Tmp t;
    EXPECT_EQ(run("simulate --seed-dist \"gamm(2,3)\" --out " + t / "x.csv"), 2);
    EXPECT_EQ(run("simulate --k 10 --tau -1 --out " + t / "x.csv"), 2);
    EXPECT_EQ(run("simulate --bogus 1 --out " + t / "x.csv"), 2);
    EXPECT_TRUE(fs::is_empty(t.dir));
}

TEST(Cli, NumericFailureExitCode)
{
    Tmp t;
    // a near-empty Poisson basis gives constant series, so no ACF exists
    int rc = run("experiment acf --trawl \"exponential(1)\" --seed-dist \"poisson(1e-9)\" --runs 2 "
                 "--points 20 --out " + t / "x.csv");
    EXPECT_EQ(rc, 3);
    EXPECT_TRUE(fs::is_empty(t.dir));
}

TEST(Cli, SlicePipelineFieldShape)
{
    Tmp t;
    ASSERT_EQ(run("estimate-slices --trawl \"triangle(-1)\" --tau 0.5 --dx 0.5 --n 1e5 --out " +
                  t / "t.bin"),
              0);
    ASSERT_EQ(run("simulate-field --table " + t / "t.bin" +
                  " --kt 12 --ks 7 --seed-dist \"gamma(2,3)\" --out " + t / "f.csv"),
              0);
    auto l = lines(t / "f.csv");
    ASSERT_EQ(l.size(), 9u);
    EXPECT_EQ(l[0], "# ks,kt,tau,dx");
    EXPECT_EQ(l[1], "# 7,12,0.5,0.5");
    for (std::size_t i = 2; i < l.size(); ++i)
        EXPECT_EQ(std::count(l[i].begin(), l[i].end(), ','), 11);
    EXPECT_EQ(run("simulate-field --table " + t / "missing.bin" + " --out " + t / "g.csv"), 2);
    EXPECT_FALSE(fs::exists(t / "g.csv"));
}

TEST(Cli, MethodsProduceDeclaredColumns)
{
    Tmp t;
    ASSERT_EQ(run("simulate --method grid --trawl \"triangle(-2)\" --k 30 --nt 4 --nx 4 --out " +
                  t / "g.csv"),
              0);
    EXPECT_EQ(lines(t / "g.csv").size(), 31u);
    ASSERT_EQ(run("simulate --method cpp --seed-dist \"poisson(2)\" --k 30 --dump-atoms " +
                  t / "atoms.csv" + " --out " + t / "c.csv"),
              0);
    EXPECT_EQ(lines(t / "atoms.csv")[0], "t,x,y");
    ASSERT_EQ(run("simulate --method vm --trawl \"exponential(0.25)\" --seed-dist \"gaussian(1,1)\""
                  " --vol \"trawl(long_memory(0.5,1.5), ig(2,1))\" --k 40 --out " +
                  t / "v.csv"),
              0);
    auto v = lines(t / "v.csv");
    EXPECT_EQ(v[0], "time,value,sigma2");
    EXPECT_EQ(v.size(), 41u);
    EXPECT_EQ(run("simulate --method vm --k 5 --out " + t / "w.csv"), 2);
}

TEST(Cli, TruncationSidecar)
{
    Tmp t;
    ASSERT_EQ(run("simulate --method slice --trawl \"exponential(1)\" --seed-dist \"gamma(2,3)\" "
                  "--k 50 --tau 0.5 --trunc-rows 5 --out " +
                  t / "s.csv"),
              0);
    auto side = read_file(t / "s.csv.errors.json");
    EXPECT_NE(side.find("\"mean\""), std::string::npos);
    EXPECT_NE(side.find("\"var\""), std::string::npos);
}

TEST(Cli, ExperimentReports)
{
    Tmp t;
    ASSERT_EQ(run("experiment acf --runs 10 --points 200 --out " + t / "acf.csv"), 0);
    auto l = lines(t / "acf.csv");
    EXPECT_EQ(l[0], "lag,mean,se,theory");
    EXPECT_EQ(l.size(), 6u);
    ASSERT_EQ(run("experiment mse --kind slice --levels 5 10 --out " + t / "mse.csv"), 0);
    EXPECT_EQ(lines(t / "mse.csv")[1], "parameter,empirical,se,theory,bound");
    EXPECT_EQ(run("experiment nope --out " + t / "z.csv"), 2);
}
