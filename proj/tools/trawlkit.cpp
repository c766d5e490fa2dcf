// SPDX-License-Identifier: Apache-2.0
//! \file tools/trawlkit.cpp
//! Command-line front end: simulate, simulate-field, estimate-slices, experiment, rerun.
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trawlkit/trawlkit.hpp"

using namespace trawlkit;
using json = nlohmann::ordered_json;

namespace
{
constexpr int exit_config = 2;
constexpr int exit_numeric = 3;
constexpr int exit_other = 1;

//! Files are staged here and only written once the whole run succeeded.
struct Outputs
{
    std::vector<std::pair<std::string, std::string>> files;
    std::string stdout_text;
    json notes = json::object();

    void add(std::string const& path, std::string content)
    {
        if (path.empty() || path == "-")
            stdout_text += content;
        else
            files.emplace_back(path, std::move(content));
    }
};

struct Common
{
    std::uint64_t rng{1};
    std::string out;
    std::string manifest;
};

//---------------------------------------------------------------------------//
// simulate

struct SimulateOpts
{
    std::string method{"slice"};
    std::string trawl{"exponential(1)"};
    std::string seed{"gaussian(0,1)"};
    std::size_t k{1000};
    double tau{0.5};
    double eps{0.01};
    std::size_t nt{10};
    std::size_t nx{10};
    std::optional<double> horizon;
    std::string trunc_rows{"none"};
    std::string dump_atoms;
    std::string kernel{"const(1)"};
    std::string vol;
};

json extended(std::vector<ExtendedReal> const& v)
{
    json a = json::array();
    for (auto const& e : v)
    {
        if (e.is_finite())
            a.push_back(e.value());
        else
            a.push_back(e.kind() == ExtendedReal::Kind::infinite ? "inf" : "undefined");
    }
    return a;
}

std::string atoms_csv(std::vector<JumpAtom> const& atoms)
{
    std::vector<std::vector<double>> rows;
    rows.reserve(atoms.size());
    for (auto const& a : atoms)
        rows.push_back({a.t, a.x, a.y});
    return table_csv({"t", "x", "y"}, rows);
}

void run_simulate(SimulateOpts const& o, Common const& c, Outputs& out)
{
    auto trawl = parse_trawl(o.trawl);
    auto seed = parse_seed(o.seed);
    TRAWLKIT_REQUIRE(o.k >= 1, "--k must be >= 1");
    TRAWLKIT_REQUIRE(o.tau > 0, "--tau must be positive");
    RngStream rng(c.rng);

    if (o.method == "slice")
    {
        std::optional<std::size_t> n_trunc;
        if (o.trunc_rows == "auto")
        {
            if (!trawl.bounded())
                n_trunc = choose_truncation_rows(slice_areas_unbounded(trawl, o.tau, o.k));
        }
        else if (o.trunc_rows != "none")
        {
            double n = parse_number(o.trunc_rows);
            TRAWLKIT_REQUIRE(n >= 1 && n == std::floor(n), "--trunc-rows must be auto, none or n >= 1");
            n_trunc = std::size_t(n);
        }
        auto run = simulate_slice(trawl, seed, o.k, o.tau, n_trunc, rng);
        out.add(c.out, time_series_csv(o.tau, run.values));
        if (!run.dropped_area.empty())
        {
            json side{{"mean", extended(run.error_mean)}, {"var", extended(run.error_var)},
                      {"dropped_area", run.dropped_area}};
            if (!c.out.empty() && c.out != "-")
                out.add(c.out + ".errors.json", side.dump(2) + "\n");
            out.notes["truncation_rows"] = *n_trunc;
        }
        return;
    }
    if (o.method == "grid")
    {
        GridConfig g;
        g.Nt = o.nt;
        g.Nx = o.nx;
        g.tau = o.tau;
        g.k = o.k;
        g.T = o.horizon ? *o.horizon : default_horizon(trawl);
        g.validate();
        out.add(c.out, time_series_csv(o.tau, simulate_grid(trawl, seed, g, rng)));
        out.notes["horizon"] = g.T;
        out.notes["included_area"] = included_area(trawl, g);
        out.notes["total_area"] = trawl.total_area();
        return;
    }
    if (o.method == "cpp")
    {
        TRAWLKIT_REQUIRE(o.eps > 0, "--eps must be positive");
        auto run = simulate_trawl_full(trawl, seed, o.k, o.tau, rng, FullSimOptions{o.eps, {}});
        out.add(c.out, time_series_csv(o.tau, run.values));
        if (!o.dump_atoms.empty())
            out.add(o.dump_atoms, atoms_csv(run.jumps.atoms));
        out.notes["atoms"] = run.jumps.atoms.size();
        return;
    }
    if (o.method == "kw" || o.method == "vm")
    {
        auto K = parse_kernel(o.kernel);
        TRAWLKIT_REQUIRE(o.method == "kw" || !o.vol.empty(), "--method vm needs --vol");
        if (o.vol.empty())
        {
            auto run = simulate_kw(trawl, K, nullptr, seed, o.eps, o.k, o.tau, rng);
            out.add(c.out, time_series_csv(o.tau, run.values));
            if (!o.dump_atoms.empty())
                out.add(o.dump_atoms, atoms_csv(run.atoms));
            return;
        }
        auto vs = parse_vol(o.vol);
        std::variant<VolatilityPath, VolTrawlSpec> vol;
        if (vs.constant)
        {
            double start = vol_grid_start(trawl, o.tau, -10);
            vol = VolatilityPath::constant(*vs.constant, start, double(o.k) * o.tau, o.tau);
        }
        else
            vol = *vs.trawl;
        auto run = simulate_vm_trawl(trawl, K, vol, seed, o.k, o.tau, rng, o.eps);
        std::vector<double> s2(o.k);
        for (std::size_t l = 0; l < o.k; ++l)
            s2[l] = run.vol.sigma2_at(double(l + 1) * o.tau);
        out.add(c.out, time_series_csv(o.tau, run.x.values, &s2));
        if (!o.dump_atoms.empty())
            out.add(o.dump_atoms, atoms_csv(run.x.atoms));
        out.notes["vol_grid"] = {{"start", run.vol.start}, {"step", run.vol.step},
                                 {"n", run.vol.size()}};
        return;
    }
    throw ConfigError("unknown method '" + o.method + "' (grid, cpp, slice, kw, vm)");
}

//---------------------------------------------------------------------------//
// ambit fields

struct FieldOpts
{
    std::string table;
    std::string trawl;
    std::string seed{"gaussian(0,1)"};
    std::string kernel;
    std::size_t kt{100};
    std::size_t ks{100};
    double tau{0.5};
    double dx{0.5};
    double n{1e6};
    double eps{0.01};
};

std::string field_csv(Field const& f, double tau, double dx)
{
    std::string s = "# ks,kt,tau,dx\n# " + std::to_string(f.rows()) + "," +
                    std::to_string(f.cols()) + "," + format_double(tau) + "," +
                    format_double(dx) + "\n";
    for (Eigen::Index i = 0; i < f.rows(); ++i)
    {
        for (Eigen::Index j = 0; j < f.cols(); ++j)
        {
            if (j)
                s += ',';
            s += format_double(f(i, j));
        }
        s += '\n';
    }
    return s;
}

std::uint64_t sample_count(double n)
{
    TRAWLKIT_REQUIRE(n >= 1 && n == std::floor(n) && n < 1e15, "--n must be a positive integer");
    return std::uint64_t(n);
}

AmbitKernel parse_ambit_kernel(std::string const& s)
{
    auto c = parse_call(s);
    std::string n = c.name;
    if (n == "const")
    {
        BoundArgs b(c, {"value"});
        double v = b.num("value", 1);
        return [v](double, double, double, double) { return v; };
    }
    if (n == "exp_ou")
    {
        BoundArgs b(c, {"lambda"});
        double l = b.num("lambda");
        return shift_kernel([l](double u, double) { return std::exp(l * u); });
    }
    throw ConfigError("unknown ambit kernel '" + n + "' (const, exp_ou)");
}

void run_field(FieldOpts const& o, Common const& c, Outputs& out)
{
    auto seed = parse_seed(o.seed);
    TRAWLKIT_REQUIRE(o.kt >= 1 && o.ks >= 1, "--kt and --ks must be >= 1");
    RngStream rng(c.rng);
    if (!o.table.empty())
    {
        auto tab = load_table(o.table);
        if (!o.kernel.empty())
        {
            TRAWLKIT_REQUIRE(!o.trawl.empty(), "a kernel-weighted field needs --trawl");
            auto trawl = parse_trawl(o.trawl);
            auto run = simulate_general_ambit(trawl, tab, parse_ambit_kernel(o.kernel), nullptr,
                                              seed, o.kt, o.ks, o.eps, rng);
            out.add(c.out, field_csv(run.values, tab.tau, tab.dx));
            return;
        }
        out.add(c.out, field_csv(slice_partition_field(tab, seed, o.kt, o.ks, rng), tab.tau, tab.dx));
        out.notes["table_keys"] = tab.entries.size();
        return;
    }
    TRAWLKIT_REQUIRE(!o.trawl.empty(), "simulate-field needs --table or --trawl");
    TRAWLKIT_REQUIRE(o.kernel.empty(), "a kernel-weighted field needs --table");
    auto trawl = parse_trawl(o.trawl);
    auto f = slice_partition_field_unbounded(trawl, seed, o.kt, o.ks, o.tau, o.dx,
                                             sample_count(o.n), rng);
    out.add(c.out, field_csv(f, o.tau, o.dx));
}

struct EstimateOpts
{
    std::string trawl{"rectangle(-1)"};
    double tau{0.5};
    double dx{0.5};
    double n{1e6};
    std::size_t points{256};
};

void run_estimate(EstimateOpts const& o, Common const& c, Outputs& out)
{
    auto trawl = parse_trawl(o.trawl);
    TRAWLKIT_REQUIRE(!c.out.empty() && c.out != "-", "estimate-slices needs --out");
    RngStream rng(c.rng);
    auto tab = slice_estimation(trawl, o.tau, o.dx, sample_count(o.n), rng, o.points);
    bool csv = c.out.size() >= 4 && c.out.substr(c.out.size() - 4) == ".csv";
    std::ostringstream os;
    if (csv)
        write_table_csv(tab, os);
    else
        write_table_binary(tab, os);
    out.add(c.out, os.str());
    out.notes["keys"] = tab.entries.size();
    out.notes["area"] = tab.total_area();
    out.notes["exact_area"] = trawl.total_area();
    out.notes["coverage_bound"] = tab.coverage_bound();
}

//---------------------------------------------------------------------------//
// experiments

struct ExperimentOpts
{
    std::string trawl{"exponential(1)"};
    std::string seed{"gaussian(0,1)"};
    double tau{0.5};
    std::size_t points{1000};
    std::size_t runs{500};
    std::size_t max_lag{5};
    double k{2}, theta{3}, lambda{1};
    std::vector<double> deltas{0.1, 0.075, 0.05, 0.025, 0};
    std::string kind{"grid"};
    std::vector<double> levels;
    std::optional<double> horizon;
};

std::string report_csv(ConvergenceReport const& r)
{
    std::vector<std::vector<double>> rows;
    for (auto const& x : r.rows)
        rows.push_back({x.parameter, x.empirical, x.se, x.theory, x.bound});
    return "# method=" + r.method + ",seed=" + std::to_string(r.seed) +
           ",reps=" + std::to_string(r.reps) + ",empirical_slope=" +
           format_double(r.empirical_slope) + ",theory_slope=" + format_double(r.theory_slope) +
           "\n" + table_csv({"parameter", "empirical", "se", "theory", "bound"}, rows);
}

void run_experiment(std::string const& which, ExperimentOpts const& o, Common const& c,
                    Outputs& out)
{
    if (which == "acf")
    {
        auto e = acf_experiment(parse_trawl(o.trawl), parse_seed(o.seed), o.tau, o.points,
                                o.runs, o.max_lag, c.rng);
        std::vector<std::vector<double>> rows;
        for (std::size_t h = 0; h < e.mean.size(); ++h)
            rows.push_back({double(h + 1), e.mean[h], e.se[h], e.theory[h]});
        out.add(c.out, table_csv({"lag", "mean", "se", "theory"}, rows));
        return;
    }
    if (which == "gmm")
    {
        GmmSpec spec;
        spec.tau = o.tau;
        std::vector<std::vector<double>> rows;
        for (std::size_t d = 0; d < o.deltas.size(); ++d)
        {
            auto e = gmm_experiment(o.k, o.theta, o.lambda, o.tau, o.points, o.runs, o.deltas[d],
                                    spec, RngStream(c.rng).split(d).key());
            rows.push_back({o.deltas[d], e.median_abs(e.k), e.median_abs(e.theta),
                            e.median_abs(e.lambda)});
        }
        out.add(c.out, table_csv({"delta", "median_abs_k", "median_abs_theta",
                                  "median_abs_lambda"},
                                 rows));
        return;
    }
    if (which == "mse")
    {
        auto trawl = parse_trawl(o.trawl);
        auto seed = parse_seed(o.seed);
        TRAWLKIT_REQUIRE(!o.levels.empty(), "experiment mse needs --levels");
        ConvergenceReport r;
        if (o.kind == "grid")
            r = grid_convergence(trawl, seed, o.levels,
                                 o.horizon ? *o.horizon : default_horizon(trawl), o.runs, c.rng);
        else if (o.kind == "cpp")
            r = cpp_convergence(trawl, levy_triplet(seed).measure, o.levels, o.runs, c.rng, o.tau);
        else if (o.kind == "slice")
        {
            std::vector<std::size_t> ks;
            for (double v : o.levels)
            {
                TRAWLKIT_REQUIRE(v >= 1 && v == std::floor(v), "slice levels are point counts");
                ks.push_back(std::size_t(v));
            }
            r = slice_convergence(trawl, seed, ks, o.tau, {}, c.rng);
        }
        else
            throw ConfigError("unknown --kind '" + o.kind + "' (grid, cpp, slice)");
        out.add(c.out, report_csv(r));
        return;
    }
    throw ConfigError("unknown experiment '" + which + "' (acf, gmm, mse)");
}

//---------------------------------------------------------------------------//
// manifest

json option_echo(CLI::App const& sub)
{
    json o = json::object();
    for (CLI::Option const* opt : sub.get_options())
    {
        std::string name = opt->get_single_name();
        if (name == "help" || name == "config" || name == "manifest" || opt->count() == 0)
            continue;
        if (opt->get_type_size() == 0)
            o[name] = true;
        else if (opt->get_expected_max() > 1)
            o[name] = opt->results();
        else
            o[name] = opt->results().front();
    }
    return o;
}

std::vector<std::string> args_from_manifest(json const& m)
{
    TRAWLKIT_REQUIRE(m.contains("command") && m.contains("options"),
                     "manifest lacks command/options");
    std::vector<std::string> a;
    for (auto const& w : m["command"])
        a.push_back(w.get<std::string>());
    for (auto const& [k, v] : m["options"].items())
    {
        a.push_back("--" + k);
        if (v.is_boolean())
            continue;
        if (v.is_array())
            for (auto const& x : v)
                a.push_back(x.get<std::string>());
        else
            a.push_back(v.get<std::string>());
    }
    return a;
}

//! key = value lines; [sections] and # comments are ignored, [a, b] is a list
std::vector<std::pair<std::string, std::vector<std::string>>> read_config(std::string const& path)
{
    std::vector<std::pair<std::string, std::vector<std::string>>> kv;
    std::istringstream is(read_file(path));
    std::string line;
    auto trim = [](std::string x) {
        auto b = x.find_first_not_of(" \t\r");
        auto e = x.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : x.substr(b, e - b + 1);
    };
    auto unquote = [&](std::string x) {
        x = trim(x);
        if (x.size() >= 2 && (x.front() == '"' || x.front() == '\'') && x.back() == x.front())
            x = x.substr(1, x.size() - 2);
        return x;
    };
    while (std::getline(is, line))
    {
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[')
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line without '=': " + line);
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        std::replace(key.begin(), key.end(), '_', '-');
        std::vector<std::string> vals;
        if (!val.empty() && val.front() == '[')
        {
            TRAWLKIT_REQUIRE(val.back() == ']', "unterminated list in config: " + line);
            std::istringstream vs(val.substr(1, val.size() - 2));
            std::string item;
            while (std::getline(vs, item, ','))
                if (!trim(item).empty())
                    vals.push_back(unquote(item));
        }
        else
            vals.push_back(unquote(val));
        kv.emplace_back(key, vals);
    }
    return kv;
}

//! Splices config entries not given on the command line in front of the flags
std::vector<std::string> expand_config(std::vector<std::string> args)
{
    auto it = std::find(args.begin(), args.end(), "--config");
    if (it == args.end() || it + 1 == args.end())
        return args;
    std::string path = *(it + 1);
    std::vector<std::string> extra;
    for (auto const& [k, v] : read_config(path))
    {
        if (std::find(args.begin(), args.end(), "--" + k) != args.end())
            continue;
        extra.push_back("--" + k);
        extra.insert(extra.end(), v.begin(), v.end());
    }
    std::size_t at = 1;
    if (args.size() > 1 && args[0] == "experiment" && args[1].rfind("-", 0) != 0)
        at = 2;
    args.insert(args.begin() + std::ptrdiff_t(std::min(at, args.size())), extra.begin(),
                extra.end());
    return args;
}

int dispatch(std::vector<std::string> args)
{
    args = expand_config(std::move(args));
    CLI::App app{"Trawl process and ambit field simulation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", TRAWLKIT_VERSION);

    Common common;
    SimulateOpts so;
    FieldOpts fo;
    EstimateOpts eo;
    ExperimentOpts xo;
    std::string which, manifest_in, rerun_out;

    auto add_common = [&](CLI::App* s) {
        s->add_option("--config", "structured text file of key = value options");
        s->add_option("--rng", common.rng, "master 64-bit seed");
        s->add_option("--out", common.out, "output path; '-' or empty for stdout");
        s->add_option("--manifest", common.manifest, "run manifest path (default <out>.manifest.json)");
    };

    auto* sim = app.add_subcommand("simulate", "simulate a trawl process");
    add_common(sim);
    sim->add_option("--method", so.method, "grid, cpp, slice, kw or vm");
    sim->add_option("--trawl", so.trawl);
    sim->add_option("--seed-dist", so.seed);
    sim->add_option("--k", so.k);
    sim->add_option("--tau", so.tau);
    sim->add_option("--eps", so.eps, "jump truncation level");
    sim->add_option("--nt", so.nt, "grid cells per tau");
    sim->add_option("--nx", so.nx, "grid cells in height");
    sim->add_option("--horizon", so.horizon, "grid horizon T < 0");
    sim->add_option("--trunc-rows", so.trunc_rows, "auto, none or a row count");
    sim->add_option("--dump-atoms", so.dump_atoms, "CSV of jump atoms t,x,y");
    sim->add_option("--kernel", so.kernel);
    sim->add_option("--vol", so.vol);

    auto* field = app.add_subcommand("simulate-field", "simulate an ambit field");
    add_common(field);
    field->add_option("--table", fo.table, "minimal slice table from estimate-slices");
    field->add_option("--trawl", fo.trawl);
    field->add_option("--seed-dist", fo.seed);
    field->add_option("--kernel", fo.kernel, "const(v) or exp_ou(lambda)");
    field->add_option("--kt", fo.kt);
    field->add_option("--ks", fo.ks);
    field->add_option("--tau", fo.tau);
    field->add_option("--dx", fo.dx);
    field->add_option("--n", fo.n, "Monte Carlo samples without a table");
    field->add_option("--eps", fo.eps);

    auto* est = app.add_subcommand("estimate-slices", "estimate minimal slice areas");
    add_common(est);
    est->add_option("--trawl", eo.trawl);
    est->add_option("--tau", eo.tau);
    est->add_option("--dx", eo.dx);
    est->add_option("--n", eo.n);
    est->add_option("--points-per-key", eo.points);

    auto* exp = app.add_subcommand("experiment", "run acf, gmm or mse experiments");
    add_common(exp);
    exp->add_option("which", which, "acf, gmm or mse")->required();
    exp->add_option("--trawl", xo.trawl);
    exp->add_option("--seed-dist", xo.seed);
    exp->add_option("--tau", xo.tau);
    exp->add_option("--points", xo.points);
    exp->add_option("--runs", xo.runs, "runs, repetitions per level");
    exp->add_option("--max-lag", xo.max_lag);
    exp->add_option("--k", xo.k);
    exp->add_option("--theta", xo.theta);
    exp->add_option("--lambda", xo.lambda);
    exp->add_option("--deltas", xo.deltas, "grid steps; 0 means slice partition");
    exp->add_option("--kind", xo.kind, "grid, cpp or slice");
    exp->add_option("--levels", xo.levels);
    exp->add_option("--horizon", xo.horizon);

    auto* rerun = app.add_subcommand("rerun", "repeat a run from its manifest");
    rerun->add_option("manifest", manifest_in)->required();
    rerun->add_option("--out", rerun_out, "override the output path");

    try
    {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    }
    catch (CLI::ParseError const& e)
    {
        int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    if (rerun->parsed())
    {
        json m = json::parse(read_file(manifest_in));
        if (m.contains("options"))
        {
            m["options"].erase("out");
            m["options"].erase("manifest");
        }
        auto a = args_from_manifest(m);
        if (!rerun_out.empty())
        {
            a.push_back("--out");
            a.push_back(rerun_out);
            a.push_back("--manifest");
            a.push_back(rerun_out + ".manifest.json");
        }
        else
            throw ConfigError("rerun needs --out so the original output is kept");
        return dispatch(a);
    }

    auto t0 = std::chrono::steady_clock::now();
    Outputs out;
    CLI::App* used = nullptr;
    json command = json::array();
    if (sim->parsed())
    {
        used = sim;
        run_simulate(so, common, out);
    }
    else if (field->parsed())
    {
        used = field;
        run_field(fo, common, out);
    }
    else if (est->parsed())
    {
        used = est;
        run_estimate(eo, common, out);
    }
    else
    {
        used = exp;
        run_experiment(which, xo, common, out);
    }
    command.push_back(used->get_name());
    if (used == exp)
        command.push_back(which);

    std::string mpath = common.manifest;
    if (mpath.empty() && !common.out.empty() && common.out != "-")
        mpath = common.out + ".manifest.json";
    if (!mpath.empty())
    {
        json opts = option_echo(*used);
        opts.erase("which");
        json m{{"tool", "trawlkit"},
               {"version", TRAWLKIT_VERSION},
               {"command", command},
               {"options", opts},
               {"threads", thread_count()},
               {"outputs", json::array()},
               {"notes", out.notes},
               {"errors", json::array()}};
        for (auto const& f : out.files)
            m["outputs"].push_back(f.first);
        m["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.files.emplace_back(mpath, m.dump(2) + "\n");
    }
    for (auto const& [p, content] : out.files)
        write_file_atomic(p, content);
    std::cout << out.stdout_text;
    return 0;
}
}  // namespace

int main(int argc, char** argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    try
    {
        return dispatch(args);
    }
    catch (ConfigError const& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }
    catch (NumericError const& e)
    {
        std::cerr << "numeric error: " << e.what() << "\n";
        return exit_numeric;
    }
    catch (nlohmann::json::exception const& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return exit_other;
    }
}
