#include <bischrod/experiments.hpp>

#include <CLI11.hpp>

#include <boost/version.hpp>

#include <chrono>
#include <iostream>

using namespace bischrod;
namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_check_failed = 1;
constexpr int exit_usage = 2;
constexpr int exit_numerical = 3;

ojson versions()
{
    return ojson{{"bischrod", "1.0.0"},
                 {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                               std::to_string(EIGEN_MINOR_VERSION)},
                 {"fftw", std::string(fftw_version)},
                 {"boost", std::string(BOOST_LIB_VERSION)},
                 {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                       std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                       std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                 {"compiler", std::string(__VERSION__)}};
}

struct Config
{
    ojson raw;
    ojson parameters = ojson::object();
    std::string output_dir;
    std::uint64_t seed = 1;
};

Config load_config(const std::string& path, const std::string& command)
{
    Config c;
    try
    {
        c.raw = ojson::parse(read_file(path));
    }
    catch (const ojson::parse_error& e)
    {
        throw InvalidInput("config: " + path + " is not valid JSON (" + e.what() + ")");
    }
    detail::require(c.raw.is_object(), "config: top level must be an object");
    for (auto it = c.raw.begin(); it != c.raw.end(); ++it)
    {
        const auto& k = it.key();
        detail::require(k == "command" || k == "parameters" || k == "output_dir" || k == "seed",
                        "config: unknown field \"" + k + "\"");
    }
    if (c.raw.contains("command"))
    {
        detail::require(c.raw["command"].is_string(), "config: field \"command\" must be a string");
        detail::require(c.raw["command"].get<std::string>() == command,
                        "config: field \"command\" is \"" + c.raw["command"].get<std::string>() +
                            "\" but the command line asks for \"" + command + "\"");
    }
    if (c.raw.contains("parameters"))
    {
        detail::require(c.raw["parameters"].is_object(), "config: field \"parameters\" must be an object");
        c.parameters = c.raw["parameters"];
    }
    if (c.raw.contains("output_dir"))
    {
        detail::require(c.raw["output_dir"].is_string(), "config: field \"output_dir\" must be a string");
        c.output_dir = c.raw["output_dir"].get<std::string>();
    }
    if (c.raw.contains("seed"))
    {
        detail::require(c.raw["seed"].is_number_unsigned(), "config: field \"seed\" must be a nonnegative integer");
        c.seed = c.raw["seed"].get<std::uint64_t>();
    }
    return c;
}

std::vector<std::string> run_plot(const ojson& params, const fs::path& out)
{
    ParamReader p(params, "plot");
    const auto inputs = p.strings("inputs", {});
    const auto labels = p.raw("labels", ojson::array());
    const auto title = p.raw("title", "sup-norm decay");
    const auto output = p.raw("output", "decay.svg");
    const double t_min = p.number("t_min", 0.0), t_max = p.number("t_max", INFINITY);
    p.require(labels.is_array() && (labels.empty() || labels.size() == inputs.size()), "labels",
              "must be empty or match inputs");
    p.require(title.is_string(), "title", "must be a string");
    p.require(output.is_string(), "output", "must be a string");
    p.finish();

    std::vector<PlotSeries> series;
    for (std::size_t i = 0; i < inputs.size(); ++i)
    {
        const auto [t, y] = read_decay_series(read_file(inputs[i]));
        DecaySeries s;
        s.times = t;
        s.sup_norms = y;
        const auto fit = fit_decay_exponent(s, t_min, t_max);
        PlotSeries ps;
        ps.label = labels.empty() ? fs::path(inputs[i]).stem().string() : labels[i].get<std::string>();
        ps.x = t;
        ps.y = y;
        ps.slope = -fit.alpha;
        ps.slope_err = fit.alpha_stderr;
        series.push_back(ps);
    }
    const auto name = output.get<std::string>();
    write_file(out / name, loglog_svg(series, title.get<std::string>()));
    return {name};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Decay and resolvent experiments for the discrete bi-Laplacian"};
    std::string command, config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    auto names = command_names();
    names.push_back("plot");
    app.add_option("command", command, "experiment to run")->required()->check(CLI::IsMember(names));
    app.add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    auto* out_opt = app.add_option("--out", out_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", seed, "seed for randomized site selection");
    app.add_option("--threads", threads, "worker threads for independent parameter points")->check(CLI::Range(1, 256));
    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    fs::path out;
    Config cfg;
    const auto start = std::chrono::steady_clock::now();
    try
    {
        cfg = load_config(config_path, command);
        if (*seed_opt)
            cfg.seed = seed;
        out = *out_opt ? fs::path(out_dir) : cfg.output_dir.empty() ? fs::path("out") / command : fs::path(cfg.output_dir);
        fs::create_directories(out);

        ojson manifest{{"command", command}, {"config", cfg.raw}, {"seed", cfg.seed}, {"threads", threads}};
        std::vector<std::string> files;
        bool passed = true;
        if (command == "plot")
        {
            files = run_plot(cfg.parameters, out);
        }
        else
        {
            auto res = run_experiment(command, cfg.parameters, RunContext{cfg.seed, threads});
            const auto text = dump17(res.report);
            // round trip through the schema before anything is written
            validate_report(ojson::parse(text), report_schema(command));
            write_file(out / res.report_name, text);
            files.push_back(res.report_name);
            for (const auto& t : res.tables)
            {
                write_file(out / t.filename, t.str());
                files.push_back(t.filename);
            }
            manifest["parameters"] = res.effective_parameters;
            passed = res.passed();
            for (const auto& c : res.report.at("checks"))
                std::cout << (c.at("passed").get<bool>() ? "PASS " : "FAIL ") << c.at("name").get<std::string>() << "\n";
        }
        manifest["outputs"] = files;
        manifest["versions"] = versions();
        manifest["passed"] = passed;
        manifest["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_file(out / "manifest.json", dump17(manifest));
        std::cout << command << ": " << (passed ? "all checks passed" : "check failed") << " (" << out.string() << ")\n";
        return passed ? exit_ok : exit_check_failed;
    }
    catch (const InvalidInput& e)
    {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    }
    catch (const std::exception& e)
    {
        std::cerr << "numerical failure: " << e.what() << "\n";
        if (out.empty())
            out = fs::path("out") / command;
        try
        {
            ojson diag{{"command", command},
                       {"config", cfg.raw},
                       {"seed", cfg.seed},
                       {"error", e.what()},
                       {"kind", dynamic_cast<const NumericalFailure*>(&e) ? "numerical_failure" : "runtime_error"},
                       {"wall_time_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
            write_file(out / "diagnostic.json", dump17(diag));
        }
        catch (...)
        {
        }
        return exit_numerical;
    }
}
