#pragma once
//
// Experiment commands: validated parameters in, report + tables out.
// The CLI writes the files; everything here is pure computation.
//

#include <bischrod/decay_analysis.hpp>
#include <bischrod/io.hpp>
#include <bischrod/lap_oracle.hpp>
#include <bischrod/threshold_expansion.hpp>

#include <atomic>
#include <exception>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <thread>

namespace bischrod {

struct ExperimentResult
{
    std::string report_name = "report.json";
    ojson report;
    std::vector<CsvTable> tables;
    ojson effective_parameters = ojson::object();
    bool passed() const { return report.at("passed").get<bool>(); }
};

struct RunContext
{
    std::uint64_t seed = 1;
    int threads = 1;
};

/// Reads a parameter map against defaults; unknown keys and wrong types are rejected by name.
class ParamReader
{
public:
    ParamReader(const ojson& params, std::string command) : params_(params), command_(std::move(command))
    {
        detail::require(params_.is_object(), command_ + ": \"parameters\" must be an object");
    }

    double number(const std::string& key, double def)
    {
        const ojson& v = fetch(key, def);
        detail::require(v.is_number(), field(key) + " must be a number");
        return v.get<double>();
    }

    int integer(const std::string& key, int def)
    {
        const ojson& v = fetch(key, def);
        detail::require(v.is_number_integer(), field(key) + " must be an integer");
        return v.get<int>();
    }

    bool boolean(const std::string& key, bool def)
    {
        const ojson& v = fetch(key, def);
        detail::require(v.is_boolean(), field(key) + " must be true or false");
        return v.get<bool>();
    }

    std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed)
    {
        const ojson& v = fetch(key, def);
        detail::require(v.is_string(), field(key) + " must be a string");
        const auto s = v.get<std::string>();
        if (std::find(allowed.begin(), allowed.end(), s) == allowed.end())
        {
            std::string list;
            for (const auto& a : allowed)
                list += (list.empty() ? "" : ", ") + a;
            throw InvalidInput(field(key) + " must be one of {" + list + "}, got \"" + s + "\"");
        }
        return s;
    }

    std::vector<double> numbers(const std::string& key, const std::vector<double>& def)
    {
        const ojson& v = fetch(key, def);
        detail::require(v.is_array() && !v.empty(), field(key) + " must be a non-empty array of numbers");
        std::vector<double> out;
        for (const auto& x : v)
        {
            detail::require(x.is_number(), field(key) + " must contain numbers only");
            out.push_back(x.get<double>());
        }
        return out;
    }

    std::vector<int> integers(const std::string& key, const std::vector<int>& def)
    {
        const ojson& v = fetch(key, def);
        detail::require(v.is_array() && !v.empty(), field(key) + " must be a non-empty array of integers");
        std::vector<int> out;
        for (const auto& x : v)
        {
            detail::require(x.is_number_integer(), field(key) + " must contain integers only");
            out.push_back(x.get<int>());
        }
        return out;
    }

    std::vector<std::string> strings(const std::string& key, const std::vector<std::string>& def)
    {
        const ojson& v = fetch(key, def);
        detail::require(v.is_array() && !v.empty(), field(key) + " must be a non-empty array of strings");
        std::vector<std::string> out;
        for (const auto& x : v)
        {
            detail::require(x.is_string(), field(key) + " must contain strings only");
            out.push_back(x.get<std::string>());
        }
        return out;
    }

    /// Raw value (used for potentials and initial data).
    ojson raw(const std::string& key, const ojson& def) { return fetch(key, def); }

    void require(bool cond, const std::string& key, const std::string& what) const
    {
        detail::require(cond, field(key) + " " + what);
    }

    /// Rejects keys nobody asked for; returns the effective parameter map.
    const ojson& finish() const
    {
        for (auto it = params_.begin(); it != params_.end(); ++it)
            detail::require(seen_.count(it.key()) > 0, command_ + ": unknown parameter \"" + it.key() + "\"");
        return effective_;
    }

private:
    std::string field(const std::string& key) const { return command_ + ": parameter \"" + key + "\""; }

    template <class T>
    const ojson& fetch(const std::string& key, const T& def)
    {
        seen_.insert(key);
        effective_[key] = params_.contains(key) ? params_.at(key) : ojson(def);
        return effective_[key];
    }

    const ojson& params_;
    std::string command_;
    std::set<std::string> seen_;
    ojson effective_ = ojson::object();
};

// ---------------------------------------------------------------------------
// Potentials in configs

inline Potential generic_potential() { return random_potential(4, 0.3, 20240611); }

/// "zero" | "half_delta" | "generic" | {"type": "delta", "value", "site"} |
/// {"type": "values", "lo", "values"} | {"type": "random", "radius", "amplitude", "seed"}.
inline std::optional<Potential> parse_potential(const ojson& j, std::uint64_t seed)
{
    if (j.is_string())
    {
        const auto s = j.get<std::string>();
        if (s == "zero")
            return std::nullopt;
        if (s == "half_delta")
            return Potential::delta(0.5);
        if (s == "generic")
            return generic_potential();
        throw InvalidInput("potential: unknown name \"" + s + "\" (zero, half_delta, generic)");
    }
    detail::require(j.is_object() && j.contains("type") && j.at("type").is_string(),
                    "potential: expected a name or an object with \"type\"");
    const auto type = j.at("type").get<std::string>();
    auto num = [&](const char* k, double def) {
        if (!j.contains(k))
            return def;
        detail::require(j.at(k).is_number(), std::string("potential: \"") + k + "\" must be a number");
        return j.at(k).get<double>();
    };
    auto integer = [&](const char* k, long long def) {
        if (!j.contains(k))
            return def;
        detail::require(j.at(k).is_number_integer(), std::string("potential: \"") + k + "\" must be an integer");
        return j.at(k).get<long long>();
    };
    const std::map<std::string, std::set<std::string>> keys{{"delta", {"type", "value", "site"}},
                                                            {"values", {"type", "lo", "values"}},
                                                            {"random", {"type", "radius", "amplitude", "seed"}}};
    detail::require(keys.count(type) > 0, "potential: unknown type \"" + type + "\" (delta, values, random)");
    for (auto it = j.begin(); it != j.end(); ++it)
        detail::require(keys.at(type).count(it.key()) > 0, "potential: unknown field \"" + it.key() + "\"");
    if (type == "delta")
    {
        const int site = static_cast<int>(integer("site", 0));
        return Potential(site, site, {num("value", 0.5)}, 1e9);
    }
    if (type == "values")
    {
        detail::require(j.contains("values") && j.at("values").is_array(), "potential: \"values\" must be an array");
        std::vector<double> v;
        for (const auto& x : j.at("values"))
        {
            detail::require(x.is_number(), "potential: \"values\" must contain numbers");
            v.push_back(x.get<double>());
        }
        detail::require(!v.empty(), "potential: \"values\" is empty");
        const int lo = static_cast<int>(integer("lo", 0));
        const int hi = lo + static_cast<int>(v.size()) - 1;
        return Potential(lo, hi, std::move(v), 1e9);
    }
    const long long radius = integer("radius", 4);
    detail::require(radius >= 0 && radius <= 64, "potential: \"radius\" must lie in [0, 64]");
    return random_potential(static_cast<int>(radius), num("amplitude", 0.3),
                            static_cast<std::uint64_t>(integer("seed", static_cast<long long>(seed))));
}

inline std::string potential_label(const ojson& j)
{
    if (j.is_string())
        return j.get<std::string>();
    return j.at("type").get<std::string>();
}

inline ojson potential_json(const std::optional<Potential>& V)
{
    if (!V)
        return ojson{{"lo", 0}, {"hi", 0}, {"values", ojson::array()}};
    return ojson{{"lo", V->lo}, {"hi", V->hi}, {"values", V->values}};
}

// ---------------------------------------------------------------------------
// helpers

/// Evaluates f(0..n-1) on up to `threads` workers; results land in index order.
template <class T>
std::vector<T> parallel_map(std::size_t n, int threads, const std::function<T(std::size_t)>& f)
{
    std::vector<T> out(n);
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (workers == 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = f(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;)
        {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try
            {
                out[i] = f(i);
            }
            catch (...)
            {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back(work);
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
    return out;
}

inline ojson band_check(const std::string& name, double value, double lo, double hi)
{
    return ojson{{"name", name}, {"value", value}, {"lower", lo}, {"upper", hi}, {"passed", value >= lo && value <= hi}};
}

inline ojson bool_check(const std::string& name, bool ok)
{
    return ojson{{"name", name}, {"passed", ok}};
}

inline ojson new_report(const std::string& command, const std::string& claim)
{
    return ojson{{"command", command}, {"paper_claim", claim}, {"passed", true}, {"checks", ojson::array()}};
}

inline void finalize_report(ojson& report)
{
    bool ok = true;
    for (const auto& c : report.at("checks"))
        ok = ok && c.at("passed").get<bool>();
    report["passed"] = ok;
}

inline std::pair<double, double> read_band(ParamReader& p, const std::pair<double, double>& def)
{
    const auto b = p.numbers("band", {def.first, def.second});
    p.require(b.size() == 2 && b[0] <= b[1], "band", "must be [lower, upper]");
    return {b[0], b[1]};
}

inline std::vector<double> read_time_grid(ParamReader& p, double t_min, double t_max)
{
    const double a = p.number("t_min", t_min), b = p.number("t_max", t_max);
    const int per = p.integer("per_decade", 16);
    p.require(a > 0.0 && b > a, "t_max", "must exceed t_min > 0");
    p.require(per >= 1 && per <= 256, "per_decade", "must lie in [1, 256]");
    auto grid = log_time_grid(a, b, per);
    p.require(grid.size() >= 8, "per_decade", "gives fewer than 8 times on [t_min, t_max]; a fit needs 8");
    return grid;
}

inline CsvTable series_table(const std::string& filename, const DecaySeries& s)
{
    CsvTable t{filename, decay_series_header(), {}};
    for (std::size_t i = 0; i < s.times.size(); ++i)
        t.add({s.times[i], s.sup_norms[i]});
    return t;
}

inline ojson fit_json(const DecayFit& f)
{
    return ojson{{"alpha", f.alpha},     {"alpha_stderr", f.alpha_stderr}, {"intercept", f.intercept},
                 {"r_squared", f.r_squared}, {"t_min", f.t_min}, {"t_max", f.t_max}, {"points", f.points}};
}

inline FreeKind parse_free_kind(const std::string& s)
{
    if (s == "laplacian")
        return FreeKind::laplacian;
    if (s == "bilaplacian")
        return FreeKind::bilaplacian;
    if (s == "beam_cos")
        return FreeKind::beam_cos;
    return FreeKind::beam_sinc;
}

inline std::pair<double, double> default_free_band(FreeKind k)
{
    switch (k)
    {
    case FreeKind::bilaplacian: return {0.23, 0.27};
    case FreeKind::laplacian: return {0.31, 0.36};
    default: return {0.30, 0.37};
    }
}

inline const char* free_claim(FreeKind k)
{
    switch (k)
    {
    case FreeKind::bilaplacian: return "free decay estimate: ||e^{-it Delta^2}||_{l1->linf} <~ |t|^{-1/4}, sharp";
    case FreeKind::laplacian: return "free Laplacian decay: ||e^{it Delta}||_{l1->linf} <~ |t|^{-1/3}";
    case FreeKind::beam_cos: return "beam equation decay: ||cos(t sqrt(Delta^2))||_{l1->linf} <~ |t|^{-1/3}";
    case FreeKind::beam_sinc: return "beam equation decay: ||sin(t sqrt(Delta^2))/(t sqrt(Delta^2))||_{l1->linf} <~ |t|^{-1/3}";
    }
    return "";
}

inline DecaySeries parallel_free_series(FreeKind kind, const std::vector<double>& times, int observe_radius, int threads)
{
    const auto values = parallel_map<double>(times.size(), threads, [&](std::size_t i) {
        return free_decay_series(kind, {times[i]}, observe_radius).sup_norms[0];
    });
    DecaySeries s;
    s.times = times;
    s.sup_norms = values;
    s.source = "fft";
    return s;
}

// ---------------------------------------------------------------------------
// commands

inline ExperimentResult run_free_decay(const ojson& params, const RunContext& ctx)
{
    ParamReader p(params, "free-decay");
    const auto kind = parse_free_kind(p.choice("kind", "bilaplacian", {"bilaplacian", "laplacian", "beam_cos", "beam_sinc"}));
    const auto times = read_time_grid(p, 1e2, 1e4);
    const int radius = p.integer("observe_radius", -1);
    p.require(radius == -1 || radius >= 1, "observe_radius", "must be -1 (all displacements) or positive");
    const auto band = read_band(p, default_free_band(kind));

    ExperimentResult r;
    r.effective_parameters = p.finish();
    r.report_name = "fit.json";
    const auto series = parallel_free_series(kind, times, radius, ctx.threads);
    const auto fit = fit_decay_exponent(series);
    r.report = new_report("free-decay", free_claim(kind));
    r.report["kind"] = r.effective_parameters["kind"];
    r.report["observe_radius"] = radius;
    r.report.update(fit_json(fit));
    r.report["leave_one_out_spread"] = leave_one_out_spread(series);
    r.report["band"] = {band.first, band.second};
    r.report["checks"].push_back(band_check("alpha_in_band", fit.alpha, band.first, band.second));
    finalize_report(r.report);
    r.tables.push_back(series_table("series.csv", series));
    return r;
}

inline ExperimentResult run_beam_decay(const ojson& params, const RunContext& ctx)
{
    ParamReader p(params, "beam-decay");
    const auto kinds = p.strings("kinds", {"beam_cos", "beam_sinc"});
    for (const auto& k : kinds)
        p.require(k == "beam_cos" || k == "beam_sinc", "kinds", "entries must be beam_cos or beam_sinc");
    const auto times = read_time_grid(p, 1e2, 1e4);
    const int radius = p.integer("observe_radius", -1);
    p.require(radius == -1 || radius >= 1, "observe_radius", "must be -1 (all displacements) or positive");
    const auto band = read_band(p, {0.30, 0.37});

    ExperimentResult r;
    r.effective_parameters = p.finish();
    r.report_name = "fit.json";
    r.report = new_report("beam-decay", "beam equation decay: cos and sinc propagators of the beam equation are "
                                        "O(|t|^{-1/3}) from l1 to linf");
    r.report["band"] = {band.first, band.second};
    r.report["fits"] = ojson::array();
    for (const auto& k : kinds)
    {
        const auto series = parallel_free_series(parse_free_kind(k), times, radius, ctx.threads);
        const auto fit = fit_decay_exponent(series);
        auto f = fit_json(fit);
        f["kind"] = k;
        r.report["fits"].push_back(f);
        r.report["checks"].push_back(band_check(k + "_alpha_in_band", fit.alpha, band.first, band.second));
        r.tables.push_back(series_table("series_" + k.substr(5) + ".csv", series));
    }
    finalize_report(r.report);
    return r;
}

inline ExperimentResult run_perturbed_decay(const ojson& params, const RunContext& ctx)
{
    ParamReader p(params, "perturbed-decay");
    const ojson pj = p.raw("potential", "half_delta");
    const auto times = read_time_grid(p, 1e2, 5e3);
    const auto band = read_band(p, {0.22, 0.28});
    GlobalSupOptions opt;
    opt.observe_radius = p.integer("observe_radius", opt.observe_radius);
    opt.scale_factor = p.number("scale_factor", opt.scale_factor);
    opt.stone.tol = p.number("tol", opt.stone.tol);
    p.require(opt.observe_radius >= 0, "observe_radius", "must be nonnegative");
    p.require(opt.scale_factor > 0.0, "scale_factor", "must be positive");
    p.require(opt.stone.tol > 0.0, "tol", "must be positive");
    const auto V = parse_potential(pj, ctx.seed);
    p.require(V.has_value(), "potential", "must be nonzero (use free-decay for V = 0)");

    ExperimentResult r;
    r.effective_parameters = p.finish();
    r.report_name = "fit.json";
    const auto sys = decompose_potential(*V);
    const auto rz = regular_point_check(sys, Threshold::zero), rs = regular_point_check(sys, Threshold::sixteen);

    const auto sups = parallel_map<GlobalSupResult>(times.size(), ctx.threads, [&](std::size_t i) {
        auto g = stone_global_sup(&*V, times[i], opt);
        if (!g.converged)
            throw NumericalFailure("perturbed-decay: Stone quadrature did not converge at t = " + format17(times[i]));
        return g;
    });
    DecaySeries series;
    series.source = "stone";
    double worst = 0.0;
    CsvTable loc{"argmax.csv", {"t", "n", "m", "search_radius", "error"}, {}};
    for (std::size_t i = 0; i < times.size(); ++i)
    {
        series.times.push_back(times[i]);
        series.sup_norms.push_back(sups[i].sup);
        worst = std::max(worst, sups[i].error);
        loc.add({times[i], static_cast<long long>(sups[i].n), static_cast<long long>(sups[i].m),
                 static_cast<long long>(sups[i].search_radius), sups[i].error});
    }
    const auto fit = fit_decay_exponent(series);
    r.report = new_report("perturbed-decay", "dispersive estimate for e^{-itH}P_ac(H), H = Delta^2 + V with regular "
                                             "thresholds and no embedded eigenvalues: O(|t|^{-1/4}) from l1 to linf");
    r.report["potential"] = potential_json(V);
    r.report["regular_zero"] = rz.is_regular;
    r.report["regular_sixteen"] = rs.is_regular;
    r.report.update(fit_json(fit));
    r.report["leave_one_out_spread"] = leave_one_out_spread(series);
    r.report["max_quadrature_error"] = worst;
    r.report["band"] = {band.first, band.second};
    r.report["checks"].push_back(band_check("alpha_in_band", fit.alpha, band.first, band.second));
    finalize_report(r.report);
    r.tables.push_back(series_table("series.csv", series));
    r.tables.push_back(loc);
    return r;
}

inline ExperimentResult run_resolvent_check(const ojson& params, const RunContext& ctx)
{
    ParamReader p(params, "resolvent-check");
    const auto pots = p.raw("potentials", ojson::array({"zero", "half_delta", "generic"}));
    p.require(pots.is_array() && !pots.empty(), "potentials", "must be a non-empty array");
    const int mu_count = p.integer("mu_count", 5);
    const int pairs = p.integer("pairs_per_mu", 5);
    const int dmax = p.integer("max_site", 8);
    const double tol = p.number("tol", 1e-6);
    const auto mu_range = p.numbers("mu_range", {0.2, 1.8});
    p.require(mu_count >= 1 && pairs >= 1, "mu_count", "and pairs_per_mu must be positive");
    p.require(dmax >= 0 && dmax <= 64, "max_site", "must lie in [0, 64]");
    p.require(mu_range.size() == 2 && mu_range[0] > 0.0 && mu_range[1] < 2.0 && mu_range[0] < mu_range[1], "mu_range",
              "must be [a, b] with 0 < a < b < 2");

    ExperimentResult r;
    r.effective_parameters = p.finish();
    r.report = new_report("resolvent-check", "boundary resolvents R_0^{+/-}(mu^4) in closed form and R_V^{+/-}(mu^4) "
                                             "via M^{-1} equal the limiting absorption limits");
    CsvTable table{"resolvent.csv",
                   {"potential", "mu", "sign", "n", "m", "closed_re", "closed_im", "oracle_re", "oracle_im", "rel_err"},
                   {}};
    r.report["cases"] = ojson::array();
    for (const auto& pj : pots)
    {
        const auto V = parse_potential(pj, ctx.seed);
        const std::string label = potential_label(pj);
        std::mt19937_64 rng(ctx.seed);
        std::uniform_real_distribution<double> umu(mu_range[0], mu_range[1]);
        std::uniform_int_distribution<int> usite(-dmax, dmax);
        struct Job
        {
            double mu;
            Sign sign;
            std::vector<std::pair<int, int>> sites;
        };
        std::vector<Job> jobs;
        for (int k = 0; k < mu_count; ++k)
        {
            Job j{umu(rng), k % 2 ? Sign::minus : Sign::plus, {}};
            for (int q = 0; q < pairs; ++q)
            {
                const int n = usite(rng);
                j.sites.emplace_back(n, usite(rng));
            }
            jobs.push_back(j);
        }
        const Potential* pv = V ? &*V : nullptr;
        const auto oracle = parallel_map<std::vector<complex>>(jobs.size(), ctx.threads, [&](std::size_t i) {
            return lap_oracle(pv, jobs[i].mu, jobs[i].sign, jobs[i].sites).values;
        });
        double worst = 0.0;
        int points = 0;
        for (std::size_t i = 0; i < jobs.size(); ++i)
        {
            PerturbedResolvent R(pv, jobs[i].mu, jobs[i].sign);
            for (std::size_t q = 0; q < jobs[i].sites.size(); ++q)
            {
                const auto [n, m] = jobs[i].sites[q];
                const complex c = R(n, m), o = oracle[i][q];
                const double rel = std::abs(c - o) / std::abs(o);
                worst = std::max(worst, rel);
                ++points;
                table.add({label, jobs[i].mu, std::string(jobs[i].sign == Sign::plus ? "plus" : "minus"),
                           static_cast<long long>(n), static_cast<long long>(m), c.real(), c.imag(), o.real(), o.imag(), rel});
            }
        }
        r.report["cases"].push_back(ojson{{"potential", label}, {"points", points}, {"max_relative_error", worst}});
        r.report["checks"].push_back(band_check(label + "_max_relative_error", worst, 0.0, tol));
    }
    finalize_report(r.report);
    r.tables.push_back(table);
    return r;
}

inline ExperimentResult run_expansion_check(const ojson& params, const RunContext&)
{
    ParamReader p(params, "expansion-check");
    const auto th = p.choice("threshold", "zero", {"zero", "sixteen"}) == "zero" ? Threshold::zero : Threshold::sixteen;
    const int order = p.integer("order", 0);
    const int jmin = th == Threshold::zero ? -3 : -1;
    p.require(order >= jmin && order <= 8, "order", "must lie in [leading order, 8]");
    const Sign sign = p.choice("sign", "plus", {"plus", "minus"}) == "plus" ? Sign::plus : Sign::minus;
    const double s = p.number("weight", std::ceil(minimal_weight(th, order)));
    const double tol = p.number("tolerance", th == Threshold::zero ? 0.15 : 0.1);
    const int radius = p.integer("lattice_radius", 64);
    p.require(s >= minimal_weight(th, order), "weight", "is below the minimal weight for this order");
    p.require(radius >= 8 && radius <= 512, "lattice_radius", "must lie in [8, 512]");

    ExperimentResult r;
    r.effective_parameters = p.finish();
    const auto rep = remainder_order_check(th, sign, order, s, default_mu_grid(th, order), radius);
    const double expected = remainder_exponent(th, order);
    r.report = new_report("expansion-check", "threshold expansion of R_0^{+/-}(mu^4): the remainder after order N is "
                                             "O(mu^{N+1}) at zero and O((2-mu)^{(N+1)/2}) at sixteen in weighted l2");
    r.report["threshold"] = r.effective_parameters["threshold"];
    r.report["order"] = order;
    r.report["weight"] = s;
    r.report["slope"] = rep.slope;
    r.report["intercept"] = rep.intercept;
    r.report["expected_slope"] = expected;
    r.report["checks"].push_back(band_check("remainder_slope", rep.slope, expected - tol, expected + tol));
    finalize_report(r.report);
    CsvTable t{"expansion.csv", expansion_header(), {}};
    for (std::size_t i = 0; i < rep.mu.size(); ++i)
        t.add({rep.mu[i], rep.norm[i]});
    r.tables.push_back(t);
    return r;
}

inline ExperimentResult run_minv_probe(const ojson& params, const RunContext& ctx)
{
    ParamReader p(params, "minv-probe");
    const auto V = parse_potential(p.raw("potential", "generic"), ctx.seed);
    const auto which = p.choice("threshold", "both", {"zero", "sixteen", "both"});
    const double bound = p.number("norm_bound", 1e3);
    const double flat = p.number("max_norm_slope", 0.1);
    p.require(V.has_value(), "potential", "must be nonzero");

    ExperimentResult r;
    r.effective_parameters = p.finish();
    r.report = new_report("minv-probe", "(M^{+/-}(mu))^{-1} near the thresholds for regular V: bounded, with leakage "
                                        "off S_0 of order mu and off Q~ of order (2-mu)^{1/2}");
    r.report["thresholds"] = ojson::array();
    CsvTable t{"minv.csv", {"threshold", "mu", "minv_norm", "leakage"}, {}};
    const auto sys = decompose_potential(*V);
    for (Threshold th : {Threshold::zero, Threshold::sixteen})
    {
        const std::string name = th == Threshold::zero ? "zero" : "sixteen";
        if (which != "both" && which != name)
            continue;
        const auto rep = minv_expansion_probe(sys, th, default_probe_grid(th));
        ojson j{{"threshold", name}, {"skipped", rep.skipped}, {"diagnostic", rep.diagnostic}};
        if (rep.skipped)
        {
            r.report["checks"].push_back(bool_check(name + "_regular", false));
        }
        else
        {
            const double norm_slope = detail::loglog_fit(rep.mu, rep.minv_norm).first;
            j["sup_norm"] = rep.sup_norm;
            j["norm_slope"] = norm_slope;
            j["leakage_slope"] = rep.leakage_slope;
            j["required_slope"] = rep.required_slope;
            r.report["checks"].push_back(band_check(name + "_sup_norm", rep.sup_norm, 0.0, bound));
            r.report["checks"].push_back(band_check(name + "_norm_slope", norm_slope, -flat, flat));
            r.report["checks"].push_back(band_check(name + "_leakage_slope", rep.leakage_slope, rep.required_slope, INFINITY));
            for (std::size_t i = 0; i < rep.mu.size(); ++i)
                t.add({name, rep.mu[i], rep.minv_norm[i], rep.leakage[i]});
        }
        r.report["thresholds"].push_back(j);
    }
    finalize_report(r.report);
    r.tables.push_back(t);
    return r;
}

inline ExperimentResult run_regular_check(const ojson& params, const RunContext& ctx)
{
    ParamReader p(params, "regular-check");
    const auto V = parse_potential(p.raw("potential", "half_delta"), ctx.seed);
    const bool expect = p.boolean("expect_regular", true);
    p.require(V.has_value(), "potential", "must be nonzero");

    ExperimentResult r;
    r.effective_parameters = p.finish();
    const auto sys = decompose_potential(*V);
    r.report = new_report("regular-check", "regular thresholds: S_0 T_0 S_0 invertible on ran S_0 (zero) and "
                                           "Q~ T~_0 Q~ invertible on ran Q~ (sixteen)");
    r.report["potential"] = potential_json(V);
    for (Threshold th : {Threshold::zero, Threshold::sixteen})
    {
        const std::string name = th == Threshold::zero ? "zero" : "sixteen";
        const auto rep = regular_point_check(sys, th);
        r.report[name] = ojson{{"is_regular", rep.is_regular},
                               {"smallest_singular_value", rep.smallest_singular_value},
                               {"tolerance", rep.tolerance_used},
                               {"range_dimension", rep.range_dimension}};
        r.report["checks"].push_back(bool_check(name + "_regular_as_expected", rep.is_regular == expect));
    }
    finalize_report(r.report);
    return r;
}

inline ExperimentResult run_eig_scan(const ojson& params, const RunContext& ctx)
{
    ParamReader p(params, "eig-scan");
    const auto V = parse_potential(p.raw("potential", "half_delta"), ctx.seed);
    const auto Ns = p.integers("windows", {128, 256, 512});
    const bool expect_none = p.boolean("expect_none", true);
    for (int N : Ns)
        p.require(N >= 16 && N <= 2048, "windows", "entries must lie in [16, 2048]");

    ExperimentResult r;
    r.effective_parameters = p.finish();
    const Potential* pv = V ? &*V : nullptr;
    const auto scan = embedded_eig_scan(pv, Ns);
    r.report = new_report("eig-scan", "absence of embedded eigenvalues in (0, 16) and the discrete spectrum of "
                                      "H = Delta^2 + V outside [0, 16]");
    r.report["potential"] = potential_json(V);
    r.report["levels"] = ojson::array();
    for (const auto& l : scan.levels)
        r.report["levels"].push_back(ojson{{"N", l.N}, {"interior_count", l.interior_count},
                                           {"localized", l.localized}, {"max_localization", l.max_localization}});
    r.report["candidates"] = scan.candidates;
    r.report["none_detected"] = scan.none_detected();
    ojson bound = ojson::array();
    for (const auto& b : lattice_bound_states(pv))
        bound.push_back(ojson{{"energy", b.energy}, {"radius", b.radius}, {"tail", b.tail}});
    r.report["bound_states"] = bound;
    r.report["checks"].push_back(bool_check("embedded_scan_as_expected", scan.none_detected() == expect_none));
    finalize_report(r.report);
    return r;
}

inline ExperimentResult run_stone_vs_spectral(const ojson& params, const RunContext& ctx)
{
    ParamReader p(params, "stone-vs-spectral");
    const auto pots = p.raw("potentials", ojson::array({"zero", "half_delta", "generic"}));
    p.require(pots.is_array() && !pots.empty(), "potentials", "must be a non-empty array");
    const auto times = p.numbers("times", {1.0, 5.0, 20.0});
    const auto kinds = p.strings("kinds", {"schrodinger"});
    const int pairs = p.integer("pairs", 5);
    const int obs = p.integer("observe_radius", 6);
    const double tol = p.number("tol", 1e-5);
    for (const auto& k : kinds)
        p.require(k == "schrodinger" || k == "beam_cos" || k == "beam_sinc", "kinds",
                  "entries must be schrodinger, beam_cos or beam_sinc");
    for (double t : times)
        p.require(t > 0.0 && t <= 200.0, "times", "entries must lie in (0, 200]");
    p.require(pairs >= 1 && obs >= 1 && obs <= 64, "observe_radius", "must lie in [1, 64] with pairs >= 1");

    ExperimentResult r;
    r.effective_parameters = p.finish();
    r.report = new_report("stone-vs-spectral", "Stone formula e^{-itH}P_ac = (2/(pi i)) int_0^2 e^{-it mu^4} mu^3 "
                                               "[R_V^+ - R_V^-](mu^4) dmu agrees with the spectral propagator");
    r.report["cases"] = ojson::array();
    for (const auto& pj : pots)
    {
        const auto V = parse_potential(pj, ctx.seed);
        const Potential* pv = V ? &*V : nullptr;
        const std::string label = potential_label(pj);
        for (const auto& kname : kinds)
        {
            const StoneKind sk = kname == "schrodinger" ? StoneKind::schrodinger
                                 : kname == "beam_cos"  ? StoneKind::beam_cos
                                                        : StoneKind::beam_sinc;
            const PropagatorKind pk = kname == "schrodinger" ? PropagatorKind::schrodinger_H
                                      : kname == "beam_cos"  ? PropagatorKind::beam_cos
                                                             : PropagatorKind::beam_sinc;
            std::mt19937_64 rng(ctx.seed);
            std::uniform_int_distribution<int> site(-obs, obs);
            std::vector<std::vector<std::pair<int, int>>> picks(times.size());
            for (auto& v : picks)
                for (int k = 0; k < pairs; ++k)
                {
                    const int n = site(rng);
                    v.emplace_back(n, site(rng));
                }
            using Rows = std::vector<std::array<complex, 2>>;
            const auto vals = parallel_map<Rows>(times.size(), ctx.threads, [&](std::size_t i) {
                const double t = times[i];
                SpectralPropagator sp(pv, required_window(obs, t) + 8);
                const auto K = sp.kernel(pk, t, obs);
                Rows rows;
                for (const auto& [n, m] : picks[i])
                {
                    const auto st = stone_kernel_block(pv, sk, t, {n}, {m});
                    if (!st.converged)
                        throw NumericalFailure("stone-vs-spectral: Stone quadrature did not converge at t = " + format17(t));
                    rows.push_back({st.kernel(0, 0), K(n + obs, m + obs)});
                }
                return rows;
            });
            CsvTable table{"kernels_" + label + "_" + kname + ".csv", kernel_slice_header(), {}};
            double worst = 0.0;
            for (std::size_t i = 0; i < times.size(); ++i)
                for (std::size_t k = 0; k < picks[i].size(); ++k)
                {
                    const auto [n, m] = picks[i][k];
                    const auto& v = vals[i][k];
                    worst = std::max(worst, std::abs(v[0] - v[1]));
                    table.add({times[i], static_cast<long long>(n), static_cast<long long>(m), v[0].real(), v[0].imag(),
                               std::string("stone")});
                    table.add({times[i], static_cast<long long>(n), static_cast<long long>(m), v[1].real(), v[1].imag(),
                               std::string("spectral")});
                }
            r.report["cases"].push_back(ojson{{"potential", label}, {"kind", kname}, {"max_abs_difference", worst}});
            r.report["checks"].push_back(band_check(label + "_" + kname + "_max_abs_difference", worst, 0.0, tol));
            r.tables.push_back(table);
        }
    }
    finalize_report(r.report);
    return r;
}

inline ExperimentResult run_stationary_phase(const ojson& params, const RunContext&)
{
    ParamReader p(params, "stationary-phase");
    PhaseSpec spec;
    spec.s = p.number("s", 0.0);
    spec.branch = p.choice("branch", "minus_cos", {"minus_cos", "plus_cos"}) == "minus_cos" ? PhaseBranch::minus_cos
                                                                                           : PhaseBranch::plus_cos;
    spec.a = p.number("a", -std::numbers::pi);
    spec.b = p.number("b", 0.0);
    const double tol = p.number("tol", 1e-10);
    spec.validate();

    ExperimentResult r;
    r.effective_parameters = p.finish();
    r.report_name = "roots.json";
    const auto pts = stationary_points(spec);
    const auto pred = decay_order_prediction(spec);
    r.report = new_report("stationary-phase", "stationary points of Phi_s(x) = (2 - 2cos x)^2 - s x on [-pi, 0]: "
                                              "Phi''_0(-pi) = -16, Phi''''_0(0) = 24, a single cubic point at "
                                              "-2pi/3 for s = -6 sqrt 3; decay rate 1/k for the highest order k");
    r.report["s"] = spec.s;
    r.report["branch"] = r.effective_parameters["branch"];
    r.report["roots"] = ojson::array();
    for (const auto& q : pts)
        r.report["roots"].push_back(ojson{{"x", q.x}, {"order", q.order}, {"derivative_value", q.derivative_value}});
    r.report["predicted_rate"] = ojson{{"num", pred.num}, {"den", pred.den}, {"value", pred.value()}};

    const double pi = std::numbers::pi;
    const bool full = spec.branch == PhaseBranch::minus_cos && std::abs(spec.a + pi) < 1e-15 && std::abs(spec.b) < 1e-15;
    if (full && spec.s == 0.0)
    {
        const bool shape = pts.size() == 2 && pts[0].order == 2 && pts[1].order == 4;
        r.report["checks"].push_back(bool_check("orders_2_at_minus_pi_and_4_at_0", shape));
        if (shape)
        {
            r.report["checks"].push_back(band_check("root_minus_pi", pts[0].x, -pi - tol, -pi + tol));
            r.report["checks"].push_back(band_check("root_zero", pts[1].x, -tol, tol));
            r.report["checks"].push_back(band_check("second_derivative_at_minus_pi", pts[0].derivative_value, -16.0 - tol, -16.0 + tol));
            r.report["checks"].push_back(band_check("fourth_derivative_at_zero", pts[1].derivative_value, 24.0 - tol, 24.0 + tol));
        }
    }
    else if (full && std::abs(spec.s + 6.0 * std::sqrt(3.0)) < 1e-12)
    {
        const bool shape = pts.size() == 1 && pts[0].order == 3;
        r.report["checks"].push_back(bool_check("single_cubic_root", shape));
        if (shape)
            r.report["checks"].push_back(band_check("root_minus_two_pi_over_three", pts[0].x, -2.0 * pi / 3.0 - 1e-9,
                                                    -2.0 * pi / 3.0 + 1e-9));
    }
    finalize_report(r.report);
    return r;
}

inline LatticeVector parse_initial_data(const ojson& j)
{
    if (j.is_string())
    {
        detail::require(j.get<std::string>() == "delta", "initial_data: only \"delta\" or an array of numbers");
        return LatticeVector::delta(2);
    }
    detail::require(j.is_array() && !j.empty() && j.size() % 2 == 1,
                    "initial_data: expected an odd-length array of real values centred at 0");
    const int R = static_cast<int>(j.size() / 2);
    LatticeVector psi(R);
    for (int n = -R; n <= R; ++n)
    {
        detail::require(j[static_cast<std::size_t>(n + R)].is_number(), "initial_data: entries must be numbers");
        psi[n] = j[static_cast<std::size_t>(n + R)].get<double>();
    }
    return psi;
}

inline ExperimentResult run_strichartz(const ojson& params, const RunContext&)
{
    ParamReader p(params, "strichartz");
    const double q = p.number("q", 8.0);
    const ojson rj = p.raw("r", 64.0);
    p.require(rj.is_number() || (rj.is_string() && rj.get<std::string>() == "inf"), "r", "must be a number or \"inf\"");
    const double r = rj.is_number() ? rj.get<double>() : r_infinity;
    const auto T = p.numbers("times", {1e2, 1e3});
    const auto psi = parse_initial_data(p.raw("initial_data", "delta"));
    const auto expect = p.choice("expect", "bounded", {"bounded", "growth"});
    const double tol = p.number("tol", 1e-6);
    p.require(q >= 1.0, "q", "must be >= 1");
    p.require(r >= 1.0, "r", "must be >= 1");

    ExperimentResult res;
    res.effective_parameters = p.finish();
    StrichartzOptions opt;
    opt.tol = tol;
    const auto s = strichartz_norm(q, r, T, psi, opt);
    res.report = new_report("strichartz", "Strichartz estimate ||e^{-itDelta^2}f||_{L^q_t l^r} <~ ||f||_{l2} for "
                                          "admissible pairs 1/q + 1/(4r) <= 1/8");
    res.report["q"] = q;
    res.report["r"] = std::isinf(r) ? ojson("inf") : ojson(r);
    res.report["admissible"] = strichartz_admissible(q, r);
    res.report["times"] = T;
    res.report["norms"] = s.norms;
    res.report["quadrature_error"] = s.error;
    res.report["growth_ratio"] = s.growth_ratio;
    res.report["bounded"] = s.bounded;
    res.report["checks"].push_back(bool_check(expect == "bounded" ? "bounded" : "grows", expect == "bounded" ? s.bounded : !s.bounded));
    finalize_report(res.report);
    CsvTable t{"strichartz.csv", {"T", "norm"}, {}};
    for (std::size_t i = 0; i < T.size(); ++i)
        t.add({T[i], s.norms[i]});
    res.tables.push_back(t);
    return res;
}

inline ExperimentResult run_knapp(const ojson& params, const RunContext&)
{
    ParamReader p(params, "knapp");
    const auto eps = p.numbers("epsilons", {0.1, 0.05, 0.025});
    const double q = p.number("q", 8.0), r = p.number("r", 8.0);
    const double lhs_tol = p.number("lhs_tol", 0.05), rhs_tol = p.number("rhs_tol", 0.1);
    p.require(eps.size() >= 2, "epsilons", "needs at least two values");

    ExperimentResult res;
    res.effective_parameters = p.finish();
    const auto k = knapp_ladder(eps, q, r);
    res.report = new_report("knapp", "Knapp example: ||e^{-itDelta^2}f_eps||_{L^q_t l^r} >~ eps^{1/2} against "
                                     "||f_eps||_{l2}, forcing 1/r + 4/q <= 1/2 for the Strichartz estimate");
    res.report["q"] = q;
    res.report["r"] = r;
    res.report["lhs_exponent"] = k.lhs_exponent;
    res.report["rhs_exponent"] = k.rhs_exponent;
    res.report["predicted_rhs_exponent"] = k.predicted_rhs;
    res.report["consistent"] = k.consistent;
    res.report["checks"].push_back(band_check("lhs_exponent", k.lhs_exponent, 0.5 - lhs_tol, 0.5 + lhs_tol));
    res.report["checks"].push_back(band_check("rhs_exponent", k.rhs_exponent, k.predicted_rhs - rhs_tol, k.predicted_rhs + rhs_tol));
    finalize_report(res.report);
    CsvTable t{"knapp.csv", {"epsilon", "lhs", "rhs"}, {}};
    for (const auto& pt : k.points)
        t.add({pt.epsilon, pt.lhs, pt.rhs});
    res.tables.push_back(t);
    return res;
}

// ---------------------------------------------------------------------------

using CommandFn = ExperimentResult (*)(const ojson&, const RunContext&);

inline const std::vector<std::pair<std::string, CommandFn>>& command_table()
{
    static const std::vector<std::pair<std::string, CommandFn>> t{
        {"free-decay", run_free_decay},
        {"perturbed-decay", run_perturbed_decay},
        {"beam-decay", run_beam_decay},
        {"resolvent-check", run_resolvent_check},
        {"expansion-check", run_expansion_check},
        {"minv-probe", run_minv_probe},
        {"regular-check", run_regular_check},
        {"eig-scan", run_eig_scan},
        {"stone-vs-spectral", run_stone_vs_spectral},
        {"stationary-phase", run_stationary_phase},
        {"strichartz", run_strichartz},
        {"knapp", run_knapp},
    };
    return t;
}

inline std::vector<std::string> command_names()
{
    std::vector<std::string> out;
    for (const auto& [name, fn] : command_table())
        out.push_back(name);
    return out;
}

/// Command-specific report fields on top of the common ones.
inline std::vector<FieldSpec> report_schema(const std::string& command)
{
    using F = FieldType;
    static const std::vector<FieldSpec> fit{{"alpha", F::number}, {"alpha_stderr", F::number}, {"r_squared", F::number},
                                            {"points", F::integer}, {"band", F::array}};
    static const std::map<std::string, std::vector<FieldSpec>> m{
        {"free-decay", [] { auto v = fit; v.push_back({"kind", F::string}); return v; }()},
        {"perturbed-decay", [] { auto v = fit; v.push_back({"potential", F::object}); return v; }()},
        {"beam-decay", {{"fits", F::array}, {"band", F::array}}},
        {"resolvent-check", {{"cases", F::array}}},
        {"expansion-check", {{"threshold", F::string}, {"order", F::integer}, {"slope", F::number}, {"expected_slope", F::number}}},
        {"minv-probe", {{"thresholds", F::array}}},
        {"regular-check", {{"zero", F::object}, {"sixteen", F::object}, {"potential", F::object}}},
        {"eig-scan", {{"levels", F::array}, {"none_detected", F::boolean}, {"bound_states", F::array}}},
        {"stone-vs-spectral", {{"cases", F::array}}},
        {"stationary-phase", {{"s", F::number}, {"roots", F::array}, {"predicted_rate", F::object}}},
        {"strichartz", {{"q", F::number}, {"admissible", F::boolean}, {"norms", F::array}, {"bounded", F::boolean}}},
        {"knapp", {{"lhs_exponent", F::number}, {"rhs_exponent", F::number}, {"predicted_rhs_exponent", F::number}}},
    };
    const auto it = m.find(command);
    detail::require(it != m.end(), "unknown command \"" + command + "\"");
    return it->second;
}

inline ExperimentResult run_experiment(const std::string& command, const ojson& params, const RunContext& ctx)
{
    for (const auto& [name, fn] : command_table())
        if (name == command)
        {
            auto r = fn(params, ctx);
            validate_report(r.report, report_schema(command));
            return r;
        }
    throw InvalidInput("unknown command \"" + command + "\"");
}

} // namespace bischrod
