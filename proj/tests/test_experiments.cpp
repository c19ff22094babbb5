#include <bischrod/experiments.hpp>

#include <gtest/gtest.h>

using namespace bischrod;

namespace {

ExperimentResult run(const std::string& cmd, const ojson& params = ojson::object(), std::uint64_t seed = 1, int threads = 1)
{
    return run_experiment(cmd, params, RunContext{seed, threads});
}

void expect_round_trip(const std::string& cmd, const ExperimentResult& r)
{
    const auto text = dump17(r.report);
    const auto back = ojson::parse(text);
    EXPECT_NO_THROW(validate_report(back, report_schema(cmd))) << cmd;
    EXPECT_EQ(dump17(back), text) << cmd;
}

} // namespace

TEST(Experiments, ParamReaderRejectsUnknownAndMistyped)
{
    try
    {
        run("regular-check", {{"bogus", 1}});
        FAIL() << "unknown parameter accepted";
    }
    catch (const InvalidInput& e)
    {
        EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
    }
    try
    {
        run("stationary-phase", {{"s", "zero"}});
        FAIL() << "string accepted as number";
    }
    catch (const InvalidInput& e)
    {
        EXPECT_NE(std::string(e.what()).find("\"s\""), std::string::npos);
    }
    EXPECT_THROW(run("free-decay", {{"kind", "wave"}}), InvalidInput);
    EXPECT_THROW(run("free-decay", {{"t_min", 100}, {"t_max", 200}}), InvalidInput);
    EXPECT_THROW(run("no-such"), InvalidInput);
    EXPECT_THROW(run("regular-check", ojson::array()), InvalidInput);
}

TEST(Experiments, PotentialSpecs)
{
    EXPECT_FALSE(parse_potential("zero", 1).has_value());
    EXPECT_EQ(parse_potential("half_delta", 1)->values, std::vector<double>{0.5});
    EXPECT_EQ(parse_potential("generic", 1)->values, generic_potential().values);
    const auto d = parse_potential(ojson{{"type", "delta"}, {"value", 2.0}, {"site", 3}}, 1);
    EXPECT_EQ(d->lo, 3);
    EXPECT_EQ((*d)(3), 2.0);
    const auto v = parse_potential(ojson{{"type", "values"}, {"lo", -1}, {"values", {1.0, 0.0, -1.0}}}, 1);
    EXPECT_EQ(v->hi, 1);
    const auto r1 = parse_potential(ojson{{"type", "random"}, {"radius", 2}}, 5);
    const auto r2 = parse_potential(ojson{{"type", "random"}, {"radius", 2}}, 5);
    const auto r3 = parse_potential(ojson{{"type", "random"}, {"radius", 2}}, 6);
    EXPECT_EQ(r1->values, r2->values);
    EXPECT_NE(r1->values, r3->values);
    EXPECT_THROW(parse_potential("wide", 1), InvalidInput);
    EXPECT_THROW(parse_potential(ojson{{"type", "delta"}, {"amp", 1.0}}, 1), InvalidInput);
    EXPECT_THROW(parse_potential(ojson{{"type", "values"}, {"values", ojson::array()}}, 1), InvalidInput);
}

TEST(Experiments, ParallelMapKeepsOrderAndPropagatesFailure)
{
    const auto v = parallel_map<int>(50, 4, [](std::size_t i) { return static_cast<int>(i * i); });
    for (std::size_t i = 0; i < v.size(); ++i)
        EXPECT_EQ(v[i], static_cast<int>(i * i));
    EXPECT_THROW(parallel_map<int>(10, 3,
                                   [](std::size_t i) -> int {
                                       if (i == 7)
                                           throw NumericalFailure("x");
                                       return 0;
                                   }),
                 NumericalFailure);
}

TEST(Experiments, FreeDecayDefault)
{
    const auto r = run("free-decay");
    EXPECT_EQ(r.report_name, "fit.json");
    EXPECT_TRUE(r.passed());
    const double a = r.report["alpha"].get<double>();
    EXPECT_GE(a, 0.23);
    EXPECT_LE(a, 0.27);
    ASSERT_EQ(r.tables.size(), 1u);
    EXPECT_EQ(r.tables[0].filename, "series.csv");
    EXPECT_EQ(r.tables[0].str().substr(0, 11), "t,sup_norm\n");
    expect_round_trip("free-decay", r);
}

TEST(Experiments, RegularCheckHalfDelta)
{
    const auto r = run("regular-check", {{"potential", "half_delta"}});
    EXPECT_TRUE(r.report["zero"]["is_regular"].get<bool>());
    EXPECT_TRUE(r.report["sixteen"]["is_regular"].get<bool>());
    EXPECT_TRUE(r.passed());
    expect_round_trip("regular-check", r);
    // a failing expectation is a failed check, not an error
    EXPECT_FALSE(run("regular-check", {{"expect_regular", false}}).passed());
}

TEST(Experiments, StationaryPhaseRoots)
{
    const auto r = run("stationary-phase", {{"s", 0}});
    EXPECT_EQ(r.report_name, "roots.json");
    const auto& roots = r.report["roots"];
    ASSERT_EQ(roots.size(), 2u);
    EXPECT_EQ(roots[0]["order"], 2);
    EXPECT_NEAR(roots[0]["x"].get<double>(), -std::numbers::pi, 1e-12);
    EXPECT_EQ(roots[1]["order"], 4);
    EXPECT_NEAR(roots[1]["x"].get<double>(), 0.0, 1e-12);
    EXPECT_TRUE(r.passed());
    expect_round_trip("stationary-phase", r);
    const auto c = run("stationary-phase", {{"s", -6.0 * std::sqrt(3.0)}});
    ASSERT_EQ(c.report["roots"].size(), 1u);
    EXPECT_EQ(c.report["roots"][0]["order"], 3);
    EXPECT_TRUE(c.passed());
}

TEST(Experiments, CheapCommandsRoundTrip)
{
    for (const auto& [cmd, params] : std::vector<std::pair<std::string, ojson>>{
             {"expansion-check", ojson::object()},
             {"minv-probe", ojson::object()},
             {"eig-scan", {{"windows", {64, 128}}}},
             {"knapp", {{"epsilons", {0.1, 0.05}}}},
             {"beam-decay", {{"kinds", {"beam_cos"}}}},
             {"resolvent-check", {{"potentials", {"half_delta"}}, {"mu_count", 2}, {"pairs_per_mu", 2}}},
             {"stone-vs-spectral", {{"potentials", {"generic"}}, {"times", {2.0}}, {"pairs", 2}}},
             {"strichartz", {{"q", 6.0}, {"r", 3.0}, {"times", {1.0, 2.0}}}},
             {"perturbed-decay", {{"t_min", 10.0}, {"t_max", 40.0}, {"per_decade", 16}}}})
    {
        SCOPED_TRACE(cmd);
        const auto r = run(cmd, params);
        expect_round_trip(cmd, r);
        EXPECT_EQ(r.report["command"], cmd);
        EXPECT_FALSE(r.report["paper_claim"].get<std::string>().empty());
        for (const auto& t : r.tables)
            EXPECT_FALSE(t.rows.empty()) << t.filename;
    }
}

TEST(Experiments, ExpansionCheckSchemaAndVerdicts)
{
    const auto r = run("expansion-check", {{"threshold", "sixteen"}, {"order", 1}});
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.tables[0].header, expansion_header());
    // G_2 vanishes, so the order-1 remainder at zero is cubic and misses the N + 1 band
    const auto z = run("expansion-check", {{"threshold", "zero"}, {"order", 1}});
    EXPECT_FALSE(z.passed());
    EXPECT_NEAR(z.report["slope"].get<double>(), 3.0, 0.15);
}

TEST(Experiments, DeterministicPerSeed)
{
    const ojson p{{"potentials", {"generic"}}, {"mu_count", 2}, {"pairs_per_mu", 3}};
    const auto a = run("resolvent-check", p, 9), b = run("resolvent-check", p, 9, 3), c = run("resolvent-check", p, 10);
    EXPECT_EQ(dump17(a.report), dump17(b.report));
    EXPECT_EQ(a.tables[0].str(), b.tables[0].str());
    EXPECT_NE(a.tables[0].str(), c.tables[0].str());

    const ojson s{{"potentials", {"half_delta"}}, {"times", {1.0, 3.0}}, {"pairs", 2}};
    const auto x = run("stone-vs-spectral", s, 4), y = run("stone-vs-spectral", s, 4, 2);
    EXPECT_EQ(x.tables[0].str(), y.tables[0].str());
    EXPECT_EQ(x.tables[0].header, kernel_slice_header());
}
