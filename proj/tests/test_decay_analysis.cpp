#include <bischrod/decay_analysis.hpp>

#include <gtest/gtest.h>

using namespace bischrod;
using std::numbers::pi;

namespace {

DecaySeries synthetic(double C, double alpha, const std::vector<double>& t)
{
    DecaySeries s;
    for (double x : t)
    {
        s.times.push_back(x);
        s.sup_norms.push_back(C * std::pow(x, -alpha));
    }
    return s;
}

} // namespace

TEST(DecayAnalysis, ExactPowerLawRecovered)
{
    const auto f = fit_decay_exponent(synthetic(3.0, 0.25, log_time_grid(1e2, 1e4)));
    EXPECT_NEAR(f.alpha, 0.25, 1e-10);
    EXPECT_NEAR(f.intercept, std::log(3.0), 1e-9);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_EQ(f.points, 33u);
}

TEST(DecayAnalysis, WindowRestrictsPoints)
{
    auto s = synthetic(1.0, 0.5, log_time_grid(1.0, 1e4));
    s.sup_norms[0] = 100.0;
    const auto f = fit_decay_exponent(s, 10.0, 1e4);
    EXPECT_NEAR(f.alpha, 0.5, 1e-10);
    EXPECT_GE(f.t_min, 10.0);
}

TEST(DecayAnalysis, RejectsBadSeries)
{
    EXPECT_THROW(fit_decay_exponent(synthetic(1.0, 0.3, {1, 2, 3, 4, 5, 6, 7})), InvalidInput);
    auto s = synthetic(1.0, 0.3, {1, 2, 3, 4, 5, 6, 7, 8});
    s.times[3] = s.times[2];
    EXPECT_THROW(fit_decay_exponent(s), InvalidInput);
    s = synthetic(1.0, 0.3, {1, 2, 3, 4, 5, 6, 7, 8});
    s.sup_norms[1] = 0.0;
    EXPECT_THROW(fit_decay_exponent(s), InvalidInput);
    EXPECT_THROW(fit_decay_exponent(synthetic(1.0, 0.3, {1, 2, 3, 4, 5, 6, 7, 8}), 100.0, 200.0), InvalidInput);
}

TEST(DecayAnalysis, LogGridSpacing)
{
    const auto g = log_time_grid(1e2, 1e4);
    ASSERT_EQ(g.size(), 33u);
    EXPECT_DOUBLE_EQ(g.front(), 1e2);
    EXPECT_NEAR(g.back(), 1e4, 1e-9);
    for (std::size_t i = 1; i < g.size(); ++i)
        EXPECT_NEAR(g[i] / g[i - 1], std::pow(10.0, 1.0 / 16.0), 1e-12);
}

TEST(DecayAnalysis, FreeBilaplacianQuarterDecay)
{
    const auto s = free_decay_series(FreeKind::bilaplacian, log_time_grid(1e2, 1e4), 200);
    const auto f = fit_decay_exponent(s);
    EXPECT_GE(f.alpha, 0.23);
    EXPECT_LE(f.alpha, 0.27);
    EXPECT_LT(leave_one_out_spread(s), 0.01);
}

TEST(DecayAnalysis, FreeLaplacianAndBeamCosThirdDecay)
{
    const auto grid = log_time_grid(1e2, 1e4);
    const auto lap = fit_decay_exponent(free_decay_series(FreeKind::laplacian, grid, -1));
    EXPECT_GE(lap.alpha, 0.31);
    EXPECT_LE(lap.alpha, 0.36);
    const auto cs = fit_decay_exponent(free_decay_series(FreeKind::beam_cos, grid, -1));
    EXPECT_GE(cs.alpha, 0.30);
    EXPECT_LE(cs.alpha, 0.37);
}

TEST(DecayAnalysis, Admissibility)
{
    EXPECT_TRUE(strichartz_admissible(8.0, r_infinity));
    EXPECT_TRUE(strichartz_admissible(9.0, 64.0));
    EXPECT_TRUE(strichartz_admissible(16.0, 4.0));
    EXPECT_FALSE(strichartz_admissible(16.0, 2.0));
    EXPECT_FALSE(strichartz_admissible(8.0, 64.0));
    EXPECT_FALSE(strichartz_admissible(4.0, 4.0));
    EXPECT_FALSE(strichartz_admissible(2.0, r_infinity));
    EXPECT_FALSE(strichartz_admissible(1.5, 8.0));
}

TEST(DecayAnalysis, StrichartzZeroData)
{
    const auto r = strichartz_norm(8.0, 64.0, {10.0}, LatticeVector(4));
    EXPECT_EQ(r.norms[0], 0.0);
}

TEST(DecayAnalysis, StrichartzShortTimeMatchesSpectralQuadrature)
{
    const double q = 6.0, r = 3.0, T = 2.0;
    LatticeVector psi(3);
    psi[0] = 1.0;
    psi[1] = complex(0.0, 0.5);
    psi[-2] = -0.25;
    const auto s = strichartz_norm(q, r, {T}, psi);
    // independent: dense spectral evolution on a wide window, Gauss-Legendre in t
    const int N = required_window(3, T) + 16;
    SpectralPropagator sp(nullptr, N);
    LatticeVector wide(N);
    for (int n = -3; n <= 3; ++n)
        wide[n] = psi[n];
    auto g = [&](double t) {
        const auto u = sp.evolve(PropagatorKind::schrodinger_H, t, wide);
        double acc = 0.0;
        for (int n = -N; n <= N; ++n)
            acc += std::pow(std::abs(u[n]), r);
        return std::pow(acc, q / r);
    };
    using G = boost::math::quadrature::gauss<double, 30>;
    double ref = 0.0;
    for (int k = 0; k < 8; ++k)
        ref += G::integrate(g, k * T / 8, (k + 1) * T / 8);
    EXPECT_NEAR(s.norms[0], std::pow(ref, 1.0 / q), 1e-7);
}

TEST(DecayAnalysis, StrichartzAdmissibleBounded)
{
    const auto s = strichartz_norm(8.0, 64.0, {1e2, 1e3}, LatticeVector::delta(2));
    EXPECT_TRUE(s.bounded);
    EXPECT_NEAR(s.growth_ratio, 1.0, 0.1);
}

TEST(DecayAnalysis, StrichartzNonAdmissibleGrows)
{
    const auto s = strichartz_norm(4.0, 4.0, {25.0, 100.0, 400.0}, LatticeVector::delta(2));
    EXPECT_FALSE(s.bounded);
    EXPECT_GT(s.norms[1], s.norms[0] * 1.05);
    EXPECT_GT(s.norms[2], s.norms[1] * 1.05);
}

TEST(DecayAnalysis, KnappPiecesAgainstClosedForms)
{
    for (double eps : {0.1, 0.03})
    {
        // sum_n sin^2(eps n)/n^2 = pi eps
        EXPECT_NEAR(detail::knapp_lattice_sum(eps, 2.0), pi * eps, 1e-8);
        // int sin^2(a t)/t^2 dt = pi a
        const double a = std::pow(eps, 4);
        EXPECT_NEAR(detail::knapp_time_integral(a, 2.0) / (pi * a), 1.0, 1e-6);
    }
    EXPECT_NEAR(detail::mean_abs_sin_power(2.0), 0.5, 1e-15);
    EXPECT_NEAR(detail::mean_abs_sin_power(1.0), 2.0 / pi, 1e-15);
}

TEST(DecayAnalysis, KnappLhsIsMeasureOfTheCap)
{
    // M(x) < eps^4 iff |x| < 2 asin(eps/2), which is wider than |x| < eps
    for (double eps : {0.1, 0.05, 0.01})
        EXPECT_NEAR(knapp_experiment(eps, 8.0, 8.0).lhs, std::sqrt(2.0 * std::min(eps, 2.0 * std::asin(0.5 * eps))), 1e-12);
}

TEST(DecayAnalysis, KnappExponents)
{
    const auto k = knapp_ladder({0.1, 0.05, 0.025}, 8.0, 8.0);
    EXPECT_NEAR(k.lhs_exponent, 0.5, 0.05);
    EXPECT_NEAR(k.rhs_exponent, 1.0 / 8.0 + 4.0 / 8.0, 0.1);
    EXPECT_FALSE(k.consistent);
    EXPECT_TRUE(knapp_ladder({0.1, 0.05}, 16.0, 4.0).consistent);
    EXPECT_THROW(knapp_experiment(0.2, 8.0, 8.0), InvalidInput);
    EXPECT_THROW(knapp_experiment(0.1, 8.0, r_infinity), InvalidInput);
}
