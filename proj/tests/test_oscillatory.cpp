#include <bischrod/oscillatory.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace bischrod;
using std::numbers::pi;

namespace {

const double s_crit = -6.0 * std::sqrt(3.0);

PhaseSpec minus(double s) { return {PhaseBranch::minus_cos, s, -pi, 0.0}; }

} // namespace

TEST(Oscillatory, ThresholdDerivativeValues)
{
    auto d = phase_derivatives(minus(0.0), -pi, 4);
    EXPECT_NEAR(d[2], -16.0, 1e-10);
    auto z = phase_derivatives(minus(0.0), 0.0, 4);
    EXPECT_NEAR(z[2], 0.0, 1e-12);
    EXPECT_NEAR(z[3], 0.0, 1e-12);
    EXPECT_NEAR(z[4], 24.0, 1e-10);
    auto c = phase_derivatives(minus(s_crit), -2.0 * pi / 3.0, 4);
    EXPECT_NEAR(c[1], 0.0, 1e-12);
    EXPECT_NEAR(c[2], 0.0, 1e-12);
    EXPECT_GT(std::abs(c[3]), 1.0);
}

TEST(Oscillatory, ClosedFormDerivatives)
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ux(-pi, 0.0), us(-15.0, 15.0);
    for (int k = 0; k < 50; ++k)
    {
        const double x = ux(rng), s = us(rng);
        auto d = phase_derivatives(minus(s), x, 2);
        const double w = 2.0 - 2.0 * std::cos(x);
        EXPECT_NEAR(d[0], w * w - s * x, 1e-12 * (1.0 + std::abs(s)));
        EXPECT_NEAR(d[1], 8.0 * (1.0 - std::cos(x)) * std::sin(x) - s, 1e-12 * (1.0 + std::abs(s)));
        EXPECT_NEAR(d[2], 8.0 * (1.0 - std::cos(x)) * (2.0 * std::cos(x) + 1.0), 1e-12);
        PhaseSpec p{PhaseBranch::plus_cos, s, -pi, 0.0};
        const double wp = 2.0 + 2.0 * std::cos(x);
        EXPECT_NEAR(phase_value(p, x), wp * wp - s * x, 1e-12 * (1.0 + std::abs(s)));
    }
}

TEST(Oscillatory, DerivativesMatchFiniteDifferences)
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ux(-pi + 0.01, -0.01), us(-12.0, 12.0);
    for (int k = 0; k < 100; ++k)
    {
        const PhaseSpec p{k % 2 ? PhaseBranch::plus_cos : PhaseBranch::minus_cos, us(rng), -pi, 0.0};
        const double x = ux(rng), h = 1e-4;
        auto d = phase_derivatives(p, x, 4);
        for (int j = 1; j <= 4; ++j)
        {
            const double fd = (phase_derivatives(p, x + h, j - 1)[j - 1] - phase_derivatives(p, x - h, j - 1)[j - 1]) / (2 * h);
            EXPECT_NEAR(d[j], fd, 1e-6 * std::max(1.0, std::abs(d[j])));
        }
    }
}

TEST(Oscillatory, StationaryPointsAtZeroSlope)
{
    auto pts = stationary_points(minus(0.0));
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_NEAR(pts[0].x, -pi, 1e-12);
    EXPECT_EQ(pts[0].order, 2);
    EXPECT_NEAR(pts[0].derivative_value, -16.0, 1e-10);
    EXPECT_NEAR(pts[1].x, 0.0, 1e-12);
    EXPECT_EQ(pts[1].order, 4);
    EXPECT_NEAR(pts[1].derivative_value, 24.0, 1e-10);
}

TEST(Oscillatory, StationaryPointAtCriticalSlope)
{
    auto pts = stationary_points(minus(s_crit));
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_NEAR(pts[0].x, -2.0 * pi / 3.0, 1e-9);
    EXPECT_EQ(pts[0].order, 3);
}

TEST(Oscillatory, NoStationaryPointsBeyondGroupSpeed)
{
    EXPECT_TRUE(stationary_points(minus(10.0 * 6.0 * std::sqrt(3.0))).empty());
    EXPECT_TRUE(stationary_points(minus(-10.5)).empty());
    EXPECT_TRUE(stationary_points(minus(1.0)).empty());
}

TEST(Oscillatory, RootsAgreeWithSignScan)
{
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> us(-12.0, 2.0);
    for (int k = 0; k < 50; ++k)
    {
        const PhaseSpec p = minus(us(rng));
        const int M = 100000;
        std::vector<double> scan;
        double prev = phase_slope(p, -pi);
        for (int i = 1; i <= M; ++i)
        {
            const double x = -pi + pi * i / M;
            const double cur = phase_slope(p, x);
            if ((prev < 0) != (cur < 0))
                scan.push_back(x);
            prev = cur;
        }
        auto pts = stationary_points(p);
        ASSERT_EQ(pts.size(), scan.size()) << "s=" << p.s;
        for (std::size_t i = 0; i < pts.size(); ++i)
        {
            EXPECT_NEAR(pts[i].x, scan[i], 2.0 * pi / M);
            EXPECT_LE(std::abs(phase_slope(p, pts[i].x)), 1e-10);
        }
    }
}

TEST(Oscillatory, DecayPredictions)
{
    EXPECT_EQ(decay_order_prediction(minus(0.0)), (Rational{1, 4}));
    EXPECT_EQ(decay_order_prediction(minus(s_crit)), (Rational{1, 3}));
    EXPECT_EQ(decay_order_prediction(minus(-1.0)), (Rational{1, 2}));
    EXPECT_EQ(decay_order_prediction(minus(1.0)), (Rational{1, 1}));
}

TEST(Oscillatory, ZeroTimeGivesLength)
{
    auto r = oscillatory_integral(minus(0.0), 0.0, [](double) { return 1.0; });
    EXPECT_NEAR(r.value.real(), pi, 1e-13);
    EXPECT_NEAR(r.value.imag(), 0.0, 1e-13);
}

TEST(Oscillatory, SharpQuarterRate)
{
    std::vector<double> scaled;
    for (double t : {1e2, 1e3, 1e4})
    {
        auto r = oscillatory_integral(minus(0.0), t, [](double) { return 1.0; });
        EXPECT_TRUE(r.converged);
        scaled.push_back(std::abs(r.value) * std::pow(t, 0.25));
    }
    for (double v : scaled)
    {
        EXPECT_GT(v, 0.3 * scaled.back());
        EXPECT_LT(v, 3.0 * scaled.back());
    }
    // leading stationary-phase term at the order-4 point x = 0
    const double lead = std::tgamma(0.25) / 4.0 * std::pow(24.0 / 24.0, -0.25);
    EXPECT_NEAR(scaled.back(), lead, 0.1 * lead);
}

TEST(Oscillatory, EnvelopeAcrossSlopes)
{
    std::vector<double> slopes;
    for (int i = 0; i < 31; ++i)
        slopes.push_back(-12.0 + 14.0 * i / 30.0);
    slopes.push_back(s_crit);
    slopes.push_back(-s_crit);
    std::vector<double> C;
    for (double t : {1e2, 1e3})
    {
        double sup = 0.0;
        for (double s : slopes)
            sup = std::max(sup, std::abs(oscillatory_integral(minus(s), t, [](double) { return 1.0; }).value));
        C.push_back(sup * std::pow(t, 0.25));
    }
    EXPECT_LT(C[1] / C[0], 1.5);
    EXPECT_GT(C[1] / C[0], 1.0 / 1.5);
}

TEST(Oscillatory, HalvingBudgetWithinErrorEstimate)
{
    for (double s : {0.0, -3.0, s_crit})
    {
        auto w = [](double x) { return std::cos(x) + 2.0; };
        auto a = oscillatory_integral(minus(s), 300.0, w);
        PanelOptions half;
        half.phase_budget = 0.25;
        auto b = oscillatory_integral(minus(s), 300.0, w, half);
        EXPECT_LE(std::abs(a.value - b.value), a.error + 1e-14);
    }
}

TEST(Oscillatory, SubstitutionIdentity)
{
    // int_0^{mu0} e^{-it mu^4} f(mu) dmu under cos(theta) = 1 - mu^2/2, mu = -2 sin(theta/2)
    const double t = 40.0, mu0 = 1.6;
    auto f = [](double mu) { return std::exp(-mu) * (1.0 + mu * mu); };
    auto direct = adaptive_panel_integral(
        [&](double mu) { Eigen::VectorXcd v(1); v(0) = std::exp(complex(0.0, -t * std::pow(mu, 4))) * f(mu); return v; },
        [&](double x0, double x1) { return t * 4.0 * std::pow(std::max(std::abs(x0), std::abs(x1)), 3); }, {0.0, mu0}, 1);
    const double th0 = -2.0 * std::asin(mu0 / 2.0);
    auto subst = adaptive_panel_integral(
        [&](double th) {
            const double mu = -2.0 * std::sin(th / 2.0);
            Eigen::VectorXcd v(1);
            v(0) = std::exp(complex(0.0, -t * std::pow(mu, 4))) * f(mu) * std::cos(th / 2.0);
            return v;
        },
        [&](double x0, double) { return t * 4.0 * std::pow(2.0 * std::sin(std::abs(x0) / 2.0), 3); }, {th0, 0.0}, 1);
    // d mu = -cos(theta/2) d theta, and theta runs from th0 (mu0) to 0 (mu = 0)
    EXPECT_NEAR(std::abs(direct.value(0) - subst.value(0)), 0.0, 1e-9);
}

TEST(Oscillatory, Validation)
{
    EXPECT_THROW(stationary_points(PhaseSpec{PhaseBranch::minus_cos, 0.0, 0.0, -1.0}), InvalidInput);
    EXPECT_THROW(stationary_points(PhaseSpec{PhaseBranch::minus_cos, 0.0, -4.0, 0.0}), InvalidInput);
}
