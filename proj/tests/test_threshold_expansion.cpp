#include <bischrod/threshold_expansion.hpp>

#include <gtest/gtest.h>

using namespace bischrod;

TEST(ThresholdExpansion, ClosedFormsZero)
{
    EXPECT_EQ(coeff_zero(-3, Sign::plus, 4, -7), complex(-0.25, 0.25));
    EXPECT_EQ(coeff_zero(-3, Sign::minus, 0, 0), complex(-0.25, -0.25));
    for (int d = 0; d < 40; ++d)
        EXPECT_EQ(coeff_zero(-2, Sign::plus, d, 0), complex(0.0));
    EXPECT_DOUBLE_EQ(coeff_zero(0, Sign::plus, 0, 2).real(), 0.5);
    EXPECT_THROW(coeff_zero(1, Sign::plus, 0, 0), InvalidInput);
}

TEST(ThresholdExpansion, ClosedFormsSixteen)
{
    EXPECT_EQ(coeff_sixteen(-1, Sign::plus, 0, 1), complex(0.0, -1.0 / 32.0));
    EXPECT_NEAR(coeff_sixteen(0, Sign::plus, 0, 0).real(), -1.0 / (32.0 * std::sqrt(2.0)), 1e-16);
    for (int d = 0; d < 6; ++d)
    {
        EXPECT_EQ(coeff_sixteen(-1, Sign::minus, 0, d), std::conj(coeff_sixteen(-1, Sign::plus, 0, d)));
        EXPECT_EQ(coeff_sixteen(0, Sign::minus, 0, d), std::conj(coeff_sixteen(0, Sign::plus, 0, d)));
    }
    EXPECT_THROW(coeff_sixteen(1, Sign::plus, 0, 0), InvalidInput);
}

TEST(ThresholdExpansion, NumericReproducesClosedForms)
{
    for (Sign s : {Sign::plus, Sign::minus})
        for (int d : {0, 1, 2, 5, 11})
        {
            for (int j = -3; j <= 0; ++j)
            {
                auto est = coeff_numeric(Threshold::zero, s, j, d, 0);
                EXPECT_TRUE(est.available);
                EXPECT_NEAR(std::abs(est.value - coeff_zero(j, s, d, 0)), 0.0, 1e-8 * std::max(1.0, std::abs(est.value)));
            }
            for (int j = -1; j <= 0; ++j)
            {
                auto est = coeff_numeric(Threshold::sixteen, s, j, d, 0);
                EXPECT_NEAR(std::abs(est.value - coeff_sixteen(j, s, d, 0)), 0.0, 1e-8);
            }
        }
}

TEST(ThresholdExpansion, OrdersCongruentTwoModFourVanish)
{
    for (int j : {2, 6, 10})
        for (int d : {0, 1, 3, 8})
        {
            auto est = coeff_numeric(Threshold::zero, Sign::plus, j, d, 0);
            auto next = coeff_numeric(Threshold::zero, Sign::plus, j + 1, d, 0);
            EXPECT_LT(std::abs(est.value), std::max(10.0 * est.error_estimate, 1e-12 * std::abs(next.value)));
        }
}

TEST(ThresholdExpansion, ResummationReproducesKernel)
{
    // error of the order-K partial sum should scale like mu^{K+1}
    const double mu = 0.05;
    ExpansionTable tab(Threshold::zero, Sign::plus, 3, 4);
    const complex exact = free_biresolvent_boundary(mu, Sign::plus, 1);
    double prev = std::abs(exact - tab.partial_sum(mu, 1, 0));
    const double err3 = std::abs(exact - tab.partial_sum(mu, 1, 3));
    EXPECT_LT(err3, 1e-4 * prev);
    const double err3_half = std::abs(free_biresolvent_boundary(mu / 2, Sign::plus, 1) - tab.partial_sum(mu / 2, 1, 3));
    EXPECT_NEAR(std::log2(err3 / err3_half), 4.0, 0.3);
}

TEST(ThresholdExpansion, LeadingDistanceCoefficientAtSixteen)
{
    // coefficient of d^{j+1} in Gtilde_j for j = 1: (-/+ 2i)^j (-1)^d / (16 (j+1)!)
    for (Sign s : {Sign::plus, Sign::minus})
    {
        auto g = [&](int d) { return coeff_numeric(Threshold::sixteen, s, 1, d, 0).value * ((d % 2) ? -1.0 : 1.0); };
        const complex second_diff = g(24) - 2.0 * g(25) + g(26);
        const complex expect = -sign_value(s) * complex(0.0, 2.0) / 32.0;
        EXPECT_NEAR(std::abs(0.5 * second_diff - expect), 0.0, 1e-8);
    }
}

TEST(ThresholdExpansion, ConjugationAcrossSigns)
{
    ExpansionTable p(Threshold::zero, Sign::plus, 6, 10), m(Threshold::zero, Sign::minus, 6, 10);
    ExpansionTable pt(Threshold::sixteen, Sign::plus, 6, 10), mt(Threshold::sixteen, Sign::minus, 6, 10);
    for (int j = -3; j <= 6; ++j)
        for (int d = 0; d <= 10; ++d)
            EXPECT_NEAR(std::abs(m(j, d) - std::conj(p(j, d))), 0.0, 1e-8 * std::max(1.0, std::abs(p(j, d))));
    for (int j = -1; j <= 6; ++j)
        for (int d = 0; d <= 10; ++d)
            EXPECT_NEAR(std::abs(mt(j, d) - std::conj(pt(j, d))), 0.0, 1e-8 * std::max(1.0, std::abs(pt(j, d))));
}

TEST(ThresholdExpansion, HighOrderReportedUnavailable)
{
    auto est = coeff_numeric(Threshold::zero, Sign::plus, 40, 3, 0);
    EXPECT_FALSE(est.available);
    EXPECT_EQ(est.achieved_order, 16);
}

TEST(ThresholdExpansion, RemainderZeroOrderZero)
{
    auto rep = remainder_order_check(Threshold::zero, Sign::plus, 0, 5.0, default_mu_grid(Threshold::zero, 0));
    EXPECT_NEAR(rep.slope, 1.0, 0.15);
}

TEST(ThresholdExpansion, RemainderZeroOrderTwo)
{
    auto rep = remainder_order_check(Threshold::zero, Sign::plus, 2, 7.0, default_mu_grid(Threshold::zero, 2));
    EXPECT_NEAR(rep.slope, 3.0, 0.15);
}

TEST(ThresholdExpansion, RemainderZeroOrderOneIsCubic)
{
    // G_2 vanishes identically, so the order-1 remainder is O(mu^3)
    auto rep = remainder_order_check(Threshold::zero, Sign::plus, 1, 6.0, default_mu_grid(Threshold::zero, 1));
    EXPECT_GE(rep.slope, 2.0 - 0.15);
    EXPECT_NEAR(rep.slope, 3.0, 0.15);
}

TEST(ThresholdExpansion, LeadingTermOnlyZero)
{
    auto rep = remainder_order_check(Threshold::zero, Sign::plus, -3, 2.0, default_mu_grid(Threshold::zero, -3));
    EXPECT_NEAR(rep.slope, -1.0, 0.15);
}

TEST(ThresholdExpansion, RemainderSixteen)
{
    auto r0 = remainder_order_check(Threshold::sixteen, Sign::plus, 0, 3.0, default_mu_grid(Threshold::sixteen, 0));
    EXPECT_NEAR(r0.slope, 0.5, 0.1);
    auto r1 = remainder_order_check(Threshold::sixteen, Sign::minus, 1, 4.0, default_mu_grid(Threshold::sixteen, 1));
    EXPECT_NEAR(r1.slope, 1.0, 0.1);
    auto rl = remainder_order_check(Threshold::sixteen, Sign::plus, -1, 2.0, default_mu_grid(Threshold::sixteen, -1));
    EXPECT_NEAR(rl.slope, 0.0, 0.1);
}

TEST(ThresholdExpansion, DerivativeOfRemainder)
{
    auto rep = remainder_derivative_check(Threshold::zero, Sign::plus, 0, 5.0, default_mu_grid(Threshold::zero, 0));
    EXPECT_NEAR(rep.slope, 0.0, 0.15);
}

TEST(ThresholdExpansion, Preconditions)
{
    auto grid = default_mu_grid(Threshold::zero, 0);
    EXPECT_THROW(remainder_order_check(Threshold::zero, Sign::plus, 0, 4.0, grid), InvalidInput);
    EXPECT_THROW(remainder_order_check(Threshold::zero, Sign::plus, 0, 5.0, grid, 2), InvalidInput);
    EXPECT_THROW(remainder_order_check(Threshold::sixteen, Sign::plus, -1, 1.5, grid), InvalidInput);
}
