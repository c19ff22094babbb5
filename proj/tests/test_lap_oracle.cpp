#include <bischrod/lap_oracle.hpp>

#include <gtest/gtest.h>

using namespace bischrod;

TEST(LapOracle, FreeKernelAtReferencePoint)
{
    auto res = lap_oracle(nullptr, 0.7, Sign::plus, {{3, -2}});
    const complex ref = free_biresolvent_boundary(0.7, Sign::plus, 5);
    EXPECT_LE(std::abs(res.values[0] - ref), 1e-6 * std::abs(ref));
    EXPECT_EQ(res.eps.size(), 4u);
    EXPECT_NEAR(res.eps[0] / res.eps[1], 2.0, 1e-15);
}

TEST(LapOracle, FreeKernelAcrossMu)
{
    for (double mu : {0.3, 0.7, 1.0, 1.4, 1.8})
        for (Sign s : {Sign::plus, Sign::minus})
        {
            auto res = lap_oracle(nullptr, mu, s, {{0, 0}, {4, 1}, {-6, 2}});
            const int d[] = {0, 3, 8};
            for (int k = 0; k < 3; ++k)
            {
                const complex ref = free_biresolvent_boundary(mu, s, d[k]);
                EXPECT_LE(std::abs(res.values[k] - ref), 1e-6 * std::abs(ref)) << "mu=" << mu << " d=" << d[k];
            }
        }
}

TEST(LapOracle, ExtrapolationImprovesOnRawLadder)
{
    auto res = lap_oracle(nullptr, 1.0, Sign::plus, {{1, 0}});
    const complex ref = free_biresolvent_boundary(1.0, Sign::plus, 1);
    EXPECT_LT(std::abs(res.values[0] - ref), std::abs(res.ladder[0].back() - ref));
}

TEST(LapOracle, Richardson)
{
    std::vector<double> eps{0.4, 0.2, 0.1};
    std::vector<complex> f;
    for (double e : eps)
        f.push_back(complex(1.0 + 2.0 * e - 3.0 * e * e, e));
    EXPECT_NEAR(std::abs(detail::richardson_to_zero(eps, f) - complex(1.0)), 0.0, 1e-14);
}

TEST(LapOracle, RejectsOutOfRange)
{
    EXPECT_THROW(lap_oracle(nullptr, 2.5, Sign::plus, {{0, 0}}), InvalidInput);
    EXPECT_THROW(lap_oracle(nullptr, 1.0, Sign::plus, {}), InvalidInput);
}
